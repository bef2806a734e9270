"""
Building a gate-selector circuit
================================

A menu of Pauli programs becomes one fixed circuit. Every Pauli bit of the
selected program is a Boolean function of the menu index; its algebraic
normal form gives one multi-controlled X per monomial, with Toffolis
decomposed into Clifford and R gates.
"""
from qfhe import build_gate_selector_uqc, validate_uqc
from qfhe.uqc import dumps_circuit, shipped_uqcs

spec = build_gate_selector_uqc(["I", "X1", "Z1", "Z1"], n=1)
print(dumps_circuit(spec.circuit))
print(validate_uqc(spec).to_table())

print()
print(f"{'fixture':<18} {'n':>2} {'m':>2} {'gates':>6} {'R':>4}  valid")
for name, s in shipped_uqcs().items():
    c = s.circuit
    print(f"{name:<18} {c.n:>2} {c.m:>2} {len(c):>6} {c.n_r:>4}  {validate_uqc(s).passed}")
