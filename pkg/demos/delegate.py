"""
Delegating a computation
========================

The client encrypts its data, the server runs a universal circuit on the
ciphertext (calling the client back for every R gate), and the client
decrypts. The selector circuit below runs one of four Pauli programs; which
one is fixed by the encoding bits, which the server only ever sees masked.
"""
import numpy as np

from qfhe import EvaluationPlan, StateVector, build_gate_selector_uqc, keygen, run_delegation

rng = np.random.default_rng(7)
spec = build_gate_selector_uqc(["I", "X1", "Z1", "Z1"])
print(f"selector circuit: n={spec.circuit.n} m={spec.circuit.m}, "
      f"{len(spec.circuit)} gates, {spec.circuit.n_r} R gates")

data = StateVector.random(1, rng)
for label, (u, enc) in zip(spec.labels, spec.family):
    ek = keygen(spec.circuit.n, spec.circuit.m, rng)
    res = run_delegation(data, ek, EvaluationPlan(spec.circuit, enc), rng=rng)
    expected = u @ data.amplitudes
    fidelity = abs(np.vdot(expected, res.result.amplitudes)) ** 2
    print(f"{label:>6}  encoding={enc}  qubit messages={res.transcript.qubit_messages}  "
          f"fidelity={fidelity:.12f}")

# what the server sees: message kinds and qubit indices, nothing else
print()
print(res.transcript.to_jsonl())
