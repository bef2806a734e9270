"""
Tracking the mask through a circuit
===================================

Clifford gates turn a Pauli mask into another Pauli mask, so the client
can follow the key with a few XORs per gate. R needs help: the server
sends the qubit back and the client applies X^r Z^r' P^x.
"""
import numpy as np

from qfhe import Circuit, Gate, PauliKey, RandomBitPair, run_key_schedule
from qfhe.pauli_frame import update_clifford, update_r

key = PauliKey(x=(1, 0), z=(0, 1), n=2)
print("start:", key.to_text())

for gate in (Gate.single("H", 1), Gate.single("P", 2), Gate.cnot(1, 2)):
    key = update_clifford(key, gate)
    print(f"after {gate}: x={key.x} z={key.z}")

# an R gate on qubit 1 with the client's random pair (r, r') = (1, 0)
key = update_r(key, 1, RandomBitPair(1, 0))
print(f"after R@1 with r=1 r'=0: x={key.x} z={key.z}")

# the same thing as one schedule, with per-step XOR counts
circuit = Circuit(2, 0, (
    Gate.single("H", 1), Gate.single("P", 2), Gate.cnot(1, 2), Gate.single("R", 1),
))
sched = run_key_schedule(PauliKey((1, 0), (0, 1), 2), circuit, [RandomBitPair(1, 0)])
print("dk:", sched.dk.to_text())
print("XORs per step:", sched.xor_counts, "(never more than 3)")

# check the last step against the matrices: both sides agree up to phase
from qfhe.audit import conjugation_suite

rep = conjugation_suite()
print(f"{sum(c.passed for c in rep.cases)}/{len(rep.cases)} conjugation identities hold, "
      f"worst error {max(c.error for c in rep.cases):.1e}")
