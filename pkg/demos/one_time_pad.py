"""
Hiding a state with random Pauli masks
======================================

Each qubit gets X^x Z^z with fresh random bits. One masked copy still looks
like a pure state, but averaged over every key it is the maximally mixed
state, whatever went in.
"""
import numpy as np

from qfhe import StateVector, qotp_apply
from qfhe.audit import keyed_mixture, sampled_mixing
from qfhe.sim_core import density_of

rng = np.random.default_rng(1)
psi = StateVector.random(2, rng)
print("plaintext amplitudes:", np.round(psi.amplitudes, 3))

# one concrete key
masked = qotp_apply(psi, x=(1, 0), z=(1, 1), targets=[1, 2])
print("masked with x=10 z=11:", np.round(masked.amplitudes, 3))
print("purity of one ciphertext:", round(density_of(masked).purity(), 12))

# averaged over all 16 keys
avg = keyed_mixture(psi)
print("key-averaged density matrix:")
print(np.round(avg.entries.real, 12))
print("max deviation from I/4:", avg.max_deviation(np.eye(4) / 4))

# with more qubits the exhaustive sum grows as 4^n, so sample instead
big = StateVector.random(5, rng)
est = sampled_mixing(big, samples=20_000, seed=2)
print(f"5 qubits, 20000 sampled keys: deviation {est.deviation:.4f} (4-sigma bound {est.bound:.4f})")
