"""Quantum homomorphic encryption over a universal quantum circuit, simulated.

The four algorithms of the scheme:

* :func:`keygen` draws the encryption key; the decryption key comes out of
  :func:`derive_dk` (it also depends on the client's ``(r, r')`` bits);
* :func:`encrypt` one-time-pads the data and appends the encoding;
* :func:`evaluate` runs the interactive client/server evaluation;
* :func:`decrypt` unmasks the result.
"""
from .errors import QfheError
from .pauli_frame import (
    KeySchedule,
    PauliKey,
    RandomBitPair,
    draw_r_pairs,
    keygen,
    qotp_apply,
    run_key_schedule,
    run_repeated_schedule,
    update_clifford,
    update_r,
)
from .protocol import (
    DelegationResult,
    EvaluationPlan,
    Transcript,
    client_decrypt,
    client_encrypt,
    run_delegation,
)
from .sim_core import DensityMatrix, Gate, GateKind, StateVector, apply_gate, equal_up_to_phase
from .uqc import Circuit, UqcSpec, build_gate_selector_uqc, run_circuit, validate_uqc

encrypt = client_encrypt
decrypt = client_decrypt
evaluate = run_delegation


def derive_dk(ek, circuit, r_pairs, repetitions=1):
    """Decryption key for ``repetitions`` passes of ``circuit`` with the given r-pairs."""
    return run_repeated_schedule(ek, circuit, r_pairs, repetitions)[-1].dk


__all__ = [
    "Circuit", "DelegationResult", "DensityMatrix", "EvaluationPlan", "Gate", "GateKind",
    "KeySchedule", "PauliKey", "QfheError", "RandomBitPair", "StateVector", "Transcript",
    "UqcSpec", "apply_gate", "build_gate_selector_uqc", "client_decrypt", "client_encrypt",
    "decrypt", "derive_dk", "draw_r_pairs", "encrypt", "equal_up_to_phase", "evaluate",
    "keygen", "qotp_apply", "run_circuit", "run_delegation", "run_key_schedule",
    "run_repeated_schedule", "update_clifford", "update_r", "validate_uqc",
]
