import json

import numpy as np
import pytest

from qfhe.audit import (
    ComplexitySummary,
    averaged_returned_state,
    complexity_counters,
    conjugation_suite,
    interaction_privacy_check,
    keyed_mixture,
    phase_aligned_error,
    qotp_mixing_check,
    run_audit,
    sampled_mixing,
)
from qfhe.errors import TooLarge
from qfhe.pauli_frame import keygen
from qfhe.protocol import EvaluationPlan, Transcript, run_delegation
from qfhe.sim_core import Gate, StateVector
from qfhe.uqc import Circuit

from oracles import MATS, pauli_mask, random_state


def loop_mixture(psi, n):
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for bits in np.ndindex(*([2] * (2 * n))):
        m = np.eye(1)
        for w in range(n):
            m = np.kron(m, pauli_mask(bits[w], bits[n + w]))
        v = m @ psi
        acc += np.outer(v, v.conj())
    return acc / 4**n


# --- mixing -------------------------------------------------------------------------

def test_mixing_zero_state_is_exact():
    assert qotp_mixing_check(1, StateVector.basis("0")) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mixing_random_states(rng, n):
    for _ in range(3):
        psi = random_state(rng, n)
        assert qotp_mixing_check(n, StateVector(psi)) < 1e-10
        assert np.max(np.abs(keyed_mixture(StateVector(psi)).entries - loop_mixture(psi, n))) < 1e-12


def test_mixing_too_large_without_samples(rng):
    with pytest.raises(TooLarge):
        qotp_mixing_check(4, StateVector(random_state(rng, 4)))


def test_sampled_mixing_within_bound(rng):
    est = sampled_mixing(StateVector(random_state(rng, 2)), 10_000, seed=1)
    assert est.deviation < 0.05
    assert isinstance(est.bound, float) and est.deviation < est.bound
    assert qotp_mixing_check(4, StateVector(random_state(rng, 4)), samples=10_000) < 0.05


def test_mixing_width_checked():
    with pytest.raises(ValueError):
        qotp_mixing_check(2, StateVector.basis("0"))


def test_partial_key_does_not_mix():
    # only Z masks: |0> stays |0>, far from I/2
    psi = np.array([1, 0])
    acc = sum(np.outer(pauli_mask(0, z) @ psi, (pauli_mask(0, z) @ psi).conj()) for z in (0, 1)) / 2
    assert np.max(np.abs(acc - np.eye(2) / 2)) == pytest.approx(0.5)


# --- conjugation ---------------------------------------------------------------------

def test_conjugation_suite_structure():
    rep = conjugation_suite()
    gates = [c.gate for c in rep.cases]
    assert sum(g in ("X", "Y", "Z", "H", "P") for g in gates) == 20
    assert gates.count("CNOT") == 16 and gates.count("R") == 16
    assert rep.passed and all(c.error < 1e-12 for c in rep.cases)
    assert rep.seconds < 1.0


def test_conjugation_cases_agree_with_oracle_matrices():
    rep = conjugation_suite()
    for c in rep.cases:
        if c.gate in MATS and c.gate != "R":
            x, z = c.bits_in
            x2, z2 = c.bits_out
            lhs = MATS[c.gate] @ pauli_mask(x, z)
            rhs = pauli_mask(x2, z2) @ MATS[c.gate]
            assert phase_aligned_error(lhs, rhs) < 1e-12
        elif c.gate == "R":
            (x, z), (r, rp) = c.bits_in, c.r_pair
            assert c.bits_out == (r ^ x, rp ^ x ^ z)


def test_phase_aligned_error_detects_a_wrong_rule():
    # H conjugation without the swap would leave X^1 unchanged: not an identity
    lhs = MATS["H"] @ pauli_mask(1, 0)
    assert phase_aligned_error(lhs, pauli_mask(1, 0) @ MATS["H"]) > 0.5
    assert phase_aligned_error(lhs, pauli_mask(0, 1) @ MATS["H"]) < 1e-12
    assert phase_aligned_error(1j * MATS["X"], MATS["X"]) < 1e-12


def test_conjugation_report_output():
    rep = conjugation_suite()
    assert rep.to_text().splitlines()[-1] == f"conjugation: {len(rep.cases)}/{len(rep.cases)} pass"
    data = json.loads(rep.to_json())
    assert data["passed"] and len(data["cases"]) == len(rep.cases)


# --- interaction privacy -----------------------------------------------------------------

@pytest.mark.parametrize("x_bit", [0, 1])
def test_privacy_basis_states(x_bit):
    for bits in ("0", "1"):
        assert interaction_privacy_check(x_bit, StateVector.basis(bits), 1) < 1e-12


@pytest.mark.parametrize("x_bit", [0, 1])
def test_privacy_random_states(rng, x_bit):
    for _ in range(5):
        psi = StateVector(random_state(rng, 3))
        w = int(rng.integers(1, 4))
        assert interaction_privacy_check(x_bit, psi, w) < 1e-10


def test_privacy_average_independent_of_x(rng):
    psi = StateVector(random_state(rng, 2))
    a = averaged_returned_state(0, psi, 2)
    b = averaged_returned_state(1, psi, 2)
    assert a.max_deviation(b) < 1e-12


# --- complexity -------------------------------------------------------------------------

def test_complexity_counters_for_a_run(rng):
    gates = (Gate.single("H", 1), Gate.single("R", 1), Gate.cnot(1, 2), Gate.single("R", 2))
    plan = EvaluationPlan(Circuit(2, 0, gates), repetitions=2)
    res = run_delegation(StateVector.basis("00"), keygen(2, 0, rng), plan, rng=rng)
    summary = complexity_counters(res.transcript, list(res.schedules))
    assert summary.ok
    assert summary.encryption_masks == 2
    assert summary.gate_applications == 8
    assert summary.messages == 8
    assert summary.max_xor_per_step == 3


def test_complexity_summary_flags_mismatch():
    s = ComplexitySummary(2, 2, 4, 1, 1, 0, 0)
    assert not s.ok
    assert ComplexitySummary(2, 2, 3, 1, 1, 2, 2).ok


def test_complexity_for_empty_transcript():
    assert complexity_counters(Transcript(), []).ok


# --- runner -------------------------------------------------------------------------------

@pytest.mark.parametrize("suite", ["conjugation", "mixing", "privacy", "all"])
def test_run_audit_suites(suite):
    report = run_audit(suite, n=2, seed=3, trials=4)
    assert report.passed
    json.loads(report.to_json())


def test_run_audit_unknown_suite():
    with pytest.raises(ValueError):
        run_audit("nope")
