"""The eight acceptance criteria, each at its stated tolerance and time budget.

Every test records a PASS/FAIL line, shown in the "acceptance criteria"
section at the end of the pytest run.
"""
import time

import numpy as np

from qfhe.audit import (
    averaged_returned_state,
    complexity_counters,
    conjugation_suite,
    qotp_mixing_check,
)
from qfhe.pauli_frame import draw_r_pairs, keygen
from qfhe.protocol import EvaluationPlan, run_delegation
from qfhe.sim_core import StateVector, equal_up_to_phase
from qfhe.uqc import Circuit, shipped_uqcs, validate_uqc

from oracles import data_block, full_unitary, random_circuit, random_state, random_uqc_shaped

SEED = 20240611


def random_run_setup(rng, max_gates=50):
    """A random (circuit, encoding, data) triple with n + m <= 5.

    Half the draws have no encoding register and use the full gate set on
    every qubit; the other half are UQC-shaped so the encoding register
    keeps its basis value.
    """
    if rng.random() < 0.5:
        n, m = int(rng.integers(1, 6)), 0
        gates = random_circuit(rng, n, int(rng.integers(0, max_gates + 1)))
    else:
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 6 - n))
        gates = random_uqc_shaped(rng, n, m, int(rng.integers(0, max_gates + 1)))
    enc = tuple(int(b) for b in rng.integers(0, 2, m))
    return Circuit(n, m, tuple(gates)), enc, random_state(rng, n)


def test_c1_conjugation_identities(verdict):
    t0 = time.perf_counter()
    rep = conjugation_suite()
    elapsed = time.perf_counter() - t0
    worst = max(c.error for c in rep.cases)
    ok = rep.passed and worst < 1e-12 and elapsed < 1.0
    verdict("1 conjugation identities", ok,
            f"{sum(c.passed for c in rep.cases)}/{len(rep.cases)} cases, max error {worst:.1e}, {elapsed:.3f}s")
    r_case = next(c for c in rep.cases if c.gate == "R" and c.bits_in == (1, 0) and c.r_pair == (1, 0))
    assert r_case.bits_out == (0, 1)
    assert ok


def test_c1_conjugation_case_count(verdict):
    # the required count; the enumerated families (5x4 single-qubit, 16 CNOT,
    # 16 R) contain 52 distinct cases
    n = len(conjugation_suite().cases)
    verdict("1 conjugation case count", n == 56, f"{n} cases enumerated, 56 required")
    assert n == 56


def test_c2_end_to_end_correctness(verdict):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(500):
        circuit, enc, d = random_run_setup(rng)
        ek = keygen(circuit.n, circuit.m, rng)
        res = run_delegation(StateVector(d), ek, EvaluationPlan(circuit, enc), rng=rng)
        u = data_block(full_unitary(circuit.gates, circuit.width), circuit.n, circuit.m, enc)
        failures += not equal_up_to_phase(res.result, StateVector(u @ d, normalize=True), 1e-9)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 30
    verdict("2 end-to-end correctness", ok, f"{500 - failures}/500 runs match the oracle, {elapsed:.1f}s")
    assert ok


def test_c3_qotp_mixing(verdict):
    rng = np.random.default_rng(SEED + 3)
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(10):
            worst = max(worst, qotp_mixing_check(n, StateVector(random_state(rng, n))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 10
    verdict("3 one-time-pad mixing", ok, f"30 states, max deviation {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_c4_interaction_privacy(verdict):
    rng = np.random.default_rng(SEED + 4)
    worst, gap = 0.0, 0.0
    for _ in range(20):
        q = int(rng.integers(1, 4))  # q > 1 gives entangled incoming states
        w = int(rng.integers(1, q + 1))
        psi = StateVector(random_state(rng, q))
        a, b = averaged_returned_state(0, psi, w), averaged_returned_state(1, psi, w)
        worst = max(worst, a.max_deviation(np.eye(2) / 2), b.max_deviation(np.eye(2) / 2))
        gap = max(gap, a.max_deviation(b))
    ok = worst < 1e-10 and gap < 1e-10
    verdict("4 interaction privacy", ok, f"20 states x 2 x-bits, deviation {worst:.1e}, x-dependence {gap:.1e}")
    assert ok


def test_c5_complexity_counters(verdict):
    rng = np.random.default_rng(SEED + 5)
    bad = 0
    for _ in range(100):
        circuit, enc, d = random_run_setup(rng, max_gates=30)
        reps = int(rng.integers(1, 4))
        ek = keygen(circuit.n, circuit.m, rng)
        res = run_delegation(StateVector(d), ek, EvaluationPlan(circuit, enc, reps), rng=rng)
        s = complexity_counters(res.transcript, res.schedules)
        exact = (
            s.encryption_masks == circuit.n
            and s.max_xor_per_step <= 3
            and s.gate_applications == len(circuit) * reps
            and s.messages == 2 * circuit.n_r * reps
        )
        bad += not (exact and s.ok)
    verdict("5 complexity counters", bad == 0, f"{100 - bad}/100 runs report the expected counts")
    assert bad == 0


def test_c6_shipped_uqcs_validate(verdict):
    specs = shipped_uqcs()
    reports = {name: validate_uqc(spec, tol=1e-10) for name, spec in specs.items()}
    failed = [name for name, r in reports.items() if not r.passed]
    checked = sum(r.checked for r in reports.values())
    full = all(r.checked == len(specs[k].family) * 2**specs[k].circuit.n for k, r in reports.items())
    ok = not failed and full
    verdict("6 UQC validation", ok, f"{len(specs) - len(failed)}/{len(specs)} fixtures, {checked} (U, d) cases")
    assert ok


def test_c7_schedule_equivalence(verdict):
    rng = np.random.default_rng(SEED + 7)
    same = 0
    for _ in range(200):
        circuit, enc, d = random_run_setup(rng, max_gates=30)
        ek = keygen(circuit.n, circuit.m, rng)
        pairs = draw_r_pairs(circuit.n_r, rng)
        plan = EvaluationPlan(circuit, enc)
        lazy = run_delegation(StateVector(d), ek, plan, r_pairs=pairs, schedule_mode="lazy")
        pre = run_delegation(StateVector(d), ek, plan, r_pairs=pairs, schedule_mode="precomputed")
        same += lazy.dk == pre.dk
    verdict("7 schedule equivalence", same == 200, f"{same}/200 circuits give identical dk")
    assert same == 200


def test_c8_determinism(verdict):
    spec = shipped_uqcs()["toffoli_selected"]
    runs = []
    for _ in range(2):
        rng = np.random.default_rng(SEED + 8)
        ek = keygen(spec.circuit.n, spec.circuit.m, rng)
        d = StateVector.random(spec.circuit.n, rng)
        plan = EvaluationPlan(spec.circuit, spec.family[-1][1], repetitions=2)
        res = run_delegation(d, ek, plan, "inproc", rng, run_id=8)
        runs.append((res.transcript.to_jsonl().encode(), res.result.amplitudes.tobytes()))
    ok = runs[0] == runs[1]
    verdict("8 determinism", ok, "identical seeds give byte-identical transcripts and amplitudes")
    assert ok
