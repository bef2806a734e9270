"""Finite, exhaustive witnesses for the scheme's security and cost claims.

* one-time-pad mixing: averaging the masked plaintext over every key gives
  the maximally mixed state;
* interaction privacy: averaging the client's correction over ``(r, r')``
  leaves the returned qubit maximally mixed whatever ``x`` was;
* conjugation identities: every key-update rule agrees with the matrices;
* complexity counters: mask, XOR, gate and message counts of a run.
"""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import TooLarge
from .pauli_frame import (
    KeySchedule,
    PauliKey,
    RandomBitPair,
    mask_matrix,
    qotp_apply,
    update_clifford,
    update_r,
)
from .protocol import Transcript, apply_correction
from .sim_core import (
    CNOT_MATRIX,
    GATE_MATRICES,
    PHASE,
    R_GATE,
    DensityMatrix,
    Gate,
    GateKind,
    StateVector,
    density_of,
    mix,
    partial_trace,
)

EXHAUSTIVE_MAX_N = 3
CONJUGATION_TOL = 1e-12


def _bit_tuples(k):
    return itertools.product((0, 1), repeat=k)


def keyed_mixture(plain: StateVector) -> DensityMatrix:
    """Equal-weight mixture of ``X^x Z^z |psi>`` over all ``4^n`` keys."""
    n = plain.num_qubits
    if n > EXHAUSTIVE_MAX_N:
        raise TooLarge(f"exhaustive mixing is limited to n <= {EXHAUSTIVE_MAX_N}; use samples=")
    targets = range(1, n + 1)
    weight = 1 / 4**n
    terms = [
        (weight, density_of(qotp_apply(plain, x, z, targets)))
        for x in _bit_tuples(n)
        for z in _bit_tuples(n)
    ]
    return mix(terms)


@dataclass
class MixingEstimate:
    deviation: float
    bound: float
    samples: int


def sampled_mixing(plain: StateVector, samples: int, seed: int = 0) -> MixingEstimate:
    """Monte-Carlo key average with a four-sigma standard-error bound.

    Each entry of a pure-state density matrix has real and imaginary parts
    in ``[-1/2, 1/2]`` off the diagonal and ``[0, 1]`` on it, so every
    sampled entry has standard deviation at most ``1/sqrt(2)``.
    """
    n = plain.num_qubits
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(samples, 2 * n))
    acc = np.zeros((2**n, 2**n), dtype=complex)
    targets = range(1, n + 1)
    for row in bits:
        v = qotp_apply(plain, row[:n], row[n:], targets).amplitudes
        acc += np.outer(v, v.conj())
    acc /= samples
    dev = float(np.max(np.abs(acc - np.eye(2**n) / 2**n)))
    return MixingEstimate(dev, float(4 / np.sqrt(2 * samples)), samples)


def qotp_mixing_check(n: int, plain: StateVector, *, samples: int | None = None, seed: int = 0) -> float:
    """Max entrywise deviation of the key-averaged ciphertext from ``I/2^n``.

    Exhaustive over all ``4^n`` keys unless ``samples`` is given.
    """
    if plain.num_qubits != n:
        raise ValueError(f"plaintext has {plain.num_qubits} qubits, expected {n}")
    if samples is not None:
        return sampled_mixing(plain, samples, seed).deviation
    return keyed_mixture(plain).max_deviation(np.eye(2**n) / 2**n)


# --- conjugation identities ------------------------------------------------------------

def phase_aligned_error(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi max|a - e^{i phi} b|`` evaluated at the Frobenius-optimal phase."""
    inner = np.vdot(b, a)
    phase = inner / abs(inner) if abs(inner) > 1e-15 else 1.0
    return float(np.max(np.abs(a - phase * b)))


@dataclass
class ConjugationCase:
    gate: str
    bits_in: tuple[int, ...]
    bits_out: tuple[int, ...]
    error: float
    r_pair: tuple[int, int] | None = None

    @property
    def passed(self) -> bool:
        return self.error < CONJUGATION_TOL


@dataclass
class ConjugationReport:
    cases: list[ConjugationCase] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_text(self) -> str:
        lines = [f"{'gate':<6} {'in':<10} {'r,r_':<6} {'out':<10} {'error':>10}  ok"]
        for c in self.cases:
            rr = ",".join(map(str, c.r_pair)) if c.r_pair else "-"
            lines.append(
                f"{c.gate:<6} {''.join(map(str, c.bits_in)):<10} {rr:<6} "
                f"{''.join(map(str, c.bits_out)):<10} {c.error:>10.2e}  {'yes' if c.passed else 'NO'}"
            )
        ok = sum(c.passed for c in self.cases)
        lines.append(f"conjugation: {ok}/{len(self.cases)} pass")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(
            {"suite": "conjugation", "passed": self.passed, "seconds": self.seconds,
             "cases": [asdict(c) | {"passed": c.passed} for c in self.cases]},
        )


def conjugation_suite() -> ConjugationReport:
    """Check every key-update rule against its matrix identity, exhaustively.

    Single-qubit Cliffords: ``G X^x Z^z ~ X^x' Z^z' G``. CNOT: the same on
    two qubits. R: ``X^r Z^r' P^x R X^x Z^z ~ X^x' Z^z' R``.
    """
    t0 = time.perf_counter()
    report = ConjugationReport()
    for kind in (GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.P):
        g = GATE_MATRICES[kind]
        for x, z in _bit_tuples(2):
            out = update_clifford(PauliKey((x,), (z,), 1), Gate.single(kind, 1))
            x2, z2 = out.pair(1)
            err = phase_aligned_error(g @ mask_matrix(x, z), mask_matrix(x2, z2) @ g)
            report.cases.append(ConjugationCase(kind.value, (x, z), (x2, z2), err))
    for xc, zc, xt, zt in _bit_tuples(4):
        key = PauliKey((xc, xt), (zc, zt), 2)
        out = update_clifford(key, Gate.cnot(1, 2))
        (xc2, zc2), (xt2, zt2) = out.pair(1), out.pair(2)
        lhs = CNOT_MATRIX @ np.kron(mask_matrix(xc, zc), mask_matrix(xt, zt))
        rhs = np.kron(mask_matrix(xc2, zc2), mask_matrix(xt2, zt2)) @ CNOT_MATRIX
        report.cases.append(
            ConjugationCase("CNOT", (xc, zc, xt, zt), (xc2, zc2, xt2, zt2), phase_aligned_error(lhs, rhs))
        )
    for x, z, r, rp in _bit_tuples(4):
        out = update_r(PauliKey((x,), (z,), 1), 1, RandomBitPair(r, rp))
        x2, z2 = out.pair(1)
        p_x = PHASE if x else np.eye(2)
        lhs = mask_matrix(r, rp) @ p_x @ R_GATE @ mask_matrix(x, z)
        rhs = mask_matrix(x2, z2) @ R_GATE
        report.cases.append(ConjugationCase("R", (x, z), (x2, z2), phase_aligned_error(lhs, rhs), (r, rp)))
    report.seconds = time.perf_counter() - t0
    return report


# --- interaction privacy ---------------------------------------------------------------

def averaged_returned_state(x_bit: int, incoming: StateVector, w: int) -> DensityMatrix:
    """Reduced state of qubit ``w`` after the correction, averaged over ``(r, r')``."""
    terms = []
    for r, rp in _bit_tuples(2):
        out = apply_correction(incoming, w, x_bit, RandomBitPair(r, rp))
        terms.append((0.25, partial_trace(density_of(out), [w])))
    return mix(terms)


def interaction_privacy_check(x_bit: int, incoming: StateVector, w: int) -> float:
    """Max entrywise deviation of the ``(r, r')``-averaged returned qubit from ``I/2``."""
    return averaged_returned_state(x_bit, incoming, w).max_deviation(np.eye(2) / 2)


# --- complexity ---------------------------------------------------------------------------

@dataclass
class ComplexitySummary:
    encryption_masks: int
    expected_encryption_masks: int
    max_xor_per_step: int
    gate_applications: int
    expected_gate_applications: int
    messages: int
    expected_messages: int

    @property
    def ok(self) -> bool:
        return (
            self.encryption_masks == self.expected_encryption_masks
            and self.max_xor_per_step <= 3
            and self.gate_applications == self.expected_gate_applications
            and self.messages == self.expected_messages
        )


def complexity_counters(transcript: Transcript, schedules: list[KeySchedule]) -> ComplexitySummary:
    n = schedules[0].initial.n if schedules else transcript.encryption_masks
    xors = [c for s in schedules for c in s.xor_counts]
    return ComplexitySummary(
        encryption_masks=transcript.encryption_masks,
        expected_encryption_masks=n,
        max_xor_per_step=max(xors, default=0),
        gate_applications=transcript.gates_executed,
        expected_gate_applications=transcript.circuit_size * transcript.repetitions,
        messages=transcript.qubit_messages,
        expected_messages=2 * transcript.n_r * transcript.repetitions,
    )


# --- suite runner used by the command line ------------------------------------------

@dataclass
class AuditReport:
    suite: str
    passed: bool
    text: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"suite": self.suite, "passed": self.passed, **self.details})


def run_audit(suite: str, n: int = 1, seed: int = 0, trials: int = 10) -> AuditReport:
    if suite == "conjugation":
        rep = conjugation_suite()
        ok = sum(c.passed for c in rep.cases)
        return AuditReport(suite, rep.passed, rep.to_text(),
                           {"cases": len(rep.cases), "pass": ok, "seconds": rep.seconds})
    rng = np.random.default_rng(seed)
    if suite == "mixing":
        states = [StateVector.basis([0] * n)] + [StateVector.random(n, rng) for _ in range(trials - 1)]
        devs = [qotp_mixing_check(n, s) for s in states]
        worst = max(devs)
        ok = worst < 1e-10
        text = f"mixing n={n}: {len(devs)} states, max deviation {worst:.3g} ({'pass' if ok else 'FAIL'})"
        return AuditReport(suite, ok, text, {"n": n, "states": len(devs), "deviation": worst})
    if suite == "privacy":
        worst, gap = 0.0, 0.0
        for _ in range(trials):
            q = int(rng.integers(1, 4))
            w = int(rng.integers(1, q + 1))
            psi = StateVector.random(q, rng)
            a = averaged_returned_state(0, psi, w)
            b = averaged_returned_state(1, psi, w)
            worst = max(worst, a.max_deviation(np.eye(2) / 2), b.max_deviation(np.eye(2) / 2))
            gap = max(gap, a.max_deviation(b))
        ok = worst < 1e-10 and gap < 1e-10
        text = (f"privacy: {trials} states, max deviation from I/2 {worst:.3g}, "
                f"x-bit dependence {gap:.3g} ({'pass' if ok else 'FAIL'})")
        return AuditReport(suite, ok, text, {"states": trials, "deviation": worst, "x_gap": gap})
    if suite == "all":
        parts = [run_audit(s, n, seed, trials) for s in ("conjugation", "mixing", "privacy")]
        ok = all(p.passed for p in parts)
        text = "\n\n".join(p.text for p in parts) + f"\n\nall: {'pass' if ok else 'FAIL'}"
        return AuditReport(suite, ok, text, {p.suite: p.details | {"passed": p.passed} for p in parts})
    raise ValueError(f"unknown audit suite {suite!r}")
