"""Circuits with a data interface and an encoding interface.

A circuit acts on ``n`` data qubits (1..n) followed by ``m`` encoding
qubits (n+1..n+m). It is universal for a family of unitaries when feeding
the classical encoding ``e_U`` makes it act as ``U`` on every basis data
string while handing ``|e_U>`` back untouched.

The circuit file format (``.qc.json``) is a single JSON object with one gate
per line and 1-based qubit indices::

    {"n": 1, "m": 1, "gates": [
    {"g": "CNOT", "q": [2, 1]}
    ]}
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDimensions,
    ParseError,
    QfheError,
    UnsupportedProgram,
)
from .sim_core import (
    GATE_MATRICES,
    Gate,
    GateKind,
    StateVector,
    apply_gate,
)


@dataclass(frozen=True)
class Circuit:
    n: int
    m: int = 0
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1 or self.m < 0:
            raise InvalidDimensions(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        for g in self.gates:
            g.check_width(self.width)

    @property
    def width(self) -> int:
        return self.n + self.m

    @property
    def n_r(self) -> int:
        """Number of R gates, i.e. client interactions per pass."""
        return sum(g.kind is GateKind.R for g in self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def digest(self) -> bytes:
        """SHA-256 of the canonical serialization."""
        return hashlib.sha256(dumps_circuit(self).encode()).digest()


@dataclass(frozen=True)
class UqcSpec:
    """A circuit plus the (unitary, encoding) pairs it claims to realize."""

    circuit: Circuit
    family: tuple[tuple[np.ndarray, tuple[int, ...]], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n, m = self.circuit.n, self.circuit.m
        family = []
        for unitary, encoding in self.family:
            u = np.asarray(unitary, dtype=complex)
            if u.shape != (2**n, 2**n):
                raise DimensionMismatch(f"unitary of shape {u.shape} on {n} data qubit(s)")
            if np.max(np.abs(u.conj().T @ u - np.eye(2**n))) > 1e-10:
                raise InvalidDimensions("family member is not unitary")
            if len(encoding) != m or any(b not in (0, 1) for b in encoding):
                raise InvalidDimensions(f"encoding {encoding!r} is not an {m}-bit string")
            family.append((u, tuple(int(b) for b in encoding)))
        object.__setattr__(self, "family", tuple(family))
        labels = tuple(self.labels) or tuple(f"U{i}" for i in range(len(family)))
        object.__setattr__(self, "labels", labels)


def run_circuit(circuit: Circuit, state: StateVector) -> StateVector:
    if state.num_qubits != circuit.width:
        raise DimensionMismatch(f"circuit width {circuit.width}, state has {state.num_qubits} qubits")
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


def _bitstrings(k: int) -> Iterable[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=k)


@dataclass
class ValidationReport:
    passed: bool
    checked: int
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed

    def to_table(self) -> str:
        lines = [f"{'unitary':<16} {'data':<10} reason", "-" * 48]
        for label, d, reason in self.failures:
            lines.append(f"{label:<16} {d:<10} {reason}")
        status = "PASS" if self.passed else "FAIL"
        lines.append(f"{status}: {self.checked - len(self.failures)}/{self.checked} cases hold")
        return "\n".join(lines)


def validate_uqc(spec: UqcSpec, tol: float = 1e-10) -> ValidationReport:
    """Check ``C(|d>|e_U>) = (U|d>)|e_U>`` for every member and basis string ``d``.

    Equality is up to one global phase per member: each ``d`` must match
    with fidelity at least ``1 - tol`` and all ``d`` must share the phase.
    """
    circuit = spec.circuit
    n = circuit.n
    failures = []
    checked = 0
    phase_tol = np.sqrt(2 * tol)
    for (u, enc), label in zip(spec.family, spec.labels):
        enc_state = StateVector.basis(enc) if enc else None
        ref_phase = None
        for d in _bitstrings(n):
            checked += 1
            d_label = "".join(map(str, d))
            out = run_circuit(circuit, StateVector.basis(d + enc))
            expected = u[:, int(d_label, 2)]
            if enc_state is not None:
                expected = np.kron(expected, enc_state.amplitudes)
            ov = complex(np.vdot(expected, out.amplitudes))
            if abs(ov) < 1 - tol:
                failures.append((label, d_label, f"fidelity {abs(ov):.3g}"))
                continue
            phase = ov / abs(ov)
            if ref_phase is None:
                ref_phase = phase
            elif abs(phase - ref_phase) > phase_tol:
                failures.append((label, d_label, "global phase differs across data strings"))
    return ValidationReport(not failures, checked, failures)


# --- gate-selector construction -------------------------------------------------

def parse_program(text: str) -> tuple[Gate, ...]:
    """``"X1 Z2"`` -> (X@1, Z@2); ``"I"`` or ``""`` is the empty program."""
    gates = []
    for tok in text.replace(",", " ").split():
        if tok.upper() == "I":
            continue
        kind, qubit = tok[0].upper(), tok[1:]
        if kind not in ("X", "Y", "Z", "H", "P", "R") or not qubit.isdigit():
            raise ParseError(f"bad program token {tok!r}; expected e.g. 'X1' or 'Z2'")
        gates.append(Gate.single(kind, int(qubit)))
    return tuple(gates)


def _embed(matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    ops = [np.eye(2)] * n
    ops[qubit - 1] = matrix
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def program_unitary(program: Sequence[Gate], n: int) -> np.ndarray:
    """Dense matrix of a single-qubit-gate program on ``n`` qubits."""
    u = np.eye(2**n, dtype=complex)
    for g in program:
        if g.kind.arity != 1:
            raise UnsupportedProgram(f"{g} is not a single-qubit gate")
        g.check_width(n)
        u = _embed(GATE_MATRICES[g.kind], g.targets[0], n) @ u
    return u


def toffoli(a: int, b: int, c: int) -> list[Gate]:
    """Exact Toffoli (controls a, b; target c) over {H, CNOT, R, P, Z}.

    The inverse of R is written as Z P R, all three being diagonal.
    """

    def t(w):
        return [Gate.single("R", w)]

    def tdg(w):
        return [Gate.single("Z", w), Gate.single("P", w), Gate.single("R", w)]

    h = Gate.single("H", c)
    return [
        h,
        Gate.cnot(b, c), *tdg(c),
        Gate.cnot(a, c), *t(c),
        Gate.cnot(b, c), *tdg(c),
        Gate.cnot(a, c), *t(b), *t(c),
        h,
        Gate.cnot(a, b), *t(a), *tdg(b),
        Gate.cnot(a, b),
    ]


def multi_controlled_x(controls: Sequence[int], target: int, ancillas: Sequence[int]) -> list[Gate]:
    """X on ``target`` when every control is 1; ancillas start and end in |0>."""
    controls = list(controls)
    d = len(controls)
    if d == 0:
        return [Gate.single("X", target)]
    if d == 1:
        return [Gate.cnot(controls[0], target)]
    if d == 2:
        return toffoli(controls[0], controls[1], target)
    if len(ancillas) < d - 2:
        raise InvalidDimensions(f"{d} controls need {d - 2} ancillas, got {len(ancillas)}")
    compute = toffoli(controls[0], controls[1], ancillas[0])
    for i in range(2, d - 1):
        compute += toffoli(controls[i], ancillas[i - 2], ancillas[i - 1])
    core = toffoli(controls[-1], ancillas[d - 3], target)
    uncompute = []
    for i in reversed(range(2, d - 1)):
        uncompute += toffoli(controls[i], ancillas[i - 2], ancillas[i - 1])
    uncompute += toffoli(controls[0], controls[1], ancillas[0])
    return compute + core + uncompute


def _anf(values: list[int], k: int) -> list[int]:
    # Moebius transform: truth table -> algebraic normal form coefficients
    coeffs = list(values)
    for b in range(k):
        for i in range(len(coeffs)):
            if i >> b & 1:
                coeffs[i] ^= coeffs[i ^ (1 << b)]
    return coeffs


def _pauli_bits(program: Sequence[Gate], n: int) -> tuple[list[int], list[int]]:
    a, b = [0] * n, [0] * n
    for g in program:
        if g.kind is GateKind.X:
            a[g.targets[0] - 1] ^= 1
        elif g.kind is GateKind.Z:
            b[g.targets[0] - 1] ^= 1
        else:
            raise UnsupportedProgram(f"{g}: selector menus may only use X and Z on data qubits")
    return a, b


def build_gate_selector_uqc(menu: Sequence, n: int | None = None) -> UqcSpec:
    """Circuit whose encoding bits pick one Pauli program out of ``menu``.

    Entry ``i`` is selected by encoding ``i`` written in binary with the
    first encoding qubit as the most significant bit. Each program is a
    product of X and Z gates on the data qubits; it is expanded into its
    algebraic normal form over the encoding bits, so every monomial becomes
    a multi-controlled X (or, conjugated by H, a multi-controlled Z).
    Monomials of degree 2 compile to Toffolis and therefore contain R gates;
    degree 3 and up borrow ancilla qubits appended to the encoding register
    with encoding bit 0.
    """
    programs = [parse_program(p) if isinstance(p, str) else tuple(p) for p in menu]
    size = len(programs)
    if size == 0 or size & (size - 1):
        raise InvalidDimensions(f"menu length must be a power of two, got {size}")
    if n is None:
        n = max([g.targets[0] for p in programs for g in p] + [1])
    k = size.bit_length() - 1
    bits = [_pauli_bits(p, n) for p in programs]

    # truth tables are indexed with the first encoding qubit as the MSB;
    # ANF bit b of a monomial mask is encoding qubit n + k - b
    def controls_of(mask: int) -> list[int]:
        return [n + k - b for b in reversed(range(k)) if mask >> b & 1]

    monomials = {"X": [], "Z": []}
    max_degree = 0
    for q in range(n):
        for label, col in (("X", 0), ("Z", 1)):
            coeffs = _anf([bits[i][col][q] for i in range(size)], k)
            masks = [s for s in range(size) if coeffs[s]]
            monomials[label].append(masks)
            max_degree = max([max_degree] + [bin(s).count("1") for s in masks])
    n_anc = max(0, max_degree - 2)
    ancillas = list(range(n + k + 1, n + k + n_anc + 1))

    gates: list[Gate] = []
    for q in range(1, n + 1):
        for mask in monomials["X"][q - 1]:
            gates += multi_controlled_x(controls_of(mask), q, ancillas)
    for q in range(1, n + 1):
        masks = monomials["Z"][q - 1]
        if 0 in masks:
            gates.append(Gate.single("Z", q))
        controlled = [s for s in masks if s]
        if controlled:
            gates.append(Gate.single("H", q))
            for mask in controlled:
                gates += multi_controlled_x(controls_of(mask), q, ancillas)
            gates.append(Gate.single("H", q))

    circuit = Circuit(n, k + n_anc, tuple(gates))
    family = []
    labels = []
    for i, prog in enumerate(programs):
        enc = tuple((i >> (k - 1 - j)) & 1 for j in range(k)) + (0,) * n_anc
        family.append((program_unitary(prog, n), enc))
        labels.append(" ".join(str(g) for g in prog) or "I")
    return UqcSpec(circuit, tuple(family), tuple(labels))


SHIPPED_MENUS: dict[str, list[str]] = {
    "select_i_x": ["I", "X1"],
    "select_i_z": ["I", "Z1"],
    "single_pauli": ["I", "X1", "Z1", "X1 Z1"],
    "two_qubit_paulis": ["I", "X1", "Z2", "X1 X2 Z1 Z2"],
    "toffoli_selected": ["I", "I", "I", "X1"],
    "and_or_mix": ["I", "Z1", "X2", "X1 Z2"],
    "three_bit_and": ["I", "I", "I", "I", "I", "I", "I", "X1 Z1"],
}


def shipped_uqcs() -> dict[str, UqcSpec]:
    """The gate-selector UQC fixtures distributed with the package."""
    return {name: build_gate_selector_uqc(menu) for name, menu in SHIPPED_MENUS.items()}


# --- file format ------------------------------------------------------------------

def dumps_circuit(circuit: Circuit) -> str:
    head = f'{{"n": {circuit.n}, "m": {circuit.m}, "gates": ['
    if not circuit.gates:
        return head + "]}\n"
    rows = [json.dumps({"g": g.kind.value, "q": list(g.targets)}) for g in circuit.gates]
    return head + "\n" + ",\n".join(rows) + "\n]}\n"


def _gate_line(text: str, index: int) -> int | None:
    seen = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        seen += line.count('"g"')
        if seen >= index:
            return lineno
    return None


def loads_circuit(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or not {"n", "m", "gates"} <= doc.keys():
        raise ParseError("circuit must be an object with keys n, m, gates", 1, 1)
    n, m, raw = doc["n"], doc["m"], doc["gates"]
    if not isinstance(n, int) or not isinstance(m, int) or isinstance(n, bool) or isinstance(m, bool):
        raise ParseError("n and m must be integers", 1, 1)
    if not isinstance(raw, list):
        raise ParseError("gates must be a list", 1, 1)
    gates = []
    for i, item in enumerate(raw):
        line = _gate_line(text, i)
        if not isinstance(item, dict) or set(item) != {"g", "q"}:
            raise ParseError(f"gate #{i + 1} must be an object with keys g and q", line)
        qs = item["q"]
        if not isinstance(qs, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in qs):
            raise ParseError(f"gate #{i + 1}: q must be a list of integers", line)
        try:
            gate = Gate(GateKind(item["g"]), tuple(qs))
            if isinstance(n, int) and isinstance(m, int):
                gate.check_width(n + m)
            gates.append(gate)
        except (ValueError, QfheError) as exc:
            raise ParseError(f"gate #{i + 1}: {exc}", line) from None
    try:
        return Circuit(n, m, tuple(gates))
    except QfheError as exc:
        raise ParseError(str(exc), 1, 1) from None


def save_circuit(circuit: Circuit, path) -> None:
    Path(path).write_text(dumps_circuit(circuit))


def load_circuit(path) -> Circuit:
    return loads_circuit(Path(path).read_text())


def circuit_io_roundtrip(circuit: Circuit) -> Circuit:
    return loads_circuit(dumps_circuit(circuit))
