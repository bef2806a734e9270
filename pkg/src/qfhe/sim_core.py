"""Dense statevector simulation over the gate set {X, Y, Z, H, P, CNOT, R}.

Qubits are numbered from 1 and qubit 1 is the most significant bit of the
basis-state index, so ``|q1 q2 ... qq>`` reads left to right like a tensor
product. Values returned by this module are immutable: gate application
always produces a new :class:`StateVector`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateCnot,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidDimensions,
    TooLarge,
    WeightSumError,
)

MAX_QUBITS = 12
NORM_TOL = 1e-10

_S2 = 1 / np.sqrt(2)
_ROOT_I = np.exp(1j * np.pi / 4)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _S2
PHASE = np.array([[1, 0], [0, 1j]], dtype=complex)
R_GATE = np.array([[1, 0], [0, _ROOT_I]], dtype=complex)
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class GateKind(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    P = "P"
    CNOT = "CNOT"
    R = "R"

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CNOT else 1

    @property
    def is_clifford(self) -> bool:
        return self is not GateKind.R


GATE_MATRICES = {
    GateKind.X: PAULI_X,
    GateKind.Y: PAULI_Y,
    GateKind.Z: PAULI_Z,
    GateKind.H: HADAMARD,
    GateKind.P: PHASE,
    GateKind.R: R_GATE,
    GateKind.CNOT: CNOT_MATRIX,
}


@dataclass(frozen=True)
class Gate:
    """A gate and the 1-based qubits it acts on.

    For CNOT, ``targets`` is ``(control, target)``.
    """

    kind: GateKind
    targets: tuple[int, ...]

    def __post_init__(self):
        kind = GateKind(self.kind)
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", targets)
        if len(targets) != kind.arity:
            raise InvalidDimensions(
                f"{kind.value} takes {kind.arity} qubit(s), got {len(targets)}"
            )
        if any(t < 1 for t in targets):
            raise IndexOutOfRange(f"qubit indices are 1-based, got {targets}")
        if kind is GateKind.CNOT and targets[0] == targets[1]:
            raise DegenerateCnot(f"CNOT control and target coincide at qubit {targets[0]}")

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def single(cls, kind, qubit: int) -> "Gate":
        return cls(GateKind(kind), (qubit,))

    @property
    def matrix(self) -> np.ndarray:
        return GATE_MATRICES[self.kind]

    def check_width(self, width: int) -> None:
        for t in self.targets:
            if t > width:
                raise IndexOutOfRange(f"{self} touches qubit {t} but width is {width}")

    def __str__(self) -> str:
        if self.kind is GateKind.CNOT:
            return f"CNOT {self.targets[0]}->{self.targets[1]}"
        return f"{self.kind.value}@{self.targets[0]}"


def _check_qubit_count(q: int, allow_large: bool) -> None:
    if q < 0:
        raise InvalidDimensions(f"negative qubit count {q}")
    if q > MAX_QUBITS and not allow_large:
        raise TooLarge(
            f"{q} qubits exceeds the dense cap of {MAX_QUBITS}; pass allow_large=True to override"
        )


class StateVector:
    """Normalized amplitudes over ``num_qubits`` qubits (read-only)."""

    __slots__ = ("_amps", "num_qubits")

    def __init__(self, amplitudes, *, allow_large: bool = False, normalize: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        q = int(round(np.log2(amps.size))) if amps.size else -1
        if amps.size == 0 or 2**q != amps.size:
            raise DimensionMismatch(f"amplitude count {amps.size} is not a power of two")
        _check_qubit_count(q, allow_large)
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise InvalidDimensions("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm**2 - 1) > NORM_TOL:
            raise InvalidDimensions(f"state is not normalized (norm^2 = {norm**2:.3g})")
        amps.flags.writeable = False
        self._amps = amps
        self.num_qubits = q

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @classmethod
    def basis(cls, bits: Sequence[int] | str, **kw) -> "StateVector":
        """Computational basis state; ``"01"`` or ``[0, 1]`` gives ``|01>``."""
        bits = [int(b) for b in bits]
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int("".join(map(str, bits)) or "0", 2)] = 1
        return cls(amps, **kw)

    @classmethod
    def random(cls, num_qubits: int, rng: np.random.Generator) -> "StateVector":
        """Haar-random pure state."""
        dim = 2**num_qubits
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(v, normalize=True)

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(np.kron(self._amps, other._amps))

    def __len__(self) -> int:
        return self._amps.size

    def __repr__(self) -> str:
        return f"StateVector(q={self.num_qubits}, amplitudes={np.round(self._amps, 6).tolist()})"


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator (read-only)."""

    __slots__ = ("_entries", "num_qubits")

    def __init__(self, entries, *, check: bool = True):
        rho = np.array(entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
        dim = rho.shape[0]
        q = int(round(np.log2(dim)))
        if 2**q != dim:
            raise DimensionMismatch(f"dimension {dim} is not a power of two")
        if check:
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise InvalidDimensions("density matrix is not Hermitian")
            if abs(np.trace(rho) - 1) > 1e-10:
                raise InvalidDimensions(f"trace is {np.trace(rho):.3g}, expected 1")
            if np.linalg.eigvalsh(rho).min() < -1e-8:
                raise InvalidDimensions("density matrix is not positive semidefinite")
        rho.flags.writeable = False
        self._entries = rho
        self.num_qubits = q

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 2**num_qubits
        return cls(np.eye(dim) / dim)

    def purity(self) -> float:
        return float(np.real(np.trace(self._entries @ self._entries)))

    def max_deviation(self, other) -> float:
        """Largest entrywise modulus of ``self - other``."""
        other = other.entries if isinstance(other, DensityMatrix) else np.asarray(other)
        return float(np.max(np.abs(self._entries - other)))

    def __repr__(self) -> str:
        return f"DensityMatrix(q={self.num_qubits})"


def _apply_local(amps: np.ndarray, q: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    # qubit w lives on tensor axis w-1 because qubit 1 is the most significant bit
    k = len(qubits)
    psi = amps.reshape([2] * q)
    axes = [w - 1 for w in qubits]
    op = matrix.reshape([2] * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def apply_matrix(state: StateVector, matrix: np.ndarray, qubits: Sequence[int]) -> StateVector:
    """Apply a ``2^k x 2^k`` unitary to the listed 1-based qubits."""
    qubits = list(qubits)
    for w in qubits:
        if not 1 <= w <= state.num_qubits:
            raise IndexOutOfRange(f"qubit {w} outside 1..{state.num_qubits}")
    if len(set(qubits)) != len(qubits):
        raise InvalidDimensions(f"repeated qubit in {qubits}")
    if matrix.shape != (2 ** len(qubits),) * 2:
        raise DimensionMismatch(f"matrix shape {matrix.shape} does not fit {len(qubits)} qubit(s)")
    out = _apply_local(state.amplitudes, state.num_qubits, matrix, qubits)
    return StateVector(out, allow_large=True)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    gate.check_width(state.num_qubits)
    return apply_matrix(state, gate.matrix, gate.targets)


def apply_gates(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatch(f"{a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def equal_up_to_phase(a: StateVector, b: StateVector, tol: float = 1e-9) -> bool:
    return abs(overlap(a, b)) >= 1 - tol


def density_of(state: StateVector) -> DensityMatrix:
    v = state.amplitudes
    return DensityMatrix(np.outer(v, v.conj()), check=False)


def partial_trace(dm: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the 1-based qubits in ``keep``.

    The kept qubits come out in the order given.
    """
    q = dm.num_qubits
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise InvalidDimensions(f"repeated qubit in keep={keep}")
    for w in keep:
        if not 1 <= w <= q:
            raise IndexOutOfRange(f"qubit {w} outside 1..{q}")
    k = len(keep)
    traced = [a for a in range(q) if a + 1 not in keep]
    t = dm.entries.reshape([2] * (2 * q))
    # bring (kept rows, traced rows, kept cols, traced cols) together
    rows = [w - 1 for w in keep] + traced
    cols = [q + a for a in rows]
    t = t.transpose(rows + cols)
    dk, dt = 2**k, 2 ** (q - k)
    t = t.reshape(dk, dt, dk, dt)
    reduced = np.einsum("ajbj->ab", t)
    return DensityMatrix(reduced, check=False)


def mix(dms: Sequence[tuple[float, DensityMatrix]]) -> DensityMatrix:
    """Convex combination of density matrices."""
    if not dms:
        raise WeightSumError("empty mixture")
    weights = np.array([w for w, _ in dms], dtype=float)
    if np.any(weights < 0):
        raise WeightSumError("negative mixture weight")
    if abs(weights.sum() - 1) > 1e-12:
        raise WeightSumError(f"weights sum to {weights.sum()!r}, expected 1")
    dims = {rho.num_qubits for _, rho in dms}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixture of different widths {sorted(dims)}")
    acc = sum(w * rho.entries for w, rho in dms)
    return DensityMatrix(acc, check=False)
