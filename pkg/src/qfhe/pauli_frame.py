"""Classical key material: generation, one-time-pad masking and key updates.

A key is a pair of bitstrings ``(x, z)`` over ``n`` data qubits followed by
``m`` encoding qubits. Qubit ``w`` carries the mask ``X^x(w) Z^z(w)``.
Public accessors take 1-based qubit indices; storage is 0-based and the
conversion happens only in :func:`_slot`.

Global phases are never tracked: ``Y = iXZ`` and friends only differ from
the bookkeeping by a unit scalar.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidDimensions,
    ParseError,
    RPairCountMismatch,
)
from .sim_core import PAULI_X, PAULI_Z, Gate, GateKind, StateVector, apply_matrix


class BitSource(Protocol):
    """Anything with numpy's ``Generator.integers`` signature."""

    def integers(self, low, high=None, size=None): ...


def _slot(w: int, width: int) -> int:
    if not 1 <= w <= width:
        raise IndexOutOfRange(f"qubit {w} outside 1..{width}")
    return w - 1


def _bits(values) -> tuple[int, ...]:
    out = tuple(int(b) for b in values)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"not a bitstring: {values!r}")
    return out


@dataclass(frozen=True)
class PauliKey:
    x: tuple[int, ...]
    z: tuple[int, ...]
    n: int
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", _bits(self.x))
        object.__setattr__(self, "z", _bits(self.z))
        if self.n < 1 or self.m < 0:
            raise InvalidDimensions(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if len(self.x) != self.width or len(self.z) != self.width:
            raise DimensionMismatch(
                f"key bitstrings have lengths {len(self.x)}/{len(self.z)}, expected {self.width}"
            )

    @property
    def width(self) -> int:
        return self.n + self.m

    @classmethod
    def zero(cls, n: int, m: int = 0) -> "PauliKey":
        return cls((0,) * (n + m), (0,) * (n + m), n, m)

    def pair(self, w: int) -> tuple[int, int]:
        """``(x(w), z(w))`` for 1-based qubit ``w``."""
        i = _slot(w, self.width)
        return self.x[i], self.z[i]

    def with_pairs(self, updates: dict[int, tuple[int, int]]) -> "PauliKey":
        x, z = list(self.x), list(self.z)
        for w, (xb, zb) in updates.items():
            i = _slot(w, self.width)
            x[i], z[i] = xb, zb
        return PauliKey(tuple(x), tuple(z), self.n, self.m)

    def with_encoding_cleared(self) -> "PauliKey":
        """Same data bits, encoding bits reset to zero (fresh encoding register)."""
        zeros = (0,) * self.m
        return PauliKey(self.x[: self.n] + zeros, self.z[: self.n] + zeros, self.n, self.m)

    def is_encryption_key(self) -> bool:
        return not any(self.x[self.n :]) and not any(self.z[self.n :])

    def to_text(self) -> str:
        return format_key(self)

    @classmethod
    def from_text(cls, text: str) -> "PauliKey":
        return parse_key(text)


@dataclass(frozen=True)
class RandomBitPair:
    """The client's ``(r, r')`` for one R-gate interaction."""

    r: int
    r_prime: int

    def __post_init__(self):
        if self.r not in (0, 1) or self.r_prime not in (0, 1):
            raise ValueError(f"r-pair bits must be 0/1, got ({self.r}, {self.r_prime})")


@dataclass(frozen=True)
class KeySchedule:
    """Keys after every gate of one pass through a circuit.

    ``steps[j-1]`` is the key after gate ``j``; the last entry is the
    decryption key. ``xor_counts[j-1]`` counts the mod-2 additions spent on
    gate ``j``.
    """

    initial: PauliKey
    steps: tuple[PauliKey, ...] = ()
    r_pairs: tuple[RandomBitPair, ...] = ()
    xor_counts: tuple[int, ...] = field(default=())

    @property
    def dk(self) -> PauliKey:
        return self.steps[-1] if self.steps else self.initial

    def key_before(self, j: int) -> PauliKey:
        """Key in force just before gate ``j`` (1-based)."""
        return self.initial if j == 1 else self.steps[j - 2]


def keygen(n: int, m: int, rng: BitSource) -> PauliKey:
    """Draw an encryption key: ``2n`` uniform bits, x-bits first, low index first.

    Bits for the ``m`` encoding qubits are zero.
    """
    if n < 1:
        raise InvalidDimensions(f"n must be >= 1, got {n}")
    if m < 0:
        raise InvalidDimensions(f"m must be >= 0, got {m}")
    raw = [int(b) for b in np.asarray(rng.integers(0, 2, size=2 * n)).reshape(-1)]
    zeros = (0,) * m
    return PauliKey(tuple(raw[:n]) + zeros, tuple(raw[n:]) + zeros, n, m)


def draw_r_pairs(count: int, rng: BitSource) -> list[RandomBitPair]:
    """``count`` independent pairs, drawn r then r' for each R gate in order."""
    if count == 0:
        return []
    raw = np.asarray(rng.integers(0, 2, size=2 * count)).reshape(-1)
    return [RandomBitPair(int(raw[2 * i]), int(raw[2 * i + 1])) for i in range(count)]


def mask_matrix(x: int, z: int) -> np.ndarray:
    """The 2x2 operator ``X^x Z^z``."""
    out = np.eye(2, dtype=complex)
    if z:
        out = PAULI_Z @ out
    if x:
        out = PAULI_X @ out
    return out


def qotp_apply(state: StateVector, x: Sequence[int], z: Sequence[int], targets: Sequence[int]) -> StateVector:
    """Apply ``X^x(i) Z^z(i)`` to ``targets[i]`` for every i.

    Encrypts and decrypts alike, since the mask squares to the identity up
    to a sign.
    """
    x, z = _bits(x), _bits(z)
    if not len(x) == len(z) == len(targets):
        raise DimensionMismatch(
            f"{len(targets)} targets but {len(x)} x-bits and {len(z)} z-bits"
        )
    for w in targets:
        if not 1 <= w <= state.num_qubits:
            raise IndexOutOfRange(f"qubit {w} outside 1..{state.num_qubits}")
    for xb, zb, w in zip(x, z, targets):
        if xb or zb:
            state = apply_matrix(state, mask_matrix(xb, zb), [w])
    return state


def _clifford_step(key: PauliKey, gate: Gate) -> tuple[PauliKey, int]:
    gate.check_width(key.width)
    kind = gate.kind
    if kind in (GateKind.X, GateKind.Y, GateKind.Z):
        return key, 0
    if kind is GateKind.H:
        (w,) = gate.targets
        xb, zb = key.pair(w)
        return key.with_pairs({w: (zb, xb)}), 0
    if kind is GateKind.P:
        (w,) = gate.targets
        xb, zb = key.pair(w)
        return key.with_pairs({w: (xb, xb ^ zb)}), 1
    if kind is GateKind.CNOT:
        c, t = gate.targets
        xc, zc = key.pair(c)
        xt, zt = key.pair(t)
        return key.with_pairs({c: (xc, zc ^ zt), t: (xc ^ xt, zt)}), 2
    raise ValueError(f"{kind.value} is not a Clifford gate; use update_r")


def _r_step(key: PauliKey, w: int, pair: RandomBitPair) -> tuple[PauliKey, int]:
    xb, zb = key.pair(w)
    return key.with_pairs({w: (pair.r ^ xb, pair.r_prime ^ xb ^ zb)}), 3


def update_clifford(key: PauliKey, gate: Gate) -> PauliKey:
    """Key after commuting the mask through one of X, Y, Z, H, P, CNOT."""
    return _clifford_step(key, gate)[0]


def update_r(key: PauliKey, w: int, pair: RandomBitPair) -> PauliKey:
    """Key after an R gate on qubit ``w`` and the client's ``X^r Z^r' P^x(w)`` correction."""
    return _r_step(key, w, pair)[0]


def advance(key: PauliKey, gate: Gate, pair: RandomBitPair | None = None) -> tuple[PauliKey, int]:
    """One key-update step; returns the new key and the XOR count it cost."""
    if gate.kind is GateKind.R:
        if pair is None:
            raise RPairCountMismatch(f"{gate} needs an r-pair")
        gate.check_width(key.width)
        return _r_step(key, gate.targets[0], pair)
    return _clifford_step(key, gate)


def run_key_schedule(ek: PauliKey, gates: Sequence[Gate], r_pairs: Sequence[RandomBitPair]) -> KeySchedule:
    """Fold the key updates over ``gates`` in execution order.

    ``gates`` may be a :class:`~qfhe.uqc.Circuit` or any gate sequence.
    """
    gates = list(getattr(gates, "gates", gates))
    n_r = sum(g.kind is GateKind.R for g in gates)
    if len(r_pairs) != n_r:
        raise RPairCountMismatch(f"circuit has {n_r} R gate(s) but {len(r_pairs)} r-pair(s) given")
    pairs = iter(r_pairs)
    key = ek
    steps, xors = [], []
    for g in gates:
        key, cost = advance(key, g, next(pairs) if g.kind is GateKind.R else None)
        steps.append(key)
        xors.append(cost)
    return KeySchedule(ek, tuple(steps), tuple(r_pairs), tuple(xors))


def run_repeated_schedule(
    ek: PauliKey, gates: Sequence[Gate], r_pairs: Sequence[RandomBitPair], repetitions: int
) -> list[KeySchedule]:
    """Schedules for ``repetitions`` passes with a fresh encoding register each pass.

    ``r_pairs`` holds the pairs for all passes, pass by pass.
    """
    gates = list(getattr(gates, "gates", gates))
    n_r = sum(g.kind is GateKind.R for g in gates)
    if repetitions < 1:
        raise InvalidDimensions(f"repetitions must be >= 1, got {repetitions}")
    if len(r_pairs) != n_r * repetitions:
        raise RPairCountMismatch(
            f"{repetitions} pass(es) of {n_r} R gate(s) need {n_r * repetitions} r-pairs, got {len(r_pairs)}"
        )
    schedules = []
    key = ek
    for rep in range(repetitions):
        if rep:
            key = key.with_encoding_cleared()
        sched = run_key_schedule(key, gates, r_pairs[rep * n_r : (rep + 1) * n_r])
        schedules.append(sched)
        key = sched.dk
    return schedules


_KEY_RE = re.compile(
    r"^qfhe-key v1 n=(?P<n>\d+) m=(?P<m>\d+) x=(?P<x>[0-9a-f]+) z=(?P<z>[0-9a-f]+)$"
)


def _hex_of(bits: Sequence[int]) -> str:
    digits = max(1, -(-len(bits) // 4))
    value = int("".join(map(str, bits)) or "0", 2)
    return format(value, f"0{digits}x")


def _bits_of(hexstr: str, width: int) -> tuple[int, ...]:
    value = int(hexstr, 16)
    if value >> width:
        raise ParseError(f"hex value {hexstr} does not fit in {width} bits", 1)
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def format_key(key: PauliKey) -> str:
    """Canonical one-line text form; bit 1 is the most significant hex bit."""
    return f"qfhe-key v1 n={key.n} m={key.m} x={_hex_of(key.x)} z={_hex_of(key.z)}"


def parse_key(text: str) -> PauliKey:
    line = text.strip()
    match = _KEY_RE.match(line)
    if not match:
        raise ParseError("expected 'qfhe-key v1 n=<n> m=<m> x=<hex> z=<hex>'", 1, 1)
    n, m = int(match["n"]), int(match["m"])
    if n < 1:
        raise InvalidDimensions(f"n must be >= 1, got {n}")
    width = n + m
    return PauliKey(_bits_of(match["x"], width), _bits_of(match["z"], width), n, m)
