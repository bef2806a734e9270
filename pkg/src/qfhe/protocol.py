"""Client/server evaluation of a UQC on one-time-padded data.

The server runs the circuit on the ciphertext. Every time it applies an R
gate it hands that qubit to the client, who applies ``X^r Z^r' P^x(w)`` and
hands it back. The client never sees the circuit's intermediate states; the
server never sees a key bit.

Qubits that are entangled cannot be cut out of a statevector, so a "sent"
qubit stays in one shared :class:`QuantumBackend` and only its custody
moves. The backend refuses gates from a party that does not hold the qubit.

Wire format of a message (big-endian): 1-byte kind, 2-byte qubit index,
8-byte run id; ``EvalStart`` appends the 32-byte SHA-256 circuit digest.
On a byte stream every frame is preceded by a 4-byte length.
"""
from __future__ import annotations

import json
import logging
import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Sequence

import numpy as np

from .errors import (
    CustodyViolation,
    DimensionMismatch,
    EncodingRegisterMismatch,
    InvalidDimensions,
    ProtocolDesync,
    RPairCountMismatch,
)
from .pauli_frame import (
    KeySchedule,
    PauliKey,
    RandomBitPair,
    advance,
    draw_r_pairs,
    qotp_apply,
    run_repeated_schedule,
)
from .sim_core import Gate, GateKind, StateVector, apply_gate
from .uqc import Circuit

log = logging.getLogger(__name__)

ENCODING_TOL = 1e-9


class Party(str, Enum):
    CLIENT = "client"
    SERVER = "server"


class MessageKind(IntEnum):
    EVAL_START = 1
    SEND_QUBIT = 2
    RETURN_QUBIT = 3
    EVAL_DONE = 4

    @property
    def label(self) -> str:
        return {1: "EvalStart", 2: "SendQubit", 3: "ReturnQubit", 4: "EvalDone"}[self.value]


_HEADER = struct.Struct(">BHQ")
_DIGEST_LEN = 32


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    qubit: int = 0
    run_id: int = 0
    digest: bytes = b""

    def encode(self) -> bytes:
        body = _HEADER.pack(int(self.kind), self.qubit, self.run_id)
        if self.kind is MessageKind.EVAL_START:
            if len(self.digest) != _DIGEST_LEN:
                raise ValueError("EvalStart needs a 32-byte circuit digest")
            body += self.digest
        return body

    @classmethod
    def decode(cls, frame: bytes) -> "Message":
        if len(frame) < _HEADER.size:
            raise ProtocolDesync(f"short frame of {len(frame)} bytes")
        kind, qubit, run_id = _HEADER.unpack_from(frame)
        try:
            kind = MessageKind(kind)
        except ValueError:
            raise ProtocolDesync(f"unknown message kind {kind}") from None
        digest = frame[_HEADER.size :]
        expected = _DIGEST_LEN if kind is MessageKind.EVAL_START else 0
        if len(digest) != expected:
            raise ProtocolDesync(f"{kind.label} frame has {len(frame)} bytes")
        return cls(kind, qubit, run_id, digest)

    def to_record(self, seq: int) -> dict:
        rec = {"seq": seq, "kind": self.kind.label, "qubit": self.qubit, "run_id": self.run_id}
        if self.digest:
            rec["digest"] = self.digest.hex()
        return rec


def eval_start(run_id: int, circuit: Circuit) -> Message:
    return Message(MessageKind.EVAL_START, 0, run_id, circuit.digest())


@dataclass
class Transcript:
    """Ordered message log of one run plus the complexity counters."""

    run_id: int = 0
    messages: list[Message] = field(default_factory=list)
    gates_executed: int = 0
    xor_operations: int = 0
    encryption_masks: int = 0
    n_r: int = 0
    repetitions: int = 1
    circuit_size: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, msg: Message) -> None:
        with self._lock:
            self.messages.append(msg)

    @property
    def qubit_messages(self) -> int:
        """Qubit transfers only (SendQubit + ReturnQubit)."""
        return sum(
            m.kind in (MessageKind.SEND_QUBIT, MessageKind.RETURN_QUBIT) for m in self.messages
        )

    def trailer(self) -> dict:
        return {
            "trailer": True,
            "run_id": self.run_id,
            "gates_executed": self.gates_executed,
            "xor_operations": self.xor_operations,
            "messages": self.qubit_messages,
            "encryption_masks": self.encryption_masks,
            "n_r": self.n_r,
            "repetitions": self.repetitions,
            "circuit_size": self.circuit_size,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(m.to_record(i), sort_keys=True) for i, m in enumerate(self.messages)]
        lines.append(json.dumps(self.trailer(), sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        labels = {k.label: k for k in MessageKind}
        out = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("trailer"):
                out.run_id = rec["run_id"]
                out.gates_executed = rec["gates_executed"]
                out.xor_operations = rec["xor_operations"]
                out.encryption_masks = rec["encryption_masks"]
                out.n_r = rec["n_r"]
                out.repetitions = rec["repetitions"]
                out.circuit_size = rec["circuit_size"]
            else:
                digest = bytes.fromhex(rec.get("digest", ""))
                out.messages.append(Message(labels[rec["kind"]], rec["qubit"], rec["run_id"], digest))
        return out


@dataclass(frozen=True)
class EvaluationPlan:
    circuit: Circuit
    encoding: tuple[int, ...] = ()
    repetitions: int = 1

    def __post_init__(self):
        object.__setattr__(self, "encoding", tuple(int(b) for b in self.encoding))
        if self.repetitions < 1:
            raise InvalidDimensions(f"repetitions must be >= 1, got {self.repetitions}")
        if len(self.encoding) != self.circuit.m or any(b not in (0, 1) for b in self.encoding):
            raise InvalidDimensions(
                f"encoding {self.encoding} is not a {self.circuit.m}-bit string"
            )


class QuantumBackend:
    """Shared simulated register; the single arbiter of who may touch which qubit."""

    def __init__(self, state: StateVector, owner: Party = Party.SERVER):
        self._state = state
        self._owner = {w: owner for w in range(1, state.num_qubits + 1)}
        self._lock = threading.Lock()
        self.applied = {Party.CLIENT: 0, Party.SERVER: 0}

    @property
    def num_qubits(self) -> int:
        return self._state.num_qubits

    def owner(self, w: int) -> Party:
        return self._owner[w]

    def _require(self, party: Party, qubits) -> None:
        for w in qubits:
            if w not in self._owner:
                raise CustodyViolation(f"no qubit {w} in a {self.num_qubits}-qubit register")
            if self._owner[w] is not party:
                raise CustodyViolation(f"{party.value} touched qubit {w} held by {self._owner[w].value}")

    def apply(self, party: Party, gate: Gate) -> None:
        with self._lock:
            self._require(party, gate.targets)
            self._state = apply_gate(self._state, gate)
            self.applied[party] += 1

    def transfer(self, party: Party, w: int, to: Party) -> None:
        with self._lock:
            self._require(party, [w])
            self._owner[w] = to

    def transfer_all(self, party: Party, to: Party) -> None:
        with self._lock:
            self._require(party, self._owner)
            for w in self._owner:
                self._owner[w] = to

    def state(self, party: Party) -> StateVector:
        """Read the register; only a party holding every qubit may do so."""
        with self._lock:
            self._require(party, self._owner)
            return self._state

    def reprepare_encoding(self, party: Party, n: int, encoding: Sequence[int]) -> None:
        """Discard qubits ``n+1..`` and prepare ``|encoding>`` in their place.

        Only possible in a statevector when the discarded register is a
        product with the data register.
        """
        with self._lock:
            q = self.num_qubits
            self._require(party, range(n + 1, q + 1))
            m = q - n
            if m == 0:
                return
            block = self._state.amplitudes.reshape(2**n, 2**m)
            col = int(np.argmax(np.linalg.norm(block, axis=0)))
            data = block[:, col] / np.linalg.norm(block[:, col])
            rebuilt = np.outer(data, data.conj() @ block)
            if np.linalg.norm(block - rebuilt) > 1e-9:
                raise EncodingRegisterMismatch("encoding register is entangled with the data register")
            fresh = np.zeros(2**m, dtype=complex)
            fresh[int("".join(map(str, encoding)), 2)] = 1
            self._state = StateVector(np.kron(data, fresh), allow_large=True)


# --- client-side quantum operations ------------------------------------------------

def client_encrypt(data: StateVector, ek: PauliKey, encoding: Sequence[int]) -> StateVector:
    """Mask the data register with ``ek`` and append the plain encoding register."""
    encoding = tuple(int(b) for b in encoding)
    if data.num_qubits != ek.n or len(encoding) != ek.m:
        raise DimensionMismatch(
            f"key is for n={ek.n}, m={ek.m}; got {data.num_qubits} data qubit(s) "
            f"and a {len(encoding)}-bit encoding"
        )
    masked = qotp_apply(data, ek.x[: ek.n], ek.z[: ek.n], range(1, ek.n + 1))
    if not encoding:
        return masked
    return masked.tensor(StateVector.basis(encoding))


def correction_gates(w: int, x_bit: int, pair: RandomBitPair) -> list[Gate]:
    """``X^r Z^r' P^x`` on qubit ``w``, in application order (P first)."""
    gates = []
    if x_bit:
        gates.append(Gate.single("P", w))
    if pair.r_prime:
        gates.append(Gate.single("Z", w))
    if pair.r:
        gates.append(Gate.single("X", w))
    return gates


def apply_correction(state: StateVector, w: int, x_bit: int, pair: RandomBitPair) -> StateVector:
    for g in correction_gates(w, x_bit, pair):
        state = apply_gate(state, g)
    return state


def client_r_step(backend: QuantumBackend, w: int, x_bit: int, pair: RandomBitPair) -> QuantumBackend:
    """Apply the client's correction to a received qubit and hand it back."""
    for g in correction_gates(w, x_bit, pair):
        backend.apply(Party.CLIENT, g)
    backend.transfer(Party.CLIENT, w, Party.SERVER)
    return backend


def client_decrypt(result: StateVector, dk: PauliKey, encoding: Sequence[int] = ()) -> StateVector:
    """Unmask all ``n+m`` qubits and strip off the encoding register."""
    encoding = tuple(int(b) for b in encoding)
    if result.num_qubits != dk.width or len(encoding) != dk.m:
        raise DimensionMismatch(
            f"key width {dk.width} (m={dk.m}); got {result.num_qubits} qubit(s) "
            f"and a {len(encoding)}-bit encoding"
        )
    plain = qotp_apply(result, dk.x, dk.z, range(1, dk.width + 1))
    if not encoding:
        return plain
    block = plain.amplitudes.reshape(2**dk.n, 2**dk.m)
    data = block[:, int("".join(map(str, encoding)), 2)]
    weight = float(np.vdot(data, data).real)
    if weight < 1 - ENCODING_TOL:
        raise EncodingRegisterMismatch(
            f"encoding register overlaps |{''.join(map(str, encoding))}> with weight {weight:.3g}"
        )
    return StateVector(data, normalize=True)


# --- the two roles ------------------------------------------------------------------

class Server:
    """Runs the UQC. Holds the plan and the register, never a key."""

    def __init__(self, plan: EvaluationPlan, backend: QuantumBackend, run_id: int = 0):
        self.plan = plan
        self.backend = backend
        self.run_id = run_id

    def _expect(self, msg: Message, kind: MessageKind, qubit: int) -> None:
        if msg.run_id != self.run_id:
            raise ProtocolDesync(f"run id {msg.run_id} != {self.run_id}")
        if msg.kind is not kind or msg.qubit != qubit:
            raise ProtocolDesync(f"expected {kind.label}({qubit}), got {msg.kind.label}({msg.qubit})")

    def run(self, channel, transcript: Transcript) -> Transcript:
        plan = self.plan
        circuit = plan.circuit
        if any(self.backend.owner(w) is not Party.SERVER for w in range(1, circuit.width + 1)):
            raise CustodyViolation("server must hold every qubit when evaluation starts")
        transcript.run_id = self.run_id
        transcript.n_r = circuit.n_r
        transcript.repetitions = plan.repetitions
        transcript.circuit_size = len(circuit)
        channel.send(eval_start(self.run_id, circuit))
        for rep in range(plan.repetitions):
            if rep:
                self.backend.reprepare_encoding(Party.SERVER, circuit.n, plan.encoding)
            for gate in circuit.gates:
                self.backend.apply(Party.SERVER, gate)
                transcript.gates_executed += 1
                if gate.kind is GateKind.R:
                    (w,) = gate.targets
                    self.backend.transfer(Party.SERVER, w, Party.CLIENT)
                    channel.send(Message(MessageKind.SEND_QUBIT, w, self.run_id))
                    self._expect(channel.recv(), MessageKind.RETURN_QUBIT, w)
                    if self.backend.owner(w) is not Party.SERVER:
                        raise CustodyViolation(f"qubit {w} announced as returned but still held by client")
        channel.send(Message(MessageKind.EVAL_DONE, 0, self.run_id))
        self.backend.transfer_all(Party.SERVER, Party.CLIENT)
        return transcript


class Client:
    """Holds the keys and ``(r, r')`` bits; reacts to the server's messages.

    In ``"lazy"`` mode the key is advanced gate by gate as the server's
    R-gate requests arrive. In ``"precomputed"`` mode the whole schedule is
    computed up front and only read during the run. Both end with the same
    ``dk``.
    """

    def __init__(
        self,
        ek: PauliKey,
        plan: EvaluationPlan,
        r_pairs: Sequence[RandomBitPair],
        backend: QuantumBackend,
        run_id: int = 0,
        mode: str = "lazy",
    ):
        if mode not in ("lazy", "precomputed"):
            raise ValueError(f"unknown schedule mode {mode!r}")
        circuit = plan.circuit
        if (ek.n, ek.m) != (circuit.n, circuit.m):
            raise DimensionMismatch(f"key is for ({ek.n}, {ek.m}), circuit is ({circuit.n}, {circuit.m})")
        if len(r_pairs) != circuit.n_r * plan.repetitions:
            raise RPairCountMismatch(
                f"need {circuit.n_r * plan.repetitions} r-pairs, got {len(r_pairs)}"
            )
        self.ek = ek
        self.plan = plan
        self.r_pairs = list(r_pairs)
        self.backend = backend
        self.run_id = run_id
        self.mode = mode
        self.started = False
        self.done = False
        self._rep = 0
        self._pos = 0  # index of the next gate in the current pass
        self._pair_idx = 0
        self._key = ek
        self._steps: list[PauliKey] = []
        self._xors: list[int] = []
        self._rep_pairs: list[RandomBitPair] = []
        self.schedules: list[KeySchedule] = []
        self._precomputed = (
            run_repeated_schedule(ek, circuit, self.r_pairs, plan.repetitions)
            if mode == "precomputed"
            else None
        )

    @property
    def dk(self) -> PauliKey:
        if not self.done:
            raise ProtocolDesync("decryption key requested before EvalDone")
        return self.schedules[-1].dk

    def _close_pass(self) -> None:
        if self._precomputed is not None:
            self.schedules.append(self._precomputed[self._rep])
        else:
            self.schedules.append(
                KeySchedule(self._pass_start, tuple(self._steps), tuple(self._rep_pairs), tuple(self._xors))
            )
        self._steps, self._xors, self._rep_pairs = [], [], []

    @property
    def _pass_start(self) -> PauliKey:
        if self._rep == 0:
            return self.ek
        return self.schedules[-1].dk.with_encoding_cleared()

    def _step_clifford(self, gate: Gate) -> None:
        if self._precomputed is None:
            self._key, cost = advance(self._key, gate)
            self._steps.append(self._key)
            self._xors.append(cost)
        self._pos += 1

    def _advance_to_r(self) -> Gate | None:
        """Apply key updates up to the next R gate; ``None`` when the run is over."""
        gates = self.plan.circuit.gates
        while True:
            if self._pos == len(gates):
                self._close_pass()
                if self._rep + 1 == self.plan.repetitions:
                    self._rep += 1
                    return None
                self._rep += 1
                self._pos = 0
                self._key = self._pass_start
                continue
            gate = gates[self._pos]
            if gate.kind is GateKind.R:
                return gate
            self._step_clifford(gate)

    def _x_bit(self, w: int) -> int:
        if self._precomputed is None:
            return self._key.pair(w)[0]
        return self._precomputed[self._rep].key_before(self._pos + 1).pair(w)[0]

    def handle(self, msg: Message) -> list[Message]:
        if msg.run_id != self.run_id:
            raise ProtocolDesync(f"run id {msg.run_id} != {self.run_id}")
        if self.done:
            raise ProtocolDesync(f"{msg.kind.label} after EvalDone")
        if msg.kind is MessageKind.EVAL_START:
            if self.started:
                raise ProtocolDesync("duplicate EvalStart")
            if msg.digest != self.plan.circuit.digest():
                raise ProtocolDesync("server announced a different circuit")
            self.started = True
            return []
        if not self.started:
            raise ProtocolDesync(f"{msg.kind.label} before EvalStart")
        if msg.kind is MessageKind.SEND_QUBIT:
            gate = self._advance_to_r()
            if gate is None or gate.targets[0] != msg.qubit:
                raise ProtocolDesync(f"unexpected SendQubit({msg.qubit}); next R gate is {gate}")
            w = msg.qubit
            pair = self.r_pairs[self._pair_idx]
            client_r_step(self.backend, w, self._x_bit(w), pair)
            if self._precomputed is None:
                self._key, cost = advance(self._key, gate, pair)
                self._steps.append(self._key)
                self._xors.append(cost)
                self._rep_pairs.append(pair)
            self._pair_idx += 1
            self._pos += 1
            return [Message(MessageKind.RETURN_QUBIT, w, self.run_id)]
        if msg.kind is MessageKind.EVAL_DONE:
            gate = self._advance_to_r()
            if gate is not None:
                raise ProtocolDesync(f"EvalDone while {gate} is still pending")
            self.done = True
            return []
        raise ProtocolDesync(f"client cannot handle {msg.kind.label}")


# --- transports ------------------------------------------------------------------------

class InProcTransport:
    """Deterministic single-threaded transport.

    The server's ``send`` hands the message straight to the client's
    ``handle``; the client's replies queue up for the server's ``recv``.
    """

    def __init__(self, transcript: Transcript | None = None):
        self.transcript = transcript if transcript is not None else Transcript()
        self._inbox: deque[Message] = deque()
        self._client: Client | None = None
        self.server = _InProcServerEnd(self)

    def start_client(self, client: Client) -> None:
        self._client = client

    def join(self) -> None:
        pass


class _InProcServerEnd:
    def __init__(self, transport: InProcTransport):
        self._t = transport

    @property
    def transcript(self) -> Transcript:
        return self._t.transcript

    def send(self, msg: Message) -> None:
        t = self._t
        t.transcript.record(msg)
        if t._client is None:
            raise ProtocolDesync("no client attached")
        # round-trip through the wire format so both transports see the same bytes
        for reply in t._client.handle(Message.decode(msg.encode())):
            t.transcript.record(reply)
            t._inbox.append(Message.decode(reply.encode()))

    def recv(self) -> Message:
        if not self._t._inbox:
            raise ProtocolDesync("server is waiting but the client sent nothing")
        return self._t._inbox.popleft()


_LEN = struct.Struct(">I")


class StreamEndpoint:
    """Length-prefixed frames over a connected socket."""

    def __init__(self, sock: socket.socket, transcript: Transcript):
        self.sock = sock
        self.transcript = transcript

    def send(self, msg: Message) -> None:
        frame = msg.encode()
        self.transcript.record(msg)
        self.sock.sendall(_LEN.pack(len(frame)) + frame)

    def _read(self, count: int) -> bytes:
        buf = b""
        while len(buf) < count:
            chunk = self.sock.recv(count - len(buf))
            if not chunk:
                raise ProtocolDesync("peer closed the connection")
            buf += chunk
        return buf

    def recv(self) -> Message:
        (size,) = _LEN.unpack(self._read(_LEN.size))
        return Message.decode(self._read(size))


class SocketTransport:
    """Client and server as two threads talking over a local socket pair."""

    def __init__(self, transcript: Transcript | None = None, timeout: float = 30.0):
        self.transcript = transcript if transcript is not None else Transcript()
        a, b = socket.socketpair()
        a.settimeout(timeout)
        b.settimeout(timeout)
        self.server = StreamEndpoint(a, self.transcript)
        self._client_end = StreamEndpoint(b, self.transcript)
        self._thread: threading.Thread | None = None
        self._error: BaseException | None = None

    def _client_loop(self, client: Client) -> None:
        try:
            while not client.done:
                for reply in client.handle(self._client_end.recv()):
                    self._client_end.send(reply)
        except BaseException as exc:  # surfaced in join()
            self._error = exc
            self._client_end.sock.close()

    def start_client(self, client: Client) -> None:
        self._thread = threading.Thread(target=self._client_loop, args=(client,), daemon=True)
        self._thread.start()

    def join(self) -> None:
        if self._thread is not None:
            self._thread.join()
        self.server.sock.close()
        if not self._client_end.sock._closed:
            self._client_end.sock.close()
        if self._error is not None:
            raise self._error


def make_transport(kind: str = "inproc", transcript: Transcript | None = None):
    if kind == "inproc":
        return InProcTransport(transcript)
    if kind == "socket":
        return SocketTransport(transcript)
    raise ValueError(f"unknown transport {kind!r}")


def server_evaluate(backend: QuantumBackend, plan: EvaluationPlan, channel, run_id: int = 0,
                    transcript: Transcript | None = None) -> tuple[QuantumBackend, Transcript]:
    """Server side of an evaluation over ``channel`` (an endpoint with send/recv)."""
    if transcript is None:
        transcript = getattr(channel, "transcript", None)
        if transcript is None:
            transcript = Transcript()
    Server(plan, backend, run_id).run(channel, transcript)
    return backend, transcript


@dataclass
class DelegationResult:
    result: StateVector
    transcript: Transcript
    dk: PauliKey
    schedules: list[KeySchedule]
    r_pairs: list[RandomBitPair]


def run_delegation(
    data: StateVector,
    ek: PauliKey,
    plan: EvaluationPlan,
    transport: str = "inproc",
    rng=None,
    *,
    r_pairs: Sequence[RandomBitPair] | None = None,
    run_id: int = 0,
    schedule_mode: str = "lazy",
) -> DelegationResult:
    """Encrypt, evaluate with interactive R steps, decrypt.

    ``r_pairs`` are drawn from ``rng`` in gate order (r then r' per R gate,
    pass after pass) unless given explicitly.
    """
    circuit = plan.circuit
    if r_pairs is None:
        if rng is None:
            raise ValueError("need either rng or r_pairs")
        r_pairs = draw_r_pairs(circuit.n_r * plan.repetitions, rng)
    r_pairs = list(r_pairs)
    cipher = client_encrypt(data, ek, plan.encoding)
    backend = QuantumBackend(cipher, Party.SERVER)
    channel = make_transport(transport)
    transcript = channel.transcript
    transcript.encryption_masks = ek.n
    client = Client(ek, plan, r_pairs, backend, run_id, schedule_mode)
    channel.start_client(client)
    try:
        server_evaluate(backend, plan, channel.server, run_id, transcript)
    finally:
        channel.join()
    if not client.done:
        raise ProtocolDesync("server finished but the client never saw EvalDone")
    transcript.xor_operations = sum(sum(s.xor_counts) for s in client.schedules)
    log.debug("run %d: %d gates, %d qubit messages", run_id, transcript.gates_executed, transcript.qubit_messages)
    plain = client_decrypt(backend.state(Party.CLIENT), client.dk, plan.encoding)
    return DelegationResult(plain, transcript, client.dk, client.schedules, r_pairs)
