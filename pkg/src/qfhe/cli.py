"""Command line: ``qfhe keygen | encrypt | run | audit | selector``.

Exit codes: 0 success, 2 usage or precondition, 3 parse error,
4 protocol desync, 5 audit failure, 6 custody violation.

Randomness: ``--seed`` (or ``$QFHE_SEED``) seeds one numpy generator. The
keygen command draws key bits from it (x-bits then z-bits); ``run`` draws
the ``(r, r')`` pairs from it in gate order, pass after pass.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import audit, pauli_frame, protocol, uqc
from .errors import (
    CustodyViolation,
    EncodingRegisterMismatch,
    InvalidDimensions,
    ParseError,
    ProtocolDesync,
    QfheError,
)
from .sim_core import StateVector

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_PROTOCOL, EXIT_AUDIT, EXIT_CUSTODY = 0, 2, 3, 4, 5, 6


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QFHE_SEED")
    return int(env) if env else None


def _run_id(args, seed) -> int:
    if args.run_id is not None:
        return args.run_id
    env = os.environ.get("QFHE_RUN_ID")
    if env:
        return int(env)
    return (seed or 0) % 2**64


def _bits(text: str) -> tuple[int, ...]:
    text = text.strip().strip("|>⟩")
    if any(c not in "01" for c in text):
        raise ParseError(f"not a bitstring: {text!r}")
    return tuple(int(c) for c in text)


def load_state(spec: str) -> StateVector:
    """A basis string like ``|01>`` / ``01``, or a path to an amplitude JSON file.

    Amplitude files hold ``{"amplitudes": [[re, im], ...]}`` or a bare list
    of ``[re, im]`` pairs or real numbers.
    """
    path = Path(spec)
    if not path.is_file():
        return StateVector.basis(_bits(spec))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    raw = doc["amplitudes"] if isinstance(doc, dict) else doc
    try:
        amps = np.array([complex(a[0], a[1]) if isinstance(a, list) else complex(a) for a in raw])
    except (TypeError, ValueError, IndexError):
        raise ParseError(f"{spec}: amplitudes must be numbers or [re, im] pairs") from None
    norm2 = float(np.vdot(amps, amps).real)
    if abs(norm2 - 1) > 1e-9:
        raise InvalidDimensions(f"{spec}: state has norm^2 {norm2:.12g}, not 1 within 1e-9")
    return StateVector(amps, normalize=True)


def state_record(state: StateVector) -> dict:
    """JSON form with the global phase fixed so the largest amplitude is real positive."""
    amps = state.amplitudes
    k = int(np.argmax(np.abs(amps).round(12)))
    amps = amps * (abs(amps[k]) / amps[k])
    amps = np.where(np.abs(amps.real) < 1e-15, 0.0, amps.real) + 1j * np.where(
        np.abs(amps.imag) < 1e-15, 0.0, amps.imag
    )
    return {"num_qubits": state.num_qubits, "amplitudes": [[float(a.real), float(a.imag)] for a in amps]}


def cmd_keygen(args) -> int:
    rng = np.random.default_rng(_seed(args))
    key = pauli_frame.keygen(args.n, args.m, rng)
    text = key.to_text() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_encrypt(args) -> int:
    key = pauli_frame.parse_key(Path(args.key).read_text())
    data = load_state(args.data)
    cipher = protocol.client_encrypt(data, key, _bits(args.encoding or ""))
    out = json.dumps(state_record(cipher)) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_run(args) -> int:
    circuit = uqc.load_circuit(args.circuit)
    key = pauli_frame.parse_key(Path(args.key).read_text())
    data = load_state(args.data)
    seed = _seed(args)
    plan = protocol.EvaluationPlan(circuit, _bits(args.encoding or ""), args.reps)
    res = protocol.run_delegation(
        data, key, plan, args.transport, np.random.default_rng(seed),
        run_id=_run_id(args, seed), schedule_mode=args.schedule,
    )
    record = json.dumps(state_record(res.result)) + "\n"
    if args.out:
        Path(args.out).write_text(record)
    else:
        sys.stdout.write(record)
    if args.transcript:
        Path(args.transcript).write_text(res.transcript.to_jsonl())
    summary = audit.complexity_counters(res.transcript, res.schedules)
    print(
        f"gates={summary.gate_applications} messages={summary.messages} "
        f"xors={res.transcript.xor_operations} max_xor_per_step={summary.max_xor_per_step} "
        f"encryption_masks={summary.encryption_masks} counters_ok={summary.ok}",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return EXIT_OK


def cmd_audit(args) -> int:
    report = audit.run_audit(args.suite, n=args.n, seed=_seed(args) or 0)
    print(report.to_json() if args.json else report.text)
    return EXIT_OK if report.passed else EXIT_AUDIT


def cmd_selector(args) -> int:
    menu = [p.strip() for p in args.menu.split(";")]
    spec = uqc.build_gate_selector_uqc(menu, args.n)
    if args.out:
        uqc.save_circuit(spec.circuit, args.out)
    else:
        sys.stdout.write(uqc.dumps_circuit(spec.circuit))
    for label, (_, enc) in zip(spec.labels, spec.family):
        print(f"{label}: encoding={''.join(map(str, enc)) or '(empty)'}", file=sys.stderr)
    report = uqc.validate_uqc(spec)
    print(report.to_table(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfhe", description="Quantum homomorphic encryption on a UQC, simulated.")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default: $QFHE_SEED)")

    k = sub.add_parser("keygen", help="draw an encryption key")
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--m", type=int, default=0)
    k.add_argument("--out")
    seeded(k)
    k.set_defaults(func=cmd_keygen)

    e = sub.add_parser("encrypt", help="one-time-pad a data state and append the encoding")
    e.add_argument("--key", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--encoding", default="")
    e.add_argument("--out")
    e.set_defaults(func=cmd_encrypt)

    r = sub.add_parser("run", help="encrypt, evaluate interactively, decrypt")
    r.add_argument("--circuit", required=True)
    r.add_argument("--key", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--encoding", default="")
    r.add_argument("--reps", type=int, default=1)
    r.add_argument("--transport", choices=("inproc", "socket"), default="inproc")
    r.add_argument("--schedule", choices=("lazy", "precomputed"), default="lazy")
    r.add_argument("--run-id", type=int, default=None, help="default: $QFHE_RUN_ID, else seed")
    r.add_argument("--out")
    r.add_argument("--transcript")
    seeded(r)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="run the security and identity checks")
    a.add_argument("--suite", choices=("conjugation", "mixing", "privacy", "all"), default="all")
    a.add_argument("--n", type=int, default=1)
    a.add_argument("--json", action="store_true")
    seeded(a)
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("selector", help="build a gate-selector UQC from a menu like 'I;X1;Z1'")
    s.add_argument("--menu", required=True)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_selector)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CustodyViolation as exc:
        print(f"custody violation: {exc}", file=sys.stderr)
        return EXIT_CUSTODY
    except (ProtocolDesync, EncodingRegisterMismatch) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (QfheError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
