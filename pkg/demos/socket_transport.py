"""
Client and server over a socket
===============================

The same run as the in-process transport, but messages travel as
length-prefixed binary frames over a socket pair with the client in its
own thread. The transcript comes out byte-for-byte the same.
"""
import numpy as np

from qfhe import EvaluationPlan, StateVector, draw_r_pairs, keygen, run_delegation
from qfhe.protocol import Message
from qfhe.uqc import shipped_uqcs

spec = shipped_uqcs()["toffoli_selected"]
rng = np.random.default_rng(3)
ek = keygen(spec.circuit.n, spec.circuit.m, rng)
pairs = draw_r_pairs(spec.circuit.n_r * 2, rng)
data = StateVector.random(spec.circuit.n, rng)
plan = EvaluationPlan(spec.circuit, spec.family[-1][1], repetitions=2)

inproc = run_delegation(data, ek, plan, "inproc", r_pairs=pairs, run_id=42)
sock = run_delegation(data, ek, plan, "socket", r_pairs=pairs, run_id=42)

print("frames on the wire:", len(sock.transcript.messages))
first = sock.transcript.messages[1]
print("a SendQubit frame:", first.encode().hex(), "->", Message.decode(first.encode()))
print("transcripts identical:", inproc.transcript.to_jsonl() == sock.transcript.to_jsonl())
print("results identical:", np.allclose(inproc.result.amplitudes, sock.result.amplitudes))
print("trailer:", sock.transcript.to_jsonl().splitlines()[-1])
