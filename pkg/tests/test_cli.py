import json
import subprocess
import sys

import numpy as np
import pytest

from qfhe.cli import load_state, main, state_record
from qfhe.errors import InvalidDimensions, ParseError
from qfhe.pauli_frame import parse_key
from qfhe.sim_core import Gate, StateVector
from qfhe.uqc import Circuit, save_circuit


@pytest.fixture
def keyfile(tmp_path):
    def make(n, m=0, seed=1):
        path = tmp_path / f"k{n}{m}{seed}.key"
        assert main(["keygen", "--n", str(n), "--m", str(m), "--seed", str(seed), "--out", str(path)]) == 0
        return path
    return make


@pytest.fixture
def circuit_file(tmp_path):
    def make(circuit, name="c.qc.json"):
        path = tmp_path / name
        save_circuit(circuit, path)
        return path
    return make


def run_cli(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def amplitudes(out):
    rec = json.loads(out.splitlines()[0])
    return np.array([complex(re, im) for re, im in rec["amplitudes"]])


def test_keygen_is_deterministic(capsys):
    _, first, _ = run_cli(capsys, ["keygen", "--n", "3", "--m", "2", "--seed", "7"])
    _, second, _ = run_cli(capsys, ["keygen", "--n", "3", "--m", "2", "--seed", "7"])
    assert first == second
    key = parse_key(first)
    assert (key.n, key.m) == (3, 2)
    assert key.is_encryption_key()


def test_keygen_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("QFHE_SEED", "7")
    _, from_env, _ = run_cli(capsys, ["keygen", "--n", "3"])
    monkeypatch.delenv("QFHE_SEED")
    _, explicit, _ = run_cli(capsys, ["keygen", "--n", "3", "--seed", "7"])
    assert from_env == explicit


def test_keygen_rejects_zero_qubits(capsys):
    code, _, err = run_cli(capsys, ["keygen", "--n", "0"])
    assert code == 2 and "error" in err


def test_run_selects_x(capsys, keyfile, circuit_file):
    c = circuit_file(Circuit(1, 1, (Gate.cnot(2, 1),)))
    code, out, _ = run_cli(capsys, ["run", "--circuit", str(c), "--key", str(keyfile(1, 1)),
                                    "--data", "0", "--encoding", "1", "--seed", "3"])
    assert code == 0
    assert np.allclose(amplitudes(out), [0, 1])


def test_run_empty_circuit_returns_input(capsys, keyfile, circuit_file, tmp_path):
    state = tmp_path / "psi.json"
    state.write_text(json.dumps({"amplitudes": [[0.6, 0], [0, 0.8]]}))
    c = circuit_file(Circuit(1))
    code, out, _ = run_cli(capsys, ["run", "--circuit", str(c), "--key", str(keyfile(1)),
                                    "--data", str(state), "--seed", "3"])
    assert code == 0
    # global phase is fixed on the largest amplitude
    assert np.allclose(amplitudes(out), [-0.6j, 0.8])


def test_run_transcript_trailer(capsys, keyfile, circuit_file, tmp_path):
    c = circuit_file(Circuit(1, 0, (Gate.single("R", 1), Gate.single("H", 1), Gate.single("R", 1))))
    log = tmp_path / "t.jsonl"
    code, _, err = run_cli(capsys, ["run", "--circuit", str(c), "--key", str(keyfile(1)), "--data", "0",
                                    "--reps", "2", "--seed", "3", "--transcript", str(log)])
    assert code == 0
    trailer = json.loads(log.read_text().splitlines()[-1])
    assert trailer["messages"] == 8 and trailer["gates_executed"] == 6
    assert "counters_ok=True" in err


def test_run_is_reproducible(capsys, keyfile, circuit_file, tmp_path):
    c = circuit_file(Circuit(2, 0, (Gate.single("H", 1), Gate.single("R", 1), Gate.cnot(1, 2))))
    key = keyfile(2)
    outs = []
    for i, transport in enumerate(("inproc", "inproc", "socket")):
        log = tmp_path / f"t{i}.jsonl"
        _, out, _ = run_cli(capsys, ["run", "--circuit", str(c), "--key", str(key), "--data", "00",
                                     "--seed", "11", "--transport", transport, "--transcript", str(log)])
        outs.append((out, log.read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_run_parse_error(capsys, keyfile, tmp_path):
    bad = tmp_path / "bad.qc.json"
    bad.write_text('{"n": 1, "m": 0, "gates": [\n{"g": "H", "q": [1]\n]}')
    code, _, err = run_cli(capsys, ["run", "--circuit", str(bad), "--key", str(keyfile(1)), "--data", "0"])
    assert code == 3 and "line 3" in err


def test_run_missing_file_is_usage_error(capsys, keyfile, tmp_path):
    code, _, _ = run_cli(capsys, ["run", "--circuit", str(tmp_path / "nope"), "--key", str(keyfile(1)),
                                  "--data", "0"])
    assert code == 2


def test_run_key_shape_mismatch(capsys, keyfile, circuit_file):
    c = circuit_file(Circuit(1, 1, (Gate.cnot(2, 1),)))
    code, _, _ = run_cli(capsys, ["run", "--circuit", str(c), "--key", str(keyfile(2)),
                                  "--data", "0", "--encoding", "1"])
    assert code == 2


def test_encrypt_command(capsys, tmp_path):
    key = tmp_path / "zero.key"
    key.write_text("qfhe-key v1 n=1 m=1 x=2 z=0\n")
    code, out, _ = run_cli(capsys, ["encrypt", "--key", str(key), "--data", "0", "--encoding", "1"])
    assert code == 0
    assert np.allclose(amplitudes(out), StateVector.basis("11").amplitudes)


def test_audit_conjugation(capsys):
    code, out, _ = run_cli(capsys, ["audit", "--suite", "conjugation", "--json"])
    assert code == 0
    data = json.loads(out)
    assert data["passed"] and data["pass"] == data["cases"]


@pytest.mark.parametrize("suite", ["mixing", "privacy", "all"])
def test_audit_suites_pass(capsys, suite):
    code, out, _ = run_cli(capsys, ["audit", "--suite", suite, "--n", "2", "--seed", "1"])
    assert code == 0 and "pass" in out


def test_audit_failure_exit_code(capsys, monkeypatch):
    from qfhe import audit

    monkeypatch.setattr(audit, "CONJUGATION_TOL", -1.0)
    code, _, _ = run_cli(capsys, ["audit", "--suite", "conjugation"])
    assert code == 5


def test_selector_command(capsys, tmp_path):
    out_path = tmp_path / "sel.qc.json"
    code, _, err = run_cli(capsys, ["selector", "--menu", "I;Z1", "--out", str(out_path)])
    assert code == 0
    assert "Z@1: encoding=1" in err
    assert '"CNOT"' in out_path.read_text()


def test_selector_rejects_unsupported(capsys):
    code, _, _ = run_cli(capsys, ["selector", "--menu", "I;H1"])
    assert code == 2


def test_bad_arguments_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["keygen"])
    assert exc.value.code == 2


def test_load_state_forms(tmp_path):
    assert np.allclose(load_state("|10>").amplitudes, StateVector.basis("10").amplitudes)
    f = tmp_path / "s.json"
    f.write_text(json.dumps([0.6, 0.8]))
    assert np.allclose(load_state(str(f)).amplitudes, [0.6, 0.8])
    f.write_text(json.dumps([0.6, 0.6]))
    with pytest.raises(InvalidDimensions):
        load_state(str(f))
    f.write_text("[0.6,")
    with pytest.raises(ParseError):
        load_state(str(f))
    with pytest.raises(ParseError):
        load_state("01x")


def test_state_record_fixes_global_phase():
    rec = state_record(StateVector([0.6j, -0.8j]))
    assert rec["amplitudes"] == [[-0.6, 0.0], [0.8, 0.0]]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qfhe", "keygen", "--n", "2", "--seed", "5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("qfhe-key v1 n=2 m=0")
