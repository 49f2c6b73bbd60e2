import json
import subprocess
import sys

import numpy as np
import pytest

from spectraset.cli import main, read_tuple, resolve_tolerances, build_parser, write_tuple
from spectraset.generate import gen_gamma_unitary


def run(args, **kw):
    return main([str(a) for a in args])


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


def scalar_doc(s, p):
    return {"dim": 1, "n": 2, "matrices": {"S1": [[[s, 0]]], "P": [[[p, 0]]]}}


def generate(tmp_path, spec, name="t.json"):
    out = tmp_path / name
    assert run(["generate", "--spec", json.dumps(spec), "--out", out]) == 0
    return out


def test_analyze_gamma_unitary(tmp_path, capsys):
    f = generate(tmp_path, {"kind": "gamma_unitary", "n": 3, "dim": 4, "seed": 2})
    assert run(["analyze", f, "--trials", 20]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert "gamma-unitary: structural pass" in rep["classification"]["labels"]
    assert rep["tolerances"]["equality"] == 1e-8 and rep["seed"] == 0
    assert len(rep["input_sha256"]) == 64
    for c in rep["certificates"]:
        assert c["verdict"] in {"certified", "certified-necessary", "falsified", "no-violation-found"}


def test_analyze_falsified_scalar(tmp_path, capsys):
    f = write(tmp_path, "bad.json", scalar_doc(2.5, 1.0))
    assert run(["analyze", f, "--trials", 10]) == 1
    rep = json.loads(capsys.readouterr().out)
    vn = next(c for c in rep["certificates"] if c["name"] == "vn_gamma")
    assert vn["verdict"] == "falsified" and vn["witness"]


@pytest.mark.parametrize(
    "doc",
    [
        {"dim": 2, "n": 2, "matrices": {"S1": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]], "P": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}},
        {"dim": 1, "n": 2, "matrices": {"S1": [[[0, 0]]]}},
        {"dim": 2, "n": 2, "matrices": {"S1": [[[0, 0]]], "P": [[[0, 0]]]}},
        scalar_doc(0.0, 1.5),
        "not json",
        {"dim": 1, "matrices": {"A": [[["x", 0]]], "B": [[[0, 0]]], "P": [[[0, 0]]]}},
    ],
)
def test_invalid_inputs(tmp_path, doc):
    f = write(tmp_path, "x.json", doc)
    assert run(["analyze", f]) == 2


def test_missing_file_and_bad_flags(tmp_path):
    assert run(["analyze", tmp_path / "nope.json"]) == 2
    f = write(tmp_path, "ok.json", scalar_doc(0.0, 0.0))
    assert run(["analyze", f, "--grid", 4]) == 2
    assert run(["decompose", f, "--scheme", "wold"]) == 2
    assert run(["frobnicate"]) == 2


def test_nonconvergence_exit(tmp_path):
    f = write(tmp_path, "slow.json", scalar_doc(0.0, 1 - 1e-9))
    assert run(["decompose", f, "--scheme", "canonical", "--max-doublings", 3]) == 3
    assert run(["analyze", f, "--max-doublings", 3, "--trials", 5]) == 3


def test_decompose_commands(tmp_path, capsys):
    f = generate(tmp_path, {"kind": "planted", "n": 2, "dim": 5, "seed": 1, "params": {"unitary_dim": 2}})
    assert (tmp_path / "t.frames.json").exists()
    capsys.readouterr()
    assert run(["decompose", f, "--scheme", "canonical"]) == 0
    d = json.loads(capsys.readouterr().out)["decomposition"]
    assert [p["dim"] for p in d["parts"]] == [2, 3]
    frames = json.loads((tmp_path / "t.frames.json").read_text())
    assert len(frames["unitary"][0]) == 2
    basis = np.array(d["parts"][0]["basis"])
    B = basis[..., 0] + 1j * basis[..., 1]
    assert np.allclose(B.conj().T @ B, np.eye(2), atol=1e-10)

    f = generate(tmp_path, {"kind": "truncated_shift", "n": 2, "dim": 64}, "shift.json")
    capsys.readouterr()
    assert run(["decompose", f, "--scheme", "levan"]) == 0
    d = json.loads(capsys.readouterr().out)["decomposition"]
    assert d["hypothesis_violated"] is True

    f = generate(tmp_path, {"kind": "gamma_unitary", "n": 2, "dim": 3, "seed": 4}, "u.json")
    capsys.readouterr()
    assert run(["decompose", f, "--scheme", "foguel"]) == 0
    d = json.loads(capsys.readouterr().out)["decomposition"]
    assert d["parts"][0]["label"] == "weakly_stable" and d["parts"][0]["dim"] == 0


def test_generate_shift_entry_and_determinism(tmp_path):
    f = generate(tmp_path, {"kind": "truncated_shift", "dim": 8, "params": {"weight": 0.5}})
    doc = json.loads(f.read_text())
    assert doc["matrices"]["S1"][1][0] == [1.0, 0.0]  # S1 = 2P
    f = generate(tmp_path, {"kind": "truncated_shift", "dim": 8, "params": {"mode": "e"}}, "e.json")
    assert json.loads(f.read_text())["matrices"]["A"][1][0] == [0.5, 0.0]
    a = generate(tmp_path, {"kind": "commuting_unitaries", "n": 3, "dim": 4, "seed": 7}, "a.json").read_bytes()
    b = generate(tmp_path, {"kind": "commuting_unitaries", "n": 3, "dim": 4, "seed": 7}, "b.json").read_bytes()
    assert a == b
    assert run(["generate", "--spec", '{"kind": "nope"}']) == 2
    assert run(["generate", "--spec", "{bad"]) == 2


def test_round_trip_byte_identical(tmp_path):
    t = gen_gamma_unitary(3, 3, 1)
    text = write_tuple(3, dict(zip(t.names(), t.matrices)))
    n, mats = read_tuple(text)
    assert write_tuple(n, mats) == text


def test_e_mode_analyze(tmp_path, capsys):
    f = generate(tmp_path, {"kind": "e_from_gamma", "dim": 3, "seed": 2})
    capsys.readouterr()
    assert run(["analyze", f, "--trials", 20]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["classification"]["mode"] == "e"
    f = write(tmp_path, "bad_e.json", {"dim": 1, "matrices": {"A": [[[3, 0]]], "B": [[[0, 0]]], "P": [[[0, 0]]]}})
    assert run(["analyze", f, "--trials", 5]) == 1


def test_env_and_flag_precedence(monkeypatch):
    parser = build_parser()
    args = parser.parse_args(["analyze", "x.json"])
    monkeypatch.setenv("SPECTRASET_TOL_EQ", "1e-6")
    assert resolve_tolerances(args).equality == 1e-6
    args = parser.parse_args(["analyze", "x.json", "--tol-eq", "1e-7"])
    assert resolve_tolerances(args).equality == 1e-7
    monkeypatch.setenv("SPECTRASET_TOL_RANK", "oops")
    assert main(["analyze", "x.json"]) == 2


def test_report_is_strict_json(tmp_path):
    f = write(tmp_path, "s.json", scalar_doc(0.5, 0.25))
    out = tmp_path / "r.json"
    assert run(["analyze", f, "--out", out, "--trials", 5]) == 0
    json.loads(out.read_text(), parse_constant=lambda c: pytest.fail(f"non-finite {c}"))


def test_module_entry_point(tmp_path):
    f = write(tmp_path, "s.json", scalar_doc(0.0, 0.0))
    r = subprocess.run([sys.executable, "-m", "spectraset", "analyze", str(f), "--trials", "3"], capture_output=True)
    assert r.returncode == 0 and json.loads(r.stdout)["classification"]["mode"] == "gamma"
