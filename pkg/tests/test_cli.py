import hashlib
import json
import subprocess
import sys

import pytest

from biased_order.cli import run


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def atoms(*pairs):
    return {"atoms": [{"x": x, "m": m} for x, m in pairs]}


@pytest.fixture
def files(tmp_path):
    return {
        "d0": write(tmp_path, "d0.json", atoms((0, 1))),
        "sym": write(tmp_path, "sym.json", atoms((-1, 0.5), (1, 0.5))),
        "wide": write(tmp_path, "wide.json", atoms((-2, 0.5), (2, 0.5))),
        "g": write(tmp_path, "g.json", {"kinks": [[-1, 0], [0, 1], [1, 0]], "ls": -1, "rs": 0}),
        "curve": write(tmp_path, "curve.json", {"kinks": [[0.25, 0], [1.5, 0.5]], "right_slope": 1}),
        "dir": tmp_path,
    }


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_order_check_exit_codes(files, capsys):
    assert run(["order", "check", "--mu", files["d0"], "--nu", files["sym"], "--beta", "0.5"]) == 0
    assert out_json(capsys)["holds"] is True
    assert run(["order", "check", "--mu", files["d0"], "--nu", files["sym"], "--beta", "0.6"]) == 1
    assert out_json(capsys)["holds"] is False
    assert run(["order", "check", "--mu", files["sym"], "--nu", files["wide"], "--beta", "0.3"]) == 1
    assert run(["order", "check", "--mu", files["d0"], "--nu", files["sym"], "--beta", "1.5"]) == 2


def test_max_bias_and_strong(files, capsys):
    assert run(["order", "max-bias", "--nu", files["sym"], "--x", "0"]) == 0
    assert out_json(capsys)["max_bias"] == pytest.approx(0.5)
    assert run(["order", "strong-check", "--mu", files["d0"], "--nu", files["sym"], "--beta", "0.5"]) == 1
    capsys.readouterr()
    assert run(["order", "strong-check", "--mu", files["sym"], "--nu", files["wide"], "--beta", "0.2"]) == 0


def test_couple_decompose_glue(files, capsys, tmp_path):
    pi = str(tmp_path / "pi.json")
    assert run(["--out", pi, "couple", "--mu", files["d0"], "--nu", files["sym"], "--beta", "0.5"]) == 0
    assert json.loads(open(pi).read())["feasible"] is True
    assert run(["couple", "--mu", files["d0"], "--nu", files["sym"], "--beta", "0.6"]) == 1
    assert out_json(capsys)["separation"] > 0
    assert run(["decompose", "--nu", files["sym"], "--x", "0", "--beta", "0.5"]) == 0
    assert len(out_json(capsys)["components"]) == 1
    assert run(["glue", "--pi1", pi, "--pi2", pi]) == 2  # middle marginals differ


def test_envelope_commands(files, capsys):
    assert run(["envelope", "eval", "--g", files["g"], "--beta", "0.6", "--x", "0"]) == 0
    assert out_json(capsys)["value"] == pytest.approx(0.2)
    assert run(["envelope", "curve", "--g", files["g"], "--beta", "0.6", "--from", "-1", "--to", "1",
                "--points", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "x,g,envelope"


def test_embedding_commands(files, capsys):
    base = ["--mu", files["d0"], "--nu", files["sym"], "--beta", "0.5"]
    assert run(["embed", "exact-law", *base]) == 0
    assert [a["x"] for a in out_json(capsys)["atoms"]] == [-1.0, 1.0]
    assert run(["embed", "sample", *base, "--n", "5", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "path_id,x_T" and len(lines) == 6
    assert run(["embed", "paths", *base, "--n", "2", "--grid", "5"]) == 0
    assert capsys.readouterr().out.startswith("path_id,t,x\n")
    assert run(["embed", "plan", *base, "--strong"]) == 1


def test_market_commands(files, capsys):
    assert run(["market", "recover", "--curve", files["curve"]]) == 0
    assert [a["x"] for a in out_json(capsys)["atoms"]] == [0.25, 1.5]
    assert run(["market", "check", "--curve", files["curve"], "--s0", "1", "--B1", "2"]) == 0
    assert out_json(capsys)["k_tilde"] == 1.5
    assert run(["market", "price", "--curve", files["curve"], "--s0", "1", "--B1", "2", "--k", "1", "2"]) == 0
    assert run(["market", "price", "--s0", "1", "--B1", "2", "--k", "1"]) == 2


def test_bad_input(files, capsys):
    assert run(["order", "check", "--mu", "/nonexistent.json", "--nu", files["sym"], "--beta", "0.5"]) == 2
    assert run(["nonsense"]) == 2
    assert run(["--tol", "bogus=1", "order", "max-bias", "--nu", files["sym"], "--x", "0"]) == 2
    err = capsys.readouterr().err
    assert all(line.startswith("error:") for line in err.splitlines())


def test_console_output_is_byte_stable(files):
    cmd = [sys.executable, "-m", "biased_order", "embed", "paths", "--mu", files["d0"],
           "--nu", files["sym"], "--beta", "0.5", "--n", "20", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert hashlib.sha256(a).digest() == hashlib.sha256(b).digest()
