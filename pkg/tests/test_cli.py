import json
import math

import numpy as np
import pytest

from kohnmult import cli, reporting
from kohnmult.reporting import CheckResult


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_dumps_is_deterministic_and_sorted():
    obj = {"b": 0.1, "a": [1, np.float64(1 / 3)], "c": 1 + 2j, "d": math.inf, "e": np.bool_(True)}
    text = reporting.dumps(obj)
    assert text == reporting.dumps(dict(reversed(list(obj.items()))))
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.33333333333333331" in text
    back = json.loads(text)
    assert back["c"] == {"im": 2.0, "re": 1.0}
    assert back["d"] == math.inf


def test_dumps_rejects_unknown_types():
    with pytest.raises(TypeError):
        reporting.dumps({"x": object()})


def test_write_csv(tmp_path):
    text = reporting.write_csv({"x": [1, 2], "y": [0.5, 0.25]}, tmp_path / "t.csv")
    assert text.splitlines() == ["x,y", "1,0.5", "2,0.25"]
    assert (tmp_path / "t.csv").read_text() == text


def test_check_result_line_and_timing():
    r = CheckResult("demo", False, {"v": 1.0}, {"v": "<= 0.5"}, runtime=1.25, budget=10, notes="too big")
    assert r.line().startswith("FAIL demo")
    assert "runtime" not in r.as_dict()
    assert r.as_dict(timing=True)["budget"] == 10


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", 2, "--pmax", 10)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "p,q,dim,lamL,lamU,lamB"
    assert len(lines) == 122
    assert lines[1].split(",")[:3] == ["0", "0", "1"]


def test_missing_option_is_usage_error(capsys):
    code, _, err = run(capsys, "spectrum", "--n", 2)
    assert code == 2
    assert "--pmax" in err


def test_bad_params_json_is_usage_error(capsys):
    code, _, _ = run(capsys, "spectrum", "--params", "{not json")
    assert code == 2


def test_params_fill_unset_options(capsys):
    code, out, _ = run(capsys, "spectrum", "--params", '{"n": 2, "pmax": 3}')
    assert code == 0
    assert out == run(capsys, "spectrum", "--n", 2, "--pmax", 3)[1]
    # explicit options win over --params
    assert out == run(capsys, "spectrum", "--n", 2, "--params", '{"n": 5, "pmax": 3}')[1]


def test_multiplier_norm(capsys):
    code, out, _ = run(capsys, "multiplier-norm", "--f", "gaussian", "--s", 0, "--q", 2)
    assert code == 0
    assert json.loads(out)["norm"] == pytest.approx((math.pi / 2) ** 0.25, rel=1e-9)
    code, _, _ = run(capsys, "multiplier-norm", "--f", "gaussian", "--s", 0, "--q", 3)
    assert code == 2


def test_plancherel_runs(capsys):
    code, out, _ = run(capsys, "plancherel", "--n", 2, "--N", 8, "--t", 0.1, "--theta", 0.5)
    assert code == 0
    rep = json.loads(out)
    assert rep["bound"] <= rep["comparison"] * 10


@pytest.fixture(scope="module")
def cycle_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("sp") / "cycle.bin"
    assert cli.main(["mm-space", "build", "--kind", "cycle", "--m", "64", "--out", str(path)]) == 0
    return path


def test_mm_space_fit(capsys, cycle_file):
    code, out, _ = run(capsys, "mm-space", "fit", "--space", cycle_file)
    assert code == 0
    assert json.loads(out)["Q"] == pytest.approx(1.0, abs=0.2)


def test_missing_space_file(capsys, tmp_path):
    code, _, _ = run(capsys, "mm-space", "fit", "--space", tmp_path / "nope.bin")
    assert code == 2


def test_kernel_check(capsys, cycle_file):
    code, out, _ = run(capsys, "kernel-check", "--space", cycle_file, "--suite", "composition", "--trials", 3)
    assert code == 0 and json.loads(out)["status"] == "PASS"


def test_joint_fourier(capsys, cycle_file):
    code, out, _ = run(capsys, "joint", "--space", cycle_file, "--tuple", "poly", "--op", "fourier", "--params", '{"hmax": 16}')
    assert code == 0
    rep = json.loads(out)
    assert rep["deviation"] <= rep["tail"] + 1e-9


def test_growth_kappa_violation_exits_one(capsys, cycle_file):
    code, out, _ = run(capsys, "growth", "--space", cycle_file, "--tuple", "poly", "--params", '{"a": 2, "b": 0, "Q": 1, "kappa": 0.001}')
    assert code == 1
    rep = json.loads(out)
    assert rep["status"] == "FAIL" and rep["violated"]


def test_heisenberg_assemble_export(capsys, tmp_path):
    path = tmp_path / "op.coo"
    code, out, _ = run(capsys, "heisenberg", "assemble", "--n", 2, "--grid", 8, "--box", 2.0, "--out", path)
    assert code == 0
    assert json.loads(out)["asymmetry"] == 0.0
    assert path.read_text().startswith("# 512 512 ")


def test_verify_all_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "verify-all", "--only", "1,9", "--out", a)[0] == 0
    assert run(capsys, "verify-all", "--only", "1,9", "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["passed"] == 2


def test_verify_all_bad_selection(capsys):
    assert run(capsys, "verify-all", "--only", "13")[0] == 2
