import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from phicurve.cli import EXIT_FIRST_POINT, EXIT_INPUT, EXIT_OK, EXIT_UNVERIFIED, load_config, main, run, verify

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(tmp_path, name="small.json", amplitude=0.15, nsteps=8, k=0.1, **problem):
    prob = {"phi": "relativistic", "g": "sin", "lambda": 0.1, "k": k, "T": 1.0,
            "forcing": {"kind": "cos", "amplitude": amplitude}, "N": 64}
    prob.update(problem)
    data = {"problem": prob, "sweep": {"xi0": 0.0, "dxi": 0.5, "nsteps": nsteps},
            "output": {"directory": str(tmp_path / "out"), "profile_xis": [1.0]}}
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def read_branch(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fig3_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3")
    mp = pytest.MonkeyPatch()
    mp.setenv("PHICURVE_OUTPUT_DIR", str(out))
    try:
        code = run(CONFIGS / "fig3.json")
    finally:
        mp.undo()
    return code, out


def test_fig3_config_run(fig3_run):
    code, out = fig3_run
    assert code == EXIT_OK
    rows = read_branch(out / "branch.csv")
    assert list(rows[0]) == ["xi", "mu", "u_at_0", "uprime_at_0", "sup_uprime", "variation",
                             "shooting_defect", "newton_iters"]
    near = min(rows, key=lambda r: abs(float(r["xi"]) - 5.0))
    assert abs(float(near["mu"]) - (-0.09637)) < 5e-4
    assert all(float(r["shooting_defect"]) < 1e-6 for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verified"] == summary["points"] == len(rows)
    assert summary["audit"]["all_hold"]
    assert summary["features"]["period_defect"] < 1e-6
    prof = (out / "profile_5.csv").read_text().splitlines()
    assert prof[0] == "t,u,uprime" and len(prof) == 257
    svg = (out / "branch.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_verify_fresh_and_perturbed(fig3_run, tmp_path):
    _, out = fig3_run
    buf = io.StringIO()
    assert verify(CONFIGS / "fig3.json", out / "branch.csv", out=buf) == EXIT_OK
    lines = buf.getvalue().splitlines()
    assert len(lines) == 127 and all(line.endswith(",ok") for line in lines)

    text = (out / "branch.csv").read_text().splitlines()
    cells = text[10].split(",")
    cells[1] = repr(float(cells[1]) + 0.01)
    text[10] = ",".join(cells)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(text) + "\n")
    buf = io.StringIO()
    assert verify(CONFIGS / "fig3.json", bad, out=buf) == EXIT_UNVERIFIED
    fails = [line for line in buf.getvalue().splitlines() if line.endswith("FAIL")]
    assert len(fails) == 1 and fails[0].startswith(cells[0] + ",")


def test_trivial_forcing_config(tmp_path):
    cfg = small_config(tmp_path, amplitude=0.0)
    assert run(cfg) == EXIT_OK
    for r in read_branch(tmp_path / "out" / "branch.csv"):
        assert abs(float(r["mu"]) - 0.1 * math.sin(float(r["xi"]))) < 1e-10


def test_outputs_are_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    assert run(cfg) == EXIT_OK
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
    assert run(cfg) == EXIT_OK
    second = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
    assert first == second and "branch.csv" in first and "profile_1.csv" in first
    assert b"\r" not in first["branch.csv"]


def test_parallel_configs_via_main(tmp_path, monkeypatch):
    a = small_config(tmp_path, "a.json", nsteps=2)
    b = small_config(tmp_path, "b.json", amplitude=0.0, nsteps=2)
    assert main(["run", str(a), str(b), "-j", "2"]) == EXIT_OK


def test_output_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PHICURVE_OUTPUT_DIR", str(tmp_path / "elsewhere"))
    assert load_config(small_config(tmp_path)).directory == tmp_path / "elsewhere"


def test_verify_input_errors(tmp_path):
    cfg = small_config(tmp_path)
    empty = tmp_path / "empty.csv"
    empty.write_text("xi,mu,u_at_0,uprime_at_0\n")
    assert verify(cfg, empty, out=io.StringIO()) == EXIT_INPUT
    nothing = tmp_path / "nothing.csv"
    nothing.write_text("")
    assert verify(cfg, nothing, out=io.StringIO()) == EXIT_INPUT
    partial = tmp_path / "partial.csv"
    partial.write_text("xi,mu\n0,0\n")
    assert verify(cfg, partial, out=io.StringIO()) == EXIT_INPUT
    assert verify(tmp_path / "missing.json", partial, out=io.StringIO()) == EXIT_INPUT


@pytest.mark.parametrize("problem", [
    {"g": "cube"},
    {"phi": "classical"},
    {"k": -1.0},
    {"forcing": {"harmonics": [[0, 0.0, 1.0]]}},
])
def test_bad_configs_exit_2(tmp_path, problem):
    assert run(small_config(tmp_path, **problem)) == EXIT_INPUT


def test_unparsable_config(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert run(p) == EXIT_INPUT
    p.write_text(json.dumps({"problem": {"g": "sin"}}))
    assert run(p) == EXIT_INPUT


def test_first_point_failure_exit_3(tmp_path):
    cfg = small_config(tmp_path, k=200.0, amplitude=0.0, **{"lambda": 0.0, "forcing": {"kind": "sin", "amplitude": 5.0}})
    assert run(cfg) == EXIT_FIRST_POINT


def test_shipped_configs_parse():
    for name in ("fig1.json", "fig2.json", "fig3.json"):
        cfg = load_config(CONFIGS / name)
        assert cfg.spec.N == 256 and cfg.nsteps > 0
    assert np.isclose(load_config(CONFIGS / "fig1.json").spec.T, 0.3)
