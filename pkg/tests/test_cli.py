import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
from matplotlib.patches import Wedge

from uavjam.cli import SweepSpec, main, run_sweep
from uavjam.plotting import plot_curves, plot_deployment

EDGE = """uavs:
  count: 1
targets:
  positions_m: [[2100, 800, 0]]
control_center:
  position_m: [3000, 800, 20]
"""

HARD = """uavs:
  count: 3
targets:
  positions_m: [[3200, -600, 0], [2600, 300, 0], [4100, 900, 0]]
control_center:
  position_m: [5200, 200, 20]
"""


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def edge_file(tmp_path):
    p = tmp_path / "edge.yaml"
    p.write_text(EDGE)
    return p


def test_solve_happy_path(tmp_path, edge_file):
    out = tmp_path / "out"
    assert main(["solve", "--scenario", str(edge_file), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["deployment.csv", "result.json", "sinr.csv"]
    dep = rows(out / "deployment.csv")
    assert list(dep[0]) == ["uav_id", "x", "y", "z", "psi_rad"] and len(dep) == 1
    sinr = rows(out / "sinr.csv")
    assert list(sinr[0]) == ["target_id", "sinr_linear", "sinr_db"]
    assert float(sinr[0]["sinr_db"]) == pytest.approx(10 * np.log10(float(sinr[0]["sinr_linear"])), rel=1e-12)
    doc = json.loads((out / "result.json").read_text())
    assert doc["converged"] is True and "wall_time_s" in doc
    assert (out / "deployment.csv").read_bytes().count(b"\r") == 0


def test_solve_malformed_file_writes_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("uavs: [1, 2\n")
    out = tmp_path / "out"
    assert main(["solve", "--scenario", str(bad), "--out", str(out)]) == 1
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path):
    assert main(["solve", "--scenario", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "o")]) == 1


def test_truncated_solve_exits_2(tmp_path):
    f = tmp_path / "hard.yaml"
    f.write_text(HARD)
    out = tmp_path / "out"
    assert main(["solve", "--scenario", str(f), "--out", str(out), "--max-outer-iters", "1"]) == 2
    doc = json.loads((out / "result.json").read_text())
    assert doc["converged"] is False and doc["iterations"] == 1 and doc["config"]["max_outer_iters"] == 1


def test_overrides_reach_config(tmp_path, edge_file):
    out = tmp_path / "o"
    args = ["solve", "--scenario", str(edge_file), "--out", str(out), "--rho1", "0.02", "--clip-mode", "clamp",
            "--gp-line-search", "false", "--gp-alpha-nag", "5", "--no-timing"]
    assert main(args) in (0, 2)
    cfg = json.loads((out / "result.json").read_text())["config"]
    assert cfg["rho1"] == 0.02 and cfg["clip_mode"] == "clamp"
    assert cfg["gradproj"]["line_search"] is False and cfg["gradproj"]["alpha_nag"] == 5.0


@pytest.mark.parametrize("scheme", ["baseline1", "baseline2"])
def test_solve_with_baseline(tmp_path, edge_file, scheme):
    out = tmp_path / scheme
    assert main(["solve", "--scenario", str(edge_file), "--out", str(out), "--scheme", scheme]) == 0
    assert json.loads((out / "result.json").read_text())["scheme"] == scheme


def test_solve_byte_identical_without_timing(tmp_path, edge_file):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--scenario", str(edge_file), "--out", str(out), "--no-timing"]) == 0
    for name in ("result.json", "deployment.csv", "sinr.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_cardinality_and_seeds():
    plan = SweepSpec((1, 2, 3, 4), 3, 10, base_seed=100, schemes=("baseline1",))
    out = run_sweep(plan, timing=False)
    assert len(out) == 40
    assert [r["seed"] for r in out[:10]] == list(range(100, 110))
    assert all(r["status"] == "ok" for r in out)


def test_sweep_spec_validation():
    for bad in (dict(m_values=()), dict(num_seeds=0), dict(schemes=("nope",)), dict(base_seed=-1)):
        kw = dict(m_values=(1,), k=1, num_seeds=1)
        kw.update(bad)
        with pytest.raises(ValueError):
            SweepSpec(**kw)


def test_sweep_files_deterministic_across_job_counts(tmp_path):
    base = ["sweep", "--m-values", "1,2", "--k", "2", "--num-seeds", "2", "--seed", "7",
            "--scheme", "baseline1", "--scheme", "baseline2", "--no-timing"]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("sweep.csv", "sweep_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    detail = rows(tmp_path / "a" / "sweep.csv")
    assert list(detail[0]) == ["scheme", "M", "seed", "avg_sinr_db", "avg_sinr_linear", "runtime_s",
                               "converged", "status"]
    assert len(detail) == 8 and all(r["runtime_s"] == "" for r in detail)
    summary = rows(tmp_path / "a" / "sweep_summary.csv")
    assert len(summary) == 4
    cell = [float(r["avg_sinr_db"]) for r in detail if r["scheme"] == "baseline1" and r["M"] == "1"]
    assert float(summary[0]["mean_avg_sinr_db"]) == pytest.approx(np.mean(cell), rel=1e-12)


def test_compare_runs_all_schemes(tmp_path):
    out = tmp_path / "c"
    assert main(["compare", "--m-values", "1", "--k", "1", "--num-seeds", "1", "--out", str(out)]) == 0
    assert [r["scheme"] for r in rows(out / "sweep.csv")] == ["proposed", "baseline1", "baseline2"]
    assert all(r["runtime_s"] != "" for r in rows(out / "sweep.csv"))


def test_plot_deployment_elements():
    uavs = [(0, 0.0, 0.0, 0.0), (1, 100.0, 50.0, 1.0), (2, -50.0, 80.0, -2.0)]
    fig, data = plot_deployment(uavs, 0.26, targets=[(0, 900.0, 0.0)], control_center=(1500.0, 0.0))
    ax = fig.axes[0]
    assert sum(isinstance(p, Wedge) for p in ax.patches) == 3
    markers = [ln for ln in ax.lines if ln.get_label() == "UAV"]
    assert len(markers) == 1 and len(markers[0].get_xdata()) == 3
    assert [r["kind"] for r in data].count("uav") == 3


def test_plot_curves_elements():
    pts = [(s, m, -float(m)) for s in ("proposed", "baseline1", "baseline2") for m in (1, 2, 3)]
    fig, data = plot_curves(pts)
    ax = fig.axes[0]
    assert len(ax.lines) == 3 and ax.get_legend() is not None and len(data) == 9


def test_plot_cli_round_trip(tmp_path, edge_file):
    sol = tmp_path / "sol"
    main(["solve", "--scenario", str(edge_file), "--out", str(sol), "--scheme", "baseline1"])
    assert main(["plot", str(sol / "deployment.csv"), "--scenario", str(edge_file), "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "deployment.svg").read_text().lstrip().startswith("<?xml")
    data = rows(tmp_path / "p" / "deployment_data.csv")
    dep = rows(sol / "deployment.csv")
    assert float(data[0]["x"]) == float(dep[0]["x"]) and float(data[0]["heading_rad"]) == float(dep[0]["psi_rad"])

    sw = tmp_path / "sw"
    main(["sweep", "--m-values", "1,2", "--k", "2", "--num-seeds", "1", "--scheme", "baseline1", "--out", str(sw)])
    for src in ("sweep.csv", "sweep_summary.csv"):
        out = tmp_path / ("c_" + src)
        assert main(["plot", str(sw / src), "--out", str(out)]) == 0
        assert len(rows(out / "curves_data.csv")) == 2


def test_plot_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["plot", str(empty), "--out", str(tmp_path / "o")]) == 1
    header_only = tmp_path / "h.csv"
    header_only.write_text("uav_id,x,y,z,psi_rad\n")
    assert main(["plot", str(header_only), "--out", str(tmp_path / "o")]) == 1
    wrong = tmp_path / "w.csv"
    wrong.write_text("uav_id,x,y\n0,1,2\n")
    assert main(["plot", str(wrong), "--out", str(tmp_path / "o")]) == 1
    assert "psi_rad" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("uavjam") is None, reason="console script not installed")
def test_console_script(tmp_path, edge_file):
    res = subprocess.run(["uavjam", "solve", "--scenario", str(edge_file), "--out", str(tmp_path / "o"),
                          "--scheme", "baseline1"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "uavjam", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
