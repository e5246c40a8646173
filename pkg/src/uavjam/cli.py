"""Command-line entry point: ``solve``, ``sweep``, ``compare`` and ``plot``.

Exit status: 0 on success (``solve``: converged), 2 when ``solve`` stops
without converging, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .admm import AdmmConfig, SolverReport, solve
from .baselines import BcdConfig, baseline1, baseline2
from .gradproj import GradProjConfig
from .scenario import HALF_BEAMWIDTH_RAD, ScenarioError, load_scenario, random_scenario
from .signalmodel import GainMode
from .plotting import plot_curves, plot_deployment, save_svg

__all__ = ["SweepSpec", "SCHEMES", "run_scheme", "run_sweep", "aggregate", "build_parser", "main"]

SCHEMES = ("proposed", "baseline1", "baseline2")

DETAIL_COLUMNS = ("scheme", "M", "seed", "avg_sinr_db", "avg_sinr_linear", "runtime_s", "converged", "status")
SUMMARY_COLUMNS = ("scheme", "M", "num_ok", "num_converged", "mean_avg_sinr_db", "mean_runtime_s")
DEPLOYMENT_COLUMNS = ("uav_id", "x", "y", "z", "psi_rad")
SINR_COLUMNS = ("target_id", "sinr_linear", "sinr_db")


class CliError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    m_values: tuple[int, ...]
    k: int
    num_seeds: int
    base_seed: int = 0
    schemes: tuple[str, ...] = ("proposed",)

    def __post_init__(self):
        if not self.m_values or min(self.m_values) < 1:
            raise ValueError("m_values must be a nonempty list of positive counts")
        if self.num_seeds < 1 or self.k < 1:
            raise ValueError("num_seeds and k must be >= 1")
        bad = set(self.schemes) - set(SCHEMES)
        if bad or not self.schemes:
            raise ValueError(f"unknown scheme(s): {sorted(bad)}")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be an unsigned 64-bit integer")


# ---------------------------------------------------------------- formatting


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _read_csv(path: Path, required) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CliError(f"{path}: empty CSV")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise CliError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise CliError(f"{path}: no data rows")
    return rows


def _dump_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


# ------------------------------------------------------------------- running


def run_scheme(scheme: str, s, cfg: AdmmConfig, bcd: BcdConfig) -> SolverReport:
    if scheme == "proposed":
        return solve(s, cfg=cfg)
    if scheme == "baseline1":
        return baseline1(s, bcd)
    if scheme == "baseline2":
        return baseline2(s, bcd)
    raise ValueError(f"unknown scheme {scheme!r}")


def _cell(args):
    scheme, m, k, seed, cfg, bcd, timing = args
    row = {"scheme": scheme, "M": m, "seed": seed, "avg_sinr_db": "", "avg_sinr_linear": "",
           "runtime_s": "", "converged": "", "status": "ok"}
    t0 = time.perf_counter()
    try:
        rep = run_scheme(scheme, random_scenario(seed, m, k), cfg, bcd)
    except Exception as exc:  # recorded per row, the sweep goes on
        row["status"] = f"error: {type(exc).__name__}: {exc}"
        return row
    row.update(avg_sinr_db=rep.avg_sinr_db, avg_sinr_linear=rep.avg_sinr, converged=rep.converged)
    if timing:
        row["runtime_s"] = time.perf_counter() - t0
    return row


def run_sweep(plan: SweepSpec, cfg: AdmmConfig | None = None, bcd: BcdConfig | None = None,
              jobs: int = 1, timing: bool = True) -> list[dict]:
    """All ``scheme x M x seed`` rows, sorted by (scheme, M, seed) whatever the
    completion order. Seed ``j`` of every cell is ``base_seed + j``."""
    cfg = AdmmConfig() if cfg is None else cfg
    bcd = BcdConfig() if bcd is None else bcd
    tasks = [(sch, m, plan.k, (plan.base_seed + j) % 2**64, cfg, bcd, timing)
             for sch in plan.schemes for m in plan.m_values for j in range(plan.num_seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_cell, tasks))
    else:
        rows = [_cell(t) for t in tasks]
    return sorted(rows, key=lambda r: (SCHEMES.index(r["scheme"]), r["M"], r["seed"]))


def aggregate(rows: list[dict]) -> list[dict]:
    """Per-(scheme, M) means over the successful rows; dB values are averaged in dB."""
    cells: dict = {}
    for r in rows:
        cells.setdefault((r["scheme"], r["M"]), []).append(r)
    out = []
    for (scheme, m), rs in cells.items():
        ok = [r for r in rs if r["status"] == "ok"]
        times = [r["runtime_s"] for r in ok if r["runtime_s"] != ""]
        out.append({
            "scheme": scheme, "M": m, "num_ok": len(ok),
            "num_converged": sum(bool(r["converged"]) for r in ok),
            "mean_avg_sinr_db": float(np.mean([r["avg_sinr_db"] for r in ok])) if ok else "",
            "mean_runtime_s": float(np.mean(times)) if times else "",
        })
    return out


# ------------------------------------------------------------------ commands


def _config_from(args) -> tuple[AdmmConfig, BcdConfig]:
    gp = {f.name: getattr(args, "gp_" + f.name) for f in dataclasses.fields(GradProjConfig)
          if getattr(args, "gp_" + f.name, None) is not None}
    adm = {f.name: getattr(args, f.name) for f in dataclasses.fields(AdmmConfig)
           if f.name != "gradproj" and getattr(args, f.name, None) is not None}
    bcd = {f.name: getattr(args, "bcd_" + f.name) for f in dataclasses.fields(BcdConfig)
           if getattr(args, "bcd_" + f.name, None) is not None}
    base = AdmmConfig()
    cfg = base.replace(gradproj=base.gradproj.replace(**gp), **adm)
    return cfg, BcdConfig(**bcd)


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    cfg, bcd = _config_from(args)
    rep = run_scheme(args.scheme, s, cfg, bcd)
    doc = rep.to_dict(timing=not args.no_timing)
    doc["config"] = cfg.to_dict() if args.scheme == "proposed" else dataclasses.asdict(bcd)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "result.json", doc)
    d = rep.deployment
    _write_csv(out / "deployment.csv", DEPLOYMENT_COLUMNS,
               [{"uav_id": i, "x": p[0], "y": p[1], "z": p[2], "psi_rad": a}
                for i, (p, a) in enumerate(zip(d.positions, d.azimuths))])
    _write_csv(out / "sinr.csv", SINR_COLUMNS,
               [{"target_id": k, "sinr_linear": v, "sinr_db": db}
                for k, (v, db) in enumerate(zip(rep.sinr, rep.sinr_db))])
    status = "converged" if rep.converged else "NOT converged"
    print(f"{args.scheme}: {status} after {rep.iterations} iterations, "
          f"average SINR {rep.avg_sinr_db:.4f} dB")
    return 0 if rep.converged else 2


def cmd_sweep(args, schemes=None) -> int:
    plan = SweepSpec(tuple(args.m_values), args.k, args.num_seeds, args.seed,
                     tuple(schemes or args.scheme or ["proposed"]))
    cfg, bcd = _config_from(args)
    rows = run_sweep(plan, cfg, bcd, jobs=args.jobs, timing=not args.no_timing)
    summary = aggregate(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "sweep.csv", DETAIL_COLUMNS, rows)
    _write_csv(out / "sweep_summary.csv", SUMMARY_COLUMNS, summary)
    for r in summary:
        print(f"{r['scheme']:>10} M={r['M']}: {_fmt(r['mean_avg_sinr_db'])} dB "
              f"({r['num_ok']} ok, {r['num_converged']} converged)")
    failed = [r for r in summary if r["num_ok"] == 0]
    for r in failed:
        print(f"error: every run failed for {r['scheme']} M={r['M']}", file=sys.stderr)
    return 1 if failed else 0


def cmd_compare(args) -> int:
    return cmd_sweep(args, schemes=SCHEMES)


def _detect_kind(path: Path) -> str:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise CliError(f"{path}: empty CSV")
    if "uav_id" in header:
        return "deployment"
    if "scheme" in header:
        return "curves"
    raise CliError(f"{path}: missing column uav_id (deployment) or scheme (curves)")


def cmd_plot(args) -> int:
    src = Path(args.input)
    kind = _detect_kind(src) if args.kind == "auto" else args.kind
    out = Path(args.out)
    if kind == "deployment":
        rows = _read_csv(src, DEPLOYMENT_COLUMNS)
        uavs = [(int(r["uav_id"]), float(r["x"]), float(r["y"]), float(r["psi_rad"])) for r in rows]
        theta, targets, center, x_max = HALF_BEAMWIDTH_RAD, (), None, None
        if args.scenario:
            s = load_scenario(args.scenario)
            theta, x_max = s.half_beamwidth, s.deploy_x_max
            targets = [(k, float(t[0]), float(t[1])) for k, t in enumerate(s.target_positions)]
            center = (float(s.control_center[0]), float(s.control_center[1]))
        fig, data = plot_deployment(uavs, theta, targets, center, x_max)
        columns = ("kind", "id", "x", "y", "heading_rad", "half_angle_rad")
    else:
        if args.value_column is None:
            with open(src, newline="") as fh:
                header = next(csv.reader(fh), []) or []
            value = "mean_avg_sinr_db" if "mean_avg_sinr_db" in header else "avg_sinr_db"
        else:
            value = args.value_column
        rows = _read_csv(src, ("scheme", "M", value))
        if value == "avg_sinr_db":  # detail rows: average per cell first
            rows = [r for r in rows if r.get("status", "ok") == "ok"]
            agg = aggregate([{**r, "M": int(r["M"]), "avg_sinr_db": float(r["avg_sinr_db"]),
                              "runtime_s": "", "converged": r.get("converged") == "true"} for r in rows])
            points = [(a["scheme"], a["M"], a["mean_avg_sinr_db"]) for a in agg]
        else:
            points = [(r["scheme"], int(r["M"]), float(r[value])) for r in rows if r[value] != ""]
        if not points:
            raise CliError(f"{src}: nothing to plot")
        fig, data = plot_curves(points)
        columns = ("scheme", "M", "avg_sinr_db")
    out.mkdir(parents=True, exist_ok=True)
    save_svg(fig, out / f"{kind}.svg")
    _write_csv(out / f"{kind}_data.csv", columns, data)
    print(f"wrote {out / (kind + '.svg')}")
    return 0


# -------------------------------------------------------------------- parser


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_overrides(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver overrides")
    for f in dataclasses.fields(AdmmConfig):
        if f.name == "gradproj":
            continue
        if f.name == "surrogate":
            g.add_argument(_flag(f.name), dest=f.name, choices=[m.value for m in GainMode if m is not GainMode.HARD])
        elif f.name == "clip_mode":
            g.add_argument(_flag(f.name), dest=f.name, choices=["rescale", "clamp"])
        else:
            g.add_argument(_flag(f.name), dest=f.name, type=type(f.default), metavar=type(f.default).__name__.upper())
    for f in dataclasses.fields(GradProjConfig):
        typ = _bool if f.type in (bool, "bool") else type(f.default)
        g.add_argument(_flag("gp_" + f.name), dest="gp_" + f.name, type=typ, metavar="BOOL" if typ is _bool else typ.__name__.upper())
    for f in dataclasses.fields(BcdConfig):
        g.add_argument(_flag("bcd_" + f.name), dest="bcd_" + f.name, type=type(f.default),
                       metavar=type(f.default).__name__.upper())


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _m_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavjam", description="UAV jamming deployment optimizer")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one scenario file")
    ps.add_argument("--scenario", required=True, help="scenario YAML document")
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--scheme", choices=SCHEMES, default="proposed")
    ps.add_argument("--no-timing", action="store_true", help="omit wall time so reruns are byte-identical")
    _add_overrides(ps)
    ps.set_defaults(func=cmd_solve)

    for name, helptext in (("sweep", "average SINR versus M over seeded random scenarios"),
                           ("compare", "sweep with all three schemes")):
        pw = sub.add_parser(name, help=helptext)
        pw.add_argument("--out", required=True, help="output directory")
        pw.add_argument("--m-values", type=_m_list, default=[1, 2, 3, 4], help="comma list, e.g. 1,2,3,4")
        pw.add_argument("--k", type=int, default=3, help="targets per scenario")
        pw.add_argument("--num-seeds", type=int, default=10)
        pw.add_argument("--seed", type=_u64, default=0, help="base seed; scenario j uses seed + j")
        pw.add_argument("--jobs", type=int, default=1)
        if name == "sweep":
            pw.add_argument("--scheme", action="append", choices=SCHEMES, help="repeatable; default proposed")
        pw.add_argument("--no-timing", action="store_true", help="leave runtime_s empty")
        _add_overrides(pw)
        pw.set_defaults(func=cmd_sweep if name == "sweep" else cmd_compare)

    pp = sub.add_parser("plot", help="render a deployment or sweep CSV to SVG")
    pp.add_argument("input", help="deployment.csv, sweep.csv or sweep_summary.csv")
    pp.add_argument("--out", required=True, help="output directory")
    pp.add_argument("--kind", choices=("auto", "deployment", "curves"), default="auto")
    pp.add_argument("--scenario", help="scenario YAML to overlay targets (deployment plots)")
    pp.add_argument("--value-column", help="column holding the dB values (curves)")
    pp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ScenarioError, OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
