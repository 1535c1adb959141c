"""Configuration-driven experiment runner.

Subcommands:

- ``run``    one experiment (or every point of its sweep axes), emitting a
             per-slot trace CSV and a bound-report JSON per point;
- ``sweep``  the same point grid aggregated into one comparison CSV row per
             configuration;
- ``accept`` the acceptance suite, one pass/fail line per criterion.

Exit codes: 0 success, 2 config error, 3 bound violation, 4 convergence
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from itertools import product
from pathlib import Path

import numpy as np

from . import acceptance
from . import config as cfg
from .baselines import BASELINE_KINDS, baseline_params
from .bounds import BoundReport, evaluate_bounds
from .engine import run_episode
from .errors import ConfigError, ConvergenceError
from .metrics import attach_error_measures
from .trace import RunTrace

TRACE_COLUMNS = (
    "t", "cost", "opt_cost", "regret_cum", "path_cum", "path2_cum",
    "delta_cum", "delta2_cum", "track_err",
)


# -- output helpers -----------------------------------------------------------


def _timestamp_line() -> str:
    return f"# generated: {datetime.now(timezone.utc).isoformat()}"


def write_trace_csv(path: Path, trace: RunTrace) -> None:
    """Emit the per-slot columns; the leading comment line carries the only
    non-reproducible content and is excluded from body hashing."""
    rows = np.column_stack([
        np.arange(1, trace.horizon + 1, dtype=float),
        trace.cost,
        trace.opt_cost,
        trace.regret_cum,
        trace.path_cum,
        trace.path2_cum,
        trace.delta_cum,
        trace.delta2_cum,
        trace.track_err,
    ])
    with open(path, "w") as fh:
        fh.write(_timestamp_line() + "\n")
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def csv_body(path) -> str:
    """File content without comment lines (the hashable part)."""
    with open(path) as fh:
        return "".join(line for line in fh if not line.startswith("#"))


def write_report_json(path: Path, report: BoundReport, extra: dict) -> None:
    doc = json.loads(report.to_json())
    doc.update(extra)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def print_summary(label: str, report: BoundReport) -> None:
    c, m = report.constants, report.measures
    print(f"== {label}")
    print(f"   regret          {report.regret:.6g}")
    print(f"   bound_path      {report.bound_path:.6g}")
    sq = "n/a" if report.bound_squared is None else f"{report.bound_squared:.6g}"
    td = "n/a" if report.bound_squared_total_delay is None else f"{report.bound_squared_total_delay:.6g}"
    print(f"   bound_squared   {sq} ({report.bound_squared_status})")
    print(f"   bound_total     {td} ({report.bound_squared_total_delay_status})")
    print(f"   measures        path={m['path']:.6g} path2={m['path2']:.6g} "
          f"delta={m['delta']:.6g} delta2={m['delta2']:.6g}")
    print(f"   constants       mu={c['mu']:.6g} L={c['smoothness']:.6g} D={c['grad_bound']:.6g} "
          f"R={c['diameter']:.6g} alpha={c['alpha']:.6g} gamma={c['gamma']:.6g} "
          f"eta={c['eta']:.6g} beta={c['beta']:.6g}")


# -- sweep expansion ----------------------------------------------------------


def expand_points(doc: dict) -> list[dict]:
    """Cartesian grid over the sweep axes; a config without axes is one point."""
    sweep = doc.get("sweep", {})
    algo = doc.get("algorithm", {})
    delays = sweep.get("delays") or [doc.get("delay", {"tau_u": 1, "tau_d": 0, "tau_l": 0})]
    compressions = sweep.get("compressions") or [algo.get("compression", {"scheme": "identity"})]
    if "steps" in sweep:
        steps = [tuple(int(v) for v in pair) for pair in sweep["steps"]]
    else:
        steps = [(int(algo.get("master_steps", 1)), int(algo.get("worker_steps", 1)))]
    baselines = sweep.get("baselines", [])
    for kind in baselines:
        if kind not in BASELINE_KINDS:
            raise ConfigError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    points = []
    for delay, comp, (j_r, j_l) in product(delays, compressions, steps):
        points.append({
            "label": f"steps-{j_r}-{j_l}",
            "delay": delay, "compression": comp,
            "master_steps": j_r, "worker_steps": j_l, "baseline": None,
        })
    for delay, comp, kind in product(delays, compressions, baselines):
        points.append({
            "label": kind,
            "delay": delay, "compression": comp,
            "master_steps": int(algo.get("master_steps", 1)),
            "worker_steps": int(algo.get("worker_steps", 1)),
            "baseline": kind,
        })
    return points


def _point_doc(doc: dict, point: dict) -> dict:
    out = json.loads(json.dumps(doc))
    out.pop("sweep", None)
    out["delay"] = dict(point["delay"])
    out.setdefault("algorithm", {})
    out["algorithm"]["compression"] = dict(point["compression"])
    out["algorithm"]["master_steps"] = point["master_steps"]
    out["algorithm"]["worker_steps"] = point["worker_steps"]
    out["mode"] = "auto"
    return out


def run_point(doc: dict, point: dict, seed_override: int | None = None):
    """Run one grid point and return (trace, report, resolved experiment)."""
    exp = cfg.resolve(_point_doc(doc, point), seed_override=seed_override)
    params = exp.params
    if point["baseline"] is not None:
        params = baseline_params(point["baseline"], params)
    trace = run_episode(exp.scenario, params, exp.delay, mode=exp.mode)
    attach_error_measures(trace, exp.scenario, params, exp.delay)
    report = evaluate_bounds(trace, exp.scenario, params, exp.delay, exp.gamma)
    return trace, report, exp, params


def _sweep_row(index: int, point: dict, report: BoundReport) -> dict:
    c, m = report.constants, report.measures
    steps = c["master_steps"] + c["worker_steps"]
    return {
        "point": index,
        "algo": point["label"],
        "tau_u": point["delay"].get("tau_u", 1),
        "tau_d": point["delay"].get("tau_d", 0),
        "tau_l": point["delay"].get("tau_l", 0),
        "scheme": point["compression"].get("scheme", "identity"),
        "master_steps": c["master_steps"],
        "worker_steps": c["worker_steps"],
        "mu": c["mu"], "smoothness": c["smoothness"], "grad_bound": c["grad_bound"],
        "diameter": c["diameter"], "alpha": c["alpha"], "gamma": c["gamma"],
        "eta": c["eta"], "beta": c["beta"], "eta_pow_steps": c["eta"] ** steps,
        "path": m["path"], "path2": m["path2"], "delta": m["delta"], "delta2": m["delta2"],
        "grad_opt_sq": m["grad_opt_sq"], "regret": report.regret,
        "bound_path": report.bound_path,
        "bound_squared": report.bound_squared,
        "bound_squared_status": report.bound_squared_status,
        "bound_squared_total_delay": report.bound_squared_total_delay,
        "bound_squared_total_delay_status": report.bound_squared_total_delay_status,
        "violations": ";".join(sorted(report.violations())) or "none",
    }


def _sweep_worker(args):
    index, doc, point, seed = args
    _, report, _, params = run_point(doc, point, seed_override=seed)
    return index, _sweep_row(index, point, report)


# -- commands -----------------------------------------------------------------


def _load_doc(args) -> dict:
    if args.preset:
        doc = cfg.preset(args.preset)
    elif args.config:
        doc = cfg.load_config(args.config)
    else:
        raise ConfigError("provide a config file or --preset")
    return doc


def cmd_run(args) -> int:
    doc = _load_doc(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = expand_points(doc)
    violated = False
    single = len(points) == 1
    for i, point in enumerate(points):
        trace, report, exp, params = run_point(doc, point, seed_override=args.seed)
        stem = "" if single else f"_{i:03d}"
        write_trace_csv(out_dir / f"trace{stem}.csv", trace)
        write_report_json(
            out_dir / f"report{stem}.json", report,
            extra={"label": point["label"], "resolved": exp.resolved, "trace_meta": trace.meta},
        )
        print_summary(point["label"], report)
        bad = report.violations()
        if bad:
            violated = True
            print(f"   BOUND VIOLATION: {bad}", file=sys.stderr)
    return 3 if violated else 0


def cmd_sweep(args) -> int:
    doc = _load_doc(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = expand_points(doc)
    jobs = [(i, doc, p, args.seed) for i, p in enumerate(points)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = dict(pool.map(_sweep_worker, jobs))
    else:
        rows = dict(map(_sweep_worker, jobs))
    ordered = [rows[i] for i in range(len(points))]
    columns = list(ordered[0].keys())
    path = out_dir / "sweep.csv"
    with open(path, "w") as fh:
        fh.write(_timestamp_line() + "\n")
        fh.write(",".join(columns) + "\n")
        for row in ordered:
            fh.write(",".join("" if row[k] is None else repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in columns) + "\n")
    violated = any(row["violations"] != "none" for row in ordered)
    print(f"wrote {path} ({len(ordered)} rows)")
    return 3 if violated else 0


def cmd_accept(args) -> int:
    results = acceptance.run_all(verbose=True)
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiergrad",
        description="Simulate hierarchical online gradient tracking under delay "
                    "and evaluate dynamic-regret bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", help="TOML or JSON config file")
        p.add_argument("--preset", choices=sorted(cfg.PRESETS), help="use a built-in config")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out-dir", default="out", help="output directory")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.set_defaults(func=fn)
    p = sub.add_parser("accept", help="run the acceptance suite")
    p.set_defaults(func=cmd_accept)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc} {exc.details}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
