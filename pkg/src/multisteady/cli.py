"""Command line: generate benchmarks, synthesize, evaluate, simulate, compare.

Exit codes: 0 success, 2 usage, 3 model/validation, 4 LP solver,
5 evaluator refusal, 6 every run timed out.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bench
from .chain import Profile, dist, evaluate_full_profile, evaluate_irreducible_profile
from .decompose import NormalForm, normal_form
from .errors import (
    AttemptsExhausted,
    EvaluationRefused,
    ModelError,
    MultiSteadyError,
    SolverError,
    Timeout,
)
from .lp import SOLVERS, LpModel
from .model import Coloring, Mdp, Objective, augment_memory
from .profiles import load_strategies, profile_to_json, strategies_from_json, to_normal_form
from .sim import DEFAULT_HORIZON, simulate_profile, write_trace
from .synthesis import ALGORITHMS, DIST_TOL, agents_needed, baseline_synthesize, incremental_synthesize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_SOLVER = 4
EXIT_REFUSED = 5
EXIT_TIMEOUT = 6

REPORT_SCHEMA = 1
CSV_SCHEMA = 1
DEFAULT_TIMEOUT = 120.0
JOBS_ENV = "MULTISTEADY_JOBS"

SYNTH_COLUMNS = ("schema_version", "benchmark", "algorithm", "agents", "dist", "status", "wall_time_s")
COMPARE_COLUMNS = (
    "schema_version",
    "benchmark",
    "family",
    "vertices",
    "edges",
    "colors",
    "period",
    "agents_baseline",
    "agents_incremental",
    "status_baseline",
    "status_incremental",
    "dist_baseline",
    "dist_incremental",
    "wall_baseline_s",
    "wall_incremental_s",
)
DISTANCE_COLUMNS = (
    "schema_version",
    "benchmark",
    "family",
    "k",
    "k_normalized",
    "dist_baseline",
    "dist_incremental",
    "norm_dist_diff",
    "linf_baseline",
    "linf_incremental",
    "linf_diff",
    "any_satisfied",
)
LP_CHECK_COLUMNS = (
    "schema_version",
    "benchmark",
    "lp_solves",
    "max_sum_residual",
    "max_flow_residual",
    "max_split_residual",
    "max_objective_gap",
)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, Timeout):
        return EXIT_TIMEOUT
    if isinstance(exc, EvaluationRefused):
        return EXIT_REFUSED
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, ModelError):
        return EXIT_MODEL
    return 1


@dataclass
class Loaded:
    bench: bench.Benchmark
    mdp: Mdp
    coloring: Coloring
    objective: Objective

    def normal(self) -> tuple[NormalForm, Coloring]:
        nf = normal_form(self.mdp)
        return nf, nf.coloring(self.coloring)


def load_model(path: str, memory: int = 1) -> Loaded:
    b = bench.load(path)
    mdp, coloring = b.mdp, b.coloring
    if memory != 1:
        if not mdp.is_graph:
            raise ModelError("memory augmentation is only supported for models without stochastic vertices")
        aug = augment_memory(mdp, memory)
        mdp, coloring = aug.mdp, aug.lift_coloring(coloring)
    return Loaded(b, mdp, coloring, b.objective)


def _fmt(x: float) -> str:
    return repr(float(x))


def _color_map(colors, values) -> dict[str, float]:
    return {str(c): float(v) for c, v in zip(colors, values)}


def _print_table(colors, targets, values, out=sys.stdout):
    width = max([5] + [len(str(c)) for c in colors])
    print(f"{'color':<{width}}  {'target':>8}  {'frequency':>12}  {'shortfall':>10}", file=out)
    for c, t, v in zip(colors, targets, values):
        print(f"{str(c):<{width}}  {t:>8.4f}  {v:>12.8f}  {max(0.0, t - v):>10.8f}", file=out)


def _write_json(data: Any, path: str | None):
    text = json.dumps(data, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _append_csv(path: str, columns: Sequence[str], row: dict):
    new = not Path(path).exists() or Path(path).stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


# -- gen ----------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    made = 0
    for i in range(args.count):
        seed = args.seed + i
        spec = bench.BenchmarkSpec(
            family=args.family,
            seed=seed,
            vertices=args.vertices,
            edge_prob=args.edge_prob if args.edge_prob is not None else (0.05 if args.family == "aperiodic" else 0.6),
            classes=args.classes[i % len(args.classes)],
            max_class_size=args.max_class_size,
            max_colors=args.max_colors,
            max_attempts=args.max_attempts,
        )
        name = f"{args.family}-{seed}.json"
        try:
            b = bench.generate(spec)
        except AttemptsExhausted as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            rows.append({"schema_version": bench.MANIFEST_SCHEMA, "file": "", "family": args.family, "seed": seed,
                         "status": "attempts exhausted"})
            continue
        bench.save(b, out / name)
        rows.append(bench.manifest_row(b, name))
        made += 1
    bench.write_manifest(rows, out / "manifest.csv")
    print(f"wrote {made} benchmarks to {out}", file=sys.stderr)
    return EXIT_OK if made or args.count == 0 else EXIT_MODEL


# -- synth --------------------------------------------------------------------

def _lp_hook(directory: str | None):
    if directory is None:
        return None
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)

    def hook(name: str, model: LpModel):
        (root / f"{name}.lp").write_text(model.to_lp_format())

    return hook


def synth_report(loaded: Loaded, args) -> dict[str, Any]:
    nf, col = loaded.normal()
    obj = loaded.objective
    deadline = time.monotonic() + args.timeout if args.timeout and args.timeout > 0 else None
    hook = _lp_hook(args.lp_export)
    t0 = time.perf_counter()
    extra: dict[str, Any] = {}
    if args.find_agents is not None:
        res = agents_needed(
            nf, col, obj, args.algorithm, args.find_agents,
            eps_full=args.eps_full, solver=args.solver, deadline=deadline, lp_hook=hook,
        )
        rep = res.report
        extra["find_agents"] = {"cap": args.find_agents, "count": res.count, "series": res.series}
    elif args.algorithm == "incremental":
        rep = incremental_synthesize(
            nf, col, obj, args.k, eps_full=args.eps_full, solver=args.solver,
            early_stop=False, deadline=deadline, lp_hook=hook,
        )
    else:
        rep = baseline_synthesize(nf, col, obj, args.k, eps_full=args.eps_full, solver=args.solver, lp_hook=hook)
    wall = time.perf_counter() - t0
    out = {
        "schema_version": REPORT_SCHEMA,
        "benchmark": loaded.bench.name,
        "algorithm": rep.algorithm,
        "agents": rep.agents,
        "dist": rep.dist,
        "satisfied": rep.dist <= DIST_TOL,
        "frequency": _color_map(rep.frequency.colors, rep.frequency.values),
        "objective": _color_map(obj.colors, obj.targets),
        "trace": [{"agent": t.agent, "mec": t.mec, "class": t.class_index, "dist": t.dist} for t in rep.trace],
        **extra,
        "profile": profile_to_json(nf.mdp, rep.profile),
    }
    if args.diagnostics:
        out["lp_candidates"] = [
            {"agent": c.agent, "mec": c.mec, "class": c.class_index, "lp_objective": c.lp_objective,
             "eval_dist": c.eval_dist, "residuals": c.residuals, "iterations": c.iterations}
            for c in rep.candidates
        ]
    out["wall_time_s"] = wall
    return out


def cmd_synth(args) -> int:
    loaded = load_model(args.model, args.memory)
    report = synth_report(loaded, args)
    _write_json(report, args.out)
    if args.csv:
        _append_csv(args.csv, SYNTH_COLUMNS, {
            "schema_version": CSV_SCHEMA,
            "benchmark": report["benchmark"],
            "algorithm": report["algorithm"],
            "agents": report["agents"],
            "dist": _fmt(report["dist"]),
            "status": "ok" if report["satisfied"] or args.find_agents is None else "cap",
            "wall_time_s": f"{report['wall_time_s']:.3f}",
        })
    return EXIT_OK


# -- eval / sim ---------------------------------------------------------------

def _read_profile(path: str, mdp: Mdp):
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return load_strategies(path, mdp)  # raises a ParseError with position
    if isinstance(data, dict) and isinstance(data.get("profile"), dict):
        data = data["profile"]
    return strategies_from_json(data, mdp)


def cmd_eval(args) -> int:
    loaded = load_model(args.model, args.memory)
    nf, col = loaded.normal()
    profile: Profile = to_normal_form(nf, _read_profile(args.profile, loaded.mdp))
    mode = args.mode
    if mode == "auto":
        full = all(s.is_full(nf.mdp, nf.components[q]) for s, q in zip(profile.strategies, profile.mec_of))
        mode = "full" if full else "irreducible"
    try:
        if mode == "full":
            nu = evaluate_full_profile(nf, col, profile)
        else:
            nu = evaluate_irreducible_profile(nf, col, profile, lcm_cap=args.lcm_cap)
    except EvaluationRefused as exc:
        print(f"error: {exc}\nthe exact evaluator refuses this profile; estimate it with `multisteady sim`", file=sys.stderr)
        return EXIT_REFUSED
    d = dist(nu, loaded.objective)
    _print_table(nu.colors, loaded.objective.targets, nu.values)
    print(f"Dist = {_fmt(d)}")
    if args.json:
        _write_json({"schema_version": REPORT_SCHEMA, "evaluator": mode,
                     "frequency": _color_map(nu.colors, nu.values), "dist": d}, args.json)
    return EXIT_OK


def cmd_sim(args) -> int:
    loaded = load_model(args.model, args.memory)
    strategies = _read_profile(args.profile, loaded.mdp)
    rep = simulate_profile(loaded.mdp, loaded.coloring, strategies, args.steps, args.seed, trace=bool(args.trace))
    targets = loaded.objective.targets
    d = float(np.maximum(0.0, np.asarray(targets) - rep.empirical).sum())
    _print_table(rep.colors, targets, rep.empirical)
    print(f"Dist = {_fmt(d)}  (n = {rep.steps}, seed = {rep.seed})")
    drift = float(np.abs(rep.empirical - rep.half).max(initial=0.0))
    print(f"max |full - half-horizon| = {drift:.3e}")
    if args.trace:
        write_trace(rep, loaded.mdp, args.trace)
    if args.json:
        _write_json({
            "schema_version": REPORT_SCHEMA,
            "steps": rep.steps,
            "seed": rep.seed,
            "empirical": _color_map(rep.colors, rep.empirical),
            "half_horizon": _color_map(rep.colors, rep.half),
            "visits": rep.visits.tolist(),
            "dist": d,
        }, args.json)
    return EXIT_OK


# -- compare ------------------------------------------------------------------

def _expand_inputs(paths: Sequence[str]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.json")))
        else:
            out.append(p)
    return out


def compare_one(path: str, cap: int, timeout: float, solver: str, eps_full: float | None) -> dict[str, Any]:
    """Both algorithms on one benchmark; never raises."""
    row: dict[str, Any] = {c: "" for c in COMPARE_COLUMNS}
    row["schema_version"] = CSV_SCHEMA
    row["benchmark"] = Path(path).stem
    result: dict[str, Any] = {"row": row, "runs": {}}
    try:
        loaded = load_model(path)
        nf, col = loaded.normal()
    except MultiSteadyError as exc:
        row["status_baseline"] = row["status_incremental"] = f"error: {exc}"
        return result
    mdp = loaded.mdp
    row.update(
        family=loaded.bench.provenance.get("family", ""),
        vertices=mdp.n,
        edges=mdp.num_edges,
        colors=col.num_colors,
        period=",".join(str(s.period) for s in nf.structures),
    )
    for alg in ("baseline", "incremental"):
        t0 = time.perf_counter()
        deadline = time.monotonic() + timeout if timeout and timeout > 0 else None
        try:
            res = agents_needed(nf, col, loaded.objective, alg, cap, eps_full=eps_full, solver=solver, deadline=deadline)
            status = "ok" if res.count is not None else "cap"
            result["runs"][alg] = [mu.tolist() for mu in res.report.prefix_frequencies]
            row[f"agents_{alg}"] = res.count if res.count is not None else ""
            row[f"dist_{alg}"] = _fmt(res.series[-1])
            if alg == "incremental":
                result["lp_checks"] = lp_check_row(row["benchmark"], res.report.candidates)
        except Timeout:
            status = "timeout"
        except MultiSteadyError as exc:
            status = f"error: {type(exc).__name__}: {exc}"
        row[f"status_{alg}"] = status
        row[f"wall_{alg}_s"] = f"{time.perf_counter() - t0:.3f}"
    result["targets"] = list(loaded.objective.targets)
    return result


def lp_check_row(name: str, candidates) -> dict[str, Any]:
    """Worst residuals and LP-objective vs evaluated-distance gap over every strategy LP of a run."""

    def worst(key):
        return max((c.residuals.get(key, 0.0) for c in candidates), default=0.0)

    gap = max((abs(c.lp_objective - c.eval_dist) for c in candidates), default=0.0)
    return {
        "schema_version": CSV_SCHEMA,
        "benchmark": name,
        "lp_solves": len(candidates),
        "max_sum_residual": f"{worst('sum'):.3e}",
        "max_flow_residual": f"{worst('flow'):.3e}",
        "max_split_residual": f"{worst('split'):.3e}",
        "max_objective_gap": f"{gap:.3e}",
    }


def distance_rows(result: dict[str, Any]) -> list[dict[str, Any]]:
    """Per agent count k = 0..K: distances of both algorithms, K sufficient for both (or the cap)."""
    runs = result["runs"]
    if set(runs) != {"baseline", "incremental"}:
        return []
    row = result["row"]
    targets = np.asarray(result["targets"])
    n_colors = max(1, len(targets))
    K = max(len(runs["baseline"]), len(runs["incremental"]))
    series = {}
    for alg, mus in runs.items():
        zero = np.zeros_like(targets)
        padded = [zero] + [np.asarray(m) for m in mus]
        padded += [padded[-1]] * (K + 1 - len(padded))
        short = [np.maximum(0.0, targets - m) for m in padded]
        series[alg] = ([float(s.sum()) for s in short], [float(s.max(initial=0.0)) for s in short])
    out = []
    for k in range(K + 1):
        db, lb = series["baseline"][0][k], series["baseline"][1][k]
        di, li = series["incremental"][0][k], series["incremental"][1][k]
        out.append({
            "schema_version": CSV_SCHEMA,
            "benchmark": row["benchmark"],
            "family": row["family"],
            "k": k,
            "k_normalized": _fmt(k / K) if K else "0.0",
            "dist_baseline": _fmt(db),
            "dist_incremental": _fmt(di),
            "norm_dist_diff": _fmt((db - di) / n_colors),
            "linf_baseline": _fmt(lb),
            "linf_incremental": _fmt(li),
            "linf_diff": _fmt(lb - li),
            "any_satisfied": int(min(db, di) <= DIST_TOL),
        })
    return out


def run_compare(paths: Sequence[str], cap: int, timeout: float, solver: str, eps_full: float | None, jobs: int):
    files = [str(p) for p in _expand_inputs(paths)]
    args = [(f, cap, timeout, solver, eps_full) for f in files]
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(compare_one, *zip(*args)))
    return [compare_one(*a) for a in args]


def cmd_compare(args) -> int:
    results = run_compare(args.inputs, args.cap, args.timeout, args.solver, args.eps_full, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in results:
            w.writerow(r["row"])
    with open(out / "distances.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=DISTANCE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in results:
            for drow in distance_rows(r):
                w.writerow(drow)
    if args.diagnostics:
        with open(out / "lp_checks.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=LP_CHECK_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in results:
                if "lp_checks" in r:
                    w.writerow(r["lp_checks"])
    statuses = [r["row"][f"status_{a}"] for r in results for a in ("baseline", "incremental")]
    print(f"compared {len(results)} benchmarks; results in {out}", file=sys.stderr)
    if statuses and all(s == "timeout" for s in statuses):
        return EXIT_TIMEOUT
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or math.isnan(v):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multisteady", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random benchmarks")
    g.add_argument("--family", choices=bench.FAMILIES, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0, help="first seed; instance i uses seed + i")
    g.add_argument("--out", default="benchmarks")
    g.add_argument("--vertices", type=_positive_int, default=60, help="aperiodic vertex count")
    g.add_argument("--edge-prob", type=_positive_float, default=None,
                   help="edge probability (default 0.05 aperiodic, 0.6 periodic)")
    g.add_argument("--classes", type=_positive_int, nargs="+", default=[5],
                   help="periodic class counts, cycled over instances")
    g.add_argument("--max-class-size", type=_positive_int, default=20)
    g.add_argument("--max-colors", type=_positive_int, default=30)
    g.add_argument("--max-attempts", type=_positive_int, default=1000)
    g.set_defaults(func=cmd_gen)

    def solver_flags(sp):
        sp.add_argument("--solver", choices=SOLVERS, default="simplex")
        sp.add_argument("--eps-full", type=_positive_float, default=None,
                        help="lower bound on edge frequencies (default 1e-7 / |E|)")
        sp.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="wall seconds per run (0 = none)")

    s = sub.add_parser("synth", help="synthesize a profile")
    s.add_argument("model")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="incremental")
    size = s.add_mutually_exclusive_group(required=True)
    size.add_argument("--k", type=_positive_int, help="place exactly k agents")
    size.add_argument("--find-agents", type=_positive_int, metavar="CAP",
                      help="smallest agent count up to CAP meeting the objective")
    s.add_argument("--memory", type=_positive_int, default=1, help="memory states per vertex")
    s.add_argument("--out", default=None, help="report JSON (default stdout)")
    s.add_argument("--csv", default=None, help="append a summary row to this CSV")
    s.add_argument("--lp-export", default=None, metavar="DIR", help="write every LP in .lp format")
    s.add_argument("--diagnostics", action="store_true", help="include per-candidate LP diagnostics")
    solver_flags(s)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="exact frequency vector of a profile")
    e.add_argument("model")
    e.add_argument("profile", help="profile JSON or a synth report")
    e.add_argument("--mode", choices=("auto", "full", "irreducible"), default="auto")
    e.add_argument("--lcm-cap", type=_positive_int, default=10**6)
    e.add_argument("--memory", type=_positive_int, default=1)
    e.add_argument("--json", default=None)
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("sim", help="Monte-Carlo estimate of a profile's frequency vector")
    m.add_argument("model")
    m.add_argument("profile")
    m.add_argument("--steps", type=_positive_int, default=DEFAULT_HORIZON)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--memory", type=_positive_int, default=1)
    m.add_argument("--trace", default=None, metavar="CSV", help="per-step positions (first 10^5 steps)")
    m.add_argument("--json", default=None)
    m.set_defaults(func=cmd_sim)

    c = sub.add_parser("compare", help="agents needed by both algorithms on a benchmark set")
    c.add_argument("inputs", nargs="*", help="benchmark files or directories")
    c.add_argument("--cap", type=_positive_int, default=40)
    c.add_argument("--out", default="results")
    c.add_argument("--diagnostics", action="store_true",
                   help="also write lp_checks.csv with strategy-LP residuals and objective gaps")
    c.add_argument("--jobs", type=_positive_int, default=default_jobs(), help=f"worker processes (env {JOBS_ENV})")
    solver_flags(c)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MultiSteadyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
