"""Command line front end: generate, solve, compare, bounds, verify.

Configuration precedence is flags over an optional JSON config file over
built-in defaults.  Every run drops a manifest JSON (resolved settings,
library versions, seeds) beside its outputs, and all files are written
atomically.  Exit codes: 0 success, 2 domain or validation error, 3
invariant failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, baselines, verify
from .barriers import BarrierDomainError, WeightedLogBarrier
from .dual import solve_md_standalone, write_dual_trace_csv
from .instances import (
    PetInstance,
    gen_dopt,
    gen_log_invest,
    gen_pet,
    load_instance,
    problem_for,
    save_instance,
    start_point,
)
from .ioutils import atomic_write_json, read_json
from .oracles import reference_solve
from .solver import SolverConfig, solve_fw, theorem1_bounds, write_trace_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INVARIANT = 3

METHODS = ("fw-adapt", "fw-exact", "rsgm-fixed", "rsgm-ls", "em", "md")

DEFAULTS = {
    "eps": 1e-6,
    "max_iters": 100_000,
    "budget": 500,
    "start": "ct",
    "methods": "fw-adapt,fw-exact,rsgm-fixed,rsgm-ls,em",
    "type": "pet",
    "n": 50,
    "m": 50,
    "seed": 0,
    "delta0": "g0",
    "plots": True,
    "deterministic": False,
}


def _manifest(args: dict, extra: dict | None = None) -> dict:
    import scipy

    doc = {
        "tool": "barrierfw",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "config": {k: v for k, v in args.items() if not k.startswith("_")},
    }
    if extra:
        doc.update(extra)
    return doc


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """flags > config file > defaults"""
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = read_json(args.config)
    out = {}
    for k in keys:
        flag = getattr(args, k.replace("-", "_"), None)
        if flag is not None:
            out[k] = flag
        elif k in file_cfg:
            out[k] = file_cfg[k]
        else:
            out[k] = DEFAULTS.get(k)
    return out


def _load_start(inst, cfg, start_file: str | None) -> np.ndarray:
    if cfg["start"] == "custom":
        if not start_file:
            raise ValueError("--start custom requires --start-file")
        return np.asarray(read_json(start_file), dtype=np.float64)
    return start_point(inst, cfg["start"])


def _strip_times(trace):
    for r in trace:
        r.elapsed = 0.0
    return trace


def _run_method(method: str, inst, problem, x0, eps, max_iters):
    if method in ("fw-adapt", "fw-exact"):
        rule = "adaptive" if method == "fw-adapt" else "exact"
        return solve_fw(problem, x0, SolverConfig(step_rule=rule, eps=eps,
                                                  max_iters=max_iters)).trace
    if method in ("rsgm-fixed", "rsgm-ls", "em"):
        if not isinstance(inst, PetInstance):
            raise ValueError(f"{method} applies to tomography instances only")
        obj = baselines.PetObjective(inst.P, inst.counts)
        if method == "rsgm-fixed":
            return baselines.rsgm_fixed_solve(obj, x0, max_iters).trace
        if method == "rsgm-ls":
            return baselines.rsgm_backtracking_solve(obj, x0, max_iters)[0].trace
        return baselines.em_solve(obj, x0, max_iters).trace
    if method == "md":
        if not isinstance(problem.barrier, WeightedLogBarrier):
            raise ValueError("md applies to problems with the weighted log barrier")
        y0 = problem.barrier.grad(problem.linmap.apply(x0))
        return solve_md_standalone(problem, y0, x0,
                                   SolverConfig(eps=eps, max_iters=max_iters)).trace
    raise ValueError(f"unknown method {method!r}")


def cmd_gen(args) -> int:
    cfg = _resolve(args, ["type", "n", "m", "seed"])
    kind = cfg["type"]
    if kind == "pet":
        inst = gen_pet(cfg["n"], cfg["m"], cfg["seed"])
    elif kind == "dopt":
        inst = gen_dopt(cfg["n"], cfg["m"], cfg["seed"], knapsack=bool(args.knapsack))
    elif kind == "loginvest":
        inst = gen_log_invest(cfg["n"], cfg["m"], cfg["seed"])
    else:
        raise ValueError(f"unknown instance type {kind!r}")
    save_instance(inst, args.out)
    atomic_write_json(str(args.out) + ".manifest.json", _manifest(cfg))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _resolve(args, ["eps", "max_iters", "start", "deterministic"])
    inst = load_instance(args.instance)
    problem = problem_for(inst)
    x0 = _load_start(inst, cfg, args.start_file)
    trace = _run_method(args.method, inst, problem, x0, cfg["eps"], int(cfg["max_iters"]))
    if cfg["deterministic"]:
        _strip_times(trace)
    out = args.trace_out or (str(args.instance) + f".{args.method}.csv")
    if args.method == "md":
        write_dual_trace_csv(trace, out)
        final = trace[-1]
        print(f"{args.method}: iterations={final.k} d={final.d:.9g} Gbar={final.Gbar:.4g}")
    else:
        write_trace_csv(trace, out)
        final = trace[-1]
        print(f"{args.method}: iterations={final.k} F={final.F:.9g} G={final.G:.4g}")
    atomic_write_json(str(out) + ".manifest.json",
                      _manifest(cfg, {"instance": str(args.instance), "method": args.method}))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _resolve(args, ["methods", "budget", "start", "eps", "plots", "deterministic"])
    inst = load_instance(args.instance)
    problem = problem_for(inst)
    x0 = _load_start(inst, cfg, args.start_file)
    methods = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
        if m == "md":
            raise ValueError("md writes the dual trace schema; compare primal methods")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    budget = int(cfg["budget"])

    threads = int(os.environ.get("BARRIERFW_THREADS", "0")) or min(4, len(methods))

    def run(m):
        # comparison runs exhaust the shared budget, so no gap rule
        return m, _run_method(m, inst, problem, x0, None, budget)

    traces = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for m, trace in pool.map(run, methods):
            traces[m] = trace

    summary = {}
    for m, trace in traces.items():
        if cfg["deterministic"]:
            _strip_times(trace)
        write_trace_csv(trace, out_dir / f"{m}.csv")
        last = trace[-1]
        summary[m] = {
            "final_F": last.F,
            "final_G": last.G,
            "iterations": last.k,
            "wall_time_s": trace[-1].elapsed,
        }
    atomic_write_json(out_dir / "summary.json", summary)
    figures = []
    if cfg["plots"]:
        from .report import render_compare_figures

        figures = render_compare_figures(traces, out_dir)
    atomic_write_json(out_dir / "manifest.json",
                      _manifest(cfg, {"instance": str(args.instance), "figures": figures}))
    if args.summary:
        width = max(len(m) for m in summary)
        print(f"{'method'.ljust(width)}  {'final F':>18}  {'final G':>12}  {'iters':>8}")
        for m in sorted(summary):
            s = summary[m]
            print(f"{m.ljust(width)}  {s['final_F']:>18.9g}  {s['final_G']:>12.4g}"
                  f"  {s['iterations']:>8}")
    print(f"wrote {out_dir}/summary.json")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _resolve(args, ["eps", "start", "delta0"])
    inst = load_instance(args.instance)
    problem = problem_for(inst)
    x0 = _load_start(inst, cfg, None)
    theta = problem.barrier.theta
    r_h = problem.term.variation()
    v = problem.lmo_at(x0).point
    g0 = problem.fw_gap(x0, v)
    if cfg["delta0"] == "measured":
        ref = reference_solve(problem, eps_ref=None, x0=x0)
        delta0 = problem.objective(x0) - ref.objective
        source = "measured"
    else:
        delta0 = g0
        source = "g0-surrogate"
    report = theorem1_bounds(delta0, theta, r_h, float(cfg["eps"]), delta0_source=source)
    doc = report.as_dict()
    doc["G0"] = g0
    out = args.out or (str(args.instance) + ".bounds.json")
    atomic_write_json(out, doc)
    atomic_write_json(str(out) + ".manifest.json",
                      _manifest(cfg, {"instance": str(args.instance)}))
    print(f"K_Lin={report.k_lin} K_eps={report.k_eps} FWGAP_eps={report.fwgap_eps} "
          f"(delta0={report.delta0:.6g}, {source})")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.builtin_suite or not args.instance:
        checks = verify.builtin_suite()
    else:
        inst = load_instance(args.instance)
        checks = verify.instance_checks(inst, quick=not args.thorough)
    ok = verify.run_checks(checks)
    print("verification", "PASSED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="barrierfw",
                                description="Frank-Wolfe solvers for barrier composite problems")
    p.add_argument("--config", help="JSON config file; flags override its entries")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance file")
    g.add_argument("--type", choices=("pet", "dopt", "loginvest"))
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--knapsack", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run one method on an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="fw-adapt")
    s.add_argument("--start", choices=("bd", "ct", "custom"))
    s.add_argument("--start-file")
    s.add_argument("--eps", type=float)
    s.add_argument("--max-iters", type=int, dest="max_iters")
    s.add_argument("--trace-out")
    s.add_argument("--deterministic", action="store_const", const=True,
                   help="zero the elapsed column for byte-reproducible traces")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="run several methods under one budget")
    c.add_argument("instance")
    c.add_argument("--methods")
    c.add_argument("--budget", type=int)
    c.add_argument("--start", choices=("bd", "ct", "custom"))
    c.add_argument("--start-file")
    c.add_argument("--eps", type=float)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--summary", action="store_true", help="print a fixed-width table")
    c.add_argument("--deterministic", action="store_const", const=True)
    plots = c.add_mutually_exclusive_group()
    plots.add_argument("--plots", dest="plots", action="store_const", const=True)
    plots.add_argument("--no-plots", dest="plots", action="store_const", const=False)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bounds", help="iteration-bound report for an instance")
    b.add_argument("instance")
    b.add_argument("--eps", type=float)
    b.add_argument("--start", choices=("bd", "ct"))
    b.add_argument("--delta0", choices=("g0", "measured"),
                   help="use the initial gap surrogate or a certified reference solve")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("instance", nargs="?")
    v.add_argument("--builtin-suite", action="store_true")
    v.add_argument("--thorough", action="store_true")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, BarrierDomainError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
