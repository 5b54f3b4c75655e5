"""Command-line front end.

Every task prints a JSON :class:`~sketchla.report.RunReport` and exits with
0 when its check passes, 1 when it fails and 2 on usage or input errors.
"""
import argparse
import csv
import math
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import bench
from .basis import select_independent_rows
from .embed import EmbedConfig, constant_embed, polylog_embed
from .errors import SketchError
from .leverage import LevSampleConfig, eps_subspace_embed
from .linalg import as_dense, numerical_rank
from .mmio import read_matrix_market
from .regression import solve_regression
from .report import TASKS, RunReport
from .selftest import run_selftest

# --constants keys accepted per task: key -> (config field, type)
EMBED_KEYS = {
    "s2_const": ("osnap_s2_rows_const", float),
    "s1_const": ("osnap_s1_rows_const", float),
    "m": ("srht_blocks", int),
    "C": ("sample_const", float),
    "sdp_accuracy": ("sdp_accuracy", float),
    "sdp_max_iter": ("sdp_max_iter", int),
    "max_distortion": ("max_distortion", float),
}
LEV_KEYS = {
    "c_s": ("c_s", float),
    "s": ("s", float),
    "jl_cols_stage1": ("jl_cols_stage1", int),
    "stage2_cols": ("stage2_cols", int),
}
BASIS_KEYS = {"c_r": ("c_r", float), "c_lev": ("c_lev", float)}
REGRESS_KEYS = {"c_s": ("c_s", float)}
KEYS = {"embed": EMBED_KEYS, "levscore": LEV_KEYS, "basis": BASIS_KEYS,
        "regress": REGRESS_KEYS, "selftest": {}, "bench": {}}

DEFAULT_N = {"embed": 4096, "levscore": 8192, "basis": 2000, "regress": 8192, "bench": 1024}
DEFAULT_D = {"embed": 32, "levscore": 32, "basis": 40, "regress": 50, "bench": 16}


class UsageError(Exception):
    pass


def parse_constants(items, task):
    allowed = KEYS[task]
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--constants expects key=val, got {item!r}")
        if key not in allowed:
            raise UsageError(f"unknown constant {key!r} for task {task!r}; "
                             f"known: {', '.join(sorted(allowed)) or 'none'}")
        field, typ = allowed[key]
        try:
            out[field] = typ(val)
        except ValueError:
            raise UsageError(f"bad value for {key}: {val!r}") from None
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="sketchla", description=__doc__.splitlines()[0])
    p.add_argument("task", nargs="?", choices=TASKS)
    p.add_argument("--task", dest="task_opt", choices=TASKS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--mtx", help="input matrix A (Matrix Market)")
    p.add_argument("--rhs", help="right-hand side b (Matrix Market)")
    p.add_argument("--n", type=int, help="rows of the generated instance")
    p.add_argument("--d", type=int, help="columns of the generated instance")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="write the task's trace as CSV")
    p.add_argument("--oracle", action="store_true", help="compare against exact oracles")
    p.add_argument("--constants", nargs="*", default=[], metavar="KEY=VAL")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-timing", action="store_true", help="report runtime_ms as null")
    return p


def _matrix(args, task, gen=bench.gaussian):
    if args.mtx:
        return read_matrix_market(args.mtx)
    n = args.n or DEFAULT_N[task]
    d = args.d or DEFAULT_D[task]
    return gen(n, d, args.seed)


def _write_csv(path, header, rows):
    if not path:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def task_embed(args, consts):
    A = _matrix(args, "embed")
    max_xi = consts.pop("max_distortion", 10.0)
    cfg = EmbedConfig(alpha=args.alpha, seed=args.seed, **consts)
    res = constant_embed(A, cfg, timing=not args.no_timing)
    poly = polylog_embed(A, EmbedConfig(alpha=args.alpha, seed=args.seed, sdp=False,
                                        **{k: v for k, v in consts.items()
                                           if not k.startswith("sdp")}), timing=False)
    rep = res.report
    rep.metrics["polylog_distortion"] = poly.report.metrics["distortion"]
    xi = rep.metrics["distortion"]
    budget = math.ceil(cfg.sample_const * A.shape[1])
    rep.params["max_distortion"] = max_xi
    rep.passed = bool(np.isfinite(xi) and xi <= max_xi and rep.rows_out <= budget)
    trace = res.weights.trace if res.weights is not None else []
    _write_csv(args.csv, ["iteration", "sdp_objective"], list(enumerate(trace)))
    return rep


def task_levscore(args, consts):
    A = _matrix(args, "levscore")
    eps = 0.25 if args.epsilon is None else args.epsilon
    cfg = LevSampleConfig(epsilon=eps, alpha=args.alpha, seed=args.seed, **consts)
    _, smp, rep = eps_subspace_embed(A, cfg, timing=not args.no_timing)
    _write_csv(args.csv, ["index", "prob"], zip(smp.indices.tolist(), smp.probs.tolist()))
    return rep


def task_basis(args, consts):
    A = _matrix(args, "basis", lambda n, d, s: bench.rank_deficient(n, d, max(1, d // 2), s))
    t0 = time.perf_counter()
    res = select_independent_rows(A, args.seed, args.alpha, **consts)
    rep = RunReport("basis", seed=args.seed, params={"alpha": args.alpha, **consts},
                    rows_in=A.shape[0], cols_in=A.shape[1], rows_out=res.k)
    rep.metrics.update({"rank": res.k, "iterations": res.iterations,
                        "tol_factor": res.tol_factor, "trace": res.trace})
    for f in res.flags:
        rep.flag(f)
    if args.oracle:
        Ad = as_dense(A)
        k = numerical_rank(Ad)
        sub = numerical_rank(Ad[res.indices]) if res.k else 0
        rep.metrics.update({"oracle_rank": k, "subset_rank": sub})
        rep.passed = res.k == k and sub == k
    rep.runtime_ms = None if args.no_timing else (time.perf_counter() - t0) * 1e3
    _write_csv(args.csv, ["iteration", "residual_rank", "sampled", "gained"],
               [[t["iteration"], t["residual_rank"], t["sampled"], t["gained"]] for t in res.trace])
    return rep


def task_regress(args, consts):
    eps = 0.1 if args.epsilon is None else args.epsilon
    if args.mtx:
        A = read_matrix_market(args.mtx)
        if not args.rhs:
            raise UsageError("regress with --mtx also needs --rhs")
        b = as_dense(read_matrix_market(args.rhs)).ravel()
    else:
        A, b, _ = bench.planted_regression(args.n or DEFAULT_N["regress"],
                                           args.d or DEFAULT_D["regress"], args.seed)
    res = solve_regression(A, b, eps, args.alpha, args.seed, oracle=args.oracle,
                           timing=not args.no_timing, **consts)
    _write_csv(args.csv, ["iteration", "objective"], list(enumerate(res.trace)))
    return res.report


def task_selftest(args, consts):
    t0 = time.perf_counter()
    out = run_selftest()
    rep = RunReport("selftest", seed=args.seed, metrics=out)
    rep.passed = all(v["pass"] for v in out.values())
    rep.runtime_ms = None if args.no_timing else (time.perf_counter() - t0) * 1e3
    _write_csv(args.csv, ["check", "pass", "value"],
               [[k, v["pass"], v["value"]] for k, v in out.items()])
    return rep


def task_bench(args, consts):
    t0 = time.perf_counter()
    n = args.n or DEFAULT_N["bench"]
    d = args.d or DEFAULT_D["bench"]
    suite = bench.BenchSuite.default(n, d, seeds=[args.seed, args.seed + 1, args.seed + 2])
    metrics, rows, ok = {}, [], True
    for name, s, A in suite.instances():
        emb = constant_embed(A, EmbedConfig(alpha=args.alpha, seed=s), timing=False)
        sel = select_independent_rows(A, s, args.alpha)
        k = numerical_rank(A)
        good = bool(sel.k == k and np.isfinite(emb.report.metrics["distortion"]))
        ok &= good
        m = {"distortion": emb.report.metrics["distortion"], "rows_out": emb.report.rows_out,
             "rank": k, "selected": sel.k, "pass": good}
        metrics.setdefault(name, {})[str(s)] = m
        rows += [[name, s, key, val] for key, val in m.items()]
    rep = RunReport("bench", seed=args.seed, params={"n": n, "d": d, "alpha": args.alpha},
                    rows_in=n, cols_in=d, metrics=metrics, passed=ok)
    rep.runtime_ms = None if args.no_timing else (time.perf_counter() - t0) * 1e3
    _write_csv(args.csv, ["instance", "seed", "metric", "value"], rows)
    return rep


RUNNERS = {"embed": task_embed, "levscore": task_levscore, "basis": task_basis,
           "regress": task_regress, "selftest": task_selftest, "bench": task_bench}


def run_task(task, args):
    """Dispatch ``task``; returns the finished :class:`RunReport`."""
    if task not in RUNNERS:
        raise UsageError(f"unknown task {task!r}")
    consts = parse_constants(args.constants, task)
    rep = RUNNERS[task](args, consts)
    rep.params.setdefault("seed", args.seed)
    if args.threads is not None:
        rep.params["threads"] = args.threads
    if args.no_timing:
        rep.runtime_ms = None
    return rep


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.task and args.task_opt and args.task != args.task_opt:
        parser.error("positional task and --task disagree")
    task = args.task or args.task_opt
    if task is None:
        parser.error("a task is required")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        with threadpool_limits(limits=args.threads):
            rep = run_task(task, args)
    except (UsageError, SketchError, ValueError, OSError) as exc:
        print(f"sketchla: error: {exc}", file=sys.stderr)
        return 2
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
