"""Command-line front end: ``dsfm solve | bench | partition | plot``.

Exit codes: 0 success/converged, 2 finished but unconverged, 1 error.
"""

import argparse
import csv
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from .generators import gen_example31, gen_grid, gen_karate
from .io import ParseError, read_problem, read_trace, write_problem, write_trace
from .oracles import SubmodularError
from .sampling import (PlanError, greedy_balanced_partition, lower_bound, theta_uniform,
                       uniform_plan)
from .solvers import ALGORITHMS, CD_ALGORITHMS, SolverConfig, SolverError, run

SUMMARY_COLUMNS = ("label", "seed", "K", "status", "iterations", "projections",
                   "scaled_iterations", "nu_s", "nu_d", "value", "set_size")


class UsageError(Exception):
    pass


def default_threads():
    env = os.environ.get("DSFM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"DSFM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def parse_seeds(text):
    """'1..20', '0,3,5' or '7'."""
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"no seeds in {text!r}")
    return out


def parse_range(text):
    """'5:50:5' (inclusive stop) or a comma list."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p]


def _csv_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


# -- solve -------------------------------------------------------------------

def build_config(d, args):
    algo = args.algo
    cd = algo in CD_ALGORITHMS
    if not cd and (args.k is not None or args.plan is not None):
        raise UsageError(f"--k/--plan apply to {', '.join(CD_ALGORITHMS)} only")
    if args.w is not None and algo not in ("iap-w", "rcdm-w", "acdm"):
        raise UsageError("--w applies to iap-w, rcdm-w and acdm only")
    if algo == "rcdm-w" and args.plan == "greedy":
        raise UsageError("rcdm-w supports the uniform plan only")
    plan = None
    K = args.k if args.k is not None else 1
    if cd:
        if not 1 <= K <= d.R:
            raise UsageError(f"--k must lie in [1, {d.R}]")
        plan = ex.make_plan(d, args.plan or "uniform", K, args.seed)
    weights = None
    if args.w is not None:
        weights = ex.proximal_weights(d, algo, args.w, K)
    return SolverConfig(algo, plan=plan, epsilon=args.eps, gap_kind=args.gap,
                        gap_check_period=args.check_period,
                        max_iterations=args.max_iters, weights=weights, seed=args.seed,
                        workers=args.threads)


def cmd_solve(args):
    d = read_problem(args.problem)
    cfg = build_config(d, args)
    res = run(d, cfg)
    if args.trace:
        write_trace(res.trace, args.trace)
    rep = res.report
    sol = res.solution
    print(f"status={res.status}")
    print(f"F(S*)={d.objective(sol)!r}")
    print(f"|S*|={sol.size}")
    print(f"S*={' '.join(str(int(v) + 1) for v in sol)}")
    print(f"nu_s={rep.nu_s!r}")
    print(f"nu_d={rep.nu_d!r}")
    print(f"iterations={res.state.k}")
    print(f"projections={res.state.projections}")
    return 0 if res.converged else 2


# -- bench -------------------------------------------------------------------

def _write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _emit_runs(out, rows, args, title):
    for r in rows:
        r.setdefault("K", "")
        write_trace(r["trace"], out / f"trace_{r['label'].replace(':', '_')}"
                                      f"{'_K' + str(r['K']) if r['K'] != '' else ''}"
                                      f"_s{r['seed']}.csv")
    _write_rows(out / "summary.csv", rows, SUMMARY_COLUMNS)
    med = ex.medians(rows, "projections", by=("label", "K"))
    med_it = ex.medians(rows, "scaled_iterations", by=("label", "K"))
    med_rows = [{"label": k[0], "K": k[1], "median_projections": v,
                 "median_scaled_iterations": med_it[k]} for k, v in med.items()]
    _write_rows(out / "medians.csv", med_rows,
                ("label", "K", "median_projections", "median_scaled_iterations"))
    for m in med_rows:
        print(f"{m['label']}{'' if m['K'] == '' else ' K=' + str(m['K'])}: "
              f"median projections {m['median_projections']:g}, "
              f"median iterations x alpha {m['median_scaled_iterations']:g}")
    if not args.no_plot:
        from .plotting import plot_gap_traces, plot_medians

        first = {}
        for r in rows:
            key = r["label"] + ("" if r["K"] == "" else f" K={r['K']}")
            first.setdefault(key, r)
        plot_gap_traces({k: r["trace"] for k, r in first.items()}, out / "gaps.png",
                        gap=args.plot_gap,
                        alphas={k: r["alpha"] for k, r in first.items()},
                        title=title)
        plot_medians({f"{m['label']}{'' if m['K'] == '' else ' K=' + str(m['K'])}":
                      m["median_projections"] for m in med_rows},
                     out / "medians.png", "median projections", title)
    return 0 if all(r["status"] == "converged" for r in rows) else 2


def bench_example31(args, out):
    ns = parse_range(args.n or "5:50:5")
    seeds = parse_seeds(args.seeds or "0..9")
    rows, slope = ex.example31_scaling(ns, seeds, args.eps or 1e-3)
    _write_rows(out / "summary.csv", rows,
                ("n", "N", "mean_iterations", "min_iterations", "max_iterations"))
    with open(out / "slope.csv", "w") as fh:
        fh.write(f"slope\n{slope!r}\n")
    for r in rows:
        print(f"N={r['N']}: mean iterations {r['mean_iterations']:.1f}")
    print(f"slope={slope:.4f}")
    if not args.no_plot:
        from .plotting import plot_scaling
        plot_scaling(rows, slope, out / "scaling.png")
    return 0


def bench_karate(args, out):
    labels = _csv_list(args.algos or "ap,iap,rcdm-u,rcdm-g,acdm-u")
    _check_labels(labels)
    seeds = parse_seeds(args.seeds or "0..9")
    d, rows = ex.karate_runs(labels, seeds, alpha=args.alpha, eps=args.eps or 1e-3,
                             gap=args.gap, max_iterations=args.max_iters,
                             workers=args.threads, edge_list=args.edges)
    return _emit_runs(out, rows, args, "karate club")


def _check_labels(labels):
    bad = [lab for lab in labels if lab not in ex.LABELS]
    if bad:
        raise UsageError(f"unknown algorithm label(s) {bad}; choose from {list(ex.LABELS)}")


def bench_ba(args, out):
    fams = []
    for a in _csv_list(args.algos or "iap,rcdm"):
        fam = {"iap": "iap", "iap-w": "iap", "rcdm": "rcdm", "rcdm-par": "rcdm",
               "rcdm-u": "rcdm", "rcdm-w": "rcdm"}.get(a)
        if fam is None:
            raise UsageError(f"bench ba runs iap/rcdm families, got {a!r}")
        if fam not in fams:
            fams.append(fam)
    presets = _csv_list(args.w or "ones,table2,table2_sqrt")
    for p in presets:
        if p not in ex.W_PRESETS:
            raise UsageError(f"unknown weight preset {p!r}")
    Ks = [int(k) for k in _csv_list(args.k or "10,50")]
    N = int(args.n or 100)
    seeds = parse_seeds(args.seeds or "1..20")
    rows = ex.ba_weighted(N, seeds, Ks, fams, presets, max_iterations=args.max_iters)
    return _emit_runs(out, rows, args, f"BA graph N={N}")


def bench_grid(args, out):
    labels = _csv_list(args.algos or "iap,rcdm-u,acdm-u")
    _check_labels(labels)
    seeds = parse_seeds(args.seeds or "0..2")
    if args.image:
        from PIL import Image
        img = np.asarray(Image.open(args.image), dtype=float) / 255.0
    else:
        h, w = (int(v) for v in (args.size or "16x16").lower().split("x"))
        rng = np.random.default_rng(0)
        img = np.zeros((h, w, 3))
        img[:, w // 2:] = (0.9, 0.8, 0.2)
        img[:, :w // 2] = (0.1, 0.2, 0.6)
        img = np.clip(img + 0.05 * rng.standard_normal(img.shape), 0, 1)
    H, W = img.shape[:2]
    gray = img.mean(axis=2) if img.ndim == 3 else img
    regions = []
    if args.tile:
        t = args.tile
        for i0 in range(0, H, t):
            for j0 in range(0, W, t):
                reg = [i * W + j for i in range(i0, min(H, i0 + t))
                       for j in range(j0, min(W, j0 + t))]
                if len(reg) >= 2:
                    regions.append(reg)
    x0 = (gray - gray.mean()).ravel()
    d = gen_grid(img, regions, x0, tau=args.tau)
    K = ex.k_from_alpha(d.R, args.alpha)
    rows = []
    for lab in labels:
        algo, kind = ex.LABELS[lab]
        for seed in (seeds if kind is not None or algo == "rcdm" else seeds[:1]):
            cfg = SolverConfig(algo, plan=ex.make_plan(d, kind, K, seed),
                               epsilon=args.eps or 1e-3, gap_kind=args.gap,
                               max_iterations=args.max_iters, seed=seed,
                               workers=args.threads)
            res = run(d, cfg)
            alpha = cfg.plan.alpha if cfg.plan else (1.0 / d.R if algo == "rcdm" else 1.0)
            rows.append(ex.run_row(lab, seed, res, d, alpha))
    return _emit_runs(out, rows, args, f"grid {H}x{W}")


BENCHES = {"example31": bench_example31, "karate": bench_karate, "ba": bench_ba,
           "grid": bench_grid}


def cmd_bench(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return BENCHES[args.kind](args, out)


# -- partition / plot / generate ---------------------------------------------

def cmd_partition(args):
    d = read_problem(args.problem)
    K = args.k
    if not 1 <= K <= d.R:
        raise UsageError(f"--k must lie in [1, {d.R}]")
    plan = greedy_balanced_partition(d, K)
    uni = uniform_plan(d, K)
    for i, part in enumerate(plan.parts):
        print(f"part {i + 1} size={len(part)}: {' '.join(str(r + 1) for r in part)}")
    th = theta_uniform(d.profile, d.R, K)
    print(f"greedy theta_one_inf={plan.theta_one_inf!r}")
    print(f"uniform theta_one_inf={uni.theta_one_inf!r}")
    print(f"uniform closed form={float(th[d.profile.mu > 0].sum())!r}")
    print(f"lower bound={lower_bound(d, K)!r}")
    return 0


def cmd_plot(args):
    from .plotting import plot_gap_traces

    traces = {Path(p).stem: read_trace(p) for p in args.traces}
    plot_gap_traces(traces, args.out, gap=args.gap)
    print(args.out)
    return 0


def cmd_generate(args):
    if args.kind == "karate":
        d = gen_karate(tau=args.tau if args.tau is not None else 0.1)
    elif args.kind == "example31":
        d, _ = gen_example31(args.n or 3)
    else:
        from .generators import gen_ba
        d = gen_ba(args.n or 100, args.seed, tau=args.tau or 1.0)
    write_problem(d, args.out)
    print(args.out)
    return 0


# -- entry point -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="dsfm", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="projection workers (default: $DSFM_THREADS or all cores)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("problem")
    s.add_argument("--algo", choices=ALGORITHMS, default="iap")
    s.add_argument("--k", type=int)
    s.add_argument("--plan", choices=("uniform", "greedy"))
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--gap", choices=("smooth", "discrete", "both"), default="smooth")
    s.add_argument("--w", choices=ex.W_PRESETS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=100_000)
    s.add_argument("--check-period", type=int)
    s.add_argument("--trace")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark matrix")
    b.add_argument("kind", choices=sorted(BENCHES))
    b.add_argument("--out", default="bench_out")
    b.add_argument("--algos")
    b.add_argument("--seeds")
    b.add_argument("--n", help="example31: range like 5:50:5; ba: vertex count")
    b.add_argument("--k", help="ba: comma list of K")
    b.add_argument("--w", help="ba: comma list of weight presets")
    b.add_argument("--alpha", type=float, default=0.1)
    b.add_argument("--eps", type=float)
    b.add_argument("--gap", choices=("smooth", "discrete", "both"), default="discrete")
    b.add_argument("--max-iters", type=int, default=500_000)
    b.add_argument("--edges", help="karate: alternative edge list")
    b.add_argument("--image", help="grid: 8-bit PGM/PPM image")
    b.add_argument("--size", help="grid: synthetic image size HxW")
    b.add_argument("--tile", type=int, default=0, help="grid: square region side")
    b.add_argument("--tau", type=float, default=1.0)
    b.add_argument("--plot-gap", choices=("nu_d", "nu_s"), default="nu_d")
    b.add_argument("--no-plot", action="store_true")
    b.set_defaults(func=cmd_bench)

    q = sub.add_parser("partition", help="greedy balanced partition report")
    q.add_argument("problem")
    q.add_argument("--k", type=int, required=True)
    q.set_defaults(func=cmd_partition)

    g = sub.add_parser("plot", help="plot trace CSVs")
    g.add_argument("traces", nargs="+")
    g.add_argument("--out", default="traces.png")
    g.add_argument("--gap", choices=("nu_d", "nu_s"), default="nu_d")
    g.set_defaults(func=cmd_plot)

    w = sub.add_parser("generate", help="write a benchmark instance as a problem file")
    w.add_argument("kind", choices=("karate", "example31", "ba"))
    w.add_argument("--out", required=True)
    w.add_argument("--n", type=int)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--tau", type=float)
    w.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except (UsageError, ParseError, SolverError, PlanError, SubmodularError,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
