"""Experiment drivers behind ``dsfm bench`` and the acceptance tests.

Each driver returns plain rows (dicts) so callers can write CSV, plot, or
assert on them.  Projections, not wall time, are the comparison axis.
"""

import numpy as np

from .generators import gen_ba, gen_example31, gen_karate, min_cut_value
from .sampling import greedy_balanced_partition, theta_uniform, uniform_plan
from .solvers import SolverConfig, rcdm_until_ratio, run

# bench labels -> (algorithm, plan kind)
LABELS = {
    "ap": ("ap", None),
    "iap": ("iap", None),
    "rcdm": ("rcdm", None),
    "rcdm-u": ("rcdm-par", "uniform"),
    "rcdm-g": ("rcdm-par", "greedy"),
    "acdm-u": ("acdm", "uniform"),
    "acdm-g": ("acdm", "greedy"),
}
W_PRESETS = ("ones", "table2", "table2_sqrt", "mu", "mu_sqrt")


def k_from_alpha(R, alpha):
    return min(R, max(1, int(round(alpha * R))))


def make_plan(d, kind, K, seed):
    if kind is None:
        return None
    if kind == "uniform":
        return uniform_plan(d, K, seed)
    if kind == "greedy":
        return greedy_balanced_partition(d, K, seed)
    raise ValueError(f"unknown plan {kind!r}")


def proximal_weights(d, algorithm, preset, K=None):
    """w for the weighted solvers.

    ``table2`` is the weight that turns the inner projections orthogonal
    (mu for IAP, the uniform-plan theta for RCDM); ``table2_sqrt`` its
    square root (oblique projections with a weighted proximal term).
    """
    mu = np.asarray(d.profile.mu, dtype=float)
    if preset == "ones":
        return np.ones(d.n)
    if preset == "mu":
        return np.maximum(mu, 1.0)
    if preset == "mu_sqrt":
        return np.sqrt(np.maximum(mu, 1.0))
    if algorithm in ("iap", "iap-w"):
        base = np.maximum(mu, 1.0)
    else:
        base = np.maximum(theta_uniform(d.profile, d.R, K), 1.0)
    if preset == "table2":
        return base
    if preset == "table2_sqrt":
        return np.sqrt(base)
    raise ValueError(f"unknown weight preset {preset!r}")


def example31_scaling(ns, seeds, ratio=1e-3):
    """Mean sequential-RCDM iterations until g <= ratio * g(y0) per chain size.

    Returns (rows, slope of ln(iterations) against ln(N)).
    """
    rows = []
    for n in ns:
        d, y0 = gen_example31(n)
        counts = [rcdm_until_ratio(d, y0, ratio, np.random.default_rng(s))[0]
                  for s in seeds]
        rows.append({"n": n, "N": d.n, "mean_iterations": float(np.mean(counts)),
                     "min_iterations": int(min(counts)), "max_iterations": int(max(counts))})
    x = np.log([r["N"] for r in rows])
    y = np.log([r["mean_iterations"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope


def karate_runs(labels, seeds, alpha=0.1, eps=1e-3, gap="discrete",
                max_iterations=500_000, workers=1, edge_list=None):
    """One solver run per (label, seed); deterministic labels run once."""
    d = gen_karate(edge_list)
    K = k_from_alpha(d.R, alpha)
    out = []
    for label in labels:
        algo, kind = LABELS[label]
        for seed in (seeds if kind is not None or algo == "rcdm" else seeds[:1]):
            cfg = SolverConfig(algo, plan=make_plan(d, kind, K, seed), epsilon=eps,
                               gap_kind=gap, max_iterations=max_iterations, seed=seed,
                               workers=workers)
            res = run(d, cfg)
            alpha = cfg.plan.alpha if cfg.plan else (1.0 / d.R if algo == "rcdm" else 1.0)
            out.append(run_row(label, seed, res, d, alpha))
    return d, out


def run_row(label, seed, res, d, alpha, **extra):
    rep = res.report
    row = {"label": label, "seed": seed, "status": res.status, "alpha": alpha,
           "iterations": res.state.k, "projections": res.state.projections,
           "scaled_iterations": res.state.k * alpha,
           "nu_s": rep.nu_s, "nu_d": rep.nu_d,
           "value": d.objective(res.solution), "set_size": int(res.solution.size)}
    row.update(extra)
    row["trace"] = res.trace
    return row


def ba_weighted(N, seeds, Ks, families=("iap", "rcdm"),
                presets=("ones", "table2", "table2_sqrt"), max_iterations=200_000):
    """Iterations (x K/R) until the extracted set is a true minimizer.

    The optimum comes from an exact s-t min cut; every check compares the
    best level set against it.
    """
    out = []
    for seed in seeds:
        d = gen_ba(N, seed)
        opt, _ = min_cut_value(d)
        for fam in families:
            for K in (Ks if fam == "rcdm" else Ks[:1]):
                for preset in presets:
                    algo = "iap-w" if fam == "iap" else "rcdm-w"
                    w = proximal_weights(d, algo, preset, K)
                    plan = uniform_plan(d, K, seed) if fam == "rcdm" else None
                    cfg = SolverConfig(algo, plan=plan, weights=w, seed=seed,
                                       target_value=opt, epsilon=1e-12,
                                       gap_check_period=1, projection_tolerance=1e-14,
                                       max_iterations=max_iterations)
                    res = run(d, cfg)
                    alpha = K / d.R if fam == "rcdm" else 1.0
                    for k in (Ks if fam == "iap" else [K]):
                        out.append(run_row(f"{fam}:{preset}", seed, res, d, alpha, K=k,
                                        optimum=opt))
    return out


def medians(rows, key, by=("label",)):
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[b] for b in by), []).append(r[key])
    return {g: float(np.median(v)) for g, v in groups.items()}

