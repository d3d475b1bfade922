"""Block-sampling plans for the parallel coordinate-descent solvers."""

import math
from dataclasses import dataclass

import numpy as np

from .core import BlockVector, theta_one_inf


class PlanError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """How groups of blocks are drawn, plus the matching step weights theta.

    ``theta`` is a BlockVector: block r holds E[mu^C | r in C] on S_r.
    For partition plans ``parts`` lists the blocks of each part and
    ``marginals`` the exact inclusion probability of each block.
    """

    kind: str
    k: int
    R: int
    theta: BlockVector
    parts: tuple = ()
    rng_seed: int = 0

    @property
    def alpha(self):
        if self.kind == "uniform_k":
            return self.k / self.R
        return 1.0 / len(self.parts)

    @property
    def marginals(self):
        return np.full(self.R, self.alpha)

    @property
    def theta_one_inf(self):
        return theta_one_inf(self.theta)

    def header(self):
        return {"plan": self.kind, "K": self.k, "seed": self.rng_seed,
                "theta_one_inf": self.theta_one_inf}


def _mu_of_group(layout, blocks):
    sel = np.concatenate([np.arange(layout.offsets[r], layout.offsets[r + 1])
                          for r in blocks]) if len(blocks) else np.zeros(0, np.int64)
    return np.bincount(layout.index[sel], minlength=layout.n)


def theta_uniform(profile, R, K, layout=None):
    """Closed form for uniform K-subsets: (K-1)/(R-1) mu + (R-K)/(R-1).

    Returns the element-indexed vector, or a BlockVector if ``layout`` is given.
    """
    if not 1 <= K <= R:
        raise PlanError(f"K must lie in [1, {R}], got {K}")
    mu = np.asarray(profile.mu, dtype=float)
    if R == 1:
        vec = np.maximum(mu, 1.0)
    else:
        vec = (K - 1) / (R - 1) * mu + (R - K) / (R - 1)
    if layout is None:
        return vec
    return BlockVector(layout, layout.gather(vec))


def uniform_plan(d, K, seed=0):
    theta = theta_uniform(d.profile, d.R, K, d.layout)
    return SamplingPlan("uniform_k", int(K), d.R, theta, (), seed)


def greedy_balanced_partition(d, K, seed=0):
    """Greedy balanced partition of the blocks into m = ceil(R/K) parts.

    Each block, in ascending order, joins the non-full part whose degree
    vector would raise the running element-wise maximum on the fewest
    elements of its support (ties to the lowest part index).  Part capacities
    are ceil(R/m) for the first R mod m parts and floor(R/m) for the rest.
    """
    R = d.R
    if not 1 <= K <= R:
        raise PlanError(f"K must lie in [1, {R}], got {K}")
    m = math.ceil(R / K)
    base, extra = divmod(R, m)
    capacity = [base + 1 if i < extra else base for i in range(m)]
    mu_parts = np.zeros((m, d.n), dtype=np.int64)
    mu_max = np.zeros(d.n, dtype=np.int64)
    parts = [[] for _ in range(m)]
    for r, f in enumerate(d.components):
        s = f.support
        hits = np.where(
            np.array([len(p) < c for p, c in zip(parts, capacity)]),
            np.sum(mu_parts[:, s] == mu_max[s], axis=1),
            np.iinfo(np.int64).max)
        best = int(np.argmin(hits))
        parts[best].append(r)
        mu_parts[best, s] += 1
        mu_max[s] = np.maximum(mu_max[s], mu_parts[best, s])
    layout = d.layout
    part_of = np.empty(R, dtype=np.int64)
    for i, p in enumerate(parts):
        part_of[p] = i
    theta = BlockVector(layout, mu_parts[part_of[layout.block_of], layout.index].astype(float))
    return SamplingPlan("balanced_partition", int(K), R, theta,
                        tuple(tuple(p) for p in parts), seed)


def sample_group(plan, rng):
    """Draw a block group; uniform_k uses a partial Fisher-Yates shuffle."""
    if plan.kind == "uniform_k":
        R, K = plan.R, plan.k
        if K == R:
            return np.arange(R)
        if K == 1:
            return np.array([int(rng.integers(R))])
        perm = np.arange(R)
        picks = rng.integers(np.arange(K), R)
        for i, j in enumerate(picks):
            perm[i], perm[j] = perm[j], perm[i]
        return np.sort(perm[:K])
    i = int(rng.integers(len(plan.parts)))
    return np.array(plan.parts[i], dtype=np.int64)


def theta_monte_carlo(plan, d, samples, rng=None):
    """Empirical E[mu^C | r in C] from ``samples`` draws."""
    if samples < 1:
        raise PlanError("need at least one sample")
    rng = np.random.default_rng(plan.rng_seed) if rng is None else rng
    layout = d.layout
    acc = np.zeros(layout.total)
    hits = np.zeros(d.R, dtype=np.int64)
    block_rows = [np.arange(layout.offsets[r], layout.offsets[r + 1]) for r in range(d.R)]
    for _ in range(samples):
        group = sample_group(plan, rng)
        mu_c = _mu_of_group(layout, group)
        for r in group:
            rows = block_rows[r]
            acc[rows] += mu_c[layout.index[rows]]
        hits[group] += 1
    missing = np.flatnonzero(hits == 0)
    if missing.size:
        raise PlanError(f"block {int(missing[0])} was never sampled in {samples} draws")
    return BlockVector(layout, acc / hits[layout.block_of])


def lower_bound(d, K):
    """max{(K/R) ||mu||_1, N}: no plan drawing K blocks does better.

    N counts incident elements only, since isolated ones add nothing to
    ||theta||_{1,inf}.
    """
    incident = int(np.count_nonzero(d.profile.mu))
    return max(K / d.R * d.profile.mu_l1, float(incident))
