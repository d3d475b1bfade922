"""Alternating-projection and coordinate-descent DSFM solvers.

All solvers minimize g(y) = 1/2 ||Ay - x0||^2_{w^-1} over the product of
base polytopes (see ``gaps`` for the matching primal).  Projections inside
one iteration read a frozen snapshot and write disjoint blocks, so running
them on a thread pool gives the same bits as running them serially.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import BlockVector, apply_A, theta_one_inf
from .gaps import gap_report
from .oracles import EdgeCut
from .projections import DEFAULT_TOLERANCE, ProjectionError, project
from .sampling import SamplingPlan, sample_group, uniform_plan

ALGORITHMS = ("ap", "iap", "rcdm", "rcdm-par", "acdm", "iap-w", "rcdm-w")
CD_ALGORITHMS = ("rcdm-par", "acdm", "rcdm-w")
WEIGHTED = ("iap-w", "rcdm-w", "acdm")


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    algorithm: str
    plan: SamplingPlan = None
    epsilon: float = 1e-3
    gap_kind: str = "smooth"
    gap_check_period: int = None
    max_iterations: int = 100_000
    restart_c: float = 1.0
    weights: np.ndarray = None
    projection_tolerance: float = DEFAULT_TOLERANCE
    seed: int = 0
    workers: int = 1
    target_value: float = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SolverError(f"unknown algorithm {self.algorithm!r}")
        if self.gap_kind not in ("smooth", "discrete", "both"):
            raise SolverError(f"unknown gap kind {self.gap_kind!r}")
        if not self.epsilon > 0:
            raise SolverError("epsilon must be positive")
        if not self.restart_c > 0:
            raise SolverError("restart_c must be positive")
        if not self.projection_tolerance < self.epsilon / 10:
            raise SolverError("projection tolerance must be below epsilon / 10")
        if self.max_iterations < 0:
            raise SolverError("max_iterations must be nonnegative")
        if self.weights is not None and self.algorithm not in WEIGHTED:
            raise SolverError(f"{self.algorithm} does not take proximal weights")
        if self.plan is not None and self.algorithm not in CD_ALGORITHMS:
            raise SolverError(f"{self.algorithm} does not use a sampling plan")
        if self.algorithm == "rcdm-w" and self.plan is not None \
                and self.plan.kind != "uniform_k":
            raise SolverError("weighted RCDM is defined for uniform sampling only")
        if self.workers < 1:
            raise SolverError("workers must be at least 1")


@dataclass
class SolverState:
    y: BlockVector
    Ay: np.ndarray
    k: int = 0
    projections: int = 0
    z: BlockVector = None
    u: BlockVector = None
    Az: np.ndarray = None
    Au: np.ndarray = None
    lam: float = 1.0
    lam_prev: float = 1.0
    restart_period: int = 0


@dataclass
class TraceRow:
    iteration: int
    cumulative_projections: int
    nu_s: float
    nu_d: float
    g_value: float
    wall_seconds: float


@dataclass
class ConvergenceTrace:
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


@dataclass
class RunResult:
    state: SolverState
    trace: ConvergenceTrace
    solution: np.ndarray
    status: str
    report: object

    @property
    def converged(self):
        return self.status == "converged"


class _Context:
    """Per-run constants shared by the step functions."""

    def __init__(self, d, config):
        self.d = d.normalized()
        self.config = config
        self.layout = self.d.layout
        n = self.d.n
        self.w = np.ones(n) if config.weights is None else np.asarray(config.weights, float)
        if self.w.shape != (n,) or not np.all(self.w > 0):
            raise SolverError("proximal weights must be positive with length N")
        self.unit_w = config.weights is None or bool(np.all(self.w == 1.0))
        self.x0 = self.d.x0
        self.tol = config.projection_tolerance
        self.plan = config.plan
        self.executor = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
        mu = np.asarray(self.d.profile.mu, dtype=float)
        self.mu_flat = self.layout.gather(mu)
        self.w_flat = self.layout.gather(self.w)
        comps = self.d.components
        self.is_edge = np.array([isinstance(f, EdgeCut) for f in comps])
        self.edge_c = np.array([f.weight if isinstance(f, EdgeCut) else 0.0 for f in comps])
        if self.plan is not None:
            if not np.array_equal(self.plan.theta.layout.index, self.layout.index):
                raise SolverError("sampling plan does not match the decomposition")
            self.nu_flat = self.plan.theta.data / self.w_flat

    def close(self):
        if self.executor is not None:
            self.executor.shutdown()

    def gradient(self, Ay):
        return (Ay - self.x0) / self.w

    def project_blocks(self, blocks, z_flat, wt_flat):
        """Project every listed block; inputs and outputs are flat slices
        concatenated in the order of ``blocks``."""
        layout = self.layout
        out = np.empty_like(z_flat)
        pos = 0
        spans = []
        for r in blocks:
            size = int(layout.offsets[r + 1] - layout.offsets[r])
            spans.append((int(r), pos, pos + size))
            pos += size
        blocks = np.asarray(blocks, dtype=np.int64)
        edge_mask = self.is_edge[blocks]
        if edge_mask.any():
            first = np.array([s for (r, s, e), m in zip(spans, edge_mask) if m], dtype=np.int64)
            zu, zv = z_flat[first], z_flat[first + 1]
            wu, wv = wt_flat[first], wt_flat[first + 1]
            c = self.edge_c[blocks[edge_mask]]
            t = np.clip((wu * zu - wv * zv) / (wu + wv), -c, c)
            out[first] = t
            out[first + 1] = -t
        generic = [sp for sp, m in zip(spans, edge_mask) if not m]
        if generic:
            comps = self.d.components

            def task(span):
                r, s, e = span
                return project(comps[r], z_flat[s:e], wt_flat[s:e], self.tol)

            try:
                if self.executor is None:
                    results = [task(sp) for sp in generic]
                else:
                    results = list(self.executor.map(task, generic))
            except ProjectionError as exc:
                raise SolverError(f"projection failed: {exc}") from exc
            for (r, s, e), res in zip(generic, results):
                out[s:e] = res
        return out


def _rows_of(layout, blocks):
    return np.concatenate([np.arange(layout.offsets[r], layout.offsets[r + 1])
                           for r in blocks])


def initial_point(d):
    """Greedy vertex of each component at x = 0 (ties by element id)."""
    d = d.normalized()
    return BlockVector.from_blocks(d.layout, [f.greedy(np.zeros(f.size))
                                              for f in d.components])


def init_state(d, config, y0=None):
    d = d.normalized()
    y = initial_point(d) if y0 is None else y0.copy()
    state = SolverState(y=y, Ay=apply_A(y))
    if config.algorithm == "acdm":
        plan = config.plan
        n = d.n
        theta_norm = theta_one_inf(plan.theta)
        state.z = y.copy()
        state.u = BlockVector(d.layout)
        state.Az = state.Ay.copy()
        state.Au = np.zeros(n)
        # momentum starts at alpha, not 1: with lam_0 = 1 the first update
        # y = p + (lam/alpha) dz overshoots the base polytopes by 1/alpha
        state.lam = state.lam_prev = plan.alpha
        c = config.restart_c
        state.restart_period = math.ceil(
            (1 + c) * math.sqrt(2 * n * theta_norm) / plan.alpha + c)
    return state


# -- alternating projections -------------------------------------------------

def _sweep(state, ctx, step_scale, wt_flat):
    layout = ctx.layout
    grad = state.Ay - ctx.x0
    a = state.y.data - grad[layout.index] * step_scale
    blocks = np.arange(layout.R)
    new = ctx.project_blocks(blocks, a, wt_flat)
    state.y.data[:] = new
    state.Ay = apply_A(state.y)
    state.k += 1
    state.projections += layout.R
    return state


def step_ap(state, ctx):
    """a_r = y_r - (Ay - x0) / R, then orthogonal projection of every block."""
    R = ctx.layout.R
    return _sweep(state, ctx, 1.0 / R, np.ones(ctx.layout.total))


def step_iap(state, ctx):
    """a_{r,i} = y_{r,i} - (Ay - x0)_i / mu_i, then mu-weighted projections."""
    return _sweep(state, ctx, 1.0 / ctx.mu_flat, ctx.mu_flat)


def step_weighted_iap(state, ctx):
    """As IAP, projecting with weights mu / w."""
    return _sweep(state, ctx, 1.0 / ctx.mu_flat, ctx.mu_flat / ctx.w_flat)


# -- coordinate descent ------------------------------------------------------

def step_rcdm_seq(state, ctx, block):
    """Replace one block by the projection of x0 - sum of the other blocks."""
    layout = ctx.layout
    sl = layout.span(block)
    sup = layout.index[sl]
    old = state.y.data[sl].copy()
    z = old - (state.Ay[sup] - ctx.x0[sup])
    new = ctx.project_blocks([block], z, np.ones(z.size))
    state.y.data[sl] = new
    state.Ay[sup] += new - old
    state.k += 1
    state.projections += 1
    return state


def _block_update(state, ctx, group, y_vec, grad, step):
    """Projected gradient step on the blocks of ``group`` from one snapshot."""
    layout = ctx.layout
    rows = _rows_of(layout, group)
    nu = ctx.nu_flat[rows]
    old = y_vec.data[rows]
    z = old - step * grad[layout.index[rows]] / nu
    new = ctx.project_blocks(group, z, nu)
    return rows, old, new


def step_parallel_rcdm(state, ctx, group):
    """Blocks in ``group`` take a theta-weighted projected gradient step."""
    grad = ctx.gradient(state.Ay)
    rows, old, new = _block_update(state, ctx, group, state.y, grad, 1.0)
    state.y.data[rows] = new
    state.Ay += np.bincount(ctx.layout.index[rows], new - old, minlength=ctx.layout.n)
    state.k += 1
    state.projections += len(group)
    return state


step_weighted_rcdm = step_parallel_rcdm


def next_lambda(lam):
    return (math.sqrt(lam ** 4 + 4 * lam ** 2) - lam ** 2) / 2


def step_parallel_acdm(state, ctx, group):
    """One iteration of the accelerated method in its (z, u) form.

    The iterate is y = z + lam_prev^2 u and the extrapolated point is
    p = z + lam^2 u; both are only formed through their A-images.
    """
    alpha = ctx.plan.alpha
    if state.k > 0 and (state.k % state.restart_period == 0 or state.lam < 1e-300):
        _restart(state, alpha)
    lam = state.lam
    Ap = state.Az + lam * lam * state.Au
    grad = ctx.gradient(Ap)
    rows, old, new = _block_update(state, ctx, group, state.z, grad, alpha / lam)
    delta = new - old
    idx = ctx.layout.index[rows]
    state.z.data[rows] = new
    coef = (lam - alpha) / (alpha * lam * lam)
    state.u.data[rows] += coef * delta
    state.Az += np.bincount(idx, delta, minlength=ctx.layout.n)
    state.Au += np.bincount(idx, coef * delta, minlength=ctx.layout.n)
    state.lam_prev = lam
    state.lam = next_lambda(lam)
    state.k += 1
    state.projections += len(group)
    return state


def _restart(state, alpha):
    c = state.lam_prev ** 2
    state.z.data += c * state.u.data
    state.u.data[:] = 0.0
    state.Az = apply_A(state.z)
    state.Au = np.zeros_like(state.Az)
    state.lam = state.lam_prev = alpha


def materialize(state, algorithm):
    """Current feasible iterate and its A-image."""
    if algorithm == "acdm":
        c = state.lam_prev ** 2
        y = BlockVector(state.z.layout, state.z.data + c * state.u.data)
        return y, apply_A(y)
    return state.y, apply_A(state.y)


# -- harness -----------------------------------------------------------------

def default_period(d, config):
    if config.algorithm in ("ap", "iap", "iap-w"):
        return 1
    if config.algorithm == "rcdm":
        return d.R
    return math.ceil(d.R / config.plan.k)


def _resolve_config(d, config):
    if config.algorithm in CD_ALGORITHMS and config.plan is None:
        config.plan = uniform_plan(d, 1, config.seed)
    return config


def _sequential_draws(rng, R, count):
    return rng.integers(R, size=count)


def run(d, config, y0=None, callback=None):
    """Iterate the configured solver until the gap test passes.

    Gaps are evaluated every ``gap_check_period`` iterations (and once at
    the start); each evaluation appends one trace row.  Returns a RunResult
    whose status is "converged" or "unconverged".
    """
    config = _resolve_config(d, config)
    ctx = _Context(d, config)
    dn = ctx.d
    rng = np.random.default_rng(config.seed)
    period = config.gap_check_period or default_period(dn, config)
    state = init_state(dn, config, y0)
    trace = ConvergenceTrace(meta=_trace_meta(dn, config))
    start = time.perf_counter()
    algo = config.algorithm
    fast = algo == "rcdm" and ctx.unit_w and bool(ctx.is_edge.all())

    def check():
        y, Ay = materialize(state, algo)
        if algo != "acdm":
            state.Ay = Ay
        rep = gap_report(y, dn, ctx.w, Ay)
        trace.rows.append(TraceRow(state.k, state.projections, rep.nu_s, rep.nu_d,
                                   rep.g_value, time.perf_counter() - start))
        if callback is not None:
            callback(state, rep)
        return rep

    def done(rep):
        if config.target_value is not None:
            tol = 1e-9 * max(1.0, abs(config.target_value))
            if rep.best_value <= config.target_value + tol:
                return True
        ok_s = rep.nu_s <= config.epsilon
        ok_d = rep.nu_d <= config.epsilon
        return {"smooth": ok_s, "discrete": ok_d, "both": ok_s and ok_d}[config.gap_kind]

    rep = check()
    status = "unconverged"
    try:
        while state.k < config.max_iterations:
            todo = min(period, config.max_iterations - state.k)
            if algo in ("ap", "iap", "iap-w"):
                step = {"ap": step_ap, "iap": step_iap, "iap-w": step_weighted_iap}[algo]
                for _ in range(todo):
                    step(state, ctx)
            elif algo == "rcdm":
                draws = _sequential_draws(rng, dn.R, todo)
                if fast:
                    _rcdm_edge_chunk(state, ctx, draws)
                else:
                    for b in draws:
                        step_rcdm_seq(state, ctx, int(b))
            else:
                step = step_parallel_acdm if algo == "acdm" else step_parallel_rcdm
                for _ in range(todo):
                    step(state, ctx, sample_group(config.plan, rng))
            rep = check()
            if done(rep):
                status = "converged"
                break
    finally:
        ctx.close()
    solution = _solution(rep, dn)
    return RunResult(state, trace, solution, status, rep)


def _solution(rep, d):
    positive = np.flatnonzero(rep.x > 0)
    if positive.size != rep.best_set.size:
        value = d.objective(positive)
        if abs(value - rep.best_value) <= 1e-12 * max(1.0, abs(value)):
            return positive
    return rep.best_set


def _trace_meta(d, config):
    plan = config.plan
    if plan is None:
        # full sweeps behave like K = R (theta = mu); sequential RCDM like K = 1
        if config.algorithm in ("ap", "iap", "iap-w"):
            k, theta = d.R, float(d.profile.mu_l1)
        else:
            k, theta = 1, float(np.count_nonzero(d.profile.mu))
    else:
        k = plan.k
        theta = plan.theta_one_inf
    return {"algorithm": config.algorithm, "K": k, "seed": config.seed,
            "theta_one_inf": theta}


# -- compiled path for sequential RCDM on edge cuts ---------------------------

def _rcdm_edge_chunk(state, ctx, draws):
    layout = ctx.layout
    first = layout.offsets[:-1]
    _edge_kernel(state.y.data, state.Ay, ctx.x0, layout.index, first,
                 ctx.edge_c, np.asarray(draws, dtype=np.int64))
    state.k += len(draws)
    state.projections += len(draws)


def _edge_kernel_py(ydata, Ay, x0, index, first, c, draws):
    for r in draws:
        p = first[r]
        u, v = index[p], index[p + 1]
        yu, yv = ydata[p], ydata[p + 1]
        zu = yu - (Ay[u] - x0[u])
        zv = yv - (Ay[v] - x0[v])
        t = (zu - zv) / 2.0
        if t > c[r]:
            t = c[r]
        elif t < -c[r]:
            t = -c[r]
        ydata[p] = t
        ydata[p + 1] = -t
        Ay[u] += t - yu
        Ay[v] += -t - yv


def _ratio_kernel_py(ydata, Ay, x0, index, first, c, draws, g, target):
    """Sequential RCDM on edges until g <= target; returns (steps, g)."""
    steps = 0
    for r in draws:
        p = first[r]
        u, v = index[p], index[p + 1]
        yu, yv = ydata[p], ydata[p + 1]
        ru = Ay[u] - x0[u]
        rv = Ay[v] - x0[v]
        t = ((yu - ru) - (yv - rv)) / 2.0
        if t > c[r]:
            t = c[r]
        elif t < -c[r]:
            t = -c[r]
        du = t - yu
        dv = -t - yv
        g += du * ru + 0.5 * du * du + dv * rv + 0.5 * dv * dv
        ydata[p] = t
        ydata[p + 1] = -t
        Ay[u] += du
        Ay[v] += dv
        steps += 1
        if g <= target:
            break
    return steps, g


if os.environ.get("DSFM_NO_JIT"):
    _edge_kernel = _edge_kernel_py
    _ratio_kernel = _ratio_kernel_py
else:
    import numba
    _edge_kernel = numba.njit(cache=True)(_edge_kernel_py)
    _ratio_kernel = numba.njit(cache=True)(_ratio_kernel_py)


def rcdm_until_ratio(d, y0, ratio, rng, max_iterations=10**9, chunk=1 << 16):
    """Sequential RCDM from y0 until g(y) <= ratio * g(y0).

    Edge-cut decompositions with unit proximal weights only; g is tracked
    incrementally.  Returns (iterations, final BlockVector).
    """
    d = d.normalized()
    if not all(isinstance(f, EdgeCut) for f in d.components):
        raise SolverError("rcdm_until_ratio needs an edge-cut decomposition")
    layout = d.layout
    y = y0.copy()
    Ay = apply_A(y)
    resid = Ay - d.x0
    g = 0.5 * float(resid @ resid)
    target = ratio * g
    c = np.array([f.weight for f in d.components])
    first = layout.offsets[:-1]
    total = 0
    while g > target and total < max_iterations:
        draws = rng.integers(d.R, size=min(chunk, max_iterations - total))
        steps, g = _ratio_kernel(y.data, Ay, d.x0, layout.index, first, c, draws, g, target)
        total += steps
    return total, y
