"""Weighted projections onto base polytopes.

``project(f, z, w)`` returns argmin over y in B(F) of sum_i w_i (y_i - z_i)^2.
Three backends are available: a closed form for edge cuts, an exact
divide-and-conquer scheme driven by discrete minimization, and Wolfe's
min-norm-point algorithm run in the rescaled coordinates
u = sqrt(w) * (y - z).
"""

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .oracles import DisjointEdges, EdgeCut, SubmodularError, TableFunction

DEFAULT_TOLERANCE = 1e-10
MAX_WEIGHT_RATIO = 1e12
KKT_MAX_SUPPORT = 8


class ProjectionError(RuntimeError):
    """Projection did not reach its tolerance; carries the best iterate."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True, eq=False)
class ProjectionRequest:
    component: object
    z: np.ndarray
    w: np.ndarray = None
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        n = self.component.size
        if z.shape != (n,):
            raise SubmodularError(f"z must have length {n}")
        w = np.ones(n) if self.w is None else np.asarray(self.w, dtype=float)
        _check_weights(w, n)
        if not self.tolerance > 0:
            raise SubmodularError("tolerance must be positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)


def _check_weights(w, n):
    if w.shape != (n,):
        raise SubmodularError(f"weights must have length {n}")
    if not np.all(w > 0):
        raise SubmodularError("projection weights must be strictly positive")
    if w.max() > MAX_WEIGHT_RATIO * w.min():
        raise SubmodularError("projection weights span more than 1e12")


def project(f, z, w=None, tolerance=DEFAULT_TOLERANCE):
    """Dispatch to the fastest exact backend for the component family."""
    if isinstance(f, EdgeCut):
        if w is None:
            t = 0.5 * (z[0] - z[1])
        else:
            t = (w[0] * z[0] - w[1] * z[1]) / (w[0] + w[1])
        c = f.weight
        t = c if t > c else (-c if t < -c else t)
        return np.array([t, -t])
    if isinstance(f, DisjointEdges):
        return _project_disjoint_edges(f, z, w)
    if isinstance(f, TableFunction):
        return wolfe_min_norm(f, z, w, tolerance)
    return project_dc(f, z, w, tolerance)


def _unpack(req_or_f, z, w, tolerance):
    if isinstance(req_or_f, ProjectionRequest):
        return req_or_f.component, req_or_f.z, req_or_f.w, req_or_f.tolerance
    f = req_or_f
    z = np.asarray(z, dtype=float)
    w = np.ones(f.size) if w is None else np.asarray(w, dtype=float)
    return f, z, w, tolerance


def project_edge(f, z=None, w=None):
    """Closed form for an edge cut: (t, -t) with t clamped to [-c, c]."""
    f, z, w, _ = _unpack(f, z, w, None)
    if not isinstance(f, EdgeCut):
        raise SubmodularError("project_edge requires an edge_cut component")
    t = (w[0] * z[0] - w[1] * z[1]) / (w[0] + w[1])
    t = min(max(t, -f.weight), f.weight)
    return np.array([t, -t])


def _project_disjoint_edges(f, z, w):
    a, b = f.local_pairs[:, 0], f.local_pairs[:, 1]
    if w is None:
        t = 0.5 * (z[a] - z[b])
    else:
        t = (w[a] * z[a] - w[b] * z[b]) / (w[a] + w[b])
    t = np.clip(t, -f.weights, f.weights)
    y = np.empty(f.size)
    y[a] = t
    y[b] = -t
    return y


# -- divide and conquer ----------------------------------------------------

def project_dc(f, z=None, w=None, tolerance=DEFAULT_TOLERANCE):
    """Exact weighted projection by recursive decomposition.

    At each level the point y' minimizing the weighted distance subject only
    to y(V) = F(V) is y' = z + lam / w with a single multiplier lam.  A
    minimizer A of F(S) - y'(S), i.e. of F(S) - z(S) - lam * sum_{S} 1/w,
    is tight at the projection, so the problem splits into the restriction
    of F to A and the contraction of F by A.  If the minimum is zero, y' is
    already feasible and optimal.  Each level removes at least one element,
    so at most |S_r| discrete minimizations run per branch.
    """
    f, z, w, tolerance = _unpack(f, z, w, tolerance)
    if isinstance(f, DisjointEdges):
        return _project_disjoint_edges(f, z, w)
    n = f.size
    h = f.cardinality_values()
    if h is not None:
        solver = _CardinalityMinimizer(np.asarray(h, dtype=float))
    elif n <= 20:
        solver = _TableMinimizer(f.table())
    else:
        raise SubmodularError(
            f"no discrete minimizer for family {f.family} of size {n}")
    scale = max(1.0, float(np.max(np.abs(z))), float(np.max(np.abs(solver.range))))
    budget = [2 * n + 2]
    y = np.empty(n)
    _dc(solver, np.arange(n), z, 1.0 / w, y, 1e-13 * scale * n, budget)
    return y


def _dc(solver, idx, z, winv, out, tol, budget):
    stack = [(idx, solver.root())]
    while stack:
        idx, node = stack.pop()
        if idx.size == 0:
            continue
        zz, wi = z[idx], winv[idx]
        lam = (solver.full(node) - zz.sum()) / wi.sum()
        yp = zz + lam * wi
        if idx.size == 1:
            out[idx] = yp
            continue
        budget[0] -= 1
        if budget[0] < 0:
            raise ProjectionError("divide-and-conquer exceeded its discrete-call budget",
                                  best=out.copy())
        value, inside = solver.minimize(node, idx, yp)
        if value >= -tol or inside.all() or not inside.any():
            out[idx] = yp
            continue
        left, right = solver.split(node, idx, inside)
        stack.append((idx[inside], left))
        stack.append((idx[~inside], right))


class _CardinalityMinimizer:
    """F(S) = h(|S|) over the current element set (restrictions and
    contractions of cardinality functions stay cardinality functions)."""

    def __init__(self, h):
        self.h = h
        self.range = h

    def root(self):
        return self.h

    def full(self, h):
        return h[-1]

    def minimize(self, h, idx, a):
        order = np.argsort(-a, kind="stable")
        prefix = np.concatenate([[0.0], np.cumsum(a[order])])
        vals = h - prefix
        k = int(np.argmin(vals))
        inside = np.zeros(idx.size, dtype=bool)
        inside[order[:k]] = True
        return vals[k], inside

    def split(self, h, idx, inside):
        k = int(inside.sum())
        return h[:k + 1], h[k:] - h[k]


class _TableMinimizer:
    """Brute-force discrete minimization on a tabulated function.

    A node is (base mask, tuple of free bits); values are F(base | S) - F(base).
    """

    def __init__(self, table):
        self.table = table
        self.range = table

    def root(self):
        n = int(np.log2(self.table.size))
        return 0, np.arange(n)

    def _values(self, node):
        base, bits = node
        masks = _submasks(bits)
        return masks, self.table[base | masks] - self.table[base]

    def full(self, node):
        base, bits = node
        return self.table[base | int(np.sum(1 << bits))] - self.table[base]

    def minimize(self, node, idx, a):
        base, bits = node
        masks, vals = self._values(node)
        member = ((masks[:, None] >> bits) & 1).astype(bool)
        obj = vals - member @ a
        k = int(np.argmin(obj))
        return obj[k], member[k]

    def split(self, node, idx, inside):
        base, bits = node
        a_bits = bits[inside]
        return (base, a_bits), (base | int(np.sum(1 << a_bits)), bits[~inside])


def _submasks(bits):
    m = bits.size
    local = np.arange(1 << m, dtype=np.int64)
    masks = np.zeros_like(local)
    for j, b in enumerate(bits):
        masks |= ((local >> j) & 1) << int(b)
    return masks


# -- Wolfe -----------------------------------------------------------------

def wolfe_min_norm(f, z=None, w=None, tolerance=DEFAULT_TOLERANCE, max_iter=None):
    """Weighted projection via Wolfe's min-norm-point algorithm.

    With s = sqrt(w) each base vertex v maps to q = s * (v - z); the
    projection is the min-norm point of conv{q}.  Linear minimization over
    that polytope is the greedy vertex for -s * u.  Stops when the Wolfe gap
    ||u||^2 - <u, q> (an upper bound on the squared distance to the optimum
    in u-space) drops below tolerance^2, or to the floating-point floor.
    """
    f, z, w, tolerance = _unpack(f, z, w, tolerance)
    n = f.size
    if max_iter is None:
        max_iter = 10 * n * n + 1000
    s = np.sqrt(w)

    def oracle(u):
        v = f.greedy(-s * u)
        return v, s * (v - z)

    v, q = oracle(np.zeros(n))
    V = [v]
    Q = [q]
    lam = np.array([1.0])
    u = q.copy()
    gap = np.inf
    for it in range(max_iter):
        v, q = oracle(u)
        uu = u @ u
        gap = uu - u @ q
        scale = max(uu, q @ q, max(p @ p for p in Q))
        if gap <= max(tolerance ** 2, 1e-15 * scale):
            break
        if any(np.array_equal(v, p) for p in V):
            break
        V.append(v)
        Q.append(q)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(np.array(Q))
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            mask = alpha < lam
            ratio = lam[mask] / (lam[mask] - alpha[mask])
            theta = min(1.0, float(ratio.min())) if ratio.size else 1.0
            lam = (1 - theta) * lam + theta * alpha
            keep = lam > 1e-14
            if keep.all():
                keep[int(np.argmin(lam))] = False
            V = [p for p, k in zip(V, keep) if k]
            Q = [p for p, k in zip(Q, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
        u = np.array(Q).T @ lam
    else:
        y = np.array(V).T @ lam
        raise ProjectionError(f"Wolfe exceeded {max_iter} iterations",
                              best=y, residual=gap)
    return np.array(V).T @ lam


def _affine_minimizer(Q):
    """Barycentric weights of the min-norm point of the affine hull of rows."""
    m = Q.shape[0]
    G = Q @ Q.T
    M = np.zeros((m + 1, m + 1))
    M[0, 1:] = 1.0
    M[1:, 0] = 1.0
    M[1:, 1:] = G
    rhs = np.zeros(m + 1)
    rhs[0] = 1.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    alpha = sol[1:]
    return alpha / alpha.sum()


# -- verification ----------------------------------------------------------

_PERM_CACHE = {}


def _perm_matrix(n):
    if n not in _PERM_CACHE:
        _PERM_CACHE[n] = np.array(list(permutations(range(n))), dtype=np.int64)
    return _PERM_CACHE[n]


def base_vertices(f):
    """Greedy vertices for every permutation (rows, possibly repeated)."""
    n = f.size
    if n > KKT_MAX_SUPPORT:
        raise SubmodularError(f"vertex enumeration limited to |S_r| <= {KKT_MAX_SUPPORT}")
    perms = _perm_matrix(n)
    table = f.table()
    prefix = np.cumsum(1 << perms, axis=1)
    vals = table[prefix]
    gains = np.diff(vals, axis=1, prepend=0.0)
    verts = np.empty_like(gains)
    np.put_along_axis(verts, perms, gains, axis=1)
    return verts


def is_feasible(f, y, slack):
    """y(S) <= F(S) + slack for all S and |y(V) - F(V)| <= slack."""
    n = f.size
    masks = np.arange(1 << n, dtype=np.int64)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    sums = member @ np.asarray(y, dtype=float)
    table = f.table()
    return bool(np.all(sums <= table + slack) and abs(sums[-1] - table[-1]) <= slack)


def kkt_check(f, y_star, z, w=None, slack=1e-9):
    """First-order optimality of y_star as the w-weighted projection of z,
    verified by enumerating all subsets and all permutation vertices."""
    if f.size > KKT_MAX_SUPPORT:
        raise SubmodularError(f"kkt_check limited to |S_r| <= {KKT_MAX_SUPPORT}")
    y_star = np.asarray(y_star, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.ones(f.size) if w is None else np.asarray(w, dtype=float)
    if not is_feasible(f, y_star, slack):
        return False
    verts = base_vertices(f)
    residual = (verts - y_star) @ (w * (z - y_star))
    return bool(residual.max() <= slack)


def weighted_distance(a, b, w):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return math.sqrt(float(np.sum(np.asarray(w) * d * d)))
