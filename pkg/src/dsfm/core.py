"""Decompositions, incidence profiles and block-vector algebra."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .oracles import EdgeCut, SubmodularComponent, SubmodularError


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Ground set [N] with R submodular components.

    Solvers target ``min_x tau * sum_r f_r(x) - <x0, x> + 1/2 ||x||^2_w``;
    with w = 1 this is ``tau * sum_r f_r(x) + 1/2 ||x - x0||^2`` up to a
    constant, and its discrete counterpart is ``tau * F(S) - x0(S)``.
    """

    n: int
    components: tuple
    x0: np.ndarray = None
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.n < 1:
            raise SubmodularError("ground set must be nonempty")
        if not self.components:
            raise SubmodularError("decomposition needs at least one component")
        if not self.tau > 0:
            raise SubmodularError("tau must be positive")
        for r, f in enumerate(self.components):
            if not isinstance(f, SubmodularComponent):
                raise TypeError(f"component {r} is not a SubmodularComponent")
            if f.support[-1] >= self.n:
                raise SubmodularError(
                    f"component {r} support exceeds ground set of size {self.n}")
        x0 = np.zeros(self.n) if self.x0 is None else np.array(self.x0, dtype=float)
        if x0.shape != (self.n,):
            raise DimensionError(f"x0 must have length {self.n}")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

    @property
    def R(self):
        return len(self.components)

    @cached_property
    def layout(self):
        return BlockLayout.from_components(self.n, self.components)

    @cached_property
    def profile(self):
        return compute_incidence(self)

    def normalized(self):
        """Same problem with tau folded into every oracle (tau = 1)."""
        return self._normalized

    @cached_property
    def _normalized(self):
        if self.tau == 1.0:
            return self
        return Decomposition(self.n, [f.scaled(self.tau) for f in self.components],
                             self.x0, 1.0)

    @cached_property
    def edge_blocks(self):
        """(block ids, u, v, weight) arrays for the edge-cut components."""
        ids = [r for r, f in enumerate(self.components) if isinstance(f, EdgeCut)]
        uv = np.array([self.components[r].support for r in ids], dtype=np.int64).reshape(-1, 2)
        c = np.array([self.components[r].weight for r in ids], dtype=float)
        return np.array(ids, dtype=np.int64), uv[:, 0], uv[:, 1], c

    @cached_property
    def other_blocks(self):
        return [r for r, f in enumerate(self.components) if not isinstance(f, EdgeCut)]

    def objective(self, elements):
        """Discrete objective tau * sum_r F_r(S) - x0(S)."""
        elements = sorted(set(int(e) for e in elements))
        value = self.tau * sum(f.evaluate(elements) for f in self.components)
        return value - float(self.x0[np.array(elements, dtype=np.int64)].sum())


@dataclass(frozen=True, eq=False)
class BlockLayout:
    """Flat storage map: block r occupies ``offsets[r]:offsets[r+1]``."""

    n: int
    offsets: np.ndarray
    index: np.ndarray
    block_of: np.ndarray = field(repr=False)

    @classmethod
    def from_components(cls, n, components):
        sizes = np.array([f.size for f in components], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        index = np.concatenate([f.support for f in components])
        block_of = np.repeat(np.arange(len(components)), sizes)
        for a in (offsets, index, block_of):
            a.setflags(write=False)
        return cls(n, offsets, index, block_of)

    @property
    def R(self):
        return self.offsets.size - 1

    @property
    def total(self):
        return int(self.offsets[-1])

    def span(self, r):
        return slice(int(self.offsets[r]), int(self.offsets[r + 1]))

    def support(self, r):
        return self.index[self.span(r)]

    def gather(self, v):
        """Induced block vector I(v): each block holds v on its support."""
        return np.asarray(v, dtype=float)[self.index]


class BlockVector:
    """y = (y_1, ..., y_R) with y_r stored only on S_r.

    Distinct blocks may be written concurrently; ``apply_A`` must only be
    called once all writes of an iteration are done.
    """

    __slots__ = ("layout", "data")

    def __init__(self, layout, data=None):
        self.layout = layout
        if data is None:
            data = np.zeros(layout.total)
        else:
            data = np.array(data, dtype=float)
            if data.shape != (layout.total,):
                raise DimensionError("block data does not match the layout")
        self.data = data

    @classmethod
    def from_blocks(cls, layout, blocks):
        blocks = list(blocks)
        if len(blocks) != layout.R:
            raise DimensionError(f"expected {layout.R} blocks, got {len(blocks)}")
        for r, b in enumerate(blocks):
            if np.shape(b) != (layout.offsets[r + 1] - layout.offsets[r],):
                raise DimensionError(f"block {r} has the wrong length")
        data = np.concatenate([np.asarray(b, dtype=float) for b in blocks])
        return cls(layout, data)

    def block(self, r):
        return self.data[self.layout.span(r)]

    def set_block(self, r, values):
        self.data[self.layout.span(r)] = values

    def blocks(self):
        return [self.block(r) for r in range(self.layout.R)]

    def copy(self):
        return BlockVector(self.layout, self.data)

    def apply_A(self):
        return apply_A(self)

    def __repr__(self):
        return f"BlockVector(R={self.layout.R}, total={self.layout.total})"


@dataclass(frozen=True, eq=False)
class IncidenceProfile:
    mu: np.ndarray
    element_to_components: tuple
    mu_l1: int

    @property
    def isolated(self):
        """Elements incident to no component."""
        return np.flatnonzero(self.mu == 0)


def compute_incidence(d):
    """Degrees mu_i from the declared supports."""
    layout = d.layout
    mu = np.bincount(layout.index, minlength=d.n).astype(np.int64)
    owners = [[] for _ in range(d.n)]
    for r, f in enumerate(d.components):
        for e in f.support:
            owners[int(e)].append(r)
    mu.setflags(write=False)
    return IncidenceProfile(mu, tuple(tuple(o) for o in owners), int(mu.sum()))


def detect_incidence(f, i, n=None, tol=1e-9):
    """Two-query incidence test: i is not incident iff F({i}) = 0 and
    F(V) = F(V - {i}).

    ``n`` defaults to the smallest ground set containing the support and i.
    Integer-valued tables and cut families compare exactly.
    """
    i = int(i)
    if n is None:
        n = max(int(f.support[-1]), i) + 1
    full = range(n)
    single = f.evaluate([i])
    drop = f.evaluate(full) - f.evaluate([e for e in full if e != i])
    if _integer_valued(f):
        return not (single == 0 and drop == 0)
    return not (abs(single) <= tol and abs(drop) <= tol)


def _integer_valued(f):
    if hasattr(f, "values"):
        vals = np.asarray(f.values)
        return bool(np.all(vals == np.round(vals)))
    h = f.cardinality_values()
    if h is not None:
        return bool(np.all(h == np.round(h)))
    return bool(np.all(f.weights == np.round(f.weights)))


def apply_A(y, d=None):
    """(Ay)_i = sum over blocks containing i of y_{r,i}, summed in ascending r."""
    layout = y.layout
    if d is not None and d.layout is not layout:
        if not np.array_equal(d.layout.index, layout.index):
            raise DimensionError("block vector does not conform to decomposition")
    return np.bincount(layout.index, weights=y.data, minlength=layout.n)


def skewed_norm(z, w):
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.shape != w.shape:
        raise DimensionError(f"vector shape {z.shape} vs weight shape {w.shape}")
    return float(np.sqrt(np.sum(w * z * z)))


def block_skewed_norm(y, theta):
    """||y||_{2,theta} for block vectors; ``theta`` is a BlockVector of weights."""
    t = theta.data if isinstance(theta, BlockVector) else np.asarray(theta, dtype=float)
    return skewed_norm(y.data, t)


def theta_one_inf(theta, profile=None):
    """sum_i max over blocks containing i of theta_{r,i}; isolated elements add 0."""
    layout = theta.layout
    best = np.zeros(layout.n)
    np.maximum.at(best, layout.index, theta.data)
    return float(best.sum())


def induced(v, layout):
    """I(v) as a BlockVector."""
    return BlockVector(layout, layout.gather(v))
