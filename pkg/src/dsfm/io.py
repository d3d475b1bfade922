"""Problem files and convergence-trace CSVs.

Problem format (1-based ids, '#' starts a comment)::

    dsfm v1 N=<int> tau=<real>
    edge u v w
    hyperedge w v1 v2 ...
    region v1 v2 ...            # F(S) = |S|(|S_r| - |S|)
    region w=<real> v1 v2 ...   # weighted variant
    edgeset u1 v1 w1 u2 v2 w2 ...  # vertex-disjoint edges as one component
    table w <2^k values> v1 ... vk  # bit j of the index <-> j-th listed id
    x0 v value
"""

import csv
import math
import re
import warnings

import numpy as np

from .core import Decomposition
from .oracles import (ConcaveCardinality, DisjointEdges, EdgeCut, HyperedgeCut,
                      SubmodularError, TableFunction)

TRACE_COLUMNS = ("iteration", "cumulative_projections", "nu_s", "nu_d", "g_value",
                 "wall_seconds")
_HEADER = re.compile(r"^dsfm\s+v1\s+N=(\S+)\s+tau=(\S+)\s*$")


class ParseError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _num(tok, lineno, what="number"):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(lineno, f"bad {what} {tok!r}") from None
    if not math.isfinite(v):
        raise ParseError(lineno, f"{what} must be finite")
    return v


def _weight(tok, lineno):
    w = _num(tok, lineno, "weight")
    if w <= 0:
        raise ParseError(lineno, f"weight must be positive, got {tok}")
    return w


def parse_problem(text):
    """Decomposition from problem-file text."""
    lines = text.splitlines()
    body = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(lines)]
    body = [(i, ln) for i, ln in body if ln]
    if not body:
        raise ParseError(1, "empty problem file")
    lineno, head = body[0]
    m = _HEADER.match(head)
    if not m:
        raise ParseError(lineno, "expected header 'dsfm v1 N=<int> tau=<real>'")
    try:
        n = int(m.group(1))
    except ValueError:
        raise ParseError(lineno, f"bad N {m.group(1)!r}") from None
    if n < 1:
        raise ParseError(lineno, "N must be positive")
    tau = _weight(m.group(2), lineno)

    def ids(tokens, lineno):
        out = []
        for t in tokens:
            try:
                v = int(t)
            except ValueError:
                raise ParseError(lineno, f"bad element id {t!r}") from None
            if not 1 <= v <= n:
                raise ParseError(lineno, f"element id {v} outside [1, {n}]")
            out.append(v - 1)
        if len(set(out)) != len(out):
            raise ParseError(lineno, "repeated element id")
        return out

    comps = []
    x0 = np.zeros(n)
    seen_x0 = set()
    for lineno, line in body[1:]:
        tok = line.split()
        kind, args = tok[0], tok[1:]
        try:
            if kind == "edge":
                if len(args) != 3:
                    raise ParseError(lineno, "edge needs 'u v w'")
                u, v = ids(args[:2], lineno)
                comps.append(EdgeCut(u, v, _weight(args[2], lineno)))
            elif kind == "hyperedge":
                if len(args) < 3:
                    raise ParseError(lineno, "hyperedge needs a weight and >= 2 ids")
                comps.append(HyperedgeCut(ids(args[1:], lineno), _weight(args[0], lineno)))
            elif kind == "region":
                w = 1.0
                if args and args[0].startswith("w="):
                    w = _weight(args[0][2:], lineno)
                    args = args[1:]
                if not args:
                    raise ParseError(lineno, "region needs element ids")
                comps.append(ConcaveCardinality(ids(args, lineno), w))
            elif kind == "edgeset":
                if not args or len(args) % 3:
                    raise ParseError(lineno, "edgeset needs triples 'u v w'")
                trip = [args[i:i + 3] for i in range(0, len(args), 3)]
                pairs = [ids(t[:2], lineno) for t in trip]
                comps.append(DisjointEdges(pairs, [_weight(t[2], lineno) for t in trip]))
            elif kind == "table":
                comps.append(_parse_table(args, lineno, ids))
            elif kind == "x0":
                if len(args) != 2:
                    raise ParseError(lineno, "x0 needs 'v value'")
                (v,) = ids(args[:1], lineno)
                if v in seen_x0:
                    warnings.warn(f"line {lineno}: duplicate x0 for element {v + 1}; "
                                  "last value wins", stacklevel=2)
                seen_x0.add(v)
                x0[v] = _num(args[1], lineno)
            else:
                raise ParseError(lineno, f"unknown line type {kind!r}")
        except SubmodularError as exc:
            raise ParseError(lineno, str(exc)) from None
    if not comps:
        raise ParseError(body[-1][0], "no components")
    return Decomposition(n, comps, x0, tau)


def _parse_table(args, lineno, ids):
    if len(args) < 4:
        raise ParseError(lineno, "table needs 'w <2^k values> v1 ... vk'")
    w = _weight(args[0], lineno)
    rest = len(args) - 1
    k = 1
    while (1 << k) + k < rest:
        k += 1
    if (1 << k) + k != rest:
        raise ParseError(lineno, f"table has {rest} entries, not 2^k + k for any k")
    values = [_num(t, lineno, "table value") for t in args[1:1 + (1 << k)]]
    sup = ids(args[1 + (1 << k):], lineno)
    return TableFunction(sup, np.array(values), w)


def read_problem(path):
    with open(path) as fh:
        return parse_problem(fh.read())


def _fmt(v):
    return repr(float(v))


def format_problem(d):
    """Problem-file text for ``d``; parse_problem(format_problem(d)) gives the
    same components, x0 and tau."""
    out = [f"dsfm v1 N={d.n} tau={_fmt(d.tau)}"]
    for f in d.components:
        ids1 = " ".join(str(int(e) + 1) for e in f.support)
        if isinstance(f, EdgeCut):
            out.append(f"edge {ids1} {_fmt(f.weight)}")
        elif isinstance(f, HyperedgeCut):
            out.append(f"hyperedge {_fmt(f.weight)} {ids1}")
        elif isinstance(f, ConcaveCardinality):
            prefix = "" if f.weight == 1.0 else f"w={_fmt(f.weight)} "
            out.append(f"region {prefix}{ids1}")
        elif isinstance(f, DisjointEdges):
            trip = " ".join(f"{u + 1} {v + 1} {_fmt(c)}"
                            for (u, v), c in zip(f.pairs, f.weights))
            out.append(f"edgeset {trip}")
        elif isinstance(f, TableFunction):
            vals = " ".join(_fmt(v) for v in f.table())
            out.append(f"table 1.0 {vals} {ids1}")
        else:
            raise TypeError(f"cannot serialize {type(f).__name__}")
    for v, x in enumerate(d.x0):
        if x != 0:
            out.append(f"x0 {v + 1} {_fmt(x)}")
    return "\n".join(out) + "\n"


def write_problem(d, path):
    with open(path, "w") as fh:
        fh.write(format_problem(d))


def write_trace(trace, path):
    m = trace.meta
    with open(path, "w", newline="") as fh:
        fh.write(f"# algorithm={m['algorithm']} K={m['K']} seed={m['seed']} "
                 f"theta_one_inf={m['theta_one_inf']!r}\n")
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            w.writerow([row.iteration, row.cumulative_projections, repr(row.nu_s),
                        repr(row.nu_d), repr(row.g_value), f"{row.wall_seconds:.6f}"])


def read_trace(path):
    """(metadata dict, dict of column arrays)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(kv.split("=", 1) for kv in first[1:].split())
        rows = list(csv.DictReader(fh))
    cols = {c: np.array([float(r[c]) for r in rows]) for c in TRACE_COLUMNS}
    return meta, cols
