"""Exact piecewise-linear maps of an interval.

A :class:`PLMap` is a node list ``(x_i, y_i)`` with strictly increasing
rational ``x_i`` and linear interpolation in between.  Everything here is
exact: coordinates are ``mpq`` and no operation rounds.
"""

import hashlib
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CompositionError, DomainError, ResourceError, UnsupportedError
from .rational import ONE, ZERO, as_rational, fmt, mpq

FORMAT_TAG = "plmap v1"
MARKOV_ORBIT_BUDGET = 10_000
# ranges shorter than this are scanned directly instead of via the sparse table
_RMQ_CUTOFF = 64


def _canonical(xs, ys, allow_jumps=False):
    """Drop repeated nodes and merge interior nodes lying on a straight line."""
    out_x = [xs[0]]
    out_y = [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        if x == out_x[-1]:
            if y == out_y[-1]:
                continue
            if not allow_jumps:
                raise DomainError(f"two different values at x={fmt(x)}")
            out_x.append(x)
            out_y.append(y)
            continue
        if (
            len(out_x) >= 2
            and out_x[-1] != out_x[-2]
            and (out_y[-1] - out_y[-2]) * (x - out_x[-1]) == (y - out_y[-1]) * (out_x[-1] - out_x[-2])
        ):
            out_x[-1] = x
            out_y[-1] = y
        else:
            out_x.append(x)
            out_y.append(y)
    return out_x, out_y


class PLMap:
    """Continuous piecewise-linear map with exact rational nodes.

    ``codomain`` defaults to the domain when every node value lies in it
    (the usual self-map case) and to ``[min y, max y]`` otherwise.

    Maps produced by an even-fold window perturbation may carry a jump; such
    maps list two nodes with the same x and record the location in
    ``meta["discontinuous_at"]``.  Most operations reject them.
    """

    __slots__ = ("xs", "ys", "domain", "codomain", "meta", "_cache")

    def __init__(self, xs, ys, codomain=None, meta=None, allow_jumps=False):
        xs = [as_rational(x) for x in xs]
        ys = [as_rational(y) for y in ys]
        if len(xs) != len(ys) or len(xs) < 2:
            raise DomainError("a PL map needs at least two nodes and matching coordinates")
        for x0, x1 in zip(xs, xs[1:]):
            if x1 < x0 or (x1 == x0 and not allow_jumps):
                raise DomainError("node x-coordinates must be strictly increasing")
        xs, ys = _canonical(xs, ys, allow_jumps)
        if len(xs) < 2:
            raise DomainError("degenerate domain")
        self.xs = tuple(xs)
        self.ys = tuple(ys)
        self.domain = (self.xs[0], self.xs[-1])
        lo, hi = min(self.ys), max(self.ys)
        if codomain is None:
            if self.domain[0] <= lo and hi <= self.domain[1]:
                codomain = self.domain
            else:
                codomain = (lo, hi)
        codomain = (as_rational(codomain[0]), as_rational(codomain[1]))
        if lo < codomain[0] or hi > codomain[1]:
            raise DomainError("node values leave the declared codomain")
        self.codomain = codomain
        self.meta = dict(meta or {})
        self._cache = {}

    # construction helpers
    @classmethod
    def _trusted(cls, xs, ys, codomain=None):
        """Build from canonical mpq node lists without re-checking them."""
        self = object.__new__(cls)
        self.xs = tuple(xs)
        self.ys = tuple(ys)
        self.domain = (self.xs[0], self.xs[-1])
        if codomain is None:
            lo, hi = min(self.ys), max(self.ys)
            codomain = self.domain if self.domain[0] <= lo and hi <= self.domain[1] else (lo, hi)
        self.codomain = (as_rational(codomain[0]), as_rational(codomain[1]))
        self.meta = {}
        self._cache = {}
        return self

    @classmethod
    def from_nodes(cls, nodes, codomain=None, meta=None):
        nodes = list(nodes)
        return cls([p[0] for p in nodes], [p[1] for p in nodes], codomain, meta)

    @classmethod
    def identity(cls, lo=ZERO, hi=ONE):
        return cls([lo, hi], [lo, hi])

    # basic structure
    @property
    def nodes(self):
        return list(zip(self.xs, self.ys))

    @property
    def pieces(self):
        return len(self.xs) - 1

    @property
    def has_jumps(self):
        return any(a == b for a, b in zip(self.xs, self.xs[1:]))

    def slopes(self):
        if "slopes" not in self._cache:
            self._cache["slopes"] = tuple(
                (y1 - y0) / (x1 - x0)
                for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])
                if x1 != x0
            )
        return self._cache["slopes"]

    def abs_slopes(self):
        return sorted({abs(s) for s in self.slopes()})

    def laps(self):
        """Number of maximal monotone pieces (plateaus count as their own lap)."""
        signs = [(s > 0) - (s < 0) for s in self.slopes()]
        return 1 + sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def turning_values(self):
        """Values at the endpoints and at every local extremum, in x order."""
        ys = self.ys
        out = [ys[0]]
        for i in range(1, len(ys) - 1):
            if (ys[i] - ys[i - 1]) * (ys[i + 1] - ys[i]) <= 0 and ys[i] != out[-1]:
                out.append(ys[i])
        out.append(ys[-1])
        return out

    def critical_points(self):
        """Interior x where the map changes monotonicity, plus the endpoints."""
        xs, ys = self.xs, self.ys
        out = [xs[0]]
        for i in range(1, len(xs) - 1):
            if (ys[i] - ys[i - 1]) * (ys[i + 1] - ys[i]) < 0:
                out.append(xs[i])
        out.append(xs[-1])
        return out

    # evaluation
    def _check_domain(self, x):
        if x < self.domain[0] or x > self.domain[1]:
            raise DomainError(f"{fmt(x)} is outside the domain [{fmt(self.domain[0])}, {fmt(self.domain[1])}]")

    def __call__(self, x):
        x = as_rational(x)
        self._check_domain(x)
        xs = self.xs
        j = bisect_left(xs, x)
        if j < len(xs) and xs[j] == x:
            return self.ys[j]
        x0, x1 = xs[j - 1], xs[j]
        y0, y1 = self.ys[j - 1], self.ys[j]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def piece_index(self, x):
        """Index i of the piece [x_i, x_{i+1}] containing x (last piece for the right end)."""
        x = as_rational(x)
        self._check_domain(x)
        return min(bisect_right(self.xs, x) - 1, len(self.xs) - 2)

    def float_arrays(self):
        if "float" not in self._cache:
            self._cache["float"] = (
                np.array([float(x) for x in self.xs]),
                np.array([float(y) for y in self.ys]),
            )
        return self._cache["float"]

    def eval_float(self, x):
        """Vectorised double-precision evaluation (a float shadow of the exact map)."""
        fx, fy = self.float_arrays()
        return np.interp(x, fx, fy)

    # equality and serialization
    def __eq__(self, other):
        if not isinstance(other, PLMap):
            return NotImplemented
        return self.xs == other.xs and self.ys == other.ys and self.codomain == other.codomain

    def __hash__(self):
        return hash((self.xs, self.ys, self.codomain))

    def __repr__(self):
        return (
            f"PLMap(pieces={self.pieces}, domain=[{fmt(self.domain[0])}, {fmt(self.domain[1])}], "
            f"codomain=[{fmt(self.codomain[0])}, {fmt(self.codomain[1])}])"
        )

    def to_text(self):
        if self.has_jumps:
            raise UnsupportedError("discontinuous maps have no plmap v1 serialization")
        lines = [
            f"{FORMAT_TAG} {fmt(self.domain[0])} {fmt(self.domain[1])} "
            f"{fmt(self.codomain[0])} {fmt(self.codomain[1])}"
        ]
        lines.extend(f"{fmt(x)} {fmt(y)}" for x, y in zip(self.xs, self.ys))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = iter(ln for ln in text.splitlines() if ln.strip())
        first = next(lines, "").strip()
        if not first.startswith(FORMAT_TAG + " "):
            raise ValueError("missing 'plmap v1' header")
        head = first[len(FORMAT_TAG):].split()
        if len(head) != 4:
            raise ValueError("header needs domain and codomain bounds")
        dlo, dhi, clo, chi = (as_rational(h) for h in head)
        xs, ys = [], []
        for ln in lines:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad node line: {ln!r}")
            xs.append(as_rational(parts[0]))
            ys.append(as_rational(parts[1]))
        f = cls(xs, ys, codomain=(clo, chi))
        if f.domain != (dlo, dhi):
            raise ValueError("node list does not span the declared domain")
        return f

    def content_hash(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # range queries used by interval images
    def _rmq(self):
        if "rmq" not in self._cache:
            order = sorted(set(self.ys))
            rank = {v: i for i, v in enumerate(order)}
            r = np.array([rank[y] for y in self.ys], dtype=np.int64)
            mins, maxs = [r], [r]
            width = 1
            while 2 * width <= len(r):
                prev_min, prev_max = mins[-1], maxs[-1]
                mins.append(np.minimum(prev_min[:-width], prev_min[width:]))
                maxs.append(np.maximum(prev_max[:-width], prev_max[width:]))
                width *= 2
            self._cache["rmq"] = (order, mins, maxs)
        return self._cache["rmq"]

    def node_value_range(self, i, j):
        """Exact (min, max) of node values ys[i:j] (j > i)."""
        if j - i <= _RMQ_CUTOFF:
            seg = self.ys[i:j]
            return min(seg), max(seg)
        order, mins, maxs = self._rmq()
        level = (j - i).bit_length() - 1
        w = 1 << level
        lo = min(mins[level][i], mins[level][j - w])
        hi = max(maxs[level][i], maxs[level][j - w])
        return order[lo], order[hi]


def identity(lo=ZERO, hi=ONE):
    return PLMap.identity(as_rational(lo), as_rational(hi))


def tent_map():
    """The full tent map x -> 1 - |2x - 1|."""
    return PLMap([0, mpq(1, 2), 1], [0, 1, 0])


def evaluate(f, x):
    """Exact value of f at a rational x."""
    return f(x)


def transform(f, x_scale=ONE, x_shift=ZERO, y_scale=ONE, y_shift=ZERO, codomain=None):
    """Affine change of coordinates: the map x_scale*x+x_shift -> y_scale*y+y_shift."""
    x_scale, x_shift = as_rational(x_scale), as_rational(x_shift)
    y_scale, y_shift = as_rational(y_scale), as_rational(y_shift)
    if x_scale == 0:
        raise DomainError("x_scale must be nonzero")
    pts = [(x_scale * x + x_shift, y_scale * y + y_shift) for x, y in zip(f.xs, f.ys)]
    if x_scale < 0:
        pts.reverse()
    return PLMap([p[0] for p in pts], [p[1] for p in pts], codomain=codomain)


def join(maps, codomain=None):
    """Concatenate maps whose domains abut and whose values agree at the seams."""
    xs, ys = list(maps[0].xs), list(maps[0].ys)
    for g in maps[1:]:
        if g.xs[0] != xs[-1] or g.ys[0] != ys[-1]:
            raise DomainError(f"maps do not join continuously at x={fmt(g.xs[0])}")
        xs.extend(g.xs[1:])
        ys.extend(g.ys[1:])
    return PLMap(xs, ys, codomain=codomain)


def restrict(f, a, b):
    """The restriction of f to [a, b] as a map with domain [a, b]."""
    a, b = as_rational(a), as_rational(b)
    if not (f.domain[0] <= a < b <= f.domain[1]):
        raise DomainError("restriction interval must be a nondegenerate subinterval of the domain")
    i = bisect_right(f.xs, a)
    j = bisect_left(f.xs, b)
    xs = [a] + list(f.xs[i:j]) + [b]
    ys = [f(a)] + list(f.ys[i:j]) + [f(b)]
    return PLMap(xs, ys, codomain=f.codomain)


def inverse(h):
    """Exact inverse of a strictly monotone PL map."""
    if h.has_jumps:
        raise DomainError("map is not continuous")
    s = h.slopes()
    if not (all(v > 0 for v in s) or all(v < 0 for v in s)):
        raise DomainError("map is not injective")
    pts = sorted(zip(h.ys, h.xs))
    return PLMap([p[0] for p in pts], [p[1] for p in pts], codomain=h.domain)


def compose(g, f, piece_budget=None):
    """Exact g o f.

    The nodes of the result are the nodes of f together with the preimages
    under f of g's nodes, so every output piece is linear.
    """
    if f.has_jumps or g.has_jumps:
        raise UnsupportedError("composition of discontinuous maps")
    if f.codomain[0] < g.domain[0] or f.codomain[1] > g.domain[1]:
        lo, hi = min(f.ys), max(f.ys)
        if lo < g.domain[0] or hi > g.domain[1]:
            raise CompositionError("range of the inner map is not inside the domain of the outer map")
    gx, gy = g.xs, g.ys
    fx, fy = f.xs, f.ys
    out_x = [fx[0]]
    out_y = [g(fy[0])]
    budget = piece_budget if piece_budget is not None else math.inf
    for i in range(len(fx) - 1):
        x0, x1, y0, y1 = fx[i], fx[i + 1], fy[i], fy[i + 1]
        if y0 < y1:
            idx = range(bisect_right(gx, y0), bisect_left(gx, y1))
        elif y0 > y1:
            idx = range(bisect_left(gx, y0) - 1, bisect_right(gx, y1) - 1, -1)
        else:
            idx = ()
        if idx:
            inv = (x1 - x0) / (y1 - y0)
            for k in idx:
                out_x.append(x0 + (gx[k] - y0) * inv)
                out_y.append(gy[k])
        out_x.append(x1)
        out_y.append(g(y1))
        if len(out_x) - 1 > budget:
            raise ResourceError(
                f"composition exceeds the piece budget of {piece_budget}",
                partial=None,
                pieces_so_far=len(out_x) - 1,
            )
    h = PLMap(out_x, out_y, codomain=g.codomain)
    if h.pieces > budget:
        raise ResourceError(f"composition has {h.pieces} pieces, budget {piece_budget}", pieces=h.pieces)
    return h


def iterate(f, n, piece_budget=5_000_000):
    """Exact n-fold iterate of a self-map.

    On budget exhaustion the ResourceError carries the last iterate that fit
    (``partial``) and its exponent and piece count in ``info``.
    """
    if n < 0:
        raise DomainError("iterate exponent must be non-negative")
    if f.codomain[0] < f.domain[0] or f.codomain[1] > f.domain[1]:
        raise CompositionError("iterate needs a self-map")
    current = identity(*f.domain)
    for k in range(n):
        try:
            current = compose(f, current, piece_budget=piece_budget)
        except ResourceError as exc:
            raise ResourceError(
                f"iterate {k + 1} exceeds the piece budget {piece_budget}",
                partial=current,
                reached=k,
                pieces=current.pieces,
            ) from exc
    return current


def evaluate_many(f, points):
    """Exact values of f at an increasing sequence of points (one merge sweep)."""
    xs, ys = f.xs, f.ys
    out = []
    j = 0
    last = len(xs) - 1
    for x in points:
        if x < xs[0] or x > xs[-1]:
            raise DomainError(f"{fmt(x)} is outside the domain")
        while j < last and xs[j + 1] <= x:
            j += 1
        if xs[j] == x or j == last:
            out.append(ys[j])
        else:
            out.append(ys[j] + (ys[j + 1] - ys[j]) * (x - xs[j]) / (xs[j + 1] - xs[j]))
    return out


def sup_distance(f, g):
    """Exact uniform distance; the difference is PL, so the max sits at a node."""
    if f.domain != g.domain:
        raise DomainError("maps have different domains")
    pts = sorted(set(f.xs) | set(g.xs))
    fv = evaluate_many(f, pts)
    gv = evaluate_many(g, pts)
    return max(abs(a - b) for a, b in zip(fv, gv))


def image_of_interval(f, a, b):
    """Exact (min, max) of f over [a, b]."""
    a, b = as_rational(a), as_rational(b)
    if a > b:
        a, b = b, a
    fa, fb = f(a), f(b)
    lo, hi = min(fa, fb), max(fa, fb)
    i = bisect_right(f.xs, a)
    j = bisect_left(f.xs, b)
    if j > i:
        nlo, nhi = f.node_value_range(i, j)
        lo, hi = min(lo, nlo), max(hi, nhi)
    return lo, hi


@dataclass
class MeasureCertificate:
    verdict: bool
    witnesses: list = field(default_factory=list)
    failing_value: Optional[object] = None

    def to_text(self):
        lines = [f"verdict: {str(self.verdict).lower()}"]
        if self.failing_value is not None:
            lines.append(f"failing_value: {fmt(self.failing_value)}")
        lines.append(f"witnesses: {len(self.witnesses)}")
        lines.extend(f"witness: {fmt(y)} {fmt(s)}" for y, s in self.witnesses)
        return "\n".join(lines) + "\n"


def _pullback_density(f, values):
    """Sum of 1/|slope| over the branches above each gap of ``values``.

    ``values`` is a sorted list of distinct levels containing every node
    value of f.  Entry i is the density of the pullback of Lebesgue measure
    on the gap (values[i], values[i+1]).
    """
    index = {v: i for i, v in enumerate(values)}
    diff = [ZERO] * (len(values) + 1)
    for x0, x1, y0, y1 in zip(f.xs, f.xs[1:], f.ys, f.ys[1:]):
        if y0 == y1:
            continue
        w = (x1 - x0) / abs(y1 - y0)
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        diff[index[lo]] += w
        diff[index[hi]] -= w
    out = []
    acc = ZERO
    for i in range(len(values) - 1):
        acc += diff[i]
        out.append(acc)
    return out


def is_measure_preserving(f):
    """Certify (or refute) that f preserves Lebesgue measure on [0,1].

    On every gap between consecutive distinct node values the set of
    branches above a level is constant, so checking the sum of 1/|slope|
    at one midpoint per gap is an exact test.
    """
    if f.domain != (ZERO, ONE) or f.codomain != (ZERO, ONE):
        raise DomainError("measure check needs a self-map of [0,1]")
    if f.has_jumps:
        raise UnsupportedError("measure check of a discontinuous map")
    for x0, x1, y0, y1 in zip(f.xs, f.xs[1:], f.ys, f.ys[1:]):
        if y0 == y1:
            return MeasureCertificate(False, [], failing_value=y0)
    values = sorted(set(f.ys) | {ZERO, ONE})
    dens = _pullback_density(f, values)
    witnesses = []
    failing = None
    for lo, hi, s in zip(values, values[1:], dens):
        mid = (lo + hi) / 2
        witnesses.append((mid, s))
        if failing is None and s != ONE:
            failing = mid
    return MeasureCertificate(failing is None, witnesses, failing)


def lambda_equivalent(f, g, a, b):
    """True iff f and g restricted to [a,b] pull Lebesgue measure back identically."""
    fr, gr = restrict(f, a, b), restrict(g, a, b)
    for h in (fr, gr):
        if h.has_jumps:
            raise UnsupportedError("discontinuous map")
        if any(s == 0 for s in h.slopes()):
            raise UnsupportedError("zero-slope piece: pullback measure has an atom")
    values = sorted(set(fr.ys) | set(gr.ys))
    return _pullback_density(fr, values) == _pullback_density(gr, values)


@dataclass
class MarkovSystem:
    partition: list
    transition_matrix: np.ndarray
    is_markov: bool
    is_leo: bool
    min_abs_slope: object
    note: str = ""


def is_primitive(matrix):
    """Primitivity of a nonnegative square matrix.

    Irreducible (one strongly connected component) and aperiodic (the gcd of
    level differences along edges of a BFS layering is 1).  This is
    equivalent to some power being positive, without forming powers.
    """
    m = np.asarray(matrix) != 0
    n = m.shape[0]
    if n == 0:
        return False
    graph = csr_matrix(m.astype(np.int8))
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    if ncomp != 1:
        return False
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    indptr, indices = graph.indptr, graph.indices
    while frontier:
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    rows, cols = np.nonzero(m)
    period = 0
    for d in np.unique(np.abs(level[rows] + 1 - level[cols])):
        period = math.gcd(period, int(d))
    return period == 1


def markov_analysis(f, orbit_budget=MARKOV_ORBIT_BUDGET):
    """Close the node set under forward images and build the covering matrix."""
    if f.has_jumps:
        raise UnsupportedError("discontinuous map")
    min_slope = min(abs(s) for s in f.slopes())
    points = set(f.xs)
    queue = list(f.xs)
    while queue:
        p = queue.pop()
        q = f(p)
        if q < f.domain[0] or q > f.domain[1]:
            return MarkovSystem(sorted(points), np.zeros((0, 0), dtype=np.uint8), False, False, min_slope,
                                "orbit leaves the domain")
        if q not in points:
            points.add(q)
            queue.append(q)
            if len(points) > orbit_budget:
                return MarkovSystem(sorted(points), np.zeros((0, 0), dtype=np.uint8), False, False,
                                    min_slope, "not Markov (budget)")
    part = sorted(points)
    pos = {p: i for i, p in enumerate(part)}
    n = len(part) - 1
    mat = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        u, v = f(part[i]), f(part[i + 1])
        lo, hi = (u, v) if u <= v else (v, u)
        mat[i, pos[lo]:pos[hi]] = 1
    # a primitive matrix gives leo only when cylinders shrink; with every
    # |slope| > 1 they shrink geometrically.  Otherwise report not leo.
    leo = bool(min_slope > 1 and is_primitive(mat))
    note = "" if min_slope > 1 else "some |slope| <= 1: leo not certified"
    return MarkovSystem(part, mat, True, leo, min_slope, note)


def is_admissible(f, cap=64):
    """|slope| >= 4 everywhere and locally eventually onto.

    Leo is certified by covering every interval of length beta under some
    iterate, with beta the smallest piece width.  With |slope| >= 4 any
    shorter interval at least doubles in length per step until it reaches
    beta, so this covers all open intervals.
    """
    from .family import covering_time

    if f.has_jumps or f.domain != (ZERO, ONE):
        return False
    if min(abs(s) for s in f.slopes()) < 4:
        return False
    beta = min(x1 - x0 for x0, x1 in zip(f.xs, f.xs[1:]))
    try:
        covering_time(f, beta, cap)
    except ResourceError:
        return False
    return True


def conjugate(f, h):
    """h o f o h^-1 for a PL homeomorphism h."""
    h_inv = inverse(h)
    return compose(h, compose(f, h_inv))


def measure_conjugator(density_breaks):
    """The homeomorphism x -> mu([0, x]) for a piecewise constant density.

    ``density_breaks`` lists ``(right_end, density)`` cells in increasing
    order; the first cell starts at 0 and the last must end at 1.
    """
    xs, ys = [ZERO], [ZERO]
    for right, dens in density_breaks:
        right, dens = as_rational(right), as_rational(dens)
        if dens <= 0:
            raise DomainError("density must be positive")
        if right <= xs[-1]:
            raise DomainError("cell endpoints must increase")
        ys.append(ys[-1] + dens * (right - xs[-1]))
        xs.append(right)
    if xs[-1] != ONE:
        raise DomainError("cells must cover [0,1]")
    if ys[-1] != ONE:
        raise DomainError(f"total mass is {fmt(ys[-1])}, not 1")
    return PLMap(xs, ys)


def window_perturbation(f, a, b, m):
    """Replace f on [a,b] by m accordion copies of f restricted to [a,b].

    Copy j occupies the j-th of m equal subwindows; even copies run forward
    and odd copies run backward.  Odd m keeps the values at a and b.  For
    even m with f(a) != f(b) the result jumps at b; the jump is kept (two
    nodes at x=b) and flagged in ``meta["discontinuous_at"]``.
    """
    a, b = as_rational(a), as_rational(b)
    if m < 1:
        raise DomainError("m must be positive")
    if not (f.domain[0] <= a < b <= f.domain[1]):
        raise DomainError("window must be a nondegenerate subinterval of the domain")
    if m == 1:
        return f
    window = restrict(f, a, b)
    width = b - a
    xs = [x for x in f.xs if x < a]
    ys = [y for x, y in zip(f.xs, f.ys) if x < a]
    for j in range(m):
        if j % 2 == 0:
            seq = zip(window.xs, window.ys)
            xs_j = [(a + j * width / m + (u - a) / m, y) for u, y in seq]
        else:
            seq = zip(reversed(window.xs), reversed(window.ys))
            xs_j = [(a + ((j + 1) * width - (u - a)) / m, y) for u, y in seq]
        for x, y in xs_j:
            if xs and xs[-1] == x and ys[-1] == y:
                continue
            xs.append(x)
            ys.append(y)
    meta = {}
    tail = [(x, y) for x, y in zip(f.xs, f.ys) if x > b]
    if m % 2 == 0 and f(a) != f(b):
        meta["discontinuous_at"] = b
        tail.insert(0, (b, f(b)))
    for x, y in tail:
        xs.append(x)
        ys.append(y)
    return PLMap(xs, ys, codomain=f.codomain, meta=meta, allow_jumps=bool(meta))
