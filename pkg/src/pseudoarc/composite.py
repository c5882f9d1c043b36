"""Exact crookedness of an iterate F^N without building F^N.

The walk table of F^r along x in [u, v] splits at the nodes of F: on each
piece F is monotone, so the piece contributes the walk table of F^(r-1)
between its end values.  Applying that rule level by level reduces
everything to labels of exact orbit values, and the number of tables per
level grows like 2^N * pieces(F) instead of the piece count of F^N.

The query structure (which value ranges are needed at which level) does
not depend on the level pair being checked, so it is built once and then
reused for every pair (a, b).  All coordinates live on the integer
lattice of a :class:`~pseudoarc.lattice.LatticeMap`.
"""

import numpy as np

from . import walk
from .errors import DomainError
from .exactmap import PLMap
from .lattice import LatticeMap, compose_lattice, lattice_restrict
from .rational import ONE, ZERO, as_rational, mpq

def _compact(arr):
    """int64 copy when every entry is small enough, else the object array."""
    if len(arr) == 0:
        return arr.astype(np.int64)
    if max(abs(int(arr.max())), abs(int(arr.min()))) < 2**53:
        return arr.astype(np.int64)
    return arr if arr.dtype == object else arr.astype(object)


def _scaled(arr, factor):
    """arr * factor, in int64 when the product provably fits."""
    top = max(abs(int(arr.min())), abs(int(arr.max()))) if len(arr) else 0
    if top * factor < 2**53:
        return arr.astype(np.int64) * factor
    return arr * factor


class _Level:
    """Queries W_r(u -> v) at one level, split onto the pieces of F.

    For each query, ``lead`` and ``tail`` index partial-piece queries one
    level down and [lo, hi) is the range of whole node pairs in between.
    """

    def __init__(self, qu, qv, nodes):
        n = len(qu)
        self.n = n
        fwd = qu < qv
        active = qu != qv
        low = np.where(fwd, qu, qv)
        high = np.where(fwd, qv, qu)
        i_lo = np.searchsorted(nodes, low, side="right")
        i_hi = np.searchsorted(nodes, high, side="left")
        interior = active & (i_hi > i_lo)
        self.active = np.flatnonzero(active)
        self.interior = np.flatnonzero(interior)
        self.backward = ~fwd[self.interior]
        self.lo = i_lo[self.interior]
        self.hi = i_hi[self.interior] - 1
        # lead partial: the whole query when no node lies inside, else up to the first node
        lead_end = qv.copy()
        ii = self.interior
        lead_end[ii] = np.where(fwd[ii], nodes[i_lo[ii]], nodes[i_hi[ii] - 1])
        self.lead_u = qu[self.active]
        self.lead_v = lead_end[self.active]
        self.tail_u = np.where(fwd[ii], nodes[i_hi[ii] - 1], nodes[i_lo[ii]])
        self.tail_v = qv[ii]
        # position of each interior query among the active ones (for the lead table)
        pos = np.full(n, -1, dtype=np.int64)
        pos[self.active] = np.arange(len(self.active))
        self.interior_lead = pos[self.interior]


class IterateWalk:
    """Precomputed query structure for the walk of F^N over the whole domain."""

    def __init__(self, f, power):
        if power < 1:
            raise DomainError("power must be at least 1")
        lat = f if isinstance(f, LatticeMap) else LatticeMap.from_plmap(f)
        if lat.xs[0] != 0 or lat.xs[-1] != lat.den:
            raise DomainError("need a self-map of [0,1]")
        self.lat = lat
        self.power = power
        xs, ys = lat.xs, lat.ys
        m = len(xs)
        self.m = m
        self.levels = {}
        scale = 1
        qu = np.concatenate([ys[:-1], ys[1:]])
        qv = np.concatenate([ys[1:], ys[:-1]])
        for r in range(power - 1, 0, -1):
            nodes = _compact(xs * scale)
            level = _Level(_compact(qu), _compact(qv), nodes)
            self.levels[r] = level
            ends = np.concatenate([level.lead_u, level.lead_v, level.tail_u, level.tail_v])
            imgs, new_scale = lat.values_at(ends, scale)
            na, nt = len(level.lead_u), len(level.tail_u)
            lu, lv = imgs[:na], imgs[na:2 * na]
            tu, tv = imgs[2 * na:2 * na + nt], imgs[2 * na + nt:]
            ys_f = _scaled(ys, new_scale)
            qu = np.concatenate([ys_f[:-1], ys_f[1:], lu, tu])
            qv = np.concatenate([ys_f[1:], ys_f[:-1], lv, tv])
            scale = new_scale
        self.base_den = lat.den * scale
        self.base_u = _compact(qu)
        self.base_v = _compact(qv)
        self._start = None

    @property
    def start_value(self):
        """F^N(0) as an mpq; the walk starts there."""
        if self._start is None:
            pts = np.array([0], dtype=object)
            scale = 1
            for _ in range(self.power):
                pts, scale = self.lat.values_at(pts, scale)
            self._start = mpq(int(pts[0]), self.lat.den * scale)
        return self._start

    def _labels(self, scale, num):
        den = np.full(len(num), self.base_den, dtype=num.dtype)
        return scale.labels(num, den)

    def top_tables(self, scale):
        """Walk tables of F^N over each piece of F, in order, for one LevelScale."""
        below = walk.SEGMENT[self._labels(scale, self.base_u), self._labels(scale, self.base_v)]
        pairs = self.m - 1
        for r in range(1, self.power):
            level = self.levels[r]
            fwd, bwd = below[:pairs], below[pairs:2 * pairs]
            rest = below[2 * pairs:]
            na = len(level.lead_u)
            lead, tail = rest[:na], rest[na:]
            out = np.zeros(level.n, dtype=np.uint8)
            out[level.active] = lead
            ii = level.interior
            if len(ii):
                mids = np.empty(len(ii), dtype=np.uint8)
                back = level.backward
                if (~back).any():
                    mids[~back] = walk.BlockProducts(fwd).query(level.lo[~back], level.hi[~back])
                if back.any():
                    mids[back] = walk.BlockProducts(bwd).query(level.lo[back], level.hi[back], backward=True)
                out[ii] = walk.then(walk.then(lead[level.interior_lead], mids), tail)
            below = out
        return below[:pairs]

    def _start_state(self, scale):
        v = self.start_value
        return walk.start_state(int(scale.labels(*walk.to_num_den([v]))[0]))

    def fails(self, a, b, delta):
        """Exact: True when F^N is not delta-crooked between levels a and b."""
        a, b, delta = as_rational(a), as_rational(b), as_rational(delta)
        if a == b or abs(a - b) < 2 * delta:
            return False
        scale = walk.LevelScale(min(a, b), max(a, b), delta)
        top = self.top_tables(scale)
        return walk.apply(walk.reduce_tables(top), self._start_state(scale)) == walk.FAIL

    def failing_window(self, a, b, delta):
        """Nodes (u, v) of F bounding a shortest run of F-pieces whose F^N path fails."""
        a, b, delta = as_rational(a), as_rational(b), as_rational(delta)
        scale = walk.LevelScale(min(a, b), max(a, b), delta)
        top = self.top_tables(scale)
        prefix = _prefix_states(top, self._start_state(scale))
        hits = np.flatnonzero(prefix == walk.FAIL)
        if len(hits) == 0:
            return None
        end = int(hits[0])
        starts = walk._START[self._labels_nodes(scale)]
        acc = walk.IDENTITY
        for s in range(end, -1, -1):
            acc = int(walk.MUL[top[s], acc])
            if walk.apply(acc, starts[s]) == walk.FAIL:
                d = self.lat.den
                return mpq(int(self.lat.xs[s]), d), mpq(int(self.lat.xs[end + 1]), d)
        raise AssertionError("failing prefix without a failing window")

    def _labels_nodes(self, scale):
        pts, sc = self.lat.xs.astype(object), 1
        for _ in range(self.power):
            pts, sc = self.lat.values_at(pts, sc)
        num = _compact(pts)
        return scale.labels(num, np.full(len(num), self.lat.den * sc, dtype=num.dtype))

    def materialize_window(self, u, v, piece_budget=None):
        """Exact F^N on [u, v] as a lattice map with domain [u, v].

        Only the parts of F that the window's orbit visits are used.
        """
        return materialize_window(self.lat, self.power, u, v, piece_budget)


def materialize_window(lat, power, u, v, piece_budget=None):
    g = lattice_restrict(lat, as_rational(u), as_rational(v))
    for _ in range(power - 1):
        lo, hi = mpq(int(g.ys.min()), g.den), mpq(int(g.ys.max()), g.den)
        g = compose_lattice(lattice_restrict(lat, lo, hi), g, piece_budget)
    return g


def lattice_window(lat, a, b):
    """PLMap of a lattice map restricted to [a, b]."""
    a, b = as_rational(a), as_rational(b)
    d = lat.den
    i = int(np.searchsorted(lat.xs, int((a * d).__ceil__()), side="left"))
    j = int(np.searchsorted(lat.xs, int((b * d).__floor__()), side="right"))
    xs = [mpq(int(x), d) for x in lat.xs[i:j]]
    ys = [mpq(int(y), d) for y in lat.ys[i:j]]
    ends = []
    for p in (a, b):
        num = np.array([int(p.numerator)], dtype=object)
        val, sc = lat.values_at(num * d, int(p.denominator))
        ends.append(mpq(int(val[0]), d * sc))
    if not xs or xs[0] != a:
        xs.insert(0, a)
        ys.insert(0, ends[0])
    if xs[-1] != b:
        xs.append(b)
        ys.append(ends[1])
    return PLMap(xs, ys, codomain=(ZERO, ONE))


def _prefix_states(tables, start):
    """State after each table id, starting from ``start``."""
    out = np.empty(len(tables), dtype=np.uint8)
    state = start
    for i, t in enumerate(tables):
        state = walk.TABLES[t, state]
        out[i] = state
        if state == walk.FAIL:
            out[i:] = walk.FAIL
            break
    return out
