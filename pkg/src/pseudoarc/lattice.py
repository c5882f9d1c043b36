"""Piecewise-linear maps on a common-denominator integer lattice.

Node i of a :class:`LatticeMap` is ``(xs[i] / den, ys[i] / den)`` with one
shared positive integer ``den``.  Node arrays are numpy arrays of Python
ints (object dtype), so nothing overflows, and every bulk operation is a
vectorised array expression instead of a per-node loop over ``mpq``
objects.  This is what makes maps with millions of pieces tractable.
"""

from functools import reduce
from math import gcd, lcm

import numpy as np

from .errors import CompositionError, DomainError, ResourceError
from .rational import mpq


def _obj(values):
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(v) for v in values]
    return arr


def _top(arr):
    return max(abs(int(arr.min())), abs(int(arr.max()))) if len(arr) else 0


def _mul(arr, k):
    """arr * k, in int64 when the product provably fits."""
    if abs(k) < 2**62 and _top(arr) * abs(k) < 2**62:
        return arr.astype(np.int64) * k
    return arr.astype(object) * k


def _as_obj(arr):
    return arr if arr.dtype == object else arr.astype(object)


def _gcd_all(*arrays):
    g = 0
    for a in arrays:
        if len(a):
            g = gcd(g, int(np.gcd.reduce(a)))
        if g == 1:
            return 1
    return g


class LatticeMap:
    __slots__ = ("xs", "ys", "den", "_memo")

    def __init__(self, xs, ys, den):
        self.xs = xs
        self.ys = ys
        self.den = int(den)
        self._memo = None

    @classmethod
    def from_plmap(cls, f):
        den = reduce(lcm, (int(v.denominator) for v in f.xs + f.ys), 1)
        xs = _obj([v.numerator * (den // v.denominator) for v in f.xs])
        ys = _obj([v.numerator * (den // v.denominator) for v in f.ys])
        return cls(xs, ys, den)

    def to_plmap(self, codomain=None):
        from .exactmap import PLMap

        d = self.den
        return PLMap._trusted([mpq(int(x), d) for x in self.xs], [mpq(int(y), d) for y in self.ys], codomain)

    @property
    def pieces(self):
        return len(self.xs) - 1

    def reduced(self):
        """Divide out any factor shared by every coordinate and the denominator."""
        g = gcd(_gcd_all(self.xs, self.ys), self.den)
        if g <= 1:
            return self
        if g >= 2**62:
            return LatticeMap(_as_obj(self.xs) // g, _as_obj(self.ys) // g, self.den // g)
        return LatticeMap(self.xs // g, self.ys // g, self.den // g)

    def slopes(self):
        """Per-piece slopes as reduced (numerator, denominator) object arrays."""
        dy = self.ys[1:] - self.ys[:-1]
        dx = self.xs[1:] - self.xs[:-1]
        g = np.gcd(dy, dx)
        return dy // g, dx // g

    def values_at(self, points, scale):
        """Exact f(p / (den*scale)) for integer numerators ``points``.

        Returns ``(numerators, out_scale)``: values are
        ``numerators / (den * out_scale)``.
        """
        points = np.asarray(points)
        if points.dtype.kind != "i":
            points = points.astype(object)
        lo, hi = int(self.xs[0]) * scale, int(self.xs[-1]) * scale
        if len(points) and (int(points.min()) < lo or int(points.max()) > hi):
            raise DomainError("evaluation point outside the domain")
        common, mult, fast = self._eval_data()
        out_scale = scale * common
        if fast is not None:
            xs64, ys64, mult64, top, mtop = fast
            # every term below stays under 2**62
            if top * out_scale + mtop * 2 * top * scale < 2**62:
                xs_scaled = xs64 * scale
                pts = points.astype(np.int64)
                idx = np.clip(np.searchsorted(xs_scaled, pts, side="right") - 1, 0, len(xs64) - 2)
                num = ys64[idx] * out_scale + mult64[idx] * (pts - xs_scaled[idx])
                return (num if points.dtype != object else num.astype(object)), out_scale
        xs_scaled = self.xs * scale
        idx = np.searchsorted(xs_scaled, points, side="right") - 1
        idx = np.clip(idx, 0, len(self.xs) - 2)
        num = self.ys[idx] * out_scale + mult[idx] * (points - xs_scaled[idx])
        return num, out_scale

    def _eval_data(self):
        # slope data for values_at, with int64 copies when the nodes are small
        if self._memo is None:
            sn, sd = self.slopes()
            common = reduce(lcm, (int(v) for v in np.unique(sd)), 1)
            mult = sn * (common // sd)
            top = max(abs(int(self.xs.min())), abs(int(self.xs.max())),
                      abs(int(self.ys.min())), abs(int(self.ys.max())))
            mtop = max(abs(int(mult.min())), abs(int(mult.max())))
            fast = None
            if top < 2**62 and mtop < 2**62:
                fast = (self.xs.astype(np.int64), self.ys.astype(np.int64), mult.astype(np.int64), top, mtop)
            self._memo = (common, mult, fast)
        return self._memo

    def float_arrays(self):
        """Node coordinates as doubles (correctly rounded quotients)."""
        d = self.den
        return (np.array([x / d for x in self.xs], dtype=float),
                np.array([y / d for y in self.ys], dtype=float))

    def eval_float(self, x):
        fx, fy = self.float_arrays()
        return np.interp(x, fx, fy)

    def endpoint_values(self):
        return mpq(int(self.ys[0]), self.den), mpq(int(self.ys[-1]), self.den)


def compose_small(g, inner, piece_budget=None):
    """Exact g o inner for a small PLMap g and a LatticeMap inner."""
    gl = LatticeMap.from_plmap(g)
    lo, hi = min(inner.ys), max(inner.ys)
    if lo * gl.den < gl.xs[0] * inner.den or hi * gl.den > gl.xs[-1] * inner.den:
        raise CompositionError("range of the inner map is not inside the domain of the outer map")
    sn, sd = inner.slopes()
    a, b = inner.ys[:-1] * gl.den, inner.ys[1:] * gl.den
    # interior nodes of g whose level is crossed strictly inside a piece
    hits, gnodes = [], []
    for j in range(1, len(gl.xs) - 1):
        t = gl.xs[j] * inner.den
        hit = np.flatnonzero(((a < t) & (t < b)) | ((b < t) & (t < a)))
        hits.append(hit)
        gnodes.append(np.full(len(hit), j, dtype=np.int64))
    pieces = np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)
    gnode = np.concatenate(gnodes) if gnodes else np.zeros(0, dtype=np.int64)
    total = inner.pieces + len(pieces)
    if piece_budget is not None and total > piece_budget:
        raise ResourceError(f"composition has at least {total} pieces, budget {piece_budget}", pieces=total)
    # crossing x = x0 + (gx - y0) * sd / sn on a lattice fine enough to hold it
    qs = reduce(lcm, (int(v) for v in np.unique(np.abs(sn[pieces]))), 1) if len(pieces) else 1
    cross_den = lcm(inner.den, gl.den) * qs
    fi, fg = cross_den // inner.den, cross_den // gl.den
    rise = gl.xs[gnode] * fg - inner.ys[pieces] * fi
    step = rise * sd[pieces]
    if (step % sn[pieces] != 0).any():
        raise AssertionError("crossing point off the lattice")
    cross_x = inner.xs[pieces] * fi + step // sn[pieces]
    node_num, node_scale = _eval_small(gl, inner.ys, inner.den)
    val_den = gl.den * node_scale
    out_den = lcm(cross_den, val_den)
    xs = np.concatenate([inner.xs * (out_den // inner.den), cross_x * (out_den // cross_den)])
    ys = np.concatenate([node_num * (out_den // val_den), gl.ys[gnode] * (out_den // gl.den)])
    # order by piece; the piece's start node first, then crossings along the piece
    n_nodes = len(inner.xs)
    rising = inner.ys[1:] > inner.ys[:-1]
    rank = np.where(rising[pieces].astype(bool), gnode, -gnode) if len(pieces) else gnode
    key_piece = np.concatenate([np.arange(n_nodes, dtype=np.int64), pieces.astype(np.int64)])
    key_rank = np.concatenate([np.full(n_nodes, -(1 << 40), dtype=np.int64), rank.astype(np.int64)])
    order = np.lexsort((key_rank, key_piece))
    return canonical(LatticeMap(xs[order], ys[order], out_den)).reduced()


def compose_lattice(outer, inner, piece_budget=None):
    """Exact outer o inner for two lattice maps, vectorised over inner pieces.

    The values of ``inner`` must lie in the domain of ``outer``.
    """
    d = lcm(outer.den, inner.den)
    fo, fi = d // outer.den, d // inner.den
    ox = _mul(outer.xs, fo)
    iys = _mul(inner.ys, fi)
    y0, y1 = iys[:-1], iys[1:]
    if iys.min() < ox[0] or iys.max() > ox[-1]:
        raise CompositionError("range of the inner map is not inside the domain of the outer map")
    rising = (y1 > y0).astype(bool)
    low = np.where(rising, y0, y1)
    high = np.where(rising, y1, y0)
    i_lo = np.searchsorted(ox, low, side="right")
    i_hi = np.searchsorted(ox, high, side="left")
    del low, high
    counts = np.maximum(i_hi - i_lo, 0).astype(np.int64)
    total = inner.pieces + int(counts.sum())
    if piece_budget is not None and total > piece_budget:
        raise ResourceError(f"composition has at least {total} pieces, budget {piece_budget}", pieces=total)
    piece = np.repeat(np.arange(inner.pieces), counts)
    offs = np.arange(len(piece)) - np.repeat(np.cumsum(counts) - counts, counts)
    # crossings in the direction of travel along each piece
    node = np.where(rising[piece], i_lo[piece] + offs, i_hi[piece] - 1 - offs)
    del i_lo, i_hi
    sn, sd = inner.slopes()
    hit_sn = np.abs(sn[piece]) if len(piece) else sn[:0]
    qs = reduce(lcm, (int(v) for v in np.unique(hit_sn)), 1) if len(piece) else 1
    cross_den = d * qs
    # x = x0 + (X - y0) / slope on the lattice cross_den
    wide = 2 * max(_top(ox), _top(iys)) * qs * _top(sd) < 2**62 and _top(sn) < 2**62
    if wide:
        sd, sn = sd.astype(np.int64), sn.astype(np.int64)
    else:
        ox, y0 = _as_obj(ox), _as_obj(y0)
    step = (ox[node] - y0[piece]) * qs * sd[piece]
    if len(piece) and (step % sn[piece] != 0).any():
        raise AssertionError("crossing point off the lattice")
    step = step // sn[piece] if len(piece) else step
    cross_x = _mul(inner.xs[piece], fi * qs)
    if _top(cross_x) + _top(step) >= 2**62:
        cross_x = _as_obj(cross_x)
    cross_x = cross_x + step
    del step, ox, iys, y0, y1
    node_num, node_scale = outer.values_at(_mul(inner.ys, fi), fo)
    val_den = outer.den * node_scale
    out_den = lcm(cross_den, val_den, outer.den)
    xs = np.concatenate([_mul(inner.xs, out_den // inner.den), _mul(cross_x, out_den // cross_den)])
    del cross_x
    ys = np.concatenate([_mul(node_num, out_den // val_den), _mul(outer.ys[node], out_den // outer.den)])
    del node_num
    key_piece = np.concatenate([np.arange(len(inner.xs), dtype=np.int64), piece.astype(np.int64)])
    key_rank = np.concatenate([np.full(len(inner.xs), -1, dtype=np.int64), offs.astype(np.int64)])
    order = np.lexsort((key_rank, key_piece))
    g = canonical(LatticeMap(xs[order], ys[order], out_den)).reduced()
    return LatticeMap(_as_obj(g.xs), _as_obj(g.ys), g.den)
    return canonical(LatticeMap(xs[order], ys[order], out_den)).reduced()


def lattice_restrict(f, a, b):
    """f on [a, b] as a lattice map (a, b exact rationals inside the domain)."""
    d = f.den
    an, ad = int(a.numerator), int(a.denominator)
    bn, bd = int(b.numerator), int(b.denominator)
    i = int(np.searchsorted(f.xs, -((-an * d) // ad), side="left"))
    j = int(np.searchsorted(f.xs, (bn * d) // bd, side="right"))
    m = lcm(ad, bd)
    ends, scale = f.values_at(np.array([an * (m // ad) * d, bn * (m // bd) * d], dtype=object), m)
    out_den = d * scale
    xs = list(f.xs[i:j] * scale)
    ys = list(f.ys[i:j] * scale)
    ax, bx = an * (scale // ad) * d, bn * (scale // bd) * d
    if not xs or xs[0] != ax:
        xs.insert(0, ax)
        ys.insert(0, ends[0])
    if xs[-1] != bx:
        xs.append(bx)
        ys.append(ends[1])
    return LatticeMap(_obj(xs), _obj(ys), out_den).reduced()


class LatticeView:
    """Read-only PLMap-like access to a lattice map: xs[i], ys[i] as mpq."""

    class _Seq:
        def __init__(self, arr, den):
            self.arr, self.den = arr, den

        def __getitem__(self, i):
            return mpq(int(self.arr[i]), self.den)

        def __len__(self):
            return len(self.arr)

    def __init__(self, lat):
        self.lat = lat
        self.xs = self._Seq(lat.xs, lat.den)
        self.ys = self._Seq(lat.ys, lat.den)
        self.domain = (self.xs[0], self.xs[-1])

    def __call__(self, x):
        x = mpq(x)
        num, sc = self.lat.values_at(np.array([int(x.numerator) * self.lat.den], dtype=object),
                                     int(x.denominator))
        return mpq(int(num[0]), self.lat.den * sc)


def _eval_small(gl, points, pden):
    """Values of gl at points/pden, as (num, scale) over gl.den*scale."""
    m = pden // gcd(pden, gl.den)
    return gl.values_at(points * (gl.den * m // pden), m)


def canonical(f):
    """Drop interior nodes where the slope does not change."""
    if len(f.xs) <= 2:
        return f
    dx = f.xs[1:] - f.xs[:-1]
    dy = f.ys[1:] - f.ys[:-1]
    if (dx <= 0).any():
        raise DomainError("node x-coordinates must be strictly increasing")
    if dx.dtype == object or dy.dtype == object:
        same = (dy[:-1] * dx[1:] == dy[1:] * dx[:-1]).astype(bool)
    else:
        # compare reduced slopes; cross products could overflow int64
        g = np.gcd(dy, dx)
        dy, dx = dy // g, dx // g
        same = (dy[:-1] == dy[1:]) & (dx[:-1] == dx[1:])
    keep = np.concatenate([[True], ~same, [True]])
    return LatticeMap(f.xs[keep], f.ys[keep], f.den)


def sup_distance_small(big, g):
    """Exact sup |big - g| for a lattice map and a small PLMap on the same domain.

    The difference is linear between consecutive points of the union of
    both node sets, so the maximum sits at one of them.
    """
    gl = LatticeMap.from_plmap(g)
    den = lcm(big.den, gl.den)
    pts = np.concatenate([big.xs * (den // big.den), gl.xs * (den // gl.den)])
    pts = np.unique(pts)
    fv, fs = big.values_at(pts, den // big.den)
    gv, gs = gl.values_at(pts, den // gl.den)
    a_den, b_den = big.den * fs, gl.den * gs
    c = lcm(a_den, b_den)
    diff = np.abs(fv * (c // a_den) - gv * (c // b_den))
    return mpq(int(diff.max()), c)


class _RangeTable:
    """Sparse min/max table over node values for O(1) range queries."""

    def __init__(self, values):
        self.mins = [values]
        self.maxs = [values]
        width = 1
        while 2 * width <= len(values):
            lo, hi = self.mins[-1], self.maxs[-1]
            self.mins.append(np.minimum(lo[:-width], lo[width:]))
            self.maxs.append(np.maximum(hi[:-width], hi[width:]))
            width *= 2

    def query(self, i, j):
        """min and max over index ranges [i, j); every range must be nonempty."""
        length = j - i
        level = np.floor(np.log2(length)).astype(np.int64)
        # guard against float rounding at exact powers of two
        level = np.where((1 << (level + 1)) <= length, level + 1, level)
        level = np.where((1 << level) > length, level - 1, level)
        lo = np.empty(len(i), dtype=object)
        hi = np.empty(len(i), dtype=object)
        for lev in np.unique(level):
            sel = level == lev
            w = 1 << int(lev)
            a, b = i[sel], j[sel] - w
            lo[sel] = np.minimum(self.mins[lev][a], self.mins[lev][b])
            hi[sel] = np.maximum(self.maxs[lev][a], self.maxs[lev][b])
        return lo, hi


def interval_images(f, lo, hi, scale, table=None):
    """Exact images [min, max] of f over [lo_i, hi_i] / (den*scale).

    Returns ``(img_lo, img_hi, out_scale)`` on the lattice den*out_scale.
    """
    table = table or _RangeTable(f.ys)
    flo, out_scale = f.values_at(lo, scale)
    fhi, _ = f.values_at(hi, scale)
    img_lo = np.minimum(flo, fhi)
    img_hi = np.maximum(flo, fhi)
    xs_scaled = f.xs * scale
    i = np.searchsorted(xs_scaled, lo, side="right")
    j = np.searchsorted(xs_scaled, hi, side="left")
    inner = np.flatnonzero(j > i)
    if len(inner):
        nlo, nhi = table.query(i[inner], j[inner])
        img_lo[inner] = np.minimum(img_lo[inner], nlo * out_scale)
        img_hi[inner] = np.maximum(img_hi[inner], nhi * out_scale)
    return img_lo, img_hi, out_scale
