"""Label-walk automaton behind the exact crookedness decision.

Fix levels lo < hi and a band width delta with hi - lo >= 2*delta (closer
pairs are always crooked).  Each value v gets a label::

    0: v <= lo   1: lo < v < lo+delta   2: lo+delta <= v <= hi-delta
    3: hi-delta < v < hi               4: v >= hi

Along a path, ignore label 2 and merge repeats.  What is left is a walk on
four positions 0-1-3-4 moving one step at a time.  A map fails to be
delta-crooked between lo and hi exactly when this walk contains a straight
run 0,1,3,4 or 4,3,1,0: the path goes from one level to the other and,
once near the far level, never comes back near the start.  Only
consecutive visits to the two levels matter, because a later start and an
earlier finish shrink the window available for the required backtrack.

The automaton below recognises those runs.  Its transition on a path
segment depends only on the labels of the segment's endpoints, and
transitions compose associatively.  So the verdict for a long path, or for
a composition g o h, can be assembled from per-segment tables without
ever listing the composed path.
"""

import numpy as np

from .rational import as_rational

# doubled positions of the five labels; even entries are the walk positions
# 0,1,2,3 (labels 0,1,3,4) and 3 is the ignored middle zone
_DOUBLED = np.array([0, 2, 3, 4, 6], dtype=np.int64)

# automaton states: (position, run flag).  A run flag "up" means the
# current streak of upward steps started at position 0, "down" that the
# streak of downward steps started at position 3.
_STATES = [(0, None), (1, "up"), (1, "down"), (1, None), (2, "up"), (2, "down"), (2, None), (3, None)]
FAIL = len(_STATES)
N_STATES = FAIL + 1
_INDEX = {s: i for i, s in enumerate(_STATES)}


def _visit(state, pos):
    if state == FAIL:
        return FAIL
    cur, flag = _STATES[state]
    if pos == cur:
        return state
    if pos == cur + 1:
        flag = "up" if (cur == 0 or flag == "up") else None
        if pos == 3:
            return FAIL if flag == "up" else _INDEX[(3, None)]
        return _INDEX[(pos, flag)]
    if pos == cur - 1:
        flag = "down" if (cur == 3 or flag == "down") else None
        if pos == 0:
            return FAIL if flag == "down" else _INDEX[(0, None)]
        return _INDEX[(pos, flag)]
    # not adjacent: unreachable from consistent inputs
    return _INDEX[(pos, None)]


def _segment_table(start_label, end_label):
    p, q = int(_DOUBLED[start_label]), int(_DOUBLED[end_label])
    step = 1 if q > p else -1
    visits = [v // 2 for v in range(p + step, q + step, step) if v % 2 == 0] if p != q else []
    table = np.arange(N_STATES, dtype=np.uint8)
    for pos in visits:
        table = np.array([_visit(int(s), pos) for s in table], dtype=np.uint8)
    return table


def _compose_raw(first, second):
    return second[first]


def _monoid():
    """All transition tables generated by the segment tables, closed under composition."""
    gens = [_segment_table(i, j) for i in range(5) for j in range(5)]
    elems = [np.arange(N_STATES, dtype=np.uint8)]
    index = {elems[0].tobytes(): 0}
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                c = _compose_raw(elems[a], g)
                key = c.tobytes()
                if key not in index:
                    index[key] = len(elems)
                    elems.append(c)
                    nxt.append(index[key])
        frontier = nxt
    tables = np.stack(elems)
    size = len(elems)
    mul = np.empty((size, size), dtype=np.uint8)
    for a in range(size):
        for b in range(size):
            mul[a, b] = index[_compose_raw(tables[a], tables[b]).tobytes()]
    seg = np.array([[index[_segment_table(i, j).tobytes()] for j in range(5)] for i in range(5)], dtype=np.uint8)
    return tables, mul, seg


# Transition tables are stored as ids into the finite monoid they generate
# (62 elements), so composing two tables is one lookup in MUL.
TABLES, MUL, SEGMENT = _monoid()
IDENTITY = 0
_START = np.array([_INDEX[(0, None)], _INDEX[(1, None)], _INDEX[(1, None)], _INDEX[(2, None)], _INDEX[(3, None)]],
                  dtype=np.uint8)


def start_state(label):
    return int(_START[label])


def apply(table, state):
    """State reached from ``state`` through the table with id ``table``."""
    return int(TABLES[int(table), int(state)])


def then(first, second):
    """Id of ``first`` followed by ``second`` (elementwise over arrays)."""
    return MUL[first, second]


def reduce_tables(tables):
    """Ordered product of a sequence of table ids (first applied first)."""
    t = np.asarray(tables, dtype=np.uint8)
    if len(t) == 0:
        return IDENTITY
    while len(t) > 1:
        if len(t) % 2:
            t = np.concatenate([MUL[t[:-1:2], t[1::2]], t[-1:]])
        else:
            t = MUL[t[0::2], t[1::2]]
    return int(t[0])


class SparseProducts:
    """Range products of a sequence of table ids in O(log n) per query.

    Forward ranges [lo, hi) apply lo, ..., hi-1; backward ranges apply
    hi-1, ..., lo, for paths traversed in decreasing x.
    """

    def __init__(self, tables):
        t = np.asarray(tables, dtype=np.uint8)
        self.n = len(t)
        self.fwd = [t]
        self.bwd = [t]
        width = 1
        while 2 * width <= self.n:
            f, b = self.fwd[-1], self.bwd[-1]
            self.fwd.append(MUL[f[:-width], f[width:]])
            self.bwd.append(MUL[b[width:], b[:-width]])
            width *= 2

    def query(self, lo, hi, backward=False):
        """Vectorised products over [lo, hi) (empty ranges give the identity)."""
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        out = np.zeros(lo.shape, dtype=np.uint8)
        length = np.maximum(hi - lo, 0)
        cursor = hi.copy() if backward else lo.copy()
        levels = self.bwd if backward else self.fwd
        for level in range(len(levels) - 1, -1, -1):
            w = 1 << level
            take = (length & w) != 0
            if not take.any():
                continue
            if backward:
                cursor[take] -= w
                out[take] = MUL[out[take], levels[level][cursor[take]]]
            else:
                out[take] = MUL[out[take], levels[level][cursor[take]]]
                cursor[take] += w
        return out


class BlockProducts:
    """Range products from in-block prefixes/suffixes plus a sparse table of block totals.

    Memory is four ids per element instead of one per sparse level.
    """

    def __init__(self, tables, block=64):
        t = np.asarray(tables, dtype=np.uint8)
        self.n = n = len(t)
        self.block = b = block
        nb = max(1, -(-n // b))
        grid = np.concatenate([t, np.zeros(nb * b - n, dtype=np.uint8)]).reshape(nb, b)
        self.flat = grid.reshape(-1)
        self.pre_f = np.empty_like(grid)
        self.pre_b = np.empty_like(grid)
        self.suf_f = np.empty_like(grid)
        self.suf_b = np.empty_like(grid)
        self.pre_f[:, 0] = self.pre_b[:, 0] = grid[:, 0]
        for j in range(1, b):
            self.pre_f[:, j] = MUL[self.pre_f[:, j - 1], grid[:, j]]
            self.pre_b[:, j] = MUL[grid[:, j], self.pre_b[:, j - 1]]
        self.suf_f[:, b - 1] = self.suf_b[:, b - 1] = grid[:, b - 1]
        for j in range(b - 2, -1, -1):
            self.suf_f[:, j] = MUL[grid[:, j], self.suf_f[:, j + 1]]
            self.suf_b[:, j] = MUL[self.suf_b[:, j + 1], grid[:, j]]
        self.totals_f = SparseProducts(self.pre_f[:, b - 1])
        self.totals_b = SparseProducts(self.pre_b[:, b - 1])

    def query(self, lo, hi, backward=False):
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        b = self.block
        out = np.zeros(lo.shape, dtype=np.uint8)
        nonempty = hi > lo
        blo, bhi = lo // b, (hi - 1) // b
        same = np.flatnonzero(nonempty & (blo == bhi))
        split = np.flatnonzero(nonempty & (blo != bhi))
        if len(same):
            qlo, qhi = lo[same], hi[same]
            acc = np.zeros(len(same), dtype=np.uint8)
            for step in range(b):
                live = np.flatnonzero(qhi - qlo > step)
                if not len(live):
                    break
                pos = (qhi[live] - 1 - step) if backward else (qlo[live] + step)
                acc[live] = MUL[acc[live], self.flat[pos]]
            out[same] = acc
        if len(split):
            l, h = lo[split], hi[split] - 1
            bl, bh = blo[split], bhi[split]
            if not backward:
                first = self.suf_f[bl, l % b]
                mid = self.totals_f.query(bl + 1, bh)
                last = self.pre_f[bh, h % b]
            else:
                first = self.pre_b[bh, h % b]
                mid = self.totals_b.query(bl + 1, bh, backward=True)
                last = self.suf_b[bl, l % b]
            out[split] = MUL[MUL[first, mid], last]
        return out


class LevelScale:
    """Exact labelling of rationals against the thresholds of one level pair.

    Values are given as integer numerator and positive denominator arrays
    (int64 when products fit, Python ints in object arrays otherwise).
    """

    def __init__(self, lo, hi, delta):
        lo, hi, delta = as_rational(lo), as_rational(hi), as_rational(delta)
        if not lo < hi:
            raise ValueError("need lo < hi")
        self.lo, self.hi, self.delta = lo, hi, delta
        self.cuts = [lo, lo + delta, hi - delta, hi]

    def labels(self, num, den):
        # label = [v > lo] + [v >= lo+d] + [v > hi-d] + [v >= hi]
        lab = np.zeros(len(num), dtype=np.int8)
        if len(num) == 0:
            return lab
        if num.dtype != object:
            tmax = max(max(abs(int(c.numerator)), int(c.denominator)) for c in self.cuts)
            big = max(int(np.abs(num).max()), int(den.max()))
            if big * tmax >= 2**62:
                num, den = num.astype(object), den.astype(object)
        for cut, strict in zip(self.cuts, (True, False, True, False)):
            p, q = int(cut.numerator), int(cut.denominator)
            lhs = num * q
            rhs = den * p
            lab += (lhs > rhs) if strict else (lhs >= rhs)
        return lab


def to_num_den(values):
    """Split exact rationals into numerator/denominator arrays for labelling."""
    nums = [int(v.numerator) for v in values]
    dens = [int(v.denominator) for v in values]
    bound = max(max(abs(n) for n in nums), max(dens)) if nums else 0
    dtype = np.int64 if bound < 2**40 else object
    return np.array(nums, dtype=dtype), np.array(dens, dtype=dtype)


def scan_walk(labels):
    """Locate the first straight run in a label path.

    Returns ``(i, j, rising)`` where the run leaves its starting level during
    segment i (between nodes i and i+1) and reaches the other level during
    segment j, or None when no run exists.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) < 2:
        return None
    pos = _DOUBLED[labels]
    start, end = pos[:-1], pos[1:]
    up = end > start
    first = np.where(up, (start // 2) * 2 + 2, ((start + 1) // 2) * 2 - 2)
    cand = np.stack([np.where(up, first + 2 * k, first - 2 * k) for k in range(3)], axis=1)
    valid = np.where(up[:, None], cand <= end[:, None], cand >= end[:, None]) & (end != start)[:, None]
    seg = np.broadcast_to(np.arange(len(start))[:, None], cand.shape)
    w = cand[valid] // 2
    s = seg[valid]
    if pos[0] % 2 == 0:
        w = np.concatenate([[pos[0] // 2], w])
        s = np.concatenate([[-1], s])
    if len(w) < 4:
        return None
    keep = np.concatenate([[True], w[1:] != w[:-1]])
    w, s = w[keep], s[keep]
    if len(w) < 4:
        return None
    rise = (w[:-3] == 0) & (w[1:-2] == 1) & (w[2:-1] == 2) & (w[3:] == 3)
    fall = (w[:-3] == 3) & (w[1:-2] == 2) & (w[2:-1] == 1) & (w[3:] == 0)
    hits = np.flatnonzero(rise | fall)
    if len(hits) == 0:
        return None
    k = int(hits[0])
    return int(s[k + 1]), int(s[k + 3]), bool(rise[k])


def path_table(labels):
    """Table id of a whole label path (product of its segments)."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) < 2:
        return IDENTITY
    return reduce_tables(SEGMENT[labels[:-1], labels[1:]])
