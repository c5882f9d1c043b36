"""Truncated inverse-limit points, backward sampling and empirical measures.

A point of the inverse limit of f is a sequence (x_0, x_1, ...) with
x_i = f(x_{i+1}); we keep the first depth+1 coordinates.  Backward
sampling picks x_{i+1} among the preimages of x_i with probability
1/|f'| on each branch.  For a map preserving Lebesgue measure these
weights sum to one at every level, and every coordinate of the sampled
sequence is then uniformly distributed.
"""

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DomainError, InvariantError, ResourceError
from .exactmap import is_measure_preserving
from .rational import ONE, ZERO, as_rational, fmt

EXACT_DEPTH_CAP = 60
TABLE_BUDGET = 20_000_000


def map_id(f):
    if "hash" not in f._cache:
        f._cache["hash"] = f.content_hash()
    return f._cache["hash"]


@dataclass(frozen=True)
class BackwardOrbit:
    coords: tuple
    mode: str
    map_id: str

    @property
    def depth(self):
        return len(self.coords) - 1

    def project(self, i):
        return self.coords[i]


@dataclass
class EmpiricalMeasure:
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = pts

    @property
    def count(self):
        return len(self.points)

    @property
    def weights(self):
        return np.full(self.count, 1.0 / self.count) if self.count else np.zeros(0)

    def to_text(self):
        lines = [f"# {key}: {self.meta[key]}" for key in sorted(self.meta)]
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in self.points)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        meta, rows = {}, []
        for ln in text.splitlines():
            if not ln.strip():
                continue
            if ln.startswith("#"):
                key, _, val = ln[1:].partition(":")
                meta[key.strip()] = val.strip()
            else:
                rows.append([float(v) for v in ln.split()])
        return cls(np.array(rows, dtype=float).reshape(len(rows), -1 if rows else 1), meta)


class _BranchTable:
    """Branches above each gap between consecutive node values.

    Above an open gap the set of monotone pieces covering it is fixed, so
    preimages of any level in the gap come from the same pieces with the
    same weights 1/|slope|.  A level equal to a node value uses the gap
    above it (the gap below for the top value); pieces that only touch the
    level from below are then left out, and their preimage coincides with
    an endpoint of a counted piece.
    """

    def __init__(self, f, budget=TABLE_BUDGET):
        if f.has_jumps:
            raise DomainError("backward sampling needs a continuous map")
        if any(s == 0 for s in f.slopes()):
            raise DomainError("backward sampling needs a map without plateaus")
        self.f = f
        values = sorted(set(f.ys))
        self.values = values
        index = {v: i for i, v in enumerate(values)}
        lo = np.array([index[min(a, b)] for a, b in zip(f.ys, f.ys[1:])], dtype=np.int64)
        hi = np.array([index[max(a, b)] for a, b in zip(f.ys, f.ys[1:])], dtype=np.int64)
        spans = hi - lo
        total = int(spans.sum())
        if total > budget:
            raise ResourceError(f"branch table needs {total} entries, budget {budget}", partial=None)
        gaps = len(values) - 1
        # CSR over gaps, pieces in x order inside each gap
        piece = np.repeat(np.arange(len(lo)), spans)
        offs = np.arange(total) - np.repeat(np.cumsum(spans) - spans, spans)
        gap = np.repeat(lo, spans) + offs
        order = np.lexsort((piece, gap))
        self.piece = piece[order]
        self.gap = gap[order]
        self.start = np.searchsorted(self.gap, np.arange(gaps + 1))
        self._float = None

    def gap_of(self, y):
        g = bisect_right(self.values, y) - 1
        return min(max(g, 0), len(self.values) - 2)

    def branches(self, y):
        """Exact (x, weight) for every counted piece above level y, in x order."""
        f = self.f
        if y < self.values[0] or y > self.values[-1]:
            return []
        g = self.gap_of(y)
        out = []
        for j in self.piece[self.start[g]:self.start[g + 1]]:
            j = int(j)
            x0, x1, y0, y1 = f.xs[j], f.xs[j + 1], f.ys[j], f.ys[j + 1]
            s = (y1 - y0) / (x1 - x0)
            out.append((x0 + (y - y0) / s, 1 / abs(s)))
        return out

    def float_tables(self):
        """Flat arrays for vectorised float sampling."""
        if self._float is None:
            f = self.f
            fx, fy = f.float_arrays()
            j = self.piece
            s = (fy[j + 1] - fy[j]) / (fx[j + 1] - fx[j])
            w = 1.0 / np.abs(s)
            # key = gap + cumulative weight inside the gap, so one searchsorted finds the branch
            cum = np.cumsum(w)
            base = np.repeat(cum[self.start[:-1] - 1] * (self.start[:-1] > 0), np.diff(self.start))
            within = cum - base
            tot = np.repeat(within[self.start[1:] - 1], np.diff(self.start))
            key = self.gap + within / tot
            vals = np.array([float(v) for v in self.values])
            self._float = (vals, key, fx[j], fy[j], s)
        return self._float


def _table(f):
    if "branches" not in f._cache:
        f._cache["branches"] = _BranchTable(f)
    return f._cache["branches"]


def preimage_branches(f, y):
    """Distinct exact preimages of y with their total weights 1/|f'|.

    Branches meeting at a turning point above y merge into one preimage.
    """
    y = as_rational(y)
    merged = {}
    for x, w in _table(f).branches(y):
        merged[x] = merged.get(x, ZERO) + w
    return sorted(merged.items())


def _require_certificate(f):
    if "measure_ok" not in f._cache:
        f._cache["measure_ok"] = is_measure_preserving(f)
    cert = f._cache["measure_ok"]
    if not cert.verdict:
        raise InvariantError(f"map does not preserve Lebesgue measure near {fmt(cert.failing_value)}")


def _orbit_rng(seed, index=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), index])))


def sample_backward(f, x0, depth, seed, mode="exact", certify=True, index=0):
    """One backward orbit (x0, x1, ..., x_depth) with f(x_{i+1}) = x_i.

    In exact mode the branch weights at every level must sum to exactly 1,
    otherwise :class:`InvariantError` is raised.  ``index`` selects an
    independent stream under the same seed.
    """
    if depth < 0:
        raise DomainError("depth must be non-negative")
    if certify:
        _require_certificate(f)
    rng = _orbit_rng(seed, index)
    table = _table(f)
    if mode == "exact":
        if depth > EXACT_DEPTH_CAP:
            raise ResourceError(f"exact orbits are capped at depth {EXACT_DEPTH_CAP}", partial=None)
        coords = [as_rational(x0)]
        for _ in range(depth):
            branches = table.branches(coords[-1])
            total = sum((w for _, w in branches), ZERO)
            if total != ONE:
                raise InvariantError(f"branch weights at {fmt(coords[-1])} sum to {fmt(total)}, not 1")
            u = rng.random()
            acc = 0.0
            pick = branches[-1][0]
            for x, w in branches:
                acc += float(w)
                if u < acc:
                    pick = x
                    break
            coords.append(pick)
        return BackwardOrbit(tuple(coords), "exact", map_id(f))
    if mode == "float":
        pts = _float_backward(table, np.array([float(x0)]), depth, rng)
        return BackwardOrbit(tuple(float(v) for v in pts[0]), "float", map_id(f))
    raise DomainError(f"unknown mode {mode!r}")


def _float_backward(table, start, depth, rng):
    vals, key, x0, y0, s = table.float_tables()
    count = len(start)
    out = np.empty((count, depth + 1))
    out[:, 0] = start
    gaps = len(vals) - 1
    y = start
    for i in range(1, depth + 1):
        g = np.clip(np.searchsorted(vals, y, side="right") - 1, 0, gaps - 1)
        u = rng.random(count)
        j = np.searchsorted(key, g + u, side="right")
        j = np.minimum(j, len(key) - 1)
        x = x0[j] + (y - y0[j]) / s[j]
        y = x
        out[:, i] = x
    lo, hi = float(table.f.domain[0]), float(table.f.domain[1])
    np.clip(out, lo, hi, out=out)
    return out


def sample_mu_hat(f, depth, count, seed, m=None, certify=True):
    """``count`` float backward orbits from uniform starts, first ``m`` coordinates kept."""
    if count < 0 or depth < 0:
        raise DomainError("depth and count must be non-negative")
    m = depth + 1 if m is None else m
    if not 1 <= m <= depth + 1:
        raise DomainError("m must lie in 1..depth+1")
    if certify:
        _require_certificate(f)
    rng = _orbit_rng(seed)
    start = rng.random(count)
    if depth == 0:
        pts = start[:, None]
    else:
        pts = _float_backward(_table(f), start, depth, rng)
    meta = {"map": map_id(f), "depth": depth, "seed": seed, "count": count}
    return EmpiricalMeasure(pts[:, :m], meta)


def shift_truncated(f, orbit):
    """(f(x0), x0, ..., x_{d-1}): the shift on the inverse limit, depth kept."""
    if orbit.map_id != map_id(f):
        raise DomainError("orbit was generated by a different map")
    x0 = orbit.coords[0]
    head = f(x0) if orbit.mode == "exact" else float(f.eval_float(x0))
    return BackwardOrbit((head,) + orbit.coords[:-1], orbit.mode, orbit.map_id)


def shift_measure(f, mu):
    """Push an empirical measure of orbit prefixes through the shift."""
    pts = mu.points
    head = f.eval_float(pts[:, 0])[:, None]
    return EmpiricalMeasure(np.hstack([head, pts[:, :-1]]), dict(mu.meta, shifted=True))


def _testfn(testfn):
    if testfn == "id":
        return (lambda x: x), 0.5
    if testfn == "square":
        return (lambda x: x * x), 1 / 3
    if isinstance(testfn, tuple) and testfn[0] == "indicator":
        a, b = float(testfn[1]), float(testfn[2])
        return (lambda x: float(a <= x <= b)), b - a
    raise DomainError(f"unknown test function {testfn!r}")


def birkhoff_average(f, x0, steps, testfn="id", jitter=2.0**-40, seed=0):
    """Time average of testfn along the float orbit of x0, with its target under Lebesgue.

    Integer-slope maps drain the binary digits of a double in about 53
    steps, after which the float orbit sits on a spurious periodic cycle.
    A seeded uniform jitter of size ``jitter`` after each step keeps the
    orbit alive; pass ``jitter=0`` for the raw float orbit.
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    fn, target = _testfn(testfn)
    fx, fy = f.float_arrays()
    lo, hi = fx[0], fx[-1]
    rng = _orbit_rng(seed)
    noise = rng.uniform(-jitter, jitter, steps) if jitter else np.zeros(steps)
    x = float(x0)
    total = 0.0
    for i in range(steps):
        total += fn(x)
        x = float(np.interp(x, fx, fy)) + noise[i]
        x = min(max(x, lo), hi)
    return total / steps, target


def _distances(P, Q, weights=None):
    a, b = P.points, Q.points
    if a.shape[1] != b.shape[1]:
        raise DomainError("measures live in different dimensions")
    diff = a[:, None, :] - b[None, :, :]
    if weights is None:
        return np.sqrt((diff ** 2).sum(axis=2))
    return (np.abs(diff) * np.asarray(weights)).sum(axis=2)


def _matching_size(close):
    graph = csr_matrix(close.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int((match >= 0).sum())


def prokhorov_distance(P, Q, weights=None):
    """Exact Prokhorov distance between two uniform measures with equal counts.

    The distance is the least eps with a partial matching of at least
    n(1 - eps) pairs at distance <= eps; eps ranges over the pairwise
    distances and the multiples of 1/n, and feasibility is monotone, so a
    binary search over the sorted candidates finds it.  ``weights`` turns
    the Euclidean metric into the weighted l1 metric sum w_i |x_i - y_i|.
    """
    n = P.count
    if n != Q.count:
        raise DomainError("Prokhorov matching needs equal counts")
    if n == 0:
        raise DomainError("empty measures")
    dist = _distances(P, Q, weights)
    cands = np.unique(np.concatenate([dist.ravel(), np.arange(n + 1) / n]))

    def ok(eps):
        return _matching_size(dist <= eps) >= n * (1 - eps) - 1e-12

    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def truncated_metric(o1, o2):
    """sum_i 2^-i |x_i - y_i| over the kept coordinates."""
    if o1.depth != o2.depth:
        raise DomainError("orbits have different depths")
    return float(sum(abs(float(a) - float(b)) / 2**i for i, (a, b) in enumerate(zip(o1.coords, o2.coords))))
