"""Slow, direct implementations used to cross-check the fast code paths."""

from fractions import Fraction as F


def _pieces(xs, ys):
    return list(zip(xs, xs[1:], ys, ys[1:]))


def preimages(xs, ys, level):
    out = set()
    for x0, x1, y0, y1 in _pieces(xs, ys):
        if y0 == y1:
            if y0 == level:
                raise ValueError("plateau")
            continue
        if min(y0, y1) <= level <= max(y0, y1):
            out.add(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
    return sorted(out)


def _open_hits(xs, ys, lo_x, hi_x, centre, delta, forward):
    """Open x-intervals inside (lo_x, hi_x) where |f - centre| < delta, in path order."""
    hits = []
    for x0, x1, y0, y1 in _pieces(xs, ys):
        a, b = max(x0, lo_x), min(x1, hi_x)
        if b <= a:
            continue
        fa = y0 + (y1 - y0) * (a - x0) / (x1 - x0)
        fb = y0 + (y1 - y0) * (b - x0) / (x1 - x0)
        if fa == fb:
            if abs(fa - centre) < delta:
                hits.append((a, b))
            continue
        # x where value equals centre -/+ delta
        lo_v, hi_v = centre - delta, centre + delta
        t_lo = a + (lo_v - fa) * (b - a) / (fb - fa)
        t_hi = a + (hi_v - fa) * (b - a) / (fb - fa)
        p, q = max(a, min(t_lo, t_hi)), min(b, max(t_lo, t_hi))
        if p < q:
            hits.append((p, q))
    hits.sort(reverse=not forward)
    return hits


def crooked_pair_brute(xs, ys, a, b, delta):
    """Direct check of the definition over all preimage pairs."""
    xs, ys = [F(x) for x in xs], [F(y) for y in ys]
    a, b, delta = F(a), F(b), F(delta)
    for c in preimages(xs, ys, a):
        for d in preimages(xs, ys, b):
            if c == d:
                continue
            forward = c < d
            lo_x, hi_x = min(c, d), max(c, d)
            near_b = _open_hits(xs, ys, lo_x, hi_x, b, delta, forward)
            if not near_b:
                return False
            t_star = min(p for p, q in near_b) if forward else max(q for p, q in near_b)
            lo2, hi2 = (t_star, hi_x) if forward else (lo_x, t_star)
            if not _open_hits(xs, ys, lo2, hi2, a, delta, forward):
                return False
    return True


def prokhorov_brute(a, b):
    """Smallest candidate eps with P(A) <= Q(A^eps) + eps for every subset A, both ways."""
    from itertools import combinations

    import numpy as np

    n = len(a)
    dist = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    cands = sorted(set(dist.ravel().tolist()) | {k / n for k in range(n + 1)})

    def holds(eps, d):
        for size in range(1, n + 1):
            for sub in combinations(range(n), size):
                near = np.flatnonzero((d[list(sub)] <= eps).any(axis=0))
                if size / n > len(near) / n + eps + 1e-12:
                    return False
        return True

    for eps in cands:
        if holds(eps, dist) and holds(eps, dist.T):
            return eps
    raise AssertionError("no candidate works")


def hausdorff_brute(a, b):
    import numpy as np

    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return max(d.min(axis=1).max(), d.min(axis=0).max())
