"""Generator maps (sigma_n, lambda-hat, lambda_{n,k}) and crookedness checks.

A map f is delta-crooked between levels a and b when for every c, d with
f(c) = a and f(d) = b there are c' between c and d and d' between c' and d
with |f(c') - b| < delta and |f(d') - a| < delta.  The exact per-pair
decision lives in :func:`is_crooked_between`; the automaton it relies on
is documented in :mod:`pseudoarc.walk`.
"""

import random
from functools import lru_cache, reduce
from math import lcm
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import walk
from .errors import DomainError, UnsupportedError
from .lattice import LatticeMap, LatticeView, canonical, compose_small
from .exactmap import PLMap, compose, image_of_interval, join, restrict, sup_distance, transform
from .rational import HALF, ONE, ZERO, as_rational, fmt, mpq


@lru_cache(maxsize=None)
def scr(n):
    """1, 2, 5, 12, 29, 70, 169, ... with scr(n) = 2 scr(n-1) + scr(n-2)."""
    if n < 1:
        raise DomainError("scr is defined for n >= 1")
    a, b = 1, 2
    if n == 1:
        return a
    for _ in range(n - 2):
        a, b = b, 2 * b + a
    return b


def phi(g1, g2, s, m):
    """Three-branch map: a compressed g2, a reversed g1, a compressed g2.

    On [0,s] it is (m-1)/m * g2(t/s); on [s,1-s] it is
    1/m + (m-2)/m * g1((1-s-t)/(1-2s)); on [1-s,1] it is
    1/m + (m-1)/m * g2((t+s-1)/s).
    """
    s = as_rational(s)
    if not (ZERO < s < HALF) or m < 3:
        raise DomainError("need 0 < s < 1/2 and m >= 3")
    for g in (g1, g2):
        if g.domain != (ZERO, ONE) or g(ZERO) != 0 or g(ONE) != 1:
            raise DomainError("inner maps must fix 0 and 1 on [0,1]")
    m = mpq(m)
    left = transform(g2, x_scale=s, y_scale=(m - 1) / m)
    middle = transform(g1, x_scale=-(1 - 2 * s), x_shift=1 - s, y_scale=(m - 2) / m, y_shift=1 / m)
    right = transform(g2, x_scale=s, x_shift=1 - s, y_scale=(m - 1) / m, y_shift=1 / m)
    return join([left, middle, right], codomain=(ZERO, ONE))


def sigma_split(n):
    """The split point s_n = scr(n-1) / (2 scr(n-1) + scr(n-2))."""
    return mpq(scr(n - 1), 2 * scr(n - 1) + scr(n - 2))


@lru_cache(maxsize=None)
def _sigma_positive(n):
    if n <= 2:
        return PLMap.identity()
    return phi(_sigma_positive(n - 2), _sigma_positive(n - 1), sigma_split(n), n)


def sigma(n):
    """The simple n-crooked map; negative n gives the reflection 1 - sigma_|n|."""
    if n == 0:
        raise DomainError("sigma needs a nonzero index")
    f = _sigma_positive(abs(n))
    if n < 0:
        return transform(f, y_scale=-1, y_shift=1, codomain=(ZERO, ONE))
    return f


def sigma_left(n):
    """sigma_n restricted to [0, 1/2]."""
    return restrict(sigma(n), ZERO, HALF)


def sigma_right(n):
    """sigma_n restricted to [1/2, 1]."""
    return restrict(sigma(n), HALF, ONE)


def _check_nk(n, k):
    if not isinstance(n, int) or not isinstance(k, int):
        raise DomainError("n and k must be integers")
    if n < 7 or n % 2 == 0:
        raise DomainError("n must be odd and at least 7")
    if k < 1:
        raise DomainError("k must be positive")


def eta(n):
    """Width of the connecting branches of lambda-hat."""
    return mpq(scr(n - 1), 2 * (scr(n) + scr(n - 1)))


def lambda_hat(n, k):
    """The map on [0, n+k-1] built from n+k-1 shifted copies of one block.

    Each unit block [i, i+1] is sigma_n squeezed into the middle
    [i+eta, i+1-eta] and lifted by i/n, joined to its neighbours by halves
    of the reflected sigma_{n-1} scaled by (n-1)/n.
    """
    _check_nk(n, k)
    e = eta(n)
    n_q = mpq(n)
    scale = (n_q - 1) / n_q
    refl = sigma(-(n - 1))
    right_half = [(u, y) for u, y in zip(refl.xs, refl.ys) if u >= HALF]
    left_half = [(u, y) for u, y in zip(refl.xs, refl.ys) if u <= HALF]
    if right_half[0][0] != HALF:
        right_half.insert(0, (HALF, refl(HALF)))
    if left_half[-1][0] != HALF:
        left_half.append((HALF, refl(HALF)))
    core = sigma(n)
    xs, ys = [], []

    def add(x, y):
        if xs and xs[-1] == x:
            if ys[-1] != y:
                raise AssertionError("lambda-hat blocks do not join")
            return
        xs.append(x)
        ys.append(y)

    for i in range(n + k - 1):
        lift = mpq(i, n)
        for u, y in right_half:
            add(i + 2 * e * (u - HALF), scale * y + lift)
        for u, y in zip(core.xs, core.ys):
            add(i + e + (1 - 2 * e) * u, y + lift)
        for u, y in left_half:
            add(i + 1 + 2 * e * (u - HALF), scale * y + mpq(i + 1, n))
    return PLMap(xs, ys, codomain=(ZERO, mpq(2 * n + k - 2, n)))


def flip_map(margin):
    """Fold [-margin, 1+margin] onto [0,1]: -s below 0, s on [0,1], 2-s above 1."""
    c = as_rational(margin)
    return PLMap([-c, 0, 1, 1 + c], [c, 0, 1, 1 - c], codomain=(ZERO, ONE))


@lru_cache(maxsize=64)
def lambda_nk(n, k):
    """Measure-preserving self-map of [0,1] with uniform |slope| scr(n)+scr(n-1)."""
    _check_nk(n, k)
    cells = n + k - 1
    lifted = transform(
        lambda_hat(n, k),
        x_scale=mpq(1, cells),
        y_scale=mpq(n, cells),
        y_shift=-mpq(n - 1, 2 * cells),
    )
    return compose(flip_map(mpq(n - 1, 2 * cells)), lifted)


def lambda_nk_lattice(n, k):
    """lambda_{n,k} as a :class:`~pseudoarc.lattice.LatticeMap`, built blockwise.

    lambda-hat repeats one block shape on every unit cell, lifted by 1/n
    per cell, so the node arrays are one block tiled with integer offsets.
    Only the final fold at the two ends needs a general composition.
    """
    _check_nk(n, k)
    cells = n + k - 1
    block = restrict(lambda_hat(n, 1), ZERO, ONE)
    bx, by = list(block.xs), list(block.ys)
    unit = reduce(lcm, (int(v.denominator) for v in bx + [n * y for y in by]), 2)
    tx = np.array([int(x * unit) for x in bx[:-1]], dtype=object)
    ty = np.array([int(n * y * unit) for y in by[:-1]], dtype=object)
    cell = np.repeat(np.arange(cells, dtype=object), len(tx))
    xs = np.concatenate([np.tile(tx, cells) + cell * unit, np.array([cells * unit], dtype=object)])
    shift = (n - 1) // 2 * unit
    ys = np.concatenate([np.tile(ty, cells) + cell * unit - shift,
                         np.array([int(n * by[-1] * unit) + (cells - 1) * unit - shift], dtype=object)])
    lifted = canonical(LatticeMap(xs, ys, cells * unit))
    return compose_small(flip_map(mpq(n - 1, 2 * cells)), lifted)


def box_counts(f, cells):
    """Branch counts of f over the cells x cells grid of boxes.

    Entry (j, l) is slope * cells * Leb(I_j intersect f^-1(I_l)); for a map
    of uniform |slope| s whose branches cross whole rows this is the number
    of branches in the box.
    """
    slopes = {abs(s) for s in f.slopes()}
    if len(slopes) != 1:
        raise UnsupportedError("box counts need a uniform |slope|")
    (s,) = slopes
    w = mpq(1, cells)
    acc = [[ZERO] * cells for _ in range(cells)]
    for x0, x1, y0, y1 in zip(f.xs, f.xs[1:], f.ys, f.ys[1:]):
        slope = (y1 - y0) / (x1 - x0)
        j0 = int((x0 / w).__floor__())
        for j in range(j0, min(cells, int((x1 / w).__ceil__()))):
            u0, u1 = max(x0, j * w), min(x1, (j + 1) * w)
            if u1 <= u0:
                continue
            v0, v1 = y0 + slope * (u0 - x0), y0 + slope * (u1 - x0)
            lo, hi = min(v0, v1), max(v0, v1)
            for lev in range(int((lo / w).__floor__()), min(cells, int((hi / w).__ceil__()))):
                a, b = max(lo, lev * w), min(hi, (lev + 1) * w)
                if b > a:
                    acc[j][lev] += (b - a) / s
    out = np.zeros((cells, cells), dtype=np.int64)
    for j in range(cells):
        for lev in range(cells):
            v = acc[j][lev] * s * cells
            if v.denominator != 1:
                raise UnsupportedError("box count is not an integer")
            out[j, lev] = int(v)
    return out


# crookedness
@dataclass
class CrookednessReport:
    delta: object
    mode: str
    verdict: bool
    worst_pair: Optional[tuple] = None
    grid_step: Optional[object] = None
    defect_estimate: Optional[object] = None
    pairs_checked: int = 0
    extra: dict = field(default_factory=dict)

    def to_text(self):
        lines = [
            f"delta: {fmt(self.delta)}",
            f"mode: {self.mode}",
            f"verdict: {'pass' if self.verdict else 'fail'}",
            f"pairs_checked: {self.pairs_checked}",
        ]
        if self.grid_step is not None:
            lines.append(f"grid_step: {fmt(self.grid_step)}")
        if self.worst_pair is not None:
            lines.append("worst_pair: " + " ".join(fmt(v) for v in self.worst_pair))
        if self.defect_estimate is not None:
            lines.append(f"defect_estimate: {fmt(self.defect_estimate)}")
        for key, val in self.extra.items():
            lines.append(f"{key}: {val if isinstance(val, int) or not hasattr(val, 'denominator') else fmt(val)}")
        return "\n".join(lines) + "\n"


def _level_point(f, seg, level):
    """First x on segment ``seg`` of f where the value equals ``level``."""
    x0, x1, y0, y1 = f.xs[seg], f.xs[seg + 1], f.ys[seg], f.ys[seg + 1]
    if y0 == level:
        return x0
    if y1 == y0:
        raise AssertionError("level crossing on a flat segment")
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def _check_plateaus(f, levels):
    for y0, y1 in zip(f.ys, f.ys[1:]):
        if y0 == y1 and y0 in levels:
            raise UnsupportedError(f"plateau at level {fmt(y0)}")


class _ValueCache:
    """Numerator/denominator arrays of a map's node values, built once."""

    def __init__(self, f):
        if isinstance(f, LatticeMap):
            self.f = LatticeView(f)
            self.num = f.ys
            if len(f.ys) and max(abs(int(f.ys.max())), abs(int(f.ys.min())), f.den) < 2**40:
                self.num = f.ys.astype(np.int64)
            self.den = np.full(len(f.ys), f.den, dtype=self.num.dtype)
            return
        self.f = f
        self.num, self.den = walk.to_num_den(f.ys)


def _crooked_labels(cache, lo, hi, delta):
    return walk.LevelScale(lo, hi, delta).labels(cache.num, cache.den)


def _decide_pair(cache, a, b, delta):
    """Exact verdict plus a failing (c, d) with f(c)=a, f(d)=b, or None."""
    f = cache.f
    if a == b or abs(a - b) < 2 * delta:
        return True, None
    lo, hi = (a, b) if a < b else (b, a)
    found = walk.scan_walk(_crooked_labels(cache, lo, hi, delta))
    if found is None:
        return True, None
    i, j, rising = found
    first_level, second_level = (lo, hi) if rising else (hi, lo)
    p = _level_point(f, i, first_level)
    q = _level_point(f, j, second_level)
    # the run leaves first_level for the last time during segment i
    if f.ys[i + 1] == first_level:
        p = f.xs[i + 1]
    c, d = (p, q) if first_level == a else (q, p)
    return False, (c, d)


def is_crooked_between(f, a, b, delta):
    """Exact decision of delta-crookedness of f between levels a and b.

    Returns ``(verdict, witnesses)``; on failure ``witnesses`` holds one
    pair ``(c, d)`` with f(c) = a, f(d) = b admitting no valid c', d'.
    """
    a, b, delta = as_rational(a), as_rational(b), as_rational(delta)
    if delta <= 0:
        raise DomainError("delta must be positive")
    lo, hi = f.codomain
    for v in (a, b):
        if v < lo or v > hi:
            raise DomainError(f"level {fmt(v)} is outside the codomain")
    _check_plateaus(f, {a, b})
    ok, pair = _decide_pair(_ValueCache(f), a, b, delta)
    return ok, ([] if ok else [pair])


def grid_levels(lo, hi, step):
    step = as_rational(step)
    if step <= 0:
        raise DomainError("step must be positive")
    count = int(((hi - lo) / step).__floor__())
    return [lo + i * step for i in range(count + 1)]


def crookedness_grid_check(f, delta, step, max_gap=None, include_critical=True):
    """Check all level pairs on the step-grid of the codomain plus critical values.

    Only pairs with |a-b| >= 2 delta need work; closer pairs are always
    crooked.  ``max_gap`` restricts to pairs with |a-b| < max_gap.  The
    lexicographically smallest violating pair (a < b) is reported.
    """
    delta, step = as_rational(delta), as_rational(step)
    if delta <= 0:
        raise DomainError("delta must be positive")
    lo, hi = f.codomain
    levels = set(grid_levels(lo, hi, step))
    if include_critical:
        levels |= set(f.turning_values())
    levels = sorted(levels)
    plateaus = {y0 for y0, y1 in zip(f.ys, f.ys[1:]) if y0 == y1}
    bad = plateaus & set(levels)
    if bad:
        raise UnsupportedError(f"plateau at level {fmt(min(bad))}")
    cache = _ValueCache(f)
    checked = 0
    for i, a in enumerate(levels):
        for b in levels[i + 1:]:
            if max_gap is not None and b - a >= max_gap:
                break
            checked += 1
            if b - a < 2 * delta:
                continue
            ok, pair = _decide_pair(cache, a, b, delta)
            if not ok:
                return CrookednessReport(delta, "value_grid", False, (a, b) + pair, step, pairs_checked=checked)
    return CrookednessReport(delta, "value_grid", True, None, step, pairs_checked=checked)


def _pair_passes(cache, a, b, delta):
    return _decide_pair(cache, a, b, delta)[0]


def crookedness_defect_estimate(f, samples, seed, resolution=1024):
    """Smallest delta on the lattice (k/resolution)*width passing all sampled pairs.

    Pairs are all pairs of critical values plus ``samples`` random pairs of
    levels with denominator 2**20, drawn from a generator seeded by ``seed``.
    The verdict is monotone in delta, so a binary search is exact on the
    lattice.
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    lo, hi = f.codomain
    width = hi - lo
    rng = random.Random(seed)
    crit = sorted(set(f.turning_values()))
    pairs = [(a, b) for i, a in enumerate(crit) for b in crit[i + 1:]]
    for _ in range(samples):
        a = lo + width * mpq(rng.randrange(2**20 + 1), 2**20)
        b = lo + width * mpq(rng.randrange(2**20 + 1), 2**20)
        if a != b:
            pairs.append((min(a, b), max(a, b)))
    plateaus = {y0 for y0, y1 in zip(f.ys, f.ys[1:]) if y0 == y1}
    pairs = [p for p in pairs if p[0] not in plateaus and p[1] not in plateaus]
    cache = _ValueCache(f)

    def passes(k):
        d = width * mpq(k, resolution)
        return all(_pair_passes(cache, a, b, d) for a, b in pairs)

    lo_k, hi_k = 0, resolution  # invariant: hi_k passes, lo_k fails (or is 0)
    if not passes(hi_k):
        hi_k = resolution + 1
    while hi_k - lo_k > 1:
        mid = (lo_k + hi_k) // 2
        if passes(mid):
            hi_k = mid
        else:
            lo_k = mid
    return width * mpq(hi_k, resolution)


# stage checks for lambda_{n,k}
@dataclass
class MincReport:
    n: int
    k: int
    epsilon: object
    gamma: object
    rho: object
    rho_bound: object
    part_i: bool
    part_ii: CrookednessReport
    part_iii: bool
    trials: int
    iii_counts: dict
    iii_failures: list
    maxima_x: list
    maxima_spacing_ok: bool
    maxima_value_spacing_ok: bool

    @property
    def verdict(self):
        return self.part_i and self.part_ii.verdict and self.part_iii and self.maxima_spacing_ok

    def to_text(self):
        lines = [
            f"n: {self.n}",
            f"k: {self.k}",
            f"epsilon: {fmt(self.epsilon)}",
            f"gamma: {fmt(self.gamma)}",
            f"part_i_rho: {fmt(self.rho)}",
            f"part_i_bound: {fmt(self.rho_bound)}",
            f"part_i: {'pass' if self.part_i else 'fail'}",
            f"part_ii: {'pass' if self.part_ii.verdict else 'fail'}",
            f"part_ii_pairs: {self.part_ii.pairs_checked}",
            f"part_ii_grid_step: {fmt(self.part_ii.grid_step)}",
        ]
        if self.part_ii.worst_pair:
            lines.append("part_ii_worst_pair: " + " ".join(fmt(v) for v in self.part_ii.worst_pair))
        lines.append(f"part_iii: {'pass' if self.part_iii else 'fail'}")
        lines.append(f"part_iii_trials: {self.trials}")
        for key, val in sorted(self.iii_counts.items()):
            lines.append(f"part_iii_{key}: {val}")
        for fail in self.iii_failures[:10]:
            lines.append("part_iii_failure: " + " ".join(str(v) if isinstance(v, str) else fmt(v) for v in fail))
        lines.append(f"maxima_spacing: {'pass' if self.maxima_spacing_ok else 'fail'}")
        lines.append(f"maxima_value_spacing: {'pass' if self.maxima_value_spacing_ok else 'fail'}")
        lines.append(f"verdict: {'pass' if self.verdict else 'fail'}")
        return "\n".join(lines) + "\n"


def first_maxima(f, cells):
    """For each cell I_j, the smallest x in I_j where f attains its max over I_j."""
    w = mpq(1, cells)
    out = []
    for j in range(cells):
        a, b = j * w, (j + 1) * w
        _, top = image_of_interval(f, a, b)
        cand = [a] + [x for x in f.xs if a < x < b] + [b]
        out.append(next(x for x in cand if f(x) == top))
    return out


def verify_minc_updt(n, k, trials=500, seed=0, grid_divisor=3):
    """Exact checks of the three lambda_{n,k} properties used by the perturbation step.

    (i)   sup |lambda - id| < epsilon/2 + gamma;
    (ii)  3*gamma-crooked between grid levels closer than epsilon
          (grid step gamma/grid_divisor);
    (iii) on random rational intervals A: diam(lambda(A)) >= diam(A), and
          when diam(A) > gamma also diam(lambda(A)) > epsilon/2,
          A inside lambda(A), and lambda(B(A,r)) inside B(lambda(A), r+gamma).
    Also records the first-maximum locations x_j of the cells and whether
    consecutive ones (and their values) are exactly gamma apart.
    """
    _check_nk(n, k)
    lam = lambda_nk(n, k)
    cells = n + k - 1
    gamma = mpq(1, cells)
    epsilon = mpq(n - 1, cells)
    bound = epsilon / 2 + gamma
    rho = sup_distance(lam, PLMap.identity())
    part_ii = crookedness_grid_check(lam, 3 * gamma, gamma / grid_divisor, max_gap=epsilon)

    rng = random.Random(seed)
    denom = 10**6
    counts = {"diam_nondecrease": 0, "long_intervals": 0, "a_diam": 0, "b_cover": 0, "c_neighbourhood": 0}
    failures = []
    for _ in range(trials):
        u, v = sorted(rng.sample(range(denom + 1), 2))
        a, b = mpq(u, denom), mpq(v, denom)
        ilo, ihi = image_of_interval(lam, a, b)
        if ihi - ilo >= b - a:
            counts["diam_nondecrease"] += 1
        else:
            failures.append(("diam", a, b))
        if b - a <= gamma:
            continue
        counts["long_intervals"] += 1
        if ihi - ilo > epsilon / 2:
            counts["a_diam"] += 1
        else:
            failures.append(("a", a, b))
        if ilo <= a and b <= ihi:
            counts["b_cover"] += 1
        else:
            failures.append(("b", a, b))
        r = mpq(rng.randrange(1, denom), 4 * denom)
        blo, bhi = image_of_interval(lam, max(ZERO, a - r), min(ONE, b + r))
        if ilo - r - gamma < blo and bhi < ihi + r + gamma:
            counts["c_neighbourhood"] += 1
        else:
            failures.append(("c", a, b, r))

    maxima = first_maxima(lam, cells)
    top = k + (n - 1) // 2  # cells 1..top in 1-based numbering
    spacing = all(maxima[j] - maxima[j - 1] == gamma for j in range(1, top))
    value_spacing = all(lam(maxima[j]) - lam(maxima[j - 1]) == gamma for j in range(1, top))
    return MincReport(
        n, k, epsilon, gamma, rho, bound, rho < bound, part_ii, not failures, trials, counts,
        failures, maxima, spacing, value_spacing,
    )
