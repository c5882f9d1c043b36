"""The family f~_t, admissible approximations, covering times and crookify.

``crookify_step`` perturbs an admissible map f to F = f o lambda_{n,k} so
that some iterate of F is delta-crooked on the checked level grid while F
stays within eta of f.
"""

import logging
import time
from dataclasses import dataclass, field
from math import gcd
from typing import Optional

import numpy as np

from . import crookedgen
from .composite import IterateWalk, lattice_window, materialize_window
from .crookedgen import CrookednessReport, _decide_pair, _ValueCache, grid_levels, is_crooked_between
from .errors import DomainError, ResourceError, UnsupportedError
from .exactmap import (
    PLMap,
    compose,
    is_admissible,
    markov_analysis,
    restrict,
    sup_distance,
    window_perturbation,
)
from .lattice import LatticeMap, compose_small, interval_images, _RangeTable, sup_distance_small
from .rational import ONE, ZERO, as_rational, fmt, mpq

log = logging.getLogger(__name__)

_FIXED_TAIL = [
    (mpq(2, 7), ZERO),
    (mpq(3, 7), ONE),
    (mpq(4, 7), ZERO),
    (mpq(5, 7), ONE),
    (mpq(17, 21), ZERO),
    (mpq(19, 21), ONE),
    (ONE, ZERO),
]


def f_tilde(t):
    """The measure-preserving family member with slopes in {+-7, +-21/2}.

    On [0, 2/7] the graph runs through (0,t), (2t/21,0), (4t/21,t),
    (4t/21+(1-t)/7, 1), (2/7-2t/21, t), (2/7, 0); on [2/7, 1] it is the
    fixed zigzag through 0 and 1.  Nodes that coincide at t=0 or t=1 are
    merged.
    """
    t = as_rational(t)
    if not ZERO <= t <= ONE:
        raise DomainError("t must lie in [0, 1]")
    head = [
        (ZERO, t),
        (2 * t / 21, ZERO),
        (4 * t / 21, t),
        (4 * t / 21 + (1 - t) / 7, ONE),
        (mpq(2, 7) - 2 * t / 21, t),
    ]
    xs, ys = [], []
    for x, y in head + _FIXED_TAIL:
        if xs and xs[-1] == x:
            continue
        xs.append(x)
        ys.append(y)
    return PLMap(xs, ys, codomain=(ZERO, ONE))


def lipschitz(f):
    return max(abs(s) for s in f.slopes())


def g_tilde(t, stages, piece_budget=5_000_000):
    """f~_t o lambda_{n1,k1} o ... o lambda_{nm,km} (stages applied right to left)."""
    f = f_tilde(t)
    if not stages:
        return f
    inner = crookedgen.lambda_nk_lattice(*stages[-1])
    for n, k in reversed(stages[:-1]):
        outer = crookedgen.lambda_nk(n, k)
        inner = LatticeMap.from_plmap(compose(outer, inner.to_plmap(), piece_budget=piece_budget))
    result = compose_small(f, inner, piece_budget=piece_budget)
    return result.to_plmap((ZERO, ONE))


def make_admissible(f, epsilon):
    """Window-perturb each Markov cell with the smallest odd fold making |slope| >= 4.

    Cells whose image is at least ``epsilon`` long are bisected first, so
    the result stays within epsilon of f (the perturbed map keeps each
    cell's image).
    """
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    system = markov_analysis(f)
    if not system.is_markov:
        raise UnsupportedError("make_admissible needs a Markov map")
    if min(abs(s) for s in f.slopes()) >= 4:
        return f
    cells = []
    stack = list(zip(system.partition, system.partition[1:]))
    stack.reverse()
    while stack:
        a, b = stack.pop()
        if abs(f(b) - f(a)) >= epsilon:
            mid = (a + b) / 2
            stack.extend([(mid, b), (a, mid)])
        else:
            cells.append((a, b))
    g = f
    for a, b in cells:
        slope = abs((f(b) - f(a)) / (b - a))
        m = 1
        while m * slope < 4:
            m += 2
        if m > 1:
            g = window_perturbation(g, a, b, m)
    return g


def _candidate_grid(beta):
    """Intervals of length 3beta/4 with left ends on the beta/4 grid inside [0,1].

    Every interval of length beta contains one of them.
    """
    q = beta / 4
    lefts = []
    j = 0
    while j * q + 3 * q <= 1:
        lefts.append(j * q)
        j += 1
    if not lefts or lefts[-1] + 3 * q < 1:
        lefts.append(1 - 3 * q)
    return [(a, a + 3 * q) for a in lefts]


def covering_time(g, beta, cap=64):
    """Smallest N <= cap with g^N(J) = [0,1] for every interval J of length >= beta."""
    beta = as_rational(beta)
    if not ZERO < beta < ONE:
        raise DomainError("beta must lie in (0, 1)")
    lat = g if isinstance(g, LatticeMap) else LatticeMap.from_plmap(g)
    if lat.xs[0] != 0 or lat.xs[-1] != lat.den:
        raise DomainError("covering_time needs a map on [0,1]")
    cands = _candidate_grid(beta)
    den0 = 1
    for a, b in cands:
        den0 = den0 * int(a.denominator) // gcd(den0, int(a.denominator))
        den0 = den0 * int(b.denominator) // gcd(den0, int(b.denominator))
    scale = den0  # points live on lat.den * scale; lattice for den0 is a refinement
    lo = np.array([int(a * lat.den * scale) for a, _ in cands], dtype=object)
    hi = np.array([int(b * lat.den * scale) for _, b in cands], dtype=object)
    table = _RangeTable(lat.ys)
    alive = np.arange(len(cands))
    for step in range(1, cap + 1):
        lo, hi, scale = interval_images(lat, lo, hi, scale, table)
        full = (lo == 0) & (hi == lat.den * scale)
        alive, lo, hi = alive[~full], lo[~full], hi[~full]
        if len(alive) == 0:
            return step
        g_ = gcd(*(int(v) for v in np.concatenate([lo, hi])), scale) if len(lo) < 4096 else 1
        if g_ > 1:
            lo, hi, scale = lo // g_, hi // g_, scale // g_
    worst = int(np.argmin((hi - lo)))
    d = lat.den * scale
    a, b = cands[int(alive[worst])]
    raise ResourceError(
        f"covering not reached within {cap} steps",
        partial=(a, b),
        image=(mpq(int(lo[worst]), d), mpq(int(hi[worst]), d)),
    )


# crookify
@dataclass
class CrookifyBudgets:
    piece_budget: int = 5_000_000
    max_n: int = 15
    cover_cap: int = 16
    grid_step: Optional[object] = None  # default delta/4
    window_budget: int = 10_000_000
    max_candidates: int = 6
    walk_budget: int = 20_000_000  # entries in the deepest level of an iterate walk


@dataclass
class CrookifyResult:
    F: PLMap
    n: int
    k: int
    N: int
    report: CrookednessReport
    rho: object
    lattice: Optional[LatticeMap] = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.F, self.n, self.k, self.N, self.report))


def lambda_deviation_constant(n):
    """sup |lambda_{n,k} - id| * (n+k-1), which does not depend on k.

    lambda-hat repeats one block per unit cell, so lambda - id is periodic
    with period 1/(n+k-1) in the bulk; the end folds only move values
    closer to the identity.
    """
    block = restrict(crookedgen.lambda_hat(n, 1), ZERO, ONE)
    half = mpq(n - 1, 2)
    return max(abs(n * y - half - x) for x, y in zip(block.xs, block.ys))


def smallest_k(n, eta, lip):
    """Smallest k with lip * sup|lambda_{n,k} - id| < eta."""
    c = lambda_deviation_constant(n)
    # lip * c / cells < eta  <=>  cells > lip * c / eta
    bound = lip * c / eta
    cells = int(bound.__floor__()) + 1
    return max(1, cells - n + 1)


def _grid_pairs(delta, step):
    levels = grid_levels(ZERO, ONE, step)
    pairs = [(a, b) for i, a in enumerate(levels) for b in levels[i + 1:] if b - a >= 2 * delta]
    # widest pairs first: they fail first when anything fails
    pairs.sort(key=lambda p: (-(p[1] - p[0]), p[0]))
    return pairs


def _window_pair(F, power, u, v, a, b, delta, budget):
    """Exact (c, d) from the iterate on the F-node window [u, v], which must fail."""
    window = materialize_window(F, power, u, v, budget)
    ok, pair = _decide_pair(_ValueCache(window), a, b, delta)
    if ok:
        raise AssertionError("composite check and window check disagree")
    return pair


def check_iterate_grid(F, power, delta, step, window_budget=10_000_000, witness=True):
    """Grid crookedness check of F^power via the composite walk.

    Pairs are checked widest first and the check stops at the first
    violation.  A failing report names the violating levels and the F-node
    window holding the straight passage; with ``witness`` it also names
    exact (c, d).  A passing report names the widest pair with one exact
    passage (c, d) between its levels, found as the first straight run for
    a vanishing band.  ``extra["walk_entries"]`` is the walk's size.
    """
    lat = F if isinstance(F, LatticeMap) else LatticeMap.from_plmap(F)
    walker = IterateWalk(lat, power)
    extra = {"power": power, "walk_entries": len(walker.base_u)}
    pairs = _grid_pairs(delta, step)
    checked = 0
    failing = None
    for a, b in pairs:
        checked += 1
        if walker.fails(a, b, delta):
            failing = (a, b)
            break
    if not pairs:
        return CrookednessReport(delta, "value_grid", True, None, step, pairs_checked=0, extra=extra)
    a, b = failing or pairs[0]
    band = delta if failing else (b - a) / 2**20
    u, v = walker.failing_window(a, b, band)
    extra.update({"window_lo": u, "window_hi": v})
    # the walk is large; drop it before building the window
    del walker
    worst = (a, b)
    if witness or not failing:
        try:
            worst = (a, b) + tuple(_window_pair(lat, power, u, v, a, b, band, window_budget))
        except ResourceError:
            log.info("window for levels %s, %s is over the piece budget", a, b)
    return CrookednessReport(delta, "value_grid", failing is None, worst, step, pairs_checked=checked, extra=extra)


def reverify(F, report, window_budget=10_000_000):
    """Independent re-check of a report's worst pair with plain exact composition.

    F^power is rebuilt on the reported window by :func:`compose` (not the
    lattice code), the witnesses are checked to map to (a, b), and
    :func:`is_crooked_between` decides the pair on the window map.  A
    failing report must fail there; a passing one must pass, since
    restricting a map only removes paths.
    """
    if len(report.worst_pair) != 4:
        raise DomainError("report has no exact witnesses")
    a, b, c, d = report.worst_pair
    power = report.extra["power"]
    lo, hi = report.extra["window_lo"], report.extra["window_hi"]
    if isinstance(F, LatticeMap):
        window = lattice_window(F, lo, hi)
        outer = lambda w: lattice_window(F, min(w.ys), max(w.ys))  # noqa: E731
    else:
        window = restrict(F, lo, hi)
        outer = lambda w: F  # noqa: E731
    for _ in range(power - 1):
        window = compose(outer(window), window, piece_budget=window_budget)
    window = PLMap._trusted(window.xs, window.ys, (ZERO, ONE))
    if window(c) != a or window(d) != b:
        return False
    ok, _ = is_crooked_between(window, a, b, report.delta)
    return ok == report.verdict


def _check_powers(F_lat, N, delta, step, budgets):
    """Grid-check F^1..F^N, stopping at the first pass or when walks outgrow the budget."""
    report = None
    growth = 3
    for power in range(1, N + 1):
        size = 2 * F_lat.pieces * growth ** (power - 1)
        if power > 1 and size > budgets.walk_budget:
            log.info("power %d: walk of about %d entries is over budget", power, size)
            break
        report = check_iterate_grid(F_lat, power, delta, step, budgets.window_budget, witness=False)
        if power > 1:
            growth = max(2, report.extra["walk_entries"] / (2 * F_lat.pieces)) ** (1 / (power - 1))
        if report.verdict:
            break
    return report


def crookify_step(f, eta, delta, budgets=None):
    """Find F = f o lambda_{n,k} within eta of f with a delta-crooked iterate.

    Candidates run over odd n = 7, 9, ... with, for each n, the smallest k
    for which Lip(f) * sup|lambda_{n,k} - id| < eta; that inequality
    bounds sup|F - f| a priori, and the exact distance is checked after.
    N is the covering time of F at scale 1/(n+k-1).  For m = 1..N the grid
    check runs on F^m; a pass for some m <= N carries over to F^N because
    g o h is delta-crooked whenever g is.
    """
    budgets = budgets or CrookifyBudgets()
    eta, delta = as_rational(eta), as_rational(delta)
    if eta <= 0 or delta <= 0:
        raise DomainError("eta and delta must be positive")
    if not is_admissible(f):
        raise DomainError("crookify_step needs an admissible map")
    step = as_rational(budgets.grid_step) if budgets.grid_step is not None else delta / 4
    lip = lipschitz(f)
    best = None
    tried = 0
    n = 7
    while n <= budgets.max_n and tried < budgets.max_candidates:
        k = smallest_k(n, eta, lip)
        tried += 1
        t0 = time.monotonic()
        lam = crookedgen.lambda_nk_lattice(n, k)
        if lam.pieces > budgets.piece_budget:
            log.info("n=%d k=%d: lambda has %d pieces, over budget", n, k, lam.pieces)
            break
        try:
            F_lat = compose_small(f, lam, piece_budget=budgets.piece_budget)
        except ResourceError:
            log.info("n=%d k=%d: F over the piece budget", n, k)
            break
        del lam
        rho = sup_distance_small(F_lat, f)
        if rho >= eta:
            raise AssertionError("a priori distance bound violated")
        cells = n + k - 1
        N = covering_time(F_lat, mpq(1, cells), budgets.cover_cap)
        report = _check_powers(F_lat, N, delta, step, budgets)
        log.info("n=%d k=%d N=%d verdict=%s (%.1fs)", n, k, N, report.verdict, time.monotonic() - t0)
        report.extra.update({"n": n, "k": k, "N": N, "rho": rho})
        if report.verdict:
            F = F_lat.to_plmap((ZERO, ONE))
            return CrookifyResult(F, n, k, N, report, rho, F_lat)
        if best is None or report.pairs_checked > best[1].pairs_checked:
            best = ((n, k, N), report)
        n += 2
    raise ResourceError("crookify budgets exhausted", partial=best, candidates=tried)


# schedules
@dataclass
class PerturbationSchedule:
    stages: list
    etas: list
    deltas: list
    ns: list
    reports: dict = field(default_factory=dict)

    def to_text(self):
        lines = ["schedule v1"]
        for (n, k), e, d, N in zip(self.stages, self.etas, self.deltas, self.ns):
            lines.append(f"stage {n} {k} {fmt(e)} {fmt(d)} {N}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != ["schedule", "v1"]:
            raise ValueError("not a schedule file")
        stages, etas, deltas, ns = [], [], [], []
        for parts in lines[1:]:
            if parts[0] != "stage" or len(parts) != 6:
                raise ValueError(f"bad schedule line: {' '.join(parts)}")
            stages.append((int(parts[1]), int(parts[2])))
            etas.append(as_rational(parts[3]))
            deltas.append(as_rational(parts[4]))
            ns.append(int(parts[5]))
        return cls(stages, etas, deltas, ns)


def crookify_family(ts, eta_total, deltas, budgets=None):
    """One stage sequence applied to every sampled member of the family.

    Stage i uses budget eta_total / 2^(i+1), so the budgets sum below
    eta_total.  The stage (n, k) is found on the first sampled t and then
    checked, unchanged, for every other t; a failure there ends the
    schedule with the partial result and a diagnostic.
    """
    budgets = budgets or CrookifyBudgets()
    eta_total = as_rational(eta_total)
    ts = [as_rational(t) for t in ts]
    if not ts:
        raise DomainError("need at least one parameter")
    schedule = PerturbationSchedule([], [], [], [])
    current = {t: f_tilde(t) for t in ts}
    for i, delta in enumerate(deltas):
        delta = as_rational(delta)
        eta = eta_total / 2 ** (i + 1)
        first = crookify_step(current[ts[0]], eta, delta, budgets)
        stage_reports = {ts[0]: first.report}
        step = as_rational(budgets.grid_step) if budgets.grid_step is not None else delta / 4
        nxt = {ts[0]: first.F}
        lam = crookedgen.lambda_nk_lattice(first.n, first.k)
        for t in ts[1:]:
            F_lat = compose_small(current[t], lam, piece_budget=budgets.piece_budget)
            rho = sup_distance_small(F_lat, current[t])
            rep = _check_powers(F_lat, first.N, delta, step, budgets)
            rep.extra.update({"rho": rho})
            stage_reports[t] = rep
            if rho >= eta or not rep.verdict:
                schedule.reports[i] = stage_reports
                schedule.reports["diagnostic"] = f"stage {i}: t={fmt(t)} failed"
                return schedule
            nxt[t] = F_lat.to_plmap((ZERO, ONE))
        schedule.stages.append((first.n, first.k))
        schedule.etas.append(eta)
        schedule.deltas.append(delta)
        schedule.ns.append(first.N)
        schedule.reports[i] = stage_reports
        current = nxt
    return schedule


def lipschitz_sweep(step=mpq(1, 64)):
    """max over the t-grid of sup|f~_t - f~_{t+h}| / h for h = step."""
    step = as_rational(step)
    ts = grid_levels(ZERO, ONE, step)
    worst = ZERO
    for t0, t1 in zip(ts, ts[1:]):
        worst = max(worst, sup_distance(f_tilde(t0), f_tilde(t1)) / (t1 - t0))
    return worst
