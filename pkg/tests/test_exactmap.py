import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudoarc.crookedgen import lambda_nk, sigma
from pseudoarc.errors import CompositionError, DomainError, ResourceError, UnsupportedError
from pseudoarc.exactmap import (
    PLMap,
    compose,
    conjugate,
    evaluate,
    identity,
    image_of_interval,
    inverse,
    is_admissible,
    is_measure_preserving,
    iterate,
    lambda_equivalent,
    markov_analysis,
    measure_conjugator,
    restrict,
    sup_distance,
    tent_map,
    window_perturbation,
)
from pseudoarc.family import f_tilde
from pseudoarc.rational import ONE, ZERO, mpq

rationals01 = st.fractions(min_value=0, max_value=1, max_denominator=1000).map(mpq)


@st.composite
def pl_selfmaps(draw, max_nodes=7):
    """Random continuous PL self-maps of [0,1] on a uniform grid."""
    m = draw(st.integers(2, max_nodes))
    ys = draw(st.lists(st.integers(0, 12), min_size=m, max_size=m))
    return PLMap([mpq(i, m - 1) for i in range(m)], [mpq(y, 12) for y in ys], codomain=(ZERO, ONE))


def frac_eval(f, x):
    """Independent Fraction-based evaluation."""
    xs = [Fraction(int(v.numerator), int(v.denominator)) for v in f.xs]
    ys = [Fraction(int(v.numerator), int(v.denominator)) for v in f.ys]
    x = Fraction(int(x.numerator), int(x.denominator))
    for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    raise ValueError


class TestEvaluate:
    def test_identity(self):
        assert evaluate(identity(), mpq(1, 3)) == mpq(1, 3)

    def test_sigma5_path_nodes(self):
        s5 = sigma(5)
        assert evaluate(s5, mpq(12, 29)) == mpq(4, 5)
        assert evaluate(s5, mpq(2, 29)) == mpq(2, 5)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            evaluate(identity(), mpq(3, 2))

    @given(pl_selfmaps(), rationals01)
    def test_matches_fraction_oracle(self, f, x):
        assert f(x) == frac_eval(f, x)


class TestCompose:
    def test_identity_left(self):
        s7 = sigma(7)
        assert compose(identity(), s7) == s7

    def test_sigma3_pointwise(self):
        s3 = sigma(3)
        h = compose(s3, s3)
        rng = random.Random(0)
        for _ in range(257):
            x = mpq(rng.randint(0, 10**6), 10**6)
            assert h(x) == s3(s3(x))

    def test_piece_count_bound(self):
        s3 = sigma(3)
        h = compose(s3, s3)
        # brute force: pieces of f plus every crossing of a g-node level strictly inside a piece of f
        crossings = 0
        for y0, y1 in zip(s3.ys, s3.ys[1:]):
            lo, hi = min(y0, y1), max(y0, y1)
            crossings += sum(1 for gx in s3.xs if lo < gx < hi)
        assert h.pieces <= s3.pieces + crossings

    def test_range_mismatch(self):
        g = PLMap([0, mpq(1, 2)], [0, mpq(1, 2)])
        with pytest.raises(CompositionError):
            compose(g, identity())

    @settings(max_examples=60)
    @given(pl_selfmaps(), pl_selfmaps(), st.lists(rationals01, min_size=1, max_size=20))
    def test_pointwise_exact(self, g, f, xs):
        h = compose(g, f)
        for x in xs:
            assert h(x) == g(f(x))


class TestIterate:
    def test_zero_and_one(self):
        t = tent_map()
        assert iterate(t, 0) == identity()
        assert iterate(t, 1) == t

    def test_tent_cubed(self):
        t3 = iterate(tent_map(), 3, 10**6)
        assert t3.pieces == 8
        assert set(t3.slopes()) == {mpq(8), mpq(-8)}

    def test_budget_carries_partial(self):
        with pytest.raises(ResourceError) as exc:
            iterate(tent_map(), 10, piece_budget=100)
        assert exc.value.partial.pieces <= 100
        assert exc.value.info["reached"] == 6


class TestSupDistance:
    def test_self(self):
        s5 = sigma(5)
        assert sup_distance(s5, s5) == 0

    def test_lambda_7_5_bound(self):
        assert sup_distance(lambda_nk(7, 5), identity()) < mpq(4, 11)

    def test_sigma5_lower_bound(self):
        assert sup_distance(sigma(5), identity()) >= mpq(48, 145)

    @settings(max_examples=40)
    @given(pl_selfmaps(), pl_selfmaps(), pl_selfmaps())
    def test_metric(self, f, g, h):
        assert sup_distance(f, g) == sup_distance(g, f)
        assert (sup_distance(f, g) == 0) == (f == g)
        assert sup_distance(f, h) <= sup_distance(f, g) + sup_distance(g, h)


class TestImageOfInterval:
    def test_identity(self):
        assert image_of_interval(identity(), mpq(1, 4), mpq(1, 2)) == (mpq(1, 4), mpq(1, 2))

    def test_sigma5_first_segment(self):
        assert image_of_interval(sigma(5), ZERO, mpq(2, 29)) == (ZERO, mpq(2, 5))

    def test_lambda_7_1_expands(self):
        lam = lambda_nk(7, 1)
        rng = random.Random(1)
        for _ in range(500):
            a, b = sorted(mpq(rng.randint(0, 10**5), 10**5) for _ in range(2))
            lo, hi = image_of_interval(lam, a, b)
            assert hi - lo >= b - a

    @given(pl_selfmaps(), rationals01, rationals01, rationals01, rationals01)
    def test_monotone_in_interval(self, f, a, b, c, d):
        a, b, c, d = sorted([a, b, c, d])
        lo_in, hi_in = image_of_interval(f, b, c)
        lo_out, hi_out = image_of_interval(f, a, d)
        assert lo_out <= lo_in and hi_in <= hi_out


class TestMeasure:
    def test_identity(self):
        assert is_measure_preserving(identity()).verdict

    def test_lambda_7_1(self):
        cert = is_measure_preserving(lambda_nk(7, 1))
        assert cert.verdict
        assert all(s == 1 for _, s in cert.witnesses)

    def test_half_map_not_surjective(self):
        half = PLMap([0, 1], [0, mpq(1, 2)], codomain=(ZERO, ONE))
        cert = is_measure_preserving(half)
        assert not cert.verdict
        assert cert.failing_value is not None

    @pytest.mark.parametrize("n", [7, 9, 11])
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_lambda_family(self, n, k):
        assert is_measure_preserving(lambda_nk(n, k)).verdict

    def test_odd_window_perturbation_keeps_certificate(self):
        t = tent_map()
        for a, b, m in [(mpq(1, 8), mpq(3, 8), 3), (mpq(0), mpq(1, 2), 5), (mpq(7, 16), mpq(5, 8), 3)]:
            assert is_measure_preserving(window_perturbation(t, a, b, m)).verdict


class TestLambdaEquivalent:
    def test_self(self):
        s = sigma(5)
        assert lambda_equivalent(s, s, mpq(1, 5), mpq(3, 4))

    def test_window_perturbation(self):
        f = f_tilde(mpq(1, 2))
        a, b = mpq(2, 7), mpq(3, 7)
        assert lambda_equivalent(f, window_perturbation(f, a, b, 3), a, b)

    def test_identity_and_tent(self):
        # both pull Lebesgue measure back to Lebesgue measure, so the pullbacks agree
        assert lambda_equivalent(identity(), tent_map(), ZERO, ONE)

    def test_different_pullbacks(self):
        assert not lambda_equivalent(identity(), tent_map(), ZERO, mpq(1, 2))

    def test_plateau_rejected(self):
        flat = PLMap([0, mpq(1, 2), 1], [0, mpq(1, 2), mpq(1, 2)])
        with pytest.raises(UnsupportedError):
            lambda_equivalent(flat, identity(), ZERO, ONE)


class TestMarkov:
    def test_tent(self):
        m = markov_analysis(tent_map())
        assert m.is_markov and m.is_leo
        assert m.transition_matrix.tolist() == [[1, 1], [1, 1]]
        assert m.min_abs_slope == 2

    def test_f_tilde_0(self):
        m = markov_analysis(f_tilde(0))
        assert m.is_markov and m.is_leo
        assert set(f_tilde(0).xs) <= set(m.partition)

    def test_identity(self):
        m = markov_analysis(identity())
        assert m.is_markov and not m.is_leo


class TestAdmissible:
    def test_identity(self):
        assert not is_admissible(identity())

    def test_f_tilde_half(self):
        assert is_admissible(f_tilde(mpq(1, 2)))

    def test_sigma7_fails_leo(self):
        s7 = sigma(7)
        assert min(abs(s) for s in s7.slopes()) == mpq(169, 7)
        assert not is_admissible(s7)


class TestConjugate:
    def test_identity(self):
        t = tent_map()
        assert conjugate(t, identity()) == t

    def test_pointwise(self):
        h = PLMap([0, mpq(1, 2), 1], [0, mpq(1, 4), 1])
        t = tent_map()
        c = conjugate(t, h)
        hinv = inverse(h)
        rng = random.Random(2)
        for _ in range(100):
            x = mpq(rng.randint(0, 1000), 1000)
            assert c(x) == h(t(hinv(x)))
        assert c.laps() == t.laps()

    def test_round_trip(self):
        h = PLMap([0, mpq(1, 3), 1], [0, mpq(1, 2), 1])
        f = f_tilde(mpq(1, 4))
        back = conjugate(conjugate(f, h), inverse(h))
        assert sup_distance(back, f) == 0

    def test_non_injective(self):
        with pytest.raises(DomainError):
            conjugate(identity(), tent_map())


class TestMeasureConjugator:
    def test_uniform(self):
        assert measure_conjugator([(ONE, ONE)]) == identity()

    def test_two_cells(self):
        h = measure_conjugator([(mpq(1, 4), 2), (ONE, mpq(2, 3))])
        assert h(mpq(1, 4)) == mpq(1, 2)
        assert h.nodes == [(0, 0), (mpq(1, 4), mpq(1, 2)), (1, 1)]

    def test_bad_mass(self):
        with pytest.raises(DomainError):
            measure_conjugator([(ONE, 2)])

    @given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 5)), min_size=1, max_size=5))
    def test_strictly_increasing(self, cells):
        widths = [mpq(w) for w, _ in cells]
        total_w = sum(widths)
        dens = [mpq(d) for _, d in cells]
        mass = sum(w / total_w * d for w, d in zip(widths, dens))
        acc, breaks = ZERO, []
        for w, d in zip(widths, dens):
            acc += w / total_w
            breaks.append((acc, d / mass))
        h = measure_conjugator(breaks)
        assert h(ZERO) == 0 and h(ONE) == 1
        assert all(s > 0 for s in h.slopes())


class TestWindowPerturbation:
    def test_m1(self):
        t = tent_map()
        assert window_perturbation(t, mpq(1, 4), mpq(3, 4), 1) is t

    def test_tent_descending_branch(self):
        t = tent_map()
        a, b = mpq(7, 16), mpq(5, 8)
        w = window_perturbation(t, a, b, 3)
        inside = restrict(w, a, b)
        width = (b - a) / 3
        # three copies; the original window has a turning point at 1/2
        assert [inside(a + j * width) for j in range(4)] == [t(a), t(b), t(a), t(b)]
        assert set(abs(s) for s in inside.slopes()) == {mpq(6)}
        assert w(a) == t(a) and w(b) == t(b)
        assert restrict(w, ZERO, a) == restrict(t, ZERO, a)

    def test_even_m_flags_jump(self):
        w = window_perturbation(identity(), mpq(1, 4), mpq(1, 2), 2)
        assert w.meta["discontinuous_at"] == mpq(1, 2)
        assert w.has_jumps


class TestSerialization:
    @given(pl_selfmaps())
    def test_round_trip(self, f):
        text = f.to_text()
        g = PLMap.from_text(text)
        assert g == f and g.to_text() == text

    def test_format(self):
        assert tent_map().to_text() == "plmap v1 0/1 1/1 0/1 1/1\n0/1 0/1\n1/2 1/1\n1/1 0/1\n"
