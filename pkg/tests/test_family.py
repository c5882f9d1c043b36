import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudoarc.crookedgen import CrookednessReport, lambda_nk, sigma
from pseudoarc.errors import DomainError, ResourceError, UnsupportedError
from pseudoarc.exactmap import (
    PLMap,
    compose,
    identity,
    image_of_interval,
    is_admissible,
    is_measure_preserving,
    iterate,
    markov_analysis,
    sup_distance,
    tent_map,
)
from pseudoarc.family import (
    CrookifyBudgets,
    PerturbationSchedule,
    check_iterate_grid,
    covering_time,
    crookify_step,
    f_tilde,
    g_tilde,
    lambda_deviation_constant,
    lipschitz,
    lipschitz_sweep,
    make_admissible,
    reverify,
    smallest_k,
)
from pseudoarc.rational import HALF, ONE, ZERO, mpq

TS = [ZERO, mpq(1, 4), HALF, mpq(3, 4), ONE]


class TestFTilde:
    @pytest.mark.parametrize("t", TS)
    def test_measure_preserving(self, t):
        assert is_measure_preserving(f_tilde(t)).verdict

    @pytest.mark.parametrize("t", TS)
    def test_slopes(self, t):
        assert {abs(s) for s in f_tilde(t).slopes()} == {mpq(7), mpq(21, 2)}

    @pytest.mark.parametrize("t", TS)
    def test_anchors(self, t):
        f = f_tilde(t)
        assert f(ZERO) == t
        assert f(mpq(2, 7)) == 0 and f(mpq(3, 7)) == 1 and f(ONE) == 0
        assert f(mpq(17, 21)) == 0 and f(mpq(19, 21)) == 1

    def test_piece_counts(self):
        assert [f_tilde(t).pieces for t in TS] == [8, 11, 11, 11, 9]

    def test_endpoints_of_family(self):
        assert f_tilde(0)(ZERO) == 0
        assert f_tilde(1)(ZERO) == 1

    @pytest.mark.parametrize("t", TS)
    def test_admissible(self, t):
        assert is_admissible(f_tilde(t))

    def test_outside(self):
        with pytest.raises(DomainError):
            f_tilde(mpq(5, 4))

    def test_lipschitz(self):
        assert lipschitz(f_tilde(HALF)) == mpq(21, 2)

    def test_sweep(self):
        assert lipschitz_sweep(mpq(1, 64)) == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 63), st.integers(1, 64))
    def test_sweep_bound_by_sampling(self, i, j):
        # |f~_s(x) - f~_t(x)| <= |s - t| on a dense rational sample
        s, t = mpq(i, 64), mpq(min(64, i + j), 64)
        fs, ft = f_tilde(s), f_tilde(t)
        xs = [mpq(m, 2940) for m in range(2941)]
        assert max(abs(fs(x) - ft(x)) for x in xs) <= t - s
        assert sup_distance(fs, ft) <= t - s


class TestCovering:
    def test_tent(self):
        assert covering_time(tent_map(), mpq(1, 4)) == 3

    def test_f_tilde(self):
        assert covering_time(f_tilde(HALF), mpq(1, 8)) == 2

    def test_upper_bound_by_brute_force(self):
        # every interval of length beta on a grid is covered within the returned time
        f = f_tilde(mpq(1, 4))
        beta = mpq(1, 8)
        n = covering_time(f, beta)
        for j in range(57):
            a, b = mpq(j, 64), mpq(j, 64) + beta
            lo, hi = a, b
            for _ in range(n):
                lo, hi = image_of_interval(f, lo, hi)
            assert (lo, hi) == (ZERO, ONE)

    def test_identity_never_covers(self):
        with pytest.raises(ResourceError) as exc:
            covering_time(identity(), mpq(1, 4), cap=5)
        assert exc.value.partial is not None

    def test_bad_beta(self):
        with pytest.raises(DomainError):
            covering_time(tent_map(), ONE)


class TestLambdaConstants:
    def test_deviation_constant(self):
        assert [lambda_deviation_constant(n) for n in (7, 9, 11)] == [
            mpq(752, 239), mpq(5776, 1393), mpq(41784, 8119)
        ]

    @pytest.mark.parametrize("n,k", [(7, 1), (7, 4), (9, 2)])
    def test_deviation_matches_sup(self, n, k):
        rho = sup_distance(lambda_nk(n, k), identity())
        assert rho * (n + k - 1) == lambda_deviation_constant(n)

    def test_smallest_k(self):
        lip = mpq(21, 2)
        eta = mpq(1, 10)
        assert [smallest_k(n, eta, lip) for n in (7, 9, 11)] == [325, 428, 531]
        for n, k in [(7, 325), (9, 428), (11, 531)]:
            c = lambda_deviation_constant(n)
            assert lip * c / (n + k - 1) < eta <= lip * c / (n + k - 2)


class TestMakeAdmissible:
    def test_already_admissible(self):
        f = f_tilde(HALF)
        assert make_admissible(f, mpq(1, 10)) is f

    def test_tent(self):
        g = make_admissible(tent_map(), mpq(1, 4))
        assert min(abs(s) for s in g.slopes()) >= 4
        assert sup_distance(g, tent_map()) < mpq(1, 4)
        assert is_measure_preserving(g).verdict
        assert markov_analysis(g).is_markov

    def test_not_markov(self):
        f = PLMap([0, mpq(1, 3), 1], [0, 1, mpq(1, 7)], codomain=(ZERO, ONE))
        with pytest.raises(UnsupportedError):
            make_admissible(f, mpq(1, 10))


class TestIterateGrid:
    def test_sigma4_fails_like_direct(self):
        from pseudoarc.crookedgen import crookedness_grid_check

        s = sigma(4)
        rep = check_iterate_grid(s, 1, mpq(1, 4), mpq(1, 16))
        assert not rep.verdict
        a, b, c, d = rep.worst_pair
        assert s(c) == a and s(d) == b
        direct = crookedness_grid_check(s, mpq(1, 4), mpq(1, 16), include_critical=False)
        assert not direct.verdict

    def test_pass_reverifies(self):
        s = sigma(5)
        rep = check_iterate_grid(s, 2, mpq(1, 4), mpq(1, 16))
        assert rep.verdict
        assert len(rep.worst_pair) == 4
        assert reverify(s, rep)

    def test_fail_reverifies(self):
        s = sigma(4)
        rep = check_iterate_grid(s, 2, mpq(1, 8), mpq(1, 32))
        assert not rep.verdict
        assert reverify(s, rep)

    def test_agrees_with_materialized_iterate(self):
        from pseudoarc.crookedgen import is_crooked_between

        s = sigma(4)
        sq = iterate(s, 2)
        rep = check_iterate_grid(s, 2, mpq(1, 8), mpq(1, 32))
        a, b = rep.worst_pair[:2]
        assert not is_crooked_between(sq, a, b, mpq(1, 8))[0]


class TestCrookify:
    def test_rejects_inadmissible(self):
        with pytest.raises(DomainError):
            crookify_step(identity(), mpq(1, 10), mpq(1, 4))

    def test_budget_exhausted(self):
        budgets = CrookifyBudgets(piece_budget=1000)
        with pytest.raises(ResourceError):
            crookify_step(f_tilde(HALF), mpq(1, 10), mpq(1, 4), budgets)


class TestGTilde:
    def test_no_stages(self):
        assert g_tilde(HALF, []) == f_tilde(HALF)

    def test_one_stage(self):
        g = g_tilde(mpq(1, 4), [(7, 1)])
        assert g.nodes == compose(f_tilde(mpq(1, 4)), lambda_nk(7, 1)).nodes
        assert is_measure_preserving(g).verdict


class TestSchedule:
    def test_round_trip(self):
        s = PerturbationSchedule([(11, 531)], [mpq(1, 10)], [mpq(1, 4)], [2])
        text = s.to_text()
        assert text == "schedule v1\nstage 11 531 1/10 1/4 2\n"
        back = PerturbationSchedule.from_text(text)
        assert back.stages == [(11, 531)] and back.etas == [mpq(1, 10)] and back.ns == [2]

    def test_bad(self):
        with pytest.raises(ValueError):
            PerturbationSchedule.from_text("nope\n")


def test_report_type():
    rep = check_iterate_grid(sigma(5), 1, mpq(3, 5), mpq(3, 20))
    assert isinstance(rep, CrookednessReport)
    assert rep.extra["power"] == 1
