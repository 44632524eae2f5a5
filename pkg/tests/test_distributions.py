import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisbin.distributions import (
    BernoulliVector,
    LogPmf,
    moments,
    pmf_bruteforce,
    pmf_method,
    poisson_binomial_pmf_dft,
    poisson_binomial_pmf_dp,
    poisson_log_pmf,
    poisson_log_pmf_array,
    poisson_pmf_sandwich,
    read_probabilities,
    stirling_sandwich,
)
from poisbin.errors import (
    InputError,
    ProbabilityFileError,
    SizeLimitError,
    UnderResolutionError,
)
from poisbin.precision import PrecisionPolicy, log_factorial, log_factorial_seam_error

from conftest import random_vectors

probs = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=40)


class TestBernoulliVector:
    def test_rejects_out_of_range(self):
        with pytest.raises(InputError, match=r"p\[1\]"):
            BernoulliVector((0.2, 1.5))
        with pytest.raises(InputError):
            BernoulliVector((float("nan"),))

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            BernoulliVector(())

    def test_moments(self):
        p = BernoulliVector((0.2, 0.5, 0.7))
        assert p.lam == pytest.approx(1.4)
        assert p.lam2 == pytest.approx(0.78)
        assert p.lam3 == pytest.approx(0.008 + 0.125 + 0.343)
        assert p.variance == pytest.approx(1.4 - 0.78)
        assert p.big_f == pytest.approx(1.4)
        assert p.q_quantity == pytest.approx(1.4)
        assert p.q0_quantity == 1.0

    def test_degenerate_regime_quantities(self):
        p = BernoulliVector.equal(50, 1.0)
        assert p.variance == 0.0
        assert p.big_f == 50.0
        assert p.q_quantity == 50.0
        assert p.ratio == 1.0

    def test_extended_moments_match(self):
        p = BernoulliVector((0.1, 0.25, 0.9, 0.999))
        a = moments(p)
        b = moments(p, PrecisionPolicy.high(40))
        for x, y in zip(a, b):
            assert x == pytest.approx(y, rel=1e-15)

    def test_concat(self):
        c = BernoulliVector.concat(BernoulliVector((0.1,)), BernoulliVector((0.2, 0.3)))
        assert c.p == (0.1, 0.2, 0.3)

    def test_reduced_drops_endpoints(self):
        p = BernoulliVector((1.0, 0.0, 0.4, 0.2, 1.0))
        assert p.n_ones == 2
        assert p.n_effective == 4
        np.testing.assert_array_equal(p.reduced, [0.2, 0.4])


class TestDp:
    def test_two_halves(self):
        w = poisson_binomial_pmf_dp(BernoulliVector((0.5, 0.5)))
        np.testing.assert_allclose(w.probabilities(), [0.25, 0.5, 0.25])
        assert w.method_tag == "dp"
        assert w.support_hint == "exact-finite"

    def test_ones_and_zeros_shift(self):
        w = poisson_binomial_pmf_dp(BernoulliVector((1.0, 0.0, 0.5, 1.0)))
        np.testing.assert_allclose(w.probabilities(), [0, 0, 0.5, 0.5, 0])

    def test_matches_bruteforce(self):
        for p in random_vectors(40, 12, seed=3):
            a = poisson_binomial_pmf_dp(p).probabilities()
            b = pmf_bruteforce(p).probabilities()
            assert np.max(np.abs(a - b)) <= 1e-14

    def test_extended_agrees(self):
        p = BernoulliVector((0.1, 0.35, 0.5, 0.77, 0.99))
        a = poisson_binomial_pmf_dp(p)
        b = poisson_binomial_pmf_dp(p, PrecisionPolicy.high(40))
        np.testing.assert_allclose(a.probabilities(), b.probabilities(), rtol=1e-14)
        assert b.mass_mp is not None

    def test_deep_tails_are_exact_in_log_space(self):
        # entries far below the binary64 range come from tilted recomputation
        p = BernoulliVector(tuple(np.random.default_rng(1).random(700) ** 3))
        a = poisson_binomial_pmf_dp(p)
        b = poisson_binomial_pmf_dp(p, PrecisionPolicy.high(40))
        assert b.log_mass.min() < -2000
        rel = np.abs(a.log_mass - b.log_mass) / np.maximum(1.0, np.abs(b.log_mass))
        assert rel.max() < 1e-13

    def test_extreme_corner_closed_forms(self):
        p = BernoulliVector.equal(3000, 0.3)
        w = poisson_binomial_pmf_dp(p)
        assert w.log_mass[0] == pytest.approx(3000 * math.log(0.7), rel=1e-14)
        assert w.log_mass[-1] == pytest.approx(3000 * math.log(0.3), rel=1e-14)
        mid = 1
        assert w.log_mass[mid] == pytest.approx(math.log(3000) + math.log(0.3) + 2999 * math.log(0.7), rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(probs)
    def test_is_a_distribution(self, ps):
        p = BernoulliVector(tuple(ps))
        w = poisson_binomial_pmf_dp(p).probabilities()
        assert np.all(w >= 0)
        assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
        assert np.dot(np.arange(len(w)), w) == pytest.approx(sum(ps), abs=1e-11)

    @settings(max_examples=40, deadline=None)
    @given(probs)
    def test_permutation_invariant(self, ps):
        a = poisson_binomial_pmf_dp(BernoulliVector(tuple(ps))).probabilities()
        b = poisson_binomial_pmf_dp(BernoulliVector(tuple(reversed(ps)))).probabilities()
        np.testing.assert_allclose(a, b, atol=1e-14)


class TestDft:
    def test_extra_nodes_give_zeros(self):
        w = poisson_binomial_pmf_dft(BernoulliVector((0.5, 0.5)), node_count=4)
        assert len(w) == 4
        np.testing.assert_allclose(w.probabilities(), [0.25, 0.5, 0.25, 0.0], atol=1e-15)

    def test_under_resolution(self):
        with pytest.raises(UnderResolutionError):
            poisson_binomial_pmf_dft(BernoulliVector((0.5, 0.5, 0.5)), node_count=3)

    def test_radius(self):
        w = poisson_binomial_pmf_dft(BernoulliVector((1.0, 1.0)), radius=2.0)
        np.testing.assert_allclose(w.probabilities(), [0, 0, 1], atol=1e-14)

    def test_bad_radius(self):
        with pytest.raises(InputError):
            poisson_binomial_pmf_dft(BernoulliVector((0.5,)), radius=0.0)

    def test_matches_dp_on_bulk(self):
        p = BernoulliVector(tuple(np.random.default_rng(4).random(200)))
        a = poisson_binomial_pmf_dp(p).probabilities()
        b = poisson_binomial_pmf_dft(p).probabilities()
        assert np.max(np.abs(a - b)) < 1e-14
        big = a > 1e-4
        np.testing.assert_allclose(b[big], a[big], rtol=1e-10)

    def test_extended_power_of_two(self):
        p = BernoulliVector.equal(100, 0.3)
        a = poisson_binomial_pmf_dp(p)
        b = poisson_binomial_pmf_dft(p, node_count=128, policy=PrecisionPolicy.high(80))
        ok = a.log_mass > math.log(1e-60)
        np.testing.assert_allclose(b.log_mass[:101][ok], a.log_mass[ok], rtol=1e-12)


def test_pmf_method_dispatch():
    p = BernoulliVector.equal(30, 0.4)
    ref = poisson_binomial_pmf_dp(p).probabilities()
    np.testing.assert_array_equal(pmf_method(p, "dp").probabilities(), ref)
    # the contour is accurate relative to each entry, the dft only in absolute terms
    np.testing.assert_allclose(pmf_method(p, "contour").probabilities(), ref, rtol=1e-11)
    np.testing.assert_allclose(pmf_method(p, "dft").probabilities(), ref, rtol=0, atol=1e-15)
    small = BernoulliVector.equal(8, 0.4)
    np.testing.assert_allclose(pmf_method(small, "bruteforce").probabilities(),
                               poisson_binomial_pmf_dp(small).probabilities(), atol=1e-16)
    with pytest.raises(InputError):
        pmf_method(p, "magic")


def test_bruteforce_size_limit():
    with pytest.raises(SizeLimitError):
        pmf_bruteforce(BernoulliVector.equal(21, 0.5))


class TestPoisson:
    def test_log_pmf(self):
        assert poisson_log_pmf(1.0, 0) == pytest.approx(-1.0)
        assert poisson_log_pmf(2.5, 7) == pytest.approx(7 * math.log(2.5) - 2.5 - math.lgamma(8), rel=1e-15)

    def test_array_matches_scalar(self):
        ks = np.arange(0, 60)
        arr = poisson_log_pmf_array(13.0, ks)
        for k in (0, 5, 21, 59):
            assert arr[k] == pytest.approx(poisson_log_pmf(13.0, k), rel=1e-14)

    def test_log_factorial_seam(self):
        assert log_factorial_seam_error() < 1e-14
        with mpmath.workdps(30):
            for k in (0, 1, 20, 21, 500):
                assert log_factorial(k) == pytest.approx(float(mpmath.loggamma(k + 1)), rel=1e-15, abs=1e-15)


class TestSandwiches:
    @pytest.mark.parametrize("k", [1, 2, 10, 171, 10**6])
    def test_stirling(self, k):
        s = stirling_sandwich(k)
        assert s.holds
        assert s.log_lower <= s.log_factorial <= s.log_upper

    def test_poisson_sandwich(self):
        for lam, k in ((0.5, 1), (3.0, 3), (10.0, 25), (100.0, 60)):
            for b in poisson_pmf_sandwich(lam, k):
                assert b.holds, b


class TestReadProbabilities:
    def test_round_trip(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("0.5\n# comment\n\n0.25\n")
        assert read_probabilities(f).p == (0.5, 0.25)

    def test_bad_value_names_line(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("1.2\n")
        with pytest.raises(ProbabilityFileError) as exc:
            read_probabilities(f)
        assert exc.value.line == 1

    def test_garbage(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("0.1\nabc\n")
        with pytest.raises(ProbabilityFileError, match=":2"):
            read_probabilities(f)


def test_logpmf_validation():
    with pytest.raises(InputError):
        LogPmf(np.zeros(1), support_hint="bogus")
    with pytest.raises(InputError):
        LogPmf(np.zeros(1), method_tag="bogus")
    with pytest.raises(InputError):
        LogPmf(np.zeros(1), tail_bound=-1.0)
