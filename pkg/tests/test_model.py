import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from histhawkes import (
    CountSeries,
    DimensionMismatchError,
    DthpModel,
    HistogramKernel,
    InvalidDataError,
    NonFiniteLikelihoodError,
    intensities,
    intensity,
    log_likelihood,
    precompute_lag_counts,
    spectral_stability,
)

from conftest import oracle_log_likelihood, random_instance


def univariate(mu=1.0, alpha=0.9, kernel=None):
    return DthpModel([mu], [[alpha]], [[kernel or HistogramKernel.flat(7)]])


class TestCountSeries:
    def test_shape_and_labels(self):
        s = CountSeries([[1, 2, 3], [0, 0, 1]])
        assert (s.K, s.T) == (2, 3)
        assert s.dimension_labels() == ("dim_1", "dim_2")

    def test_one_dimensional_input(self):
        assert CountSeries([1, 2]).K == 1

    @pytest.mark.parametrize("bad", [[[-1, 2]], [[0.5, 1]], [[np.nan, 1]]])
    def test_rejects_invalid_counts(self, bad):
        with pytest.raises(InvalidDataError):
            CountSeries(bad)

    def test_real_counts_opt_in(self):
        assert CountSeries([[0.5, 1.5]], allow_real=True).T == 2

    def test_counts_are_immutable(self):
        s = CountSeries([[1, 2]])
        with pytest.raises(ValueError):
            s.counts[0, 0] = 5


class TestIntensity:
    def test_first_day_is_baseline(self):
        m = univariate(mu=1.7)
        assert intensity(m, CountSeries([[5, 3, 1]]), 0, 0) == 1.7

    def test_hand_evaluated_example(self):
        m = univariate()
        assert intensity(m, CountSeries([[3, 0]]), 1, 0) == pytest.approx(1 + 0.9 * 3 / 7, abs=1e-12)
        assert 1 + 0.9 * 3 / 7 == pytest.approx(1.385714, abs=1e-6)

    def test_zero_magnitude_gives_baseline(self):
        m = univariate(mu=2.0, alpha=0.0)
        lam = intensities(m, CountSeries(np.arange(20)[None, :]))
        np.testing.assert_array_equal(lam, 2.0)

    def test_own_day_never_counts(self):
        m = univariate()
        a = intensities(m, CountSeries([[1, 2, 3, 4]]))
        b = intensities(m, CountSeries([[1, 2, 3, 99]]))
        np.testing.assert_array_equal(a, b)

    def test_compact_support(self):
        kernel = HistogramKernel.flat(3)
        m = univariate(kernel=kernel)
        y = np.zeros(10, dtype=int)
        y[0] = 50
        lam = intensities(m, CountSeries(y[None, :]))[0]
        assert np.all(lam[1:4] > 1.0)
        np.testing.assert_array_equal(lam[4:], 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            intensities(univariate(), CountSeries([[1, 2], [3, 4]]))

    def test_time_index_checked(self):
        with pytest.raises((IndexError, ValueError)):
            intensity(univariate(), CountSeries([[1, 2]]), 2, 0)


class TestLikelihood:
    def test_all_zero_counts(self):
        assert log_likelihood(univariate(), CountSeries([[0, 0]])) == pytest.approx(-2.0, abs=1e-15)

    def test_single_day_is_poisson_mass(self):
        m = DthpModel([1.3, 0.4], np.full((2, 2), 0.3), [[HistogramKernel.flat(4)] * 2] * 2)
        y = CountSeries([[2], [5]])
        expected = poisson.logpmf(2, 1.3) + poisson.logpmf(5, 0.4)
        assert log_likelihood(m, y) == pytest.approx(expected, abs=1e-12)

    def test_matches_scipy_poisson(self):
        rng = np.random.default_rng(3)
        m, y = random_instance(rng, K_max=2, T_max=30)
        lam = intensities(m, y)
        assert log_likelihood(m, y) == pytest.approx(poisson.logpmf(y.counts, lam).sum(), abs=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_oracle_equivalence(self, seed):
        rng = np.random.default_rng(1000 + seed)
        m, y = random_instance(rng)
        oracle = oracle_log_likelihood(m.mu.tolist(), m.alpha.tolist(), m.kernels, y.counts.tolist())
        assert abs(log_likelihood(m, y) - oracle) < 1e-9

    def test_cache_gives_identical_value(self):
        rng = np.random.default_rng(5)
        m, y = random_instance(rng)
        cache = precompute_lag_counts(y, m.s_max)
        assert log_likelihood(m, y, cache) == log_likelihood(m, y)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_is_reported(self):
        m = univariate(mu=1e308, alpha=0.0)
        with pytest.raises(NonFiniteLikelihoodError):
            log_likelihood(m, CountSeries([[0, 0]]))  # -2e308 overflows

    def test_real_valued_counts_use_log_gamma(self):
        m = univariate(alpha=0.0)
        y = CountSeries([[1.5]], allow_real=True)
        assert log_likelihood(m, y) == pytest.approx(1.5 * 0 - 1.0 - math.lgamma(2.5), abs=1e-12)


class TestLagCache:
    def test_direct_indexing(self):
        cache = precompute_lag_counts(CountSeries([[3, 0]]), 2)
        # day 2 (index 1) at lag 1 sees day 1's count
        assert cache[1, 0, 0] == 3
        assert cache[0].sum() == 0

    def test_single_day_is_empty(self):
        assert not precompute_lag_counts(CountSeries([[9]]), 5).any()

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=30), st.integers(1, 8))
    def test_definition(self, y, s_max):
        cache = precompute_lag_counts(CountSeries([y]), s_max)
        for t in range(len(y)):
            for d in range(1, s_max + 1):
                expected = y[t - d] if d <= t else 0
                assert cache[t, 0, d - 1] == expected

    def test_read_only(self):
        cache = precompute_lag_counts(CountSeries([[1, 2, 3]]), 2)
        with pytest.raises(ValueError):
            cache[0, 0, 0] = 1


class TestStability:
    def test_univariate(self):
        s = spectral_stability([[0.9]])
        assert s.stable and s.spectral_radius == pytest.approx(0.9, abs=1e-9)

    def test_constant_matrix(self):
        s = spectral_stability(np.full((2, 2), 0.2))
        assert s.stable and s.spectral_radius == pytest.approx(0.4, abs=1e-9)

    def test_identity_is_unstable(self):
        s = spectral_stability(np.eye(3))
        assert not s.stable and s.spectral_radius == pytest.approx(1.0, abs=1e-9)

    @given(st.lists(st.floats(0, 2), min_size=4, max_size=4))
    def test_matches_eigenvalues(self, entries):
        a = np.array(entries).reshape(2, 2)
        expected = max(abs(np.linalg.eigvals(a)))
        assert spectral_stability(a).spectral_radius == pytest.approx(expected, abs=1e-6)


def test_model_dict_round_trip(three_bin_truth):
    m = DthpModel([1.0, 2.0], [[0.2, 0.1], [0.0, 0.3]], [[three_bin_truth] * 2] * 2)
    back = DthpModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.mu, m.mu)
    assert back.kernels == m.kernels


def test_model_validation():
    with pytest.raises(ValueError):
        DthpModel([0.0], [[0.5]], [[HistogramKernel.flat(3)]])
    with pytest.raises(ValueError):
        DthpModel([1.0], [[-0.5]], [[HistogramKernel.flat(3)]])
    with pytest.raises(DimensionMismatchError):
        DthpModel([1.0, 1.0], np.zeros((2, 2)), [[HistogramKernel.flat(3)]])
