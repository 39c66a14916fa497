import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from histhawkes import ContinuousPrior, DthpModel, HistogramKernel, PriorConfig, log_prior_continuous, log_prior_structure
from histhawkes.priors import gamma_avg


def informative(mu=1.0, alpha=0.9, gamma=0.5):
    return PriorConfig("informative", true_mu=mu, true_alpha=alpha, true_gamma_avg=gamma)


class TestContinuous:
    def test_standard_normal_at_zero(self):
        cfg = PriorConfig("relatively_informative")
        assert log_prior_continuous(cfg, "baseline", 0.0) == pytest.approx(-0.918939, abs=1e-6)
        assert log_prior_continuous(cfg, "baseline", 0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)

    def test_uniform_outside_support(self):
        cfg = PriorConfig("quite_uninformative")
        assert log_prior_continuous(cfg, "magnitude", 6.0) == -math.inf
        assert log_prior_continuous(cfg, "magnitude", 4.9) == pytest.approx(-math.log(10.0))

    def test_informative_mean_offset(self):
        prior = informative().prior_for("baseline", (0,))
        assert prior.kind == "normal"
        assert prior.a == pytest.approx(-0.25, abs=1e-15)
        assert prior.b == 0.5

    def test_informative_requires_truth(self):
        with pytest.raises(ValueError):
            PriorConfig("informative")

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            PriorConfig("vague")

    @pytest.mark.parametrize("which", ["baseline", "magnitude", "height"])
    @pytest.mark.parametrize("setting", ["informative", "relatively_informative", "quite_uninformative"])
    def test_densities_integrate_to_one(self, setting, which):
        cfg = informative(2.0, 0.3, 1.5) if setting == "informative" else PriorConfig(setting)
        index = (0,) if which == "baseline" else (0, 0)
        prior = cfg.prior_for(which, index)
        lo, hi = (-5.0, 5.0) if prior.kind == "uniform" else (prior.a - 20, prior.a + 20)
        total, _ = integrate.quad(lambda x: math.exp(log_prior_continuous(cfg, which, x, index)), lo, hi, epsabs=1e-12)
        assert abs(total - 1.0) < 1e-6

    @given(st.floats(0.01, 100.0))
    def test_informative_lognormal_mean_is_truth(self, truth):
        prior = informative(mu=truth).prior_for("baseline", (0,))
        assert math.exp(prior.a + prior.b / 2) == pytest.approx(truth, rel=1e-12)

    def test_overrides(self):
        cfg = PriorConfig("relatively_informative", overrides={"height": {"kind": "normal", "mean": 1.0, "variance": 2.0}})
        assert cfg.prior_for("height", (0, 0)) == ContinuousPrior("normal", 1.0, 2.0)
        assert cfg.prior_for("baseline", (0,)) == ContinuousPrior("normal", 0.0, 1.0)

    @pytest.mark.parametrize("kind, a, b", [("normal", 0.0, 0.0), ("uniform", 1.0, 1.0), ("cauchy", 0.0, 1.0)])
    def test_invalid_continuous_prior(self, kind, a, b):
        with pytest.raises(ValueError):
            ContinuousPrior(kind, a, b)

    def test_per_dimension_truth(self):
        cfg = informative(mu=[1.0, 4.0], alpha=[[0.2, 0.2], [0.2, 0.2]], gamma=[[1.0, 2.0], [1.0, 1.0]])
        assert cfg.prior_for("baseline", (1,)).a == pytest.approx(math.log(4.0) - 0.25)
        assert cfg.prior_for("height", (0, 1)).a == pytest.approx(math.log(2.0) - 0.25)

    def test_config_round_trip(self):
        cfg = PriorConfig("quite_uninformative", overrides={"baseline": ContinuousPrior("normal", 0.0, 3.0)})
        assert PriorConfig.from_dict(cfg.to_dict()) == cfg

    def test_with_truth(self, three_bin_truth):
        model = DthpModel([1.0], [[0.9]], [[three_bin_truth]])
        cfg = PriorConfig("informative", true_mu=5, true_alpha=5, true_gamma_avg=5).with_truth(model)
        assert cfg.prior_for("height", (0, 0)).a == pytest.approx(math.log(1.75 / 3) - 0.25)


def configurations(s_max):
    for J in range(1, s_max + 1):
        for interior in itertools.combinations(range(1, s_max), J - 1):
            yield J, (0, *interior, s_max)


class TestStructure:
    def test_printed_examples(self):
        assert log_prior_structure(2, (0, 3, 7), 7) == pytest.approx(math.log(1 / 147), abs=1e-12)
        assert log_prior_structure(1, (0, 1), 1) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("s_max", [2, 5, 7, 8])
    def test_printed_ratio(self, s_max):
        for J in range(1, s_max):
            ratio = math.exp(log_prior_structure(J + 1, None, s_max) - log_prior_structure(J, None, s_max))
            assert ratio == pytest.approx((J + 1) / (s_max - J), rel=1e-12)

    @pytest.mark.parametrize("s_max", range(1, 9))
    def test_normalized_enumeration(self, s_max):
        per_J = np.zeros(s_max)
        for J, knots in configurations(s_max):
            per_J[J - 1] += math.exp(log_prior_structure(J, knots, s_max, "normalized"))
        np.testing.assert_allclose(per_J, 1.0 / s_max, rtol=1e-12)

    @pytest.mark.parametrize("s_max", range(1, 9))
    def test_printed_enumeration_is_proportional_to_J(self, s_max):
        # the printed Pi(s|J) sums to J / s_max over the admissible configurations
        per_J = np.zeros(s_max)
        for J, knots in configurations(s_max):
            per_J[J - 1] += math.exp(log_prior_structure(J, knots, s_max, "printed"))
        J = np.arange(1, s_max + 1)
        np.testing.assert_allclose(per_J, J / s_max**2, rtol=1e-12)

    @pytest.mark.parametrize("convention", ["printed", "normalized"])
    def test_uniform_within_J(self, convention):
        values = {}
        for J, knots in configurations(6):
            values.setdefault(J, set()).add(round(log_prior_structure(J, knots, 6, convention), 12))
        assert all(len(v) == 1 for v in values.values())

    @pytest.mark.parametrize("J, knots", [(0, None), (8, None), (2, (0, 7)), (2, (1, 3, 7)), (2, (0, 4, 4))])
    def test_invalid_structures(self, J, knots):
        with pytest.raises(ValueError):
            log_prior_structure(J, knots, 7)


class TestGammaAvg:
    def test_examples(self):
        assert gamma_avg(HistogramKernel((0, 7), (1.0,))) == 1.0
        assert gamma_avg(HistogramKernel((0, 1, 2, 7), (1.0, 0.5, 2.5))) == pytest.approx(4 / 3, abs=1e-15)
        assert gamma_avg(HistogramKernel((0, 1, 2, 7), (1.0, 1.0, 1.0))) == 1.0
