import numpy as np
import pytest

from conftest import quadrature_alpha, quadrature_log_marginal
from prisca.core.model_core import (
    SingleEffectPosterior, TimeSeries, expected_log_tau2, expected_tau2, log_marginal_likelihood,
    log_marginals, multi_obs_posterior, posterior_from_statistics, single_effect_posterior
)
from prisca.helpers.config import ModelConfig
from prisca.helpers.errors import InvalidConfigError, InvalidInputError


class TestTimeSeries:
    def test_rejects_empty_and_non_finite(self):
        with pytest.raises(InvalidInputError):
            TimeSeries(np.array([]))
        with pytest.raises(InvalidInputError, match="position 2"):
            TimeSeries(np.array([1.0, np.nan, 2.0]))

    def test_counts_must_cover_values(self):
        with pytest.raises(InvalidInputError):
            TimeSeries(np.arange(3.0), np.array([1, 1]))
        with pytest.raises(InvalidInputError):
            TimeSeries(np.arange(3.0), np.array([3, 0]))

    def test_from_samples(self):
        y = TimeSeries.from_samples([[1.0, 2.0], [3.0]])
        assert y.T == 2
        assert y.has_replicates
        np.testing.assert_array_equal(y.n, [2, 1])
        np.testing.assert_allclose(y.sum_squares, [5.0, 9.0])
        assert [s.tolist() for s in y.samples()] == [[1.0, 2.0], [3.0]]

    def test_values_are_read_only(self):
        y = TimeSeries.from_values([1.0, 2.0])
        with pytest.raises(ValueError):
            y.values[0] = 5.0


class TestLogMarginal:
    def test_shape_matches_closed_form(self):
        y = TimeSeries(np.arange(1.0, 11.0))
        post = single_effect_posterior(y, ModelConfig(a0=0.001))
        assert post.a[3] == pytest.approx(3.501, abs=1e-12)

    def test_zero_data_gives_prior_rate(self, config):
        post = single_effect_posterior(TimeSeries(np.zeros(6)), config)
        np.testing.assert_array_equal(post.b, np.full(6, config.a0))

    def test_matches_quadrature(self):
        config = ModelConfig(a0=0.5, sigma2=1.0)
        values = np.random.default_rng(5).standard_normal(5)
        samples = [[v] for v in values]
        y = TimeSeries(values)
        for t in range(1, 6):
            expected = quadrature_log_marginal(samples, t, config)
            assert log_marginal_likelihood(y, t, config) == pytest.approx(expected, rel=1e-8)

    def test_scaling_the_tail_raises_the_rate_only(self, config, rng):
        values = rng.standard_normal(20)
        t = 8
        scaled = values.copy()
        scaled[t - 1:] *= 1.5
        before = single_effect_posterior(TimeSeries(values), config)
        after = single_effect_posterior(TimeSeries(scaled), config)
        assert after.b[t - 1] > before.b[t - 1]
        np.testing.assert_array_equal(after.a, before.a)

    def test_vector_form_agrees_with_scalar(self, config, rng):
        y = TimeSeries(rng.standard_normal(12))
        full = log_marginals(y, config)
        assert full[6] == log_marginal_likelihood(y, 7, config)

    @pytest.mark.parametrize("t", [0, 11])
    def test_index_out_of_range(self, config, t):
        with pytest.raises(InvalidInputError):
            log_marginal_likelihood(TimeSeries(np.ones(10)), t, config)


class TestSingleEffectPosterior:
    def test_single_instant(self, config):
        post = single_effect_posterior(TimeSeries(np.array([3.2])), config)
        np.testing.assert_array_equal(post.alpha, [1.0])

    def test_alpha_is_a_distribution(self, config):
        for seed in range(20):
            y = TimeSeries(np.random.default_rng(seed).standard_normal(30) * 2.0)
            post = single_effect_posterior(y, config)
            assert post.alpha.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(post.alpha >= 0)

    def test_alpha_matches_quadrature(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            T = int(rng.integers(3, 51))
            config = ModelConfig(a0=float(rng.uniform(0.1, 2.0)))
            values = rng.standard_normal(T) * np.where(np.arange(T) >= T // 2, 2.0, 1.0)
            expected = quadrature_alpha([[v] for v in values], config)
            np.testing.assert_allclose(single_effect_posterior(TimeSeries(values), config).alpha,
                                       expected, rtol=0, atol=1e-8)

    def test_explicit_prior(self):
        y = TimeSeries(np.array([0.1, 0.2, 3.0, 2.5]))
        prior = (0.7, 0.1, 0.1, 0.1)
        weighted = single_effect_posterior(y, ModelConfig(prior=prior))
        uniform = single_effect_posterior(y, ModelConfig())
        assert weighted.alpha[0] > uniform.alpha[0]

    def test_prior_length_mismatch(self):
        with pytest.raises(InvalidConfigError):
            single_effect_posterior(TimeSeries(np.ones(3)), ModelConfig(prior=(0.5, 0.5)))

    def test_arrays_are_read_only(self, config):
        post = single_effect_posterior(TimeSeries(np.ones(4)), config)
        with pytest.raises(ValueError):
            post.alpha[0] = 0.0

    def test_rejects_negative_statistics(self, config):
        with pytest.raises(InvalidInputError):
            posterior_from_statistics(np.array([1.0, -1.0]), np.array([1, 1]), config)


class TestMultiObservation:
    def test_single_counts_reduce(self, config, rng):
        values = rng.standard_normal(15)
        single = single_effect_posterior(TimeSeries(values), config)
        multi = multi_obs_posterior(TimeSeries(values, np.ones(15, dtype=int)), config)
        np.testing.assert_array_equal(single.alpha, multi.alpha)
        np.testing.assert_array_equal(single.b, multi.b)

    def test_zero_data(self, config):
        post = multi_obs_posterior(TimeSeries.from_samples([[0.0, 0.0], [0.0]]), config)
        np.testing.assert_array_equal(post.b, [config.a0, config.a0])

    def test_matches_quadrature(self):
        config = ModelConfig(a0=0.5)
        rng = np.random.default_rng(11)
        samples = [rng.standard_normal(k) * s for k, s in zip([3, 1, 2, 4], [1.0, 1.0, 2.0, 2.0])]
        y = TimeSeries.from_samples(samples)
        post = multi_obs_posterior(y, config)
        for t in range(1, 5):
            assert post.log_marginals[t - 1] == pytest.approx(quadrature_log_marginal(samples, t, config), rel=1e-8)
        np.testing.assert_allclose(post.alpha, quadrature_alpha(samples, config), atol=1e-8)

    def test_needs_counts(self, config):
        with pytest.raises(InvalidInputError):
            multi_obs_posterior(TimeSeries(np.ones(3)), config)


def _posterior(alpha, s_hat):
    alpha = np.asarray(alpha, dtype=float)
    b = np.ones_like(alpha)
    return SingleEffectPosterior(alpha=alpha, a=np.asarray(s_hat, dtype=float), b=b,
                                 log_marginals=np.zeros_like(alpha), suffix_counts=np.ones_like(alpha))


class TestExpectedTau2:
    def test_point_mass_at_start(self, config):
        post = single_effect_posterior(TimeSeries(np.array([2.0, 2.0, 2.0])), config)
        point = SingleEffectPosterior(alpha=np.array([1.0, 0.0, 0.0]), a=post.a, b=post.b,
                                      log_marginals=post.log_marginals, suffix_counts=post.suffix_counts)
        np.testing.assert_allclose(expected_tau2(point), np.full(3, post.a[0] / post.b[0]))

    def test_point_mass_later_is_piecewise_constant(self, config):
        post = single_effect_posterior(TimeSeries(np.array([1.0, -2.0, 0.5, 3.0, -1.0])), config)
        point = SingleEffectPosterior(alpha=np.array([0.0, 0.0, 1.0, 0.0, 0.0]), a=post.a, b=post.b,
                                      log_marginals=post.log_marginals, suffix_counts=post.suffix_counts)
        s_hat = post.a[2] / post.b[2]
        np.testing.assert_allclose(expected_tau2(point), [1.0, 1.0, s_hat, s_hat, s_hat])

    def test_two_instants(self):
        np.testing.assert_allclose(expected_tau2(_posterior([0.5, 0.5], [2.0, 4.0])), [1.5, 3.0])

    def test_matches_monte_carlo(self):
        config = ModelConfig(a0=1.0)
        rng = np.random.default_rng(3)
        y = TimeSeries(rng.standard_normal(5) * np.array([1, 1, 3, 3, 3]))
        post = single_effect_posterior(y, config)
        draws = 1_000_000
        gamma = rng.choice(5, size=draws, p=post.alpha)
        s2 = rng.gamma(post.a[gamma], 1.0 / post.b[gamma])
        tau2 = np.where(np.arange(5)[None, :] >= gamma[:, None], s2[:, None], 1.0)
        mean, se = tau2.mean(axis=0), tau2.std(axis=0) / np.sqrt(draws)
        assert np.all(np.abs(expected_tau2(post) - mean) <= 3 * se + 1e-12)

    def test_log_tau2_is_zero_before_mass(self):
        post = _posterior([0.0, 1.0], [2.0, 2.0])
        assert expected_log_tau2(post)[0] == 0.0
