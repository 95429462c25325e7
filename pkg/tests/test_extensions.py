import math

import numpy as np
import pytest

from conftest import change_series
from prisca.core.extensions.ArResidualizer import ArSpec, ar_residualize, lag_matrix, weighted_least_squares
from prisca.core.extensions.differencing import (
    DifferenceDetrender, IdentityDetrender, cumulative_reconstruct, difference_detrend, fold_periodic, thin
)
from prisca.core.model_core import TimeSeries
from prisca.core.PriscaEngine import fit
from prisca.core.summaries import detect
from prisca.helpers.config import ModelConfig
from prisca.helpers.enums import DetrendKind
from prisca.helpers.errors import InvalidInputError, SingularDesignError
from prisca.helpers.MethodFactory import MethodFactory


class TestDifferencing:
    def test_constant_series(self):
        np.testing.assert_array_equal(difference_detrend(TimeSeries(np.array([1.0, 1.0, 1.0]))).values, [0, 0])

    def test_values(self):
        np.testing.assert_array_equal(difference_detrend(TimeSeries(np.array([0.0, 2.0, 1.0]))).values, [2, -1])

    def test_reconstruct(self, rng):
        y = TimeSeries(rng.standard_normal(25))
        rebuilt = cumulative_reconstruct(difference_detrend(y), float(y.values[0]))
        np.testing.assert_allclose(rebuilt.values, y.values, atol=1e-12)

    def test_rejects_short_or_replicated_series(self):
        with pytest.raises(InvalidInputError):
            difference_detrend(TimeSeries(np.array([1.0])))
        with pytest.raises(InvalidInputError):
            difference_detrend(TimeSeries.from_samples([[1.0, 2.0], [3.0]]))

    def test_detrenders_from_factory(self):
        factory = MethodFactory()
        assert isinstance(factory.create_detrender(DetrendKind.NONE), IdentityDetrender)
        diff = factory.create_detrender(DetrendKind.DIFF)
        assert isinstance(diff, DifferenceDetrender)
        assert "differenced" in diff.axis_note

    @pytest.mark.slow
    def test_linear_trend_change_found_on_differences(self):
        T, t0 = 500, 250
        radius = math.sqrt(T * math.log(T))
        hits = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            noise = change_series(rng, T, t0, 9.0).values
            y = TimeSeries(3.0 * np.arange(1, T + 1) + noise)
            report = detect(fit(DifferenceDetrender().apply(y), ModelConfig(L=2)))
            # one effect absorbs the offset of the differenced mean at the start
            hits += any(abs(c - t0) <= radius for c in report.change_points)
        assert hits >= 0.85 * 200


class TestReshaping:
    def test_fold_periodic(self):
        y = fold_periodic(np.arange(7.0), 3)
        assert y.T == 3
        np.testing.assert_array_equal(y.n, [2, 2, 2])
        assert [s.tolist() for s in y.samples()] == [[0.0, 3.0], [1.0, 4.0], [2.0, 5.0]]

    def test_fold_needs_one_cycle(self):
        with pytest.raises(InvalidInputError):
            fold_periodic(np.arange(2.0), 3)

    def test_fold_keeps_a_plain_series_and_rejects_replicates(self):
        assert fold_periodic(TimeSeries(np.arange(6.0)), 3).T == 3
        with pytest.raises(InvalidInputError, match="one observation per instant"):
            fold_periodic(TimeSeries.from_samples([[1.0, 2.0], [3.0], [4.0]]), 1)

    def test_thin(self):
        np.testing.assert_array_equal(thin(TimeSeries(np.arange(7.0)), 3).values, [0.0, 3.0, 6.0])


class TestWeightedLeastSquares:
    def test_matches_lstsq(self, rng):
        X = rng.standard_normal((50, 3))
        y = X @ np.array([0.5, -1.0, 2.0]) + rng.standard_normal(50)
        w = rng.uniform(0.5, 2.0, 50)
        coef, se = weighted_least_squares(X, y, w)
        expected, *_ = np.linalg.lstsq(X * np.sqrt(w)[:, None], y * np.sqrt(w), rcond=None)
        np.testing.assert_allclose(coef, expected, rtol=1e-10)
        assert np.all(se > 0)

    def test_rank_deficient_design(self, rng):
        x = rng.standard_normal(30)
        with pytest.raises(SingularDesignError):
            weighted_least_squares(np.column_stack([x, 2 * x]), rng.standard_normal(30), np.ones(30))

    def test_lag_matrix(self):
        np.testing.assert_array_equal(lag_matrix(np.arange(5.0), 2), [[1, 0], [2, 1], [3, 2]])


def ar_series(rng, T, phi, t0=None, ratio=1.0):
    innovations = change_series(rng, T, t0, ratio).values if t0 else rng.standard_normal(T)
    y = np.zeros(T)
    for t in range(T):
        y[t] = innovations[t] + (phi * y[t - 1] if t else 0.0)
    return TimeSeries(y)


class TestArResidualize:
    def test_order_zero_is_identity(self, rng):
        y = TimeSeries(rng.standard_normal(40))
        config = ModelConfig(L=2)
        result = ar_residualize(y, ArSpec(order=0), config)
        assert result.residuals is y
        assert result.spec.coefficients == ()
        plain = fit(y, config)
        np.testing.assert_array_equal(result.fit.alpha, plain.alpha)
        np.testing.assert_array_equal(result.fit.elbo_trace, plain.elbo_trace)

    def test_known_coefficients(self, rng):
        y = ar_series(rng, 200, 0.5)
        result = ar_residualize(y, ArSpec(order=1, coefficients=(0.5,), known=True), ModelConfig())
        np.testing.assert_allclose(result.residuals.values, y.values[1:] - 0.5 * y.values[:-1])
        assert result.residuals.T == 199

    def test_rejects_high_order(self, rng):
        with pytest.raises(InvalidInputError):
            ar_residualize(TimeSeries(rng.standard_normal(20)), ArSpec(order=5), ModelConfig())

    def test_ar_spec_validation(self):
        with pytest.raises(ValueError):
            ArSpec(order=2, coefficients=(0.1,))
        with pytest.raises(ValueError):
            ArSpec(order=1, known=True)

    @pytest.mark.slow
    def test_white_noise_coefficients_are_insignificant(self):
        calm = 0
        for seed in range(100):
            y = TimeSeries(np.random.default_rng(seed).standard_normal(500))
            result = ar_residualize(y, ArSpec(order=2), ModelConfig(L=2))
            coef = np.abs(result.spec.coefficients)
            calm += bool(np.all(coef < 3 * np.asarray(result.spec.standard_errors)))
        assert calm >= 95

    @pytest.mark.slow
    def test_recovers_ar1_coefficient(self):
        close = 0
        for seed in range(200):
            y = ar_series(np.random.default_rng(seed), 1000, 0.5)
            result = ar_residualize(y, ArSpec(order=1), ModelConfig(L=2))
            close += abs(result.spec.coefficients[0] - 0.5) <= 0.05
        # the 0.05 band is about 1.8 standard errors of the estimate at T=1000
        assert close >= 0.9 * 200

    @pytest.mark.slow
    def test_change_in_innovation_variance(self):
        T = 1000
        radius = math.sqrt(T * math.log(T))
        hits = 0
        for seed in range(200):
            y = ar_series(np.random.default_rng(seed), T, 0.5, t0=T // 2, ratio=9.0)
            result = ar_residualize(y, ArSpec(order=1), ModelConfig(L=1))
            report = detect(result.fit)
            # residual index i is input instant i + 1
            hits += report.k_hat == 1 and abs(report.detections[0].estimate + 1 - T // 2) <= radius
        assert hits >= 0.8 * 200
