import dataclasses
import itertools
import warnings

import numpy as np
import pytest
from scipy import stats

from freightcast.errors import (ConvergenceError, DegenerateError,
                                ExogMissingError, InstabilityError,
                                InsufficientDataError, LengthError)
from freightcast.sarimax import (ConvergenceWarning, FitOptions, ModelOrder,
                                 ParamVector, fit, forecast, kalman_loglik,
                                 model_from_params, predict_in_sample,
                                 residual_diagnostics, simulate)
from freightcast.sarimax.polynomials import (ar_polynomial, constrain_invertible,
                                             constrain_stationary, is_stationary,
                                             unconstrain_invertible,
                                             unconstrain_stationary)
from freightcast.series import (DifferenceSpec, TimeSeries, difference_values,
                                forward_transform)

from oracles import dense_loglik, sarma_polys

# frozen output of oracles.dense_loglik for the ARMA(1,1) case below
ARMA11_Y = [0.5, -0.3, 1.2, 0.8, -0.6, 0.1, -1.1, 0.4, 0.9, -0.2]
ARMA11_DENSE_LOGLIK = -14.112963871389699


def quiet_fit(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return fit(*args, **kwargs)


class TestPolynomials:
    def test_constrained_ar_is_stationary(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(scale=3, size=rng.integers(1, 5))
            assert is_stationary(ar_polynomial(constrain_stationary(x)))

    def test_round_trip(self):
        phi = np.array([0.5, -0.2, 0.1])
        np.testing.assert_allclose(constrain_stationary(unconstrain_stationary(phi)), phi,
                                   atol=1e-12)
        ma = np.array([-0.4, 0.3])
        np.testing.assert_allclose(constrain_invertible(unconstrain_invertible(ma)), ma,
                                   atol=1e-12)

    def test_seasonal_product(self):
        # (1 - 0.5 L)(1 - 0.3 L^4) = 1 - 0.5 L - 0.3 L^4 + 0.15 L^5
        np.testing.assert_allclose(ar_polynomial([0.5], [0.3], 4),
                                   [1, -0.5, 0, 0, -0.3, 0.15])


class TestLoglik:
    def test_white_noise_matches_iid_normal(self):
        x = np.random.default_rng(1).standard_normal(40)
        ll = kalman_loglik(ModelOrder(), ParamVector(c=0.0, sigma2=1.0), x)
        assert ll == pytest.approx(np.sum(stats.norm.logpdf(x)), abs=1e-10)

    def test_arma11_frozen_dense_value(self):
        params = ParamVector(c=0.0, ar=[0.5], ma=[0.3], sigma2=1.3)
        ll = kalman_loglik(ModelOrder(1, 0, 1), params, ARMA11_Y)
        assert ll == pytest.approx(ARMA11_DENSE_LOGLIK, rel=1e-8)

    @pytest.mark.parametrize("p,q,P,Q", list(itertools.product([0, 1], repeat=4)))
    def test_dense_oracle_all_small_orders(self, p, q, P, Q):
        rng = np.random.default_rng(10 + 8 * p + 4 * q + 2 * P + Q)
        y = rng.standard_normal(12)
        ar, ma, sar, sma = ([0.55] * p, [-0.35] * q, [0.4] * P, [0.3] * Q)
        params = ParamVector(c=0.2, ar=ar, ma=ma, sar=sar, sma=sma, sigma2=0.8)
        order = ModelOrder(p, 0, q, P, 0, Q, S=4)
        mean = 0.2 / ((1 - sum(ar)) * (1 - sum(sar)))
        phi, theta = sarma_polys(ar, ma, sar, sma, 4)
        expected = dense_loglik(y, phi, theta, 0.8, mean)
        assert kalman_loglik(order, params, y) == pytest.approx(expected, rel=1e-8)

    def test_differenced_model_uses_differenced_data(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(40).cumsum() + 100
        order = ModelOrder(1, 1, 1, 0, 1, 0, S=4)
        params = ParamVector(ar=[0.3], ma=[0.2], sigma2=2.0)
        y = difference_values(x, DifferenceSpec(1, 1, 4))
        phi, theta = sarma_polys([0.3], [0.2])
        assert kalman_loglik(order, params, x) == pytest.approx(
            dense_loglik(y, phi, theta, 2.0), rel=1e-8)

    def test_log_transform(self):
        x = np.exp(np.random.default_rng(3).standard_normal(30) * 0.1 + 2)
        order = ModelOrder(transform="log")
        ll = kalman_loglik(order, ParamVector(c=2.0, sigma2=0.01), x)
        assert ll == pytest.approx(np.sum(stats.norm.logpdf(np.log(x), 2.0, 0.1)), abs=1e-10)

    def test_exog_effect_removed(self):
        rng = np.random.default_rng(4)
        xcov = rng.standard_normal(50)
        w = rng.standard_normal(50)
        z = 2.0 * xcov + w
        ll = kalman_loglik(ModelOrder(), ParamVector(c=0.0, beta=[2.0], sigma2=1.0), z,
                           [xcov])
        ref = kalman_loglik(ModelOrder(), ParamVector(c=0.0, sigma2=1.0), w)
        assert ll == pytest.approx(ref, abs=1e-10)

    def test_deterministic(self):
        x = np.random.default_rng(5).standard_normal(60)
        order = ModelOrder(1, 0, 1)
        params = ParamVector(c=0.1, ar=[0.4], ma=[0.2], sigma2=1.0)
        assert kalman_loglik(order, params, x) == kalman_loglik(order, params, x)

    def test_wrong_param_length(self):
        with pytest.raises(LengthError):
            kalman_loglik(ModelOrder(2, 0, 0), ParamVector(c=0.0, ar=[0.1]), np.zeros(10))

    def test_statsmodels_airline(self):
        sm = pytest.importorskip("statsmodels.tsa.statespace.sarimax")
        order = ModelOrder(0, 1, 1, 0, 1, 1, 12)
        params = ParamVector(c=None, ma=[-0.4], sma=[-0.6])
        x = simulate(order, dataclasses.replace(params, sigma2=1.0), 144, seed=8).values
        mod = sm.SARIMAX(x, order=(0, 1, 1), seasonal_order=(0, 1, 1, 12),
                         simple_differencing=True)
        ll_sm = mod.loglike(np.array([-0.4, -0.6, 1.0]))
        assert kalman_loglik(order, dataclasses.replace(params, sigma2=1.0), x) == \
            pytest.approx(ll_sm, rel=1e-7)


def ar1_series(seed, n=2000, a=0.6):
    return simulate(ModelOrder(1, 0, 0, with_intercept=False),
                    ParamVector(ar=[a], sigma2=1.0), n, seed=seed)


class TestFit:
    def test_ar1_recovery(self):
        for seed in range(5):
            m = fit(ModelOrder(1, 0, 0), ar1_series(seed))
            assert m.converged
            assert abs(m.params.ar[0] - 0.6) < 0.06

    def test_ma1_recovery(self):
        order = ModelOrder(0, 0, 1, with_intercept=False)
        for seed in range(5):
            x = simulate(order, ParamVector(ma=[-0.5], sigma2=1.0), 2000, seed=seed)
            m = fit(order, x)
            assert abs(m.params.ma[0] + 0.5) < 0.06

    def test_beta_recovery_and_optimizer_dominance(self):
        rng = np.random.default_rng(12)
        n = 500
        xcov = rng.standard_normal(n).cumsum() * 0.1 + rng.standard_normal(n)
        noise = ar1_series(12, n, 0.5).values
        z = 2.0 * xcov + noise
        order = ModelOrder(1, 0, 0, with_intercept=False)
        m = fit(order, z, [xcov])
        assert abs(m.params.beta[0] - 2.0) < 0.1
        truth = ParamVector(ar=[0.5], beta=[2.0], sigma2=1.0)
        assert m.loglik >= kalman_loglik(order, truth, z, [xcov]) - 1e-3
        assert m.exog_p_values[0] < 1e-6

    def test_aic_identity(self):
        m = fit(ModelOrder(1, 0, 1), ar1_series(3, 300))
        assert m.aic == 2 * m.k_params - 2 * m.loglik
        assert m.k_params == 4

    def test_stationarity_enforced(self):
        # a random walk pushes the AR coefficient towards 1 but never past it
        x = np.random.default_rng(0).standard_normal(300).cumsum()
        m = quiet_fit(ModelOrder(1, 0, 0), x)
        assert is_stationary(m.params.ar_poly(12))
        assert m.params.ar[0] < 1

    def test_residual_length(self):
        x = simulate(ModelOrder(0, 1, 1, 0, 1, 1, 12),
                     ParamVector(ma=[-0.3], sma=[-0.5], sigma2=1.0), 120, seed=1)
        m = fit(ModelOrder(0, 1, 1, 0, 1, 1, 12), x)
        assert len(m.residuals) == 120 - 13 == m.nobs
        assert m.residuals.start == x.period_at(13)

    def test_in_sample_residual_identity(self):
        x = simulate(ModelOrder(1, 1, 0, 0, 1, 1, 4), ParamVector(ar=[0.3], sma=[-0.4],
                                                               sigma2=1.0), 100, seed=4)
        x = TimeSeries(x.start, np.exp(x.values / 20))
        order = ModelOrder(1, 1, 0, 0, 1, 1, 4, transform="log")
        m = fit(order, x)
        pred = predict_in_sample(m)
        w = forward_transform(x.values, "log")[5:]
        np.testing.assert_allclose(w - pred.values, m.residuals.values, atol=1e-9)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            fit(ModelOrder(2, 0, 2), np.random.default_rng(0).standard_normal(20))

    def test_nonconvergence_is_flagged(self):
        x = ar1_series(1, 300)
        with pytest.warns(ConvergenceWarning):
            m = fit(ModelOrder(1, 0, 1), x, options=FitOptions(maxiter=1))
        assert not m.converged
        with pytest.raises(ConvergenceError):
            fit(ModelOrder(1, 0, 1), x, options=FitOptions(maxiter=1, raise_on_failure=True))

    def test_std_errors_reasonable(self):
        m = fit(ModelOrder(1, 0, 0), ar1_series(2))
        # asymptotic sd of the AR estimate is sqrt((1 - a^2) / n)
        assert m.std_errors[1] == pytest.approx(np.sqrt(0.64 / 2000), rel=0.2)

    def test_model_from_params_reproduces_fit(self):
        m = fit(ModelOrder(1, 0, 1), ar1_series(5, 400))
        again = model_from_params(m.order, m.params, m.endog)
        assert again.loglik == m.loglik
        np.testing.assert_array_equal(again.residuals.values, m.residuals.values)


class TestForecast:
    def test_random_walk_median_is_last_value(self):
        x = np.random.default_rng(0).standard_normal(50).cumsum()
        m = fit(ModelOrder(0, 1, 0), x)
        fc = forecast(m, 6)
        np.testing.assert_allclose(fc.median, x[-1], rtol=0, atol=1e-12)
        assert fc.start == m.endog.period_at(50)

    def test_random_walk_half_width(self):
        x = np.random.default_rng(1).standard_normal(50).cumsum()
        order = ModelOrder(0, 1, 0)
        m = model_from_params(order, ParamVector(sigma2=2.5), TimeSeries("2000-01", x))
        fc = forecast(m, 24)
        h = np.arange(1, 25)
        half = (fc.upper - fc.lower) / 2
        np.testing.assert_allclose(half, stats.norm.ppf(0.975) * np.sqrt(2.5 * h), atol=1e-6)

    def test_ordering_and_monotone_widths(self):
        order = ModelOrder(1, 1, 1, 0, 1, 1, 12, transform="log")
        x = simulate(order, ParamVector(ar=[0.4], ma=[0.2], sma=[-0.5], sigma2=0.001), 120,
                     seed=3, initial=np.full(13, 5.0))
        m = fit(order, x)
        fc = forecast(m, 36)
        assert np.all(fc.lower <= fc.median) and np.all(fc.median <= fc.upper)
        assert np.all(np.diff(fc.sd_transformed) >= -1e-12)
        np.testing.assert_allclose(fc.median, np.exp(fc.mean_transformed))

    def test_white_noise_forecast_is_mean(self):
        x = 5 + np.random.default_rng(2).standard_normal(200)
        m = fit(ModelOrder(), x)
        fc = forecast(m, 3)
        np.testing.assert_allclose(fc.median, m.params.c, atol=1e-12)

    def test_exog_required(self):
        rng = np.random.default_rng(3)
        xcov = rng.standard_normal(100)
        m = fit(ModelOrder(), xcov + rng.standard_normal(100), [xcov])
        with pytest.raises(ExogMissingError):
            forecast(m, 3)
        with pytest.raises(ExogMissingError):
            forecast(m, 3, [np.zeros(2)])
        fc = forecast(m, 3, [np.array([1.0, 2.0, 3.0])])
        assert fc.horizon == 3

    def test_exog_rejected_without_covariates(self):
        m = fit(ModelOrder(), np.random.default_rng(4).standard_normal(50))
        with pytest.raises(ExogMissingError):
            forecast(m, 2, [np.zeros(2)])

    def test_coverage_small_study(self):
        order = ModelOrder(1, 0, 0)
        params = ParamVector(c=1.0, ar=[0.5], sigma2=1.0)
        hits = total = 0
        for seed in range(150):
            x = simulate(order, params, 206, seed=seed).values
            m = quiet_fit(order, x[:200], options=FitOptions(std_errors=False))
            fc = forecast(m, 6)
            hits += np.sum((fc.lower <= x[200:]) & (x[200:] <= fc.upper))
            total += 6
        assert 0.88 <= hits / total <= 0.99


class TestSimulate:
    def test_constant(self):
        s = simulate(ModelOrder(), ParamVector(c=5.0, sigma2=0.0), 20, seed=0)
        assert np.all(s.values == 5.0)

    def test_deterministic(self):
        order = ModelOrder(1, 1, 1)
        params = ParamVector(ar=[0.3], ma=[0.4], sigma2=1.0)
        a = simulate(order, params, 100, seed=42)
        b = simulate(order, params, 100, seed=42)
        assert a == b
        assert not simulate(order, params, 100, seed=43) == a

    def test_ar1_moment(self):
        x = ar1_series(7, 5000).values
        r1 = np.corrcoef(x[1:], x[:-1])[0, 1]
        assert abs(r1 - 0.6) < 0.05

    def test_explosive_without_enforcement(self):
        with pytest.raises(InstabilityError):
            simulate(ModelOrder(1, 0, 0, with_intercept=False), ParamVector(ar=[1.5]),
                     2000, seed=0, enforce_stationarity=False)

    def test_explosive_with_enforcement(self):
        with pytest.raises(InstabilityError):
            simulate(ModelOrder(1, 0, 0, with_intercept=False), ParamVector(ar=[1.5]),
                     100, seed=0)


class TestResidualDiagnostics:
    def test_white_noise_passes(self):
        passes = 0
        for seed in range(40):
            x = np.random.default_rng(seed).standard_normal(300)
            m = fit(ModelOrder(), x, options=FitOptions(std_errors=False))
            passes += residual_diagnostics(m).ljung_box.p_value > 0.05
        assert passes / 40 >= 0.9

    def test_standardized_variance(self):
        m = fit(ModelOrder(1, 0, 0), ar1_series(9, 1000))
        d = residual_diagnostics(m)
        assert abs(d.variance - 1.0) < 0.1
        assert abs(d.mean) < 0.1
        assert d.n == 1000

    def test_constant_residuals(self):
        m = fit(ModelOrder(), np.random.default_rng(0).standard_normal(50))
        flat = dataclasses.replace(m, residuals=m.residuals.with_values(np.ones(50)),
                                   innovation_variances=np.ones(50))
        with pytest.raises(DegenerateError):
            residual_diagnostics(flat)
