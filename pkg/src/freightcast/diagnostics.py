"""Stationarity, autocorrelation, whiteness and decomposition tools."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import stats

from .errors import (DegenerateError, DegreeOfFreedomError,
                     InsufficientDataError)
from .series import TimeSeries


def _as_array(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return np.asarray(x.values, dtype=float)
    return np.asarray(x, dtype=float)


def _centered(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean()
    # relative test so that positive rescaling cannot change the verdict
    if not np.any(np.abs(xc) > 1e-14 * max(np.max(np.abs(x)), 1e-300)):
        raise DegenerateError("series has zero variance")
    return xc


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    n: int

    def __getitem__(self, lag):
        return self.values[lag]


@dataclass(frozen=True)
class PacfResult:
    lags: np.ndarray
    values: np.ndarray
    n: int

    def __getitem__(self, lag):
        return self.values[lag]


def _acf_values(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(x)
    xc = _centered(x)
    denom = np.dot(xc, xc)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = np.dot(xc[k:], xc[:n - k]) / denom
    return out


def acf(series, max_lag: int) -> AcfResult:
    """Sample autocorrelations at lags ``0..max_lag``.

    Uses the biased autocovariance estimator (sums divided by ``n``), so the
    sequence is positive semi-definite and each value lies in [-1, 1].
    """
    x = _as_array(series)
    n = len(x)
    if not 0 <= max_lag < n:
        raise InsufficientDataError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    return AcfResult(np.arange(max_lag + 1), _acf_values(x, max_lag), n)


def durbin_levinson(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations from autocorrelations ``rho[0..K]`` (``rho[0] == 1``)."""
    K = len(rho) - 1
    pac = np.empty(K + 1)
    pac[0] = 1.0
    if K == 0:
        return pac
    phi = np.zeros(K + 1)
    phi[1] = rho[1]
    pac[1] = rho[1]
    v = 1.0 - rho[1] ** 2
    for k in range(2, K + 1):
        if v <= 0:
            raise DegenerateError("autocorrelation sequence is singular")
        num = rho[k] - np.dot(phi[1:k], rho[k - 1:0:-1])
        a = num / v
        new = phi.copy()
        new[1:k] = phi[1:k] - a * phi[k - 1:0:-1]
        new[k] = a
        phi = new
        pac[k] = a
        v *= 1.0 - a * a
    return pac


def pacf(series, max_lag: int) -> PacfResult:
    """Partial autocorrelations via the Durbin-Levinson recursion."""
    x = _as_array(series)
    n = len(x)
    if not 0 <= max_lag < n / 2:
        raise InsufficientDataError(f"pacf needs max_lag < n/2 = {n / 2}, got {max_lag}")
    return PacfResult(np.arange(max_lag + 1), durbin_levinson(_acf_values(x, max_lag)), n)


# --------------------------------------------------------------------------
# Augmented Dickey-Fuller
# --------------------------------------------------------------------------

class Deterministic(str, enum.Enum):
    CONSTANT = "c"
    CONSTANT_TREND = "ct"


# Single-regressor (N = 1) response-surface constants.
# p-values: MacKinnon, J.G. (1994) "Approximate asymptotic distribution
# functions for unit-root and cointegration tests", JBES 12(2), Table 3.
# p = Phi(poly(tau)) with the small-p polynomial for tau <= TAU_STAR and the
# large-p polynomial above it; tau beyond [TAU_MIN, TAU_MAX] maps to 0 / 1.
_TAU_STAR = {"c": -1.61, "ct": -2.89}
_TAU_MIN = {"c": -18.83, "ct": -16.18}
_TAU_MAX = {"c": 2.74, "ct": 0.70}
_SMALLP = {"c": (2.1659, 1.4412, 0.038269),
           "ct": (3.2512, 1.6047, 0.049588)}
_LARGEP = {"c": (1.7339, 0.93202, -0.12745, -0.010368),
           "ct": (2.5261, 0.61654, -0.37956, -0.060285)}

# Finite-sample critical values: MacKinnon, J.G. (2010) "Critical values for
# cointegration tests", Queen's Economics Dept. WP 1227, Table 2 (N = 1).
# cv(n) = b0 + b1/n + b2/n^2 + b3/n^3.
_CRIT = {
    "c": {"1%": (-3.43035, -6.5393, -16.786, -79.433),
          "5%": (-2.86154, -2.8903, -4.234, -40.040),
          "10%": (-2.56677, -1.5384, -2.809, 0.0)},
    "ct": {"1%": (-3.95877, -9.0531, -28.428, -134.155),
           "5%": (-3.41049, -4.3904, -9.036, -45.374),
           "10%": (-3.12705, -2.5856, -3.925, -22.380)},
}


def mackinnon_pvalue(stat: float, deterministic="c") -> float:
    key = Deterministic(deterministic).value
    if stat > _TAU_MAX[key]:
        return 1.0
    if stat < _TAU_MIN[key]:
        return 0.0
    coef = _SMALLP[key] if stat <= _TAU_STAR[key] else _LARGEP[key]
    z = sum(c * stat ** i for i, c in enumerate(coef))
    return float(stats.norm.cdf(z))


def mackinnon_critical_values(nobs: int, deterministic="c") -> dict:
    key = Deterministic(deterministic).value
    return {level: b[0] + b[1] / nobs + b[2] / nobs ** 2 + b[3] / nobs ** 3
            for level, b in _CRIT[key].items()}


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    nobs: int
    deterministic_terms: Deterministic
    critical_values: dict

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_value < level


def schwert_lags(n: int) -> int:
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(x: np.ndarray, lags: int, key: str):
    dx = np.diff(x)
    y = dx[lags:]
    m = len(y)
    cols = [x[lags:-1]]
    for i in range(1, lags + 1):
        cols.append(dx[lags - i:len(dx) - i])
    cols.append(np.ones(m))
    if key == "ct":
        cols.append(np.arange(lags + 1, lags + 1 + m, dtype=float))
    return y, np.column_stack(cols)


def _ols_tstat(y, X):
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise DegenerateError("ADF regression design is rank deficient")
    resid = y - X @ beta
    dof = len(y) - X.shape[1]
    if dof <= 0:
        raise InsufficientDataError("not enough observations for the ADF regression")
    s2 = resid @ resid / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(s2 * xtx_inv[0, 0])
    if se == 0:
        raise DegenerateError("ADF regression has a perfect fit")
    return beta[0] / se, resid, dof


def adf_test(series, max_lag: Union[int, str, None] = "schwert",
             deterministic_terms="c") -> AdfResult:
    """Augmented Dickey-Fuller test of a unit root.

    Parameters
    ----------
    series : TimeSeries or array_like
    max_lag : int, "schwert" or "aic"
        An integer fixes the number of lagged differences. ``"schwert"``
        uses ``floor(12 (n/100)^(1/4))``. ``"aic"`` searches ``0..schwert``
        on a common sample and keeps the lag count with the lowest AIC.
    deterministic_terms : {"c", "ct"}
        Constant only, or constant plus linear trend.
    """
    x = _as_array(series)
    n = len(x)
    if n < 20:
        raise InsufficientDataError(f"ADF test needs at least 20 observations, got {n}")
    key = Deterministic(deterministic_terms).value
    if max_lag is None or max_lag == "schwert":
        lags = schwert_lags(n)
    elif max_lag == "aic":
        top = schwert_lags(n)
        best = None
        for k in range(top + 1):
            y, X = _adf_design(x, top, key)
            X = X[:, [0, *range(1, k + 1), top + 1, *([top + 2] if key == "ct" else [])]]
            beta = np.linalg.lstsq(X, y, rcond=None)[0]
            rss = float(np.sum((y - X @ beta) ** 2))
            aic = len(y) * np.log(rss / len(y)) + 2 * X.shape[1]
            if best is None or aic < best[0]:
                best = (aic, k)
        lags = best[1]
    else:
        lags = int(max_lag)
    # keep enough observations for the regression
    lags = max(0, min(lags, (n - 1) // 2 - 3))
    y, X = _adf_design(x, lags, key)
    tstat, _, _ = _ols_tstat(y, X)
    nobs = len(y)
    return AdfResult(float(tstat), mackinnon_pvalue(tstat, key), lags, nobs,
                     Deterministic(key), mackinnon_critical_values(nobs, key))


# --------------------------------------------------------------------------
# Ljung-Box
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LjungBoxResult:
    q_stat: float
    df: int
    p_value: float
    lags: int


def default_ljung_box_lags(n: int) -> int:
    return max(1, min(10, n // 5))


def ljung_box(residuals, h: Optional[int] = None, fitted_params: int = 0) -> LjungBoxResult:
    """Ljung-Box portmanteau statistic with ``h - fitted_params`` degrees of freedom."""
    x = _as_array(residuals)
    n = len(x)
    if h is None:
        h = default_ljung_box_lags(n)
    df = h - fitted_params
    if df <= 0:
        raise DegreeOfFreedomError(
            f"Ljung-Box with h={h} and {fitted_params} fitted parameters has df={df}")
    if n <= h:
        raise InsufficientDataError(f"Ljung-Box needs n > h (n={n}, h={h})")
    rho = _acf_values(x, h)[1:]
    k = np.arange(1, h + 1)
    q = float(n * (n + 2) * np.sum(rho ** 2 / (n - k)))
    return LjungBoxResult(q, df, float(stats.chi2.sf(q, df)), h)


# --------------------------------------------------------------------------
# Classical decomposition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionResult:
    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int


def centered_moving_average(x: np.ndarray, period: int) -> np.ndarray:
    """Centred MA of length ``period`` (``2 x period`` for even periods); NaN at the edges."""
    if period % 2:
        w = np.full(period, 1.0 / period)
    else:
        w = np.full(period + 1, 1.0 / period)
        w[0] = w[-1] = 0.5 / period
    half = len(w) // 2
    out = np.full(len(x), np.nan)
    out[half:len(x) - half] = np.convolve(x, w, mode="valid")
    return out


def classical_decompose(series, period: int, mode: str = "additive") -> DecompositionResult:
    if mode != "additive":
        raise ValueError("only additive decomposition is supported")
    x = _as_array(series)
    n = len(x)
    if period < 2 or n < 2 * period:
        raise InsufficientDataError(f"decomposition needs n >= 2*period ({n} < {2 * period})")
    trend = centered_moving_average(x, period)
    detrended = x - trend
    phase = np.arange(n) % period
    means = np.array([np.nanmean(detrended[phase == s]) for s in range(period)])
    means -= means.mean()
    seasonal = means[phase]
    return DecompositionResult(trend, seasonal, x - trend - seasonal, period)


def pearson_corr(a, b) -> float:
    x, y = _as_array(a), _as_array(b)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    xc, yc = _centered(x), _centered(y)
    r = np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    return float(np.clip(r, -1.0, 1.0))


# --------------------------------------------------------------------------
# Order suggestion (advisory)
# --------------------------------------------------------------------------

def suggest_orders(series, max_lag: int = 24) -> dict:
    """Cut-off based hints for AR and MA orders from the ACF/PACF.

    The last lag whose |value| exceeds ``2/sqrt(n)`` before a run of three
    insignificant lags is reported as the cut-off. Purely advisory.
    """
    x = _as_array(series)
    n = len(x)
    max_lag = min(max_lag, n // 2 - 1)
    if max_lag < 1:
        return {"ar": 0, "ma": 0, "bound": None}
    bound = 2.0 / np.sqrt(n)

    def cutoff(vals):
        last, quiet = 0, 0
        for k in range(1, len(vals)):
            if abs(vals[k]) > bound:
                last, quiet = k, 0
            else:
                quiet += 1
                if quiet >= 3:
                    break
        return last

    return {"ar": cutoff(pacf(x, max_lag).values),
            "ma": cutoff(acf(x, max_lag).values),
            "bound": float(bound)}
