"""SARIMA / SARIMAX estimation and forecasting.

The observed series ``x_t`` is first transformed (``w_t = g(x_t)``), the
covariate effect is removed in levels (``s_t = w_t - beta' n_t``) and
the result is differenced ``d`` times and seasonally differenced ``D``
times. What remains follows a stationary multiplicative ARMA model with
mean ``mu = c / (phi(1) Phi(1))``, whose exact likelihood comes from the
Kalman filter in :mod:`.kalman`. The first ``d + D*S`` observations are
consumed by differencing and do not enter the likelihood.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, signal, stats

from ..diagnostics import ljung_box
from ..errors import (ConvergenceError, ExogMissingError, InstabilityError,
                      InsufficientDataError, LengthError, NumericalError,
                      SingularHessianError)
from ..series import (DifferenceSpec, TimeSeries, Transform, difference_values,
                      forward_transform, integrate_values, inverse_transform,
                      log_jacobian)
from . import kalman
from .polynomials import (ar_polynomial, constrain_invertible,
                          constrain_stationary, is_stationary, ma_polynomial,
                          unconstrain_invertible, unconstrain_stationary)

log = logging.getLogger(__name__)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelOrder:
    """``(p, d, q)(P, D, Q, S)`` plus the pre-model transformation.

    ``with_intercept=None`` resolves to "include an intercept only when the
    model is undifferenced".
    """

    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    S: int = 12
    transform: Transform = Transform.NONE
    with_intercept: Optional[bool] = None

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q"):
            if getattr(self, name) < 0:
                raise ValueError(f"order {name} must be non-negative")
        if self.S < 1:
            raise ValueError("seasonal period S must be positive")
        if (self.P, self.D, self.Q) != (0, 0, 0) and self.S < 2:
            raise ValueError("seasonal terms need S >= 2")
        object.__setattr__(self, "transform", Transform.coerce(self.transform))

    @property
    def intercept(self) -> bool:
        if self.with_intercept is None:
            return self.d + self.D == 0
        return bool(self.with_intercept)

    @property
    def diff_spec(self) -> DifferenceSpec:
        return DifferenceSpec(self.d, self.D, self.S)

    @property
    def n_arma(self) -> int:
        return self.p + self.q + self.P + self.Q

    def k_params(self, k_exog: int = 0) -> int:
        """Number of estimated parameters, sigma2 included."""
        return int(self.intercept) + k_exog + self.n_arma + 1

    def as_tuple(self) -> tuple:
        return (self.p, self.d, self.q, self.P, self.D, self.Q, self.S)

    def label(self) -> str:
        core = f"({self.p},{self.d},{self.q})"
        if (self.P, self.D, self.Q) != (0, 0, 0):
            core += f"({self.P},{self.D},{self.Q},{self.S})"
        extra = "" if self.transform is Transform.NONE else f" {self.transform.value}"
        return f"SARIMA{core}{extra}"

    def to_dict(self) -> dict:
        return {"p": self.p, "d": self.d, "q": self.q, "P": self.P, "D": self.D,
                "Q": self.Q, "S": self.S, "transform": self.transform.value,
                "with_intercept": self.intercept}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelOrder":
        keys = {"p", "d", "q", "P", "D", "Q", "S", "transform", "with_intercept"}
        unknown = set(data) - keys
        if unknown:
            raise ValueError(f"unknown model order keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ParamVector:
    c: Optional[float] = None
    ar: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sar: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("ar", "ma", "sar", "sma", "beta"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")

    def check(self, order: ModelOrder, k_exog: int = 0):
        expected = {"ar": order.p, "ma": order.q, "sar": order.P,
                    "sma": order.Q, "beta": k_exog}
        for name, k in expected.items():
            if len(getattr(self, name)) != k:
                raise LengthError(f"{name} has {len(getattr(self, name))} "
                                  f"coefficients, order needs {k}")
        if order.intercept and self.c is None:
            raise LengthError("order has an intercept but params.c is None")

    def ar_poly(self, S: int) -> np.ndarray:
        return ar_polynomial(self.ar, self.sar, S)

    def ma_poly(self, S: int) -> np.ndarray:
        return ma_polynomial(self.ma, self.sma, S)

    def mean(self, S: int) -> float:
        """Mean of the differenced, covariate-adjusted series."""
        if self.c is None:
            return 0.0
        return self.c / float(np.sum(self.ar_poly(S)))

    def to_array(self) -> np.ndarray:
        head = [] if self.c is None else [self.c]
        return np.concatenate([head, self.beta, self.ar, self.ma, self.sar,
                               self.sma, [self.sigma2]])

    @classmethod
    def from_array(cls, x, order: ModelOrder, k_exog: int = 0) -> "ParamVector":
        x = np.asarray(x, dtype=float)
        i = 0
        c = None
        if order.intercept:
            c = float(x[0])
            i = 1
        parts = []
        for k in (k_exog, order.p, order.q, order.P, order.Q):
            parts.append(x[i:i + k])
            i += k
        if len(x) != i + 1:
            raise LengthError(f"expected {i + 1} parameters, got {len(x)}")
        beta, ar, ma, sar, sma = parts
        return cls(c=c, ar=ar, ma=ma, sar=sar, sma=sma, beta=beta, sigma2=float(x[i]))

    @staticmethod
    def names(order: ModelOrder, exog_names: Sequence[str] = ()) -> list:
        out = ["intercept"] if order.intercept else []
        out += [f"exog.{n}" for n in exog_names]
        out += [f"ar.L{i}" for i in range(1, order.p + 1)]
        out += [f"ma.L{i}" for i in range(1, order.q + 1)]
        out += [f"ar.S.L{i * order.S}" for i in range(1, order.P + 1)]
        out += [f"ma.S.L{i * order.S}" for i in range(1, order.Q + 1)]
        return out + ["sigma2"]

    def to_dict(self, order: ModelOrder, exog_names: Sequence[str] = ()) -> dict:
        return dict(zip(self.names(order, exog_names), self.to_array().tolist()))


@dataclass(frozen=True)
class FitOptions:
    enforce_stationarity: bool = True
    enforce_invertibility: bool = True
    maxiter: int = 500
    std_errors: bool = True
    raise_on_failure: bool = False
    start_params: Optional[ParamVector] = None


@dataclass(frozen=True, eq=False)
class FittedModel:
    order: ModelOrder
    params: ParamVector
    loglik: float
    aic: float
    k_params: int
    std_errors: Optional[np.ndarray]
    exog_p_values: Optional[np.ndarray]
    residuals: TimeSeries
    innovation_variances: np.ndarray
    converged: bool
    endog: TimeSeries
    exog: Optional[np.ndarray] = None
    exog_names: tuple = ()
    nobs: int = 0
    optimizer_message: str = ""

    def __post_init__(self):
        if self.aic != 2 * self.k_params - 2 * self.loglik:
            raise ValueError(f"aic {self.aic!r} is not 2k - 2LL for k={self.k_params}, "
                             f"LL={self.loglik!r}")

    @property
    def k_exog(self) -> int:
        return 0 if self.exog is None else self.exog.shape[1]

    @property
    def param_names(self) -> list:
        return ParamVector.names(self.order, self.exog_names)

    @property
    def standardized_residuals(self) -> np.ndarray:
        return self.residuals.values / np.sqrt(self.innovation_variances)

    @property
    def aic_original_scale(self) -> float:
        """AIC of the untransformed data: adds the Jacobian of the transform."""
        usable = self.endog.values[self.order.diff_spec.order:]
        return self.aic - 2.0 * log_jacobian(usable, self.order.transform)


@dataclass(frozen=True)
class Forecast:
    """Forecast medians and central interval bounds on the original scale."""

    start: object
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    mean_transformed: np.ndarray
    sd_transformed: np.ndarray
    frequency: object = None

    @property
    def horizon(self) -> int:
        return len(self.median)

    def as_series(self, which: str = "median") -> TimeSeries:
        return TimeSeries(self.start, getattr(self, which), self.frequency)


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

def _exog_matrix(exog, n: int) -> Optional[np.ndarray]:
    if exog is None:
        return None
    if isinstance(exog, TimeSeries):
        exog = [exog]
    if isinstance(exog, (list, tuple)):
        if len(exog) == 0:
            return None
        cols = [np.asarray(e.values if isinstance(e, TimeSeries) else e, dtype=float)
                for e in exog]
        X = np.column_stack(cols)
    else:
        X = np.asarray(exog, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
    if X.shape[0] < n:
        raise LengthError(f"exog has {X.shape[0]} rows, need at least {n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("exog contains non-finite values")
    return X


def _exog_names(exog, k: int) -> tuple:
    if isinstance(exog, TimeSeries):
        exog = [exog]
    if isinstance(exog, (list, tuple)):
        names = [getattr(e, "name", "") or f"x{i + 1}" for i, e in enumerate(exog)]
        return tuple(names)
    return tuple(f"x{i + 1}" for i in range(k))


def _endog_values(endog) -> np.ndarray:
    if isinstance(endog, TimeSeries):
        return np.asarray(endog.values, dtype=float)
    return np.asarray(endog, dtype=float)


def _reduced(order: ModelOrder, params: ParamVector, w: np.ndarray,
             X: Optional[np.ndarray]) -> np.ndarray:
    """Differenced, covariate-adjusted, demeaned series fed to the filter."""
    s = w if X is None else w - X[:len(w)] @ params.beta
    y = difference_values(s, order.diff_spec)
    return y - params.mean(order.S)


def _loglik_w(order, params, w, X) -> kalman.FilterOutput:
    y = _reduced(order, params, w, X)
    return kalman.run_filter(y, params.ar_poly(order.S), params.ma_poly(order.S),
                             params.sigma2)


def kalman_loglik(order: ModelOrder, params: ParamVector, endog, exog=None) -> float:
    """Exact Gaussian log-likelihood of the differenced, transformed series."""
    x = _endog_values(endog)
    k = order.diff_spec.order
    if len(x) <= k:
        raise InsufficientDataError(f"need more than {k} observations, got {len(x)}")
    X = _exog_matrix(exog, len(x))
    params.check(order, 0 if X is None else X.shape[1])
    w = forward_transform(x, order.transform)
    return _loglik_w(order, params, w, X).loglik


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

def _lag_matrix(u: np.ndarray, lags: Sequence[int]):
    top = max(lags)
    return u[top:], np.column_stack([u[top - l:len(u) - l] for l in lags])


def _ols(y, X):
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _start_params(order: ModelOrder, w: np.ndarray, X: Optional[np.ndarray]) -> ParamVector:
    spec = order.diff_spec
    y = difference_values(w, spec)
    k_exog = 0 if X is None else X.shape[1]
    cols = []
    if order.intercept:
        cols.append(np.ones(len(y)))
    if X is not None:
        Xd = np.column_stack([difference_values(X[:len(w), j], spec) for j in range(k_exog)])
        cols.extend(Xd.T)
    if cols:
        Z = np.column_stack(cols)
        coef = _ols(y, Z)
        u = y - Z @ coef
    else:
        coef = np.zeros(0)
        u = y.copy()
    mu = coef[0] if order.intercept else 0.0
    beta = coef[int(order.intercept):]
    resid = u
    ar = np.zeros(order.p)
    if order.p and len(u) > 3 * order.p:
        target, lagged = _lag_matrix(u, list(range(1, order.p + 1)))
        cand = _ols(target, lagged)
        if is_stationary(ar_polynomial(cand)):
            ar = cand
    sar = np.zeros(order.P)
    lags = [i * order.S for i in range(1, order.P + 1)]
    if order.P and len(u) > max(lags) + 3 * order.P:
        target, lagged = _lag_matrix(u, lags)
        cand = _ols(target, lagged)
        if is_stationary(ar_polynomial(cand)):
            sar = cand
    if order.p or order.P:
        poly = ar_polynomial(ar, sar, order.S)
        lag = len(poly) - 1
        if len(u) > lag + 2:
            resid = signal.lfilter(poly, [1.0], u)[lag:]
    sigma2 = float(np.var(resid)) if len(resid) > 1 else 1.0
    if not sigma2 > 0:
        sigma2 = 1.0
    c = None
    if order.intercept:
        c = float(mu * np.sum(ar_polynomial(ar, sar, order.S)))
    return ParamVector(c=c, ar=ar, ma=np.zeros(order.q), sar=sar,
                       sma=np.zeros(order.Q), beta=beta, sigma2=sigma2)


class _Packer:
    """Map between natural parameters and the unconstrained optimiser vector."""

    def __init__(self, order: ModelOrder, k_exog: int, options: FitOptions):
        self.order = order
        self.k_exog = k_exog
        self.stat = options.enforce_stationarity
        self.inv = options.enforce_invertibility

    def pack(self, params: ParamVector) -> np.ndarray:
        o = self.order
        head = [] if params.c is None else [params.c]
        ar = unconstrain_stationary(params.ar) if self.stat else params.ar
        sar = unconstrain_stationary(params.sar) if self.stat else params.sar
        ma = unconstrain_invertible(params.ma) if self.inv else params.ma
        sma = unconstrain_invertible(params.sma) if self.inv else params.sma
        return np.concatenate([head, params.beta, ar, ma, sar, sma,
                               [np.log(params.sigma2)]])

    def unpack(self, x) -> ParamVector:
        o = self.order
        i = 0
        c = None
        if o.intercept:
            c = float(x[0])
            i = 1
        beta = x[i:i + self.k_exog]; i += self.k_exog
        ar = x[i:i + o.p]; i += o.p
        ma = x[i:i + o.q]; i += o.q
        sar = x[i:i + o.P]; i += o.P
        sma = x[i:i + o.Q]; i += o.Q
        if self.stat:
            ar, sar = constrain_stationary(ar), constrain_stationary(sar)
        if self.inv:
            ma, sma = constrain_invertible(ma), constrain_invertible(sma)
        return ParamVector(c=c, ar=ar, ma=ma, sar=sar, sma=sma, beta=beta,
                           sigma2=float(np.exp(x[i])))


_PENALTY = 1e10


def _numerical_hessian(f, x: np.ndarray) -> np.ndarray:
    k = len(x)
    h = 1e-4 * np.maximum(np.abs(x), 1e-2)
    H = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            H[i, j] = H[j, i] = val
    return H


def _std_errors(order, params, w, X, k_exog):
    def negll(theta):
        return -_loglik_w(order, ParamVector.from_array(theta, order, k_exog), w, X).loglik

    x0 = params.to_array()
    try:
        H = _numerical_hessian(negll, x0)
    except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
        raise SingularHessianError(f"Hessian evaluation failed: {exc}") from exc
    if not np.all(np.isfinite(H)):
        raise SingularHessianError("Hessian has non-finite entries")
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError as exc:
        raise SingularHessianError("Hessian is singular") from exc
    var = np.diag(cov)
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        raise SingularHessianError("Hessian is not positive definite at the optimum")
    return np.sqrt(var)


def fit(order: ModelOrder, endog, exog=None, options: FitOptions = FitOptions()) -> FittedModel:
    """Maximum likelihood estimation.

    The optimiser works on an unconstrained vector: AR and MA blocks go
    through the partial-autocorrelation bijection, ``sigma2`` through its
    logarithm. L-BFGS-B with central-difference gradients runs first; on
    failure a Nelder-Mead search restarts from the best point and a final
    quasi-Newton pass polishes it.
    """
    if not isinstance(endog, TimeSeries):
        endog = TimeSeries("2000-01", endog)
    x = endog.values
    X = _exog_matrix(exog, len(x))
    if X is not None:
        X = X[:len(x)]
    k_exog = 0 if X is None else X.shape[1]
    names = _exog_names(exog, k_exog) if X is not None else ()
    spec = order.diff_spec
    usable = len(x) - spec.order
    k = order.k_params(k_exog)
    if usable < 5 * k or usable <= order.n_arma + k_exog + 1:
        raise InsufficientDataError(
            f"{usable} usable observations for {k} parameters (need >= {5 * k})")
    if usable < 10 * k:
        log.warning("only %d usable observations for %d parameters", usable, k)
    w = forward_transform(x, order.transform)

    packer = _Packer(order, k_exog, options)
    start = options.start_params or _start_params(order, w, X)
    start.check(order, k_exog)
    x0 = packer.pack(start)

    n_eff = float(usable)
    scale = max(float(np.var(difference_values(w, spec))), 1e-300)
    lo = np.log(scale) + np.log(1e-12)
    bounds = [(None, None)] * (len(x0) - 1) + [(lo, None)]
    x0[-1] = max(x0[-1], lo + 1.0)

    def objective(theta):
        try:
            return -_loglik_w(order, packer.unpack(theta), w, X).loglik / n_eff
        except (NumericalError, ValueError, np.linalg.LinAlgError, FloatingPointError):
            return _PENALTY

    def quasi_newton(theta):
        return optimize.minimize(objective, theta, method="L-BFGS-B", jac="3-point",
                                 bounds=bounds,
                                 options={"maxiter": options.maxiter, "ftol": 1e-12,
                                          "gtol": 1e-7})

    with np.errstate(all="ignore"):
        res = quasi_newton(x0)
        best = res
        converged = bool(res.success) and res.fun < _PENALTY
        if not converged:
            log.info("quasi-Newton did not converge (%s); restarting from simplex search",
                     res.message)
            nm = optimize.minimize(objective, best.x, method="Nelder-Mead",
                                   options={"maxiter": options.maxiter * len(x0),
                                            "xatol": 1e-8, "fatol": 1e-12})
            if nm.fun < best.fun:
                best = nm
            polish = quasi_newton(best.x)
            if polish.fun <= best.fun:
                best = polish
            converged = bool(polish.success) and polish.fun < _PENALTY
    if best.fun >= _PENALTY:
        raise NumericalError("likelihood could not be evaluated at any trial point")
    message = str(getattr(best, "message", ""))
    if not converged:
        if options.raise_on_failure:
            raise ConvergenceError(f"optimiser did not converge: {message}")
        warnings.warn(f"optimiser did not converge for {order.label()}: {message}",
                      ConvergenceWarning, stacklevel=2)

    params = packer.unpack(best.x)
    out = _loglik_w(order, params, w, X)
    loglik = out.loglik
    std_errors = exog_p = None
    if options.std_errors:
        try:
            std_errors = _std_errors(order, params, w, X, k_exog)
        except SingularHessianError as exc:
            log.warning("standard errors unavailable: %s", exc)
    if std_errors is not None and k_exog:
        i0 = int(order.intercept)
        z = params.beta / std_errors[i0:i0 + k_exog]
        exog_p = 2.0 * stats.norm.sf(np.abs(z))
    resid = TimeSeries(endog.period_at(spec.order), out.innovations, endog.frequency,
                       endog.name)
    return FittedModel(order=order, params=params, loglik=loglik,
                       aic=2 * k - 2 * loglik, k_params=k, std_errors=std_errors,
                       exog_p_values=exog_p, residuals=resid,
                       innovation_variances=out.variances, converged=converged,
                       endog=endog, exog=X, exog_names=names, nobs=usable,
                       optimizer_message=message)


# ---------------------------------------------------------------------------
# forecasting
# ---------------------------------------------------------------------------

def _integration_matrix(spec: DifferenceSpec, h: int) -> np.ndarray:
    """Lower-triangular map from differenced forecast errors to level errors."""
    k = spec.order
    psi = integrate_values(np.eye(1, h, 0).ravel(), spec, np.zeros(k))[k:]
    Psi = np.zeros((h, h))
    for i in range(h):
        Psi[i, :i + 1] = psi[i::-1]
    return Psi


def forecast_transformed(order: ModelOrder, params: ParamVector, w: np.ndarray,
                         X_hist: Optional[np.ndarray], X_future: Optional[np.ndarray],
                         horizon: int):
    """Mean and variance of ``w_{n+1..n+h}`` given ``w_{1..n}`` (transformed scale)."""
    spec = order.diff_spec
    out = _loglik_w(order, params, w, X_hist)
    means, cov = kalman.forecast_moments(out, params.ar_poly(order.S),
                                         params.ma_poly(order.S), params.sigma2, horizon)
    means = means + params.mean(order.S)
    s = w if X_hist is None else w - X_hist[:len(w)] @ params.beta
    k = spec.order
    level = integrate_values(means, spec, s[len(s) - k:])[k:]
    if X_future is not None:
        level = level + X_future[:horizon] @ params.beta
    Psi = _integration_matrix(spec, horizon)
    var = np.einsum("ij,jk,ik->i", Psi, cov, Psi)
    return level, np.maximum(var, 0.0)


def rolling_forecasts(order: ModelOrder, params: ParamVector, x: np.ndarray,
                      X: Optional[np.ndarray], ends: Sequence[int], horizon: int) -> np.ndarray:
    """Median ``horizon``-step forecasts from many origins with fixed parameters.

    Row ``i`` holds the forecasts of ``x[ends[i]:ends[i] + horizon]`` made
    from ``x[:ends[i]]``. A single filter pass over the full series supplies
    the predicted state at every origin, which matches refiltering each
    history separately. ``X`` must cover ``max(ends) + horizon`` rows when
    given; its future values are taken as known.
    """
    spec = order.diff_spec
    k = spec.order
    w = forward_transform(x, order.transform)
    s = w if X is None else w - X[:len(w)] @ params.beta
    arp, map_ = params.ar_poly(order.S), params.ma_poly(order.S)
    out = _loglik_w(order, params, w, X)
    mu = params.mean(order.S)
    res = np.empty((len(ends), horizon))
    for i, end in enumerate(ends):
        if end <= k:
            raise LengthError(f"origin {end} leaves no differenced observations")
        means = kalman.project_state(out.states[end - k], arp, map_, horizon) + mu
        level = integrate_values(means, spec, s[end - k:end])[k:]
        if X is not None:
            level = level + X[end:end + horizon] @ params.beta
        res[i] = inverse_transform(level, order.transform)
    return res


def forecast(model: FittedModel, horizon: int, future_exog=None,
             level: float = 0.95) -> Forecast:
    """Out-of-sample forecast; medians and bounds are on the original scale."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    Xf = None
    if model.k_exog:
        if future_exog is None:
            raise ExogMissingError("model has covariates; future_exog is required")
        try:
            Xf = _exog_matrix(future_exog, horizon)
        except LengthError as exc:
            raise ExogMissingError(f"future_exog is shorter than the horizon: {exc}") from exc
        if Xf.shape[1] != model.k_exog:
            raise ExogMissingError(f"future_exog has {Xf.shape[1]} columns, "
                                   f"model needs {model.k_exog}")
    elif future_exog is not None:
        raise ExogMissingError("future_exog given but the model has no covariates")
    w = forward_transform(model.endog.values, model.order.transform)
    mean, var = forecast_transformed(model.order, model.params, w, model.exog, Xf, horizon)
    return _make_forecast(model.order.transform, mean, var, level,
                          model.endog.period_at(len(model.endog)), model.endog.frequency)


def _make_forecast(transform, mean, var, level, start, frequency) -> Forecast:
    z = stats.norm.ppf(0.5 + level / 2.0)
    sd = np.sqrt(var)
    return Forecast(start=start,
                    median=inverse_transform(mean, transform),
                    lower=inverse_transform(mean - z * sd, transform),
                    upper=inverse_transform(mean + z * sd, transform),
                    level=level, mean_transformed=mean, sd_transformed=sd,
                    frequency=frequency)


def predict_in_sample(model: FittedModel) -> TimeSeries:
    """One-step-ahead predictions of the transformed series over the usable sample."""
    w = forward_transform(model.endog.values, model.order.transform)
    out = _loglik_w(model.order, model.params, w, model.exog)
    k = model.order.diff_spec.order
    return TimeSeries(model.endog.period_at(k), w[k:] - out.innovations,
                      model.endog.frequency, model.endog.name)


# ---------------------------------------------------------------------------
# simulation and residual checks
# ---------------------------------------------------------------------------

def simulate(order: ModelOrder, params: ParamVector, n: int, seed=None, exog=None,
             initial=None, enforce_stationarity: bool = True, burn: Optional[int] = None,
             start="2000-01") -> TimeSeries:
    """Draw a path of length ``n`` on the original scale.

    The first ``d + D*S`` values of the covariate-free level series are
    ``initial`` (zeros by default); the stationary ARMA part runs through a
    burn-in before it is kept.
    """
    X = _exog_matrix(exog, n)
    params.check(order, 0 if X is None else X.shape[1])
    spec = order.diff_spec
    k = spec.order
    if n <= k:
        raise LengthError(f"n={n} must exceed the {k} values consumed by differencing")
    arp = params.ar_poly(order.S)
    map_ = params.ma_poly(order.S)
    if enforce_stationarity and not is_stationary(arp):
        raise InstabilityError("AR polynomial has roots on or inside the unit circle")
    if burn is None:
        burn = max(200, 10 * (len(arp) + len(map_)))
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n - k + burn) * np.sqrt(params.sigma2)
    with np.errstate(all="ignore"):
        u = signal.lfilter(map_, arp, e)[burn:]
    if not np.all(np.isfinite(u)) or np.max(np.abs(u), initial=0.0) > 1e100:
        raise InstabilityError("simulated path diverged")
    y = u + params.mean(order.S)
    initial = np.zeros(k) if initial is None else np.asarray(initial, dtype=float)
    s = integrate_values(y, spec, initial)
    w = s if X is None else s + X[:n] @ params.beta
    return TimeSeries(start, inverse_transform(w, order.transform))


@dataclass(frozen=True)
class ResidualDiagnostics:
    ljung_box: object
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    n: int


def residual_diagnostics(model: FittedModel, h: Optional[int] = None) -> ResidualDiagnostics:
    z = model.standardized_residuals
    lb = ljung_box(z, h=h, fitted_params=model.order.n_arma)
    return ResidualDiagnostics(ljung_box=lb, mean=float(np.mean(z)),
                               variance=float(np.var(z)),
                               skewness=float(stats.skew(z)),
                               excess_kurtosis=float(stats.kurtosis(z)),
                               n=len(z))


def with_params(model: FittedModel, params: ParamVector) -> FittedModel:
    """Re-evaluate ``model`` at other parameters (same data, no re-estimation)."""
    w = forward_transform(model.endog.values, model.order.transform)
    out = _loglik_w(model.order, params, w, model.exog)
    resid = model.residuals.with_values(out.innovations)
    return replace(model, params=params, loglik=out.loglik,
                   aic=2 * model.k_params - 2 * out.loglik, residuals=resid,
                   innovation_variances=out.variances, std_errors=None,
                   exog_p_values=None)


def model_from_params(order: ModelOrder, params: ParamVector, endog: TimeSeries,
                      exog=None, exog_names: Sequence[str] = (), converged: bool = True,
                      std_errors=None, exog_p_values=None, message: str = "") -> FittedModel:
    """Rebuild a fitted model from stored parameters and its training data."""
    x = endog.values
    X = _exog_matrix(exog, len(x))
    if X is not None:
        X = X[:len(x)]
    k_exog = 0 if X is None else X.shape[1]
    params.check(order, k_exog)
    w = forward_transform(x, order.transform)
    out = _loglik_w(order, params, w, X)
    k = order.k_params(k_exog)
    spec = order.diff_spec
    resid = TimeSeries(endog.period_at(spec.order), out.innovations, endog.frequency,
                       endog.name)
    return FittedModel(order=order, params=params, loglik=out.loglik,
                       aic=2 * k - 2 * out.loglik, k_params=k,
                       std_errors=None if std_errors is None else np.asarray(std_errors, float),
                       exog_p_values=(None if exog_p_values is None
                                      else np.asarray(exog_p_values, float)),
                       residuals=resid, innovation_variances=out.variances,
                       converged=converged, endog=endog, exog=X,
                       exog_names=tuple(exog_names), nobs=len(x) - spec.order,
                       optimizer_message=message)
