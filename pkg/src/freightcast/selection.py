"""Grid search over SARIMA orders with residual gating and backtest metrics."""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .diagnostics import adf_test, suggest_orders
from .errors import (AllCandidatesFailedError, FreightcastError,
                     InsufficientDataError)
from .sarimax import (ConvergenceWarning, FitOptions, FittedModel, ModelOrder,
                      fit, residual_diagnostics)
from .sarimax.model import _exog_matrix, forecast_transformed, rolling_forecasts
from .series import (DifferenceSpec, TimeSeries, Transform, difference_values,
                     forward_transform, inverse_transform)

log = logging.getLogger(__name__)

GATE_P_VALUE = 0.05


@dataclass(frozen=True)
class CandidateGrid:
    """Inclusive ranges for the ARMA orders plus discrete d/D/transform choices."""

    p: tuple = (0, 2)
    q: tuple = (0, 2)
    P: tuple = (0, 1)
    Q: tuple = (0, 1)
    d: tuple = (1,)
    D: tuple = (1,)
    S: int = 12
    transforms: tuple = (Transform.NONE,)
    with_intercept: Optional[bool] = None
    max_size: int = 512

    def __post_init__(self):
        for name in ("p", "q", "P", "Q"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"bad range for {name}: {(lo, hi)}")
        if any(v < 0 for v in (*self.d, *self.D)):
            raise ValueError("differencing choices must be non-negative")
        object.__setattr__(self, "transforms",
                           tuple(Transform.coerce(t) for t in self.transforms))
        if self.size() > self.max_size:
            raise ValueError(f"grid has {self.size()} candidates; limit is {self.max_size}")
        if self.size() == 0:
            raise ValueError("grid is empty")

    def _span(self, name):
        lo, hi = getattr(self, name)
        return range(lo, hi + 1)

    def size(self) -> int:
        n = len(self.d) * len(self.D) * len(self.transforms)
        for name in ("p", "q", "P", "Q"):
            lo, hi = getattr(self, name)
            n *= hi - lo + 1
        return n

    def candidates(self) -> list:
        out = []
        for t, d, D, p, q, P, Q in itertools.product(
                self.transforms, self.d, self.D, self._span("p"), self._span("q"),
                self._span("P"), self._span("Q")):
            out.append(ModelOrder(p, d, q, P, D, Q, self.S, transform=t,
                                  with_intercept=self.with_intercept))
        return out

    @classmethod
    def single(cls, order: ModelOrder) -> "CandidateGrid":
        return cls(p=(order.p, order.p), q=(order.q, order.q), P=(order.P, order.P),
                   Q=(order.Q, order.Q), d=(order.d,), D=(order.D,), S=order.S,
                   transforms=(order.transform,), with_intercept=order.with_intercept)

    @classmethod
    def from_orders(cls, orders: Sequence[ModelOrder]) -> "ExplicitGrid":
        return ExplicitGrid(tuple(orders))


@dataclass(frozen=True)
class ExplicitGrid:
    """A grid given as a plain list of orders."""

    orders: tuple

    def __post_init__(self):
        if not self.orders:
            raise ValueError("grid is empty")

    def candidates(self) -> list:
        return list(self.orders)

    def size(self) -> int:
        return len(self.orders)

    @property
    def transforms(self) -> tuple:
        seen = []
        for o in self.orders:
            if o.transform not in seen:
                seen.append(o.transform)
        return tuple(seen)


# ---------------------------------------------------------------------------
# backtesting
# ---------------------------------------------------------------------------

def mape(actual, predicted) -> float:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    return float(np.mean(np.abs(actual - predicted) / actual) * 100.0)


def mad(actual, predicted) -> float:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    return float(np.mean(np.abs(actual - predicted)))


@dataclass(frozen=True)
class HoldoutPolicy:
    """Which observations are scored and how forecasts are produced.

    The evaluation span is the last ``eval_periods`` observations (default:
    the last ``eval_fraction`` of the series). With ``refit=False`` the
    parameters estimated on the whole series are kept fixed and only the
    conditioning data moves with the forecast origin.
    """

    eval_fraction: float = 0.75
    eval_periods: Optional[int] = None
    refit: bool = False
    short_horizon: int = 1
    long_horizon: int = 12
    min_origins: int = 12

    def span(self, n: int) -> int:
        if self.eval_periods is not None:
            return min(self.eval_periods, n)
        return int(math.floor(self.eval_fraction * n))


@dataclass(frozen=True)
class BacktestMetrics:
    mape_1: float
    mad_1: float
    mape_12: float
    mad_12: float
    n_1: int
    n_12: int


Forecaster = Callable[[np.ndarray, Optional[np.ndarray], Optional[np.ndarray], int], np.ndarray]


def sarimax_forecaster(model: FittedModel, refit: bool = False) -> Forecaster:
    """Median forecasts from ``model``'s order, optionally re-estimated per origin."""
    order = model.order

    def predict(history, exog_history, exog_future, horizon):
        params = model.params
        if refit:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                params = fit(order, TimeSeries("2000-01", history), exog_history,
                             FitOptions(std_errors=False)).params
        w = forward_transform(history, order.transform)
        mean, _ = forecast_transformed(order, params, w, exog_history, exog_future, horizon)
        return inverse_transform(mean, order.transform)

    return predict


def backtest_metrics(order: ModelOrder, series: TimeSeries, exog=None,
                     policy: HoldoutPolicy = HoldoutPolicy(),
                     model: Optional[FittedModel] = None,
                     forecaster: Optional[Forecaster] = None) -> BacktestMetrics:
    """Rolling-origin 1-step and 12-step MAPE/MAD on the original scale.

    For horizon ``h`` every target ``t`` in the evaluation span is forecast
    from the origin ``t - h``; errors are pooled across origins.
    """
    x = np.asarray(series.values, dtype=float)
    n = len(x)
    X = _exog_matrix(exog, n)
    fixed = None
    if forecaster is None:
        if model is None:
            model = fit(order, series, exog, FitOptions(std_errors=False))
        if policy.refit:
            forecaster = sarimax_forecaster(model, refit=True)
        else:
            fixed = model
    k = order.diff_spec.order
    first_target = n - policy.span(n)
    result = []
    for h in (policy.short_horizon, policy.long_horizon):
        # the origin must leave at least k + 1 observations to condition on
        targets = [t for t in range(first_target, n) if t - h + 1 > k + 1]
        if len(targets) < policy.min_origins:
            raise InsufficientDataError(
                f"only {len(targets)} rolling origins for horizon {h}; "
                f"need {policy.min_origins}")
        if fixed is not None:
            ends = [t - h + 1 for t in targets]
            preds = rolling_forecasts(fixed.order, fixed.params, x, X, ends, h)[:, h - 1]
        else:
            preds = np.empty(len(targets))
            for i, t in enumerate(targets):
                end = t - h + 1
                Xh = None if X is None else X[:end]
                Xf = None if X is None else X[end:t + 1]
                preds[i] = forecaster(x[:end], Xh, Xf, h)[h - 1]
        actual = x[targets]
        result.append((mape(actual, preds), mad(actual, preds), len(targets)))
    (m1, d1, n1), (m12, d12, n12) = result
    return BacktestMetrics(m1, d1, m12, d12, n1, n12)


# ---------------------------------------------------------------------------
# candidate evaluation and ranking
# ---------------------------------------------------------------------------

@dataclass
class SelectionEntry:
    order: ModelOrder
    aic: float = math.inf
    aic_adjusted: float = math.inf
    ljung_box_p: Optional[float] = None
    mape_1: Optional[float] = None
    mad_1: Optional[float] = None
    mape_12: Optional[float] = None
    mad_12: Optional[float] = None
    converged: bool = False
    k_params: int = 0
    error: Optional[str] = None
    model: Optional[FittedModel] = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return (self.error is None and self.converged and self.ljung_box_p is not None
                and self.ljung_box_p >= GATE_P_VALUE)

    @property
    def tier(self) -> int:
        if self.error is not None:
            return 3
        if not self.converged:
            return 2
        if not self.passed:
            return 1
        return 0

    def rank_key(self) -> tuple:
        return (self.tier, self.aic_adjusted, self.k_params, self.order.as_tuple(),
                self.order.transform.value)

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else v
        return {"order": self.order.to_dict(), "label": self.order.label(),
                "aic": num(self.aic), "aic_original_scale": num(self.aic_adjusted),
                "ljung_box_p": self.ljung_box_p, "mape_1": self.mape_1,
                "mad_1": self.mad_1, "mape_12": self.mape_12, "mad_12": self.mad_12,
                "converged": self.converged, "k_params": self.k_params,
                "passed_gates": self.passed, "error": self.error}


def evaluate_candidate(order: ModelOrder, series: TimeSeries, exog=None,
                       policy: HoldoutPolicy = HoldoutPolicy(),
                       ljung_box_lags: Optional[int] = None) -> SelectionEntry:
    """Fit, check residual whiteness and backtest one candidate; never raises."""
    entry = SelectionEntry(order=order)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            model = fit(order, series, exog, FitOptions(std_errors=False))
    except (FreightcastError, ValueError, np.linalg.LinAlgError) as exc:
        entry.error = f"{type(exc).__name__}: {exc}"
        return entry
    entry.model = model
    entry.aic = model.aic
    entry.aic_adjusted = model.aic_original_scale
    entry.converged = model.converged
    entry.k_params = model.k_params
    try:
        entry.ljung_box_p = residual_diagnostics(model, h=ljung_box_lags).ljung_box.p_value
    except FreightcastError as exc:
        entry.error = f"{type(exc).__name__}: {exc}"
        return entry
    try:
        m = backtest_metrics(order, series, exog, policy, model=model)
        entry.mape_1, entry.mad_1, entry.mape_12, entry.mad_12 = (
            m.mape_1, m.mad_1, m.mape_12, m.mad_12)
    except (FreightcastError, ValueError) as exc:
        log.info("backtest skipped for %s: %s", order.label(), exc)
    return entry


@dataclass
class SelectionReport:
    entries: list
    stationarity: dict
    suggestions: dict

    @property
    def winner(self) -> SelectionEntry:
        return self.entries[0]

    def to_dict(self) -> dict:
        return {"winner": self.winner.order.label(),
                "winner_passed_gates": self.winner.passed,
                "stationarity": self.stationarity,
                "order_suggestions": self.suggestions,
                "entries": [e.to_dict() for e in self.entries]}


def rank_entries(entries: Sequence[SelectionEntry]) -> list:
    return sorted(entries, key=SelectionEntry.rank_key)


def recommend_d(values: np.ndarray, max_d: int = 2, level: float = GATE_P_VALUE) -> dict:
    """ADF-based differencing recommendation: difference until a unit root is rejected."""
    tests = []
    d = 0
    x = np.asarray(values, dtype=float)
    while True:
        try:
            res = adf_test(x)
        except FreightcastError as exc:
            tests.append({"d": d, "error": str(exc)})
            break
        tests.append({"d": d, "statistic": res.statistic, "p_value": res.p_value,
                      "lags": res.lags_used})
        if res.rejects(level) or d >= max_d:
            break
        x = np.diff(x)
        d += 1
    return {"recommended_d": d, "tests": tests}


def select_model(grid, series: TimeSeries, exog=None,
                 policy: HoldoutPolicy = HoldoutPolicy(), jobs: int = 1,
                 ljung_box_lags: Optional[int] = None) -> SelectionReport:
    """Evaluate every grid candidate and rank them.

    Gate-passing candidates (converged, Ljung-Box p >= 0.05) come first,
    ordered by AIC on the original data scale, then by parameter count and
    the order tuple. Gate failures follow in the same ordering.
    """
    candidates = grid.candidates()
    if not candidates:
        raise ValueError("empty candidate grid")
    stationarity, suggestions = {}, {}
    for t in grid.transforms:
        try:
            w = forward_transform(series.values, t)
        except FreightcastError as exc:
            stationarity[t.value] = {"error": str(exc)}
            continue
        stationarity[t.value] = recommend_d(w)
        try:
            d = stationarity[t.value]["recommended_d"]
            suggestions[t.value] = suggest_orders(difference_values(w, DifferenceSpec(d)))
        except FreightcastError:
            pass

    def run(order):
        return evaluate_candidate(order, series, exog, policy, ljung_box_lags)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(run, candidates))
    else:
        entries = [run(o) for o in candidates]
    if all(e.error is not None for e in entries):
        raise AllCandidatesFailedError(
            "every candidate failed: " + "; ".join(f"{e.order.label()}: {e.error}"
                                                   for e in entries))
    return SelectionReport(rank_entries(entries), stationarity, suggestions)
