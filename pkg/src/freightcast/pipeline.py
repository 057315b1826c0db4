"""End-to-end orchestration: load, diagnose, select, fit, scenarios, recovery pace."""
from __future__ import annotations

import hashlib
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .diagnostics import (acf, adf_test, classical_decompose, pacf, pearson_corr,
                          suggest_orders)
from .errors import ConfigError, FreightcastError
from .ingest import fetch_indicator_csv, load_series_csv
from .report import (IMPACT_HEADER, PROJECTION_HEADER, RECOVERY_HEADER, OutputTree,
                     check_output_dir, fitness_summary, impact_rows, model_to_dict,
                     projection_rows, recovery_rows)
from .sarimax import ConvergenceWarning, ModelOrder, fit, residual_diagnostics
from .scenarios import (DEFAULT_COVARIATE_ORDER, ScenarioKind, best_fit_line,
                        fit_scenario_model, percent_change, project_covariate,
                        recovery_pace_points, run_scenario)
from .selection import backtest_metrics, select_model
from .series import (DifferenceSpec, Frequency, Transform, difference_values,
                     forward_transform, slice_window)

log = logging.getLogger(__name__)

STAGES = ("diagnose", "select", "fit", "scenario", "recovery-pace")


@dataclass
class PipelineResult:
    out_dir: Path
    files: list
    report: dict


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_datasets(config: RunConfig, allow_network: bool = False,
                  names: Optional[Sequence[str]] = None) -> dict:
    cache = Path(config.cache_dir or ".freightcast-cache")
    if not cache.is_absolute():
        cache = config.base_dir / cache
    out = {}
    for name, ds in config.datasets.items():
        if names is not None and name not in names:
            continue
        if ds.url is not None:
            out[name] = fetch_indicator_csv(ds.url, ds, cache, allow_network=allow_network)
        else:
            out[name] = load_series_csv(ds, config.base_dir)
        out[name] = out[name].rename(name)
    return out


def _check_resolvable(config: RunConfig, stages):
    """Failures that can be detected without touching data."""
    if "recovery-pace" in stages and config.recovery_pace is not None:
        kind = config.recovery_pace.kind
        if not any(e.spec.kind is kind for e in config.scenarios):
            raise ConfigError(f"recovery pace uses {kind.value} scenarios but none are "
                              f"configured")
    if "recovery-pace" in stages and config.recovery_pace is None and stages != STAGES:
        raise ConfigError("config has no recovery_pace section")
    for name, ds in config.datasets.items():
        if ds.path is not None:
            p = Path(ds.path)
            if not p.is_absolute():
                p = config.base_dir / p
            if not p.exists():
                raise ConfigError(f"dataset {name!r}: file not found: {p}")


def _quiet_fit(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return fit(*args, **kwargs)


def _train(series, window):
    return series if window is None else slice_window(series, *window)


def _pmap(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _model_block(model, policy, exog_train=None):
    try:
        lb = residual_diagnostics(model).ljung_box
    except FreightcastError as exc:
        log.warning("Ljung-Box unavailable for %s: %s", model.order.label(), exc)
        lb = None
    try:
        metrics = backtest_metrics(model.order, model.endog, exog_train, policy, model=model)
    except FreightcastError as exc:
        log.warning("backtest unavailable for %s: %s", model.order.label(), exc)
        metrics = None
    return fitness_summary(model, lb, metrics)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _diagnose(config, data, tree, report):
    out = {}
    for name, series in data.items():
        ds = config.datasets[name]
        t = ds.transform or Transform.NONE
        w = forward_transform(series.values, t)
        S = 12 if series.frequency is Frequency.MONTHLY else 52
        block = {"n": len(series), "start": str(series.start), "end": str(series.end),
                 "transform": t.value, "adf": {}}
        for label, spec in (("level", DifferenceSpec()), ("d1", DifferenceSpec(1)),
                            ("D1", DifferenceSpec(0, 1, S)), ("d1D1", DifferenceSpec(1, 1, S))):
            try:
                y = difference_values(w, spec)
                res = {k: adf_test(y, deterministic_terms=k) for k in ("c", "ct")}
                block["adf"][label] = {k: {"statistic": r.statistic, "p_value": r.p_value,
                                           "lags": r.lags_used}
                                       for k, r in res.items()}
                if label == "d1D1":
                    lags = min(24, len(y) // 2 - 1)
                    block["acf"] = acf(y, lags).values
                    block["pacf"] = pacf(y, lags).values
                    block["order_hints"] = suggest_orders(y)
            except FreightcastError as exc:
                block["adf"][label] = {"error": str(exc)}
        try:
            dec = classical_decompose(w, S)
            tree.add_csv(f"diagnostics/{name}_decomposition.csv",
                         ("period", "value", "trend", "seasonal", "residual"),
                         [(str(p), w[i], dec.trend[i], dec.seasonal[i], dec.residual[i])
                          for i, p in enumerate(series.periods())])
        except FreightcastError as exc:
            block["decomposition_error"] = str(exc)
        tree.add_json(f"diagnostics/{name}.json", block)
        out[name] = {"n": block["n"], "start": block["start"], "end": block["end"]}
    pairs = {}
    for entry in config.scenarios:
        cov = entry.spec.covariate_name
        if cov is None or (entry.series, cov) in pairs:
            continue
        t0, t1 = entry.spec.train_window
        try:
            a = slice_window(data[entry.series], t0, t1).values
            b = slice_window(data[cov], t0, t1).values
            spec = DifferenceSpec(0, 1, 12)
            pairs[(entry.series, cov)] = {
                "series": entry.series, "covariate": cov,
                "window": [str(t0), str(t1)],
                "levels": pearson_corr(a, b),
                "seasonal_difference": pearson_corr(difference_values(a, spec),
                                                    difference_values(b, spec))}
        except FreightcastError as exc:
            pairs[(entry.series, cov)] = {"series": entry.series, "covariate": cov,
                                          "error": str(exc)}
    report["diagnostics"] = {"datasets": out, "correlations": list(pairs.values())}


def _select(config, data, tree, report, jobs):
    winners = {}
    summary = {}
    for name, spec in config.models.items():
        if spec.grid is None:
            continue
        series = _train(data[name], spec.train)
        sel = select_model(spec.grid, series, policy=config.backtest, jobs=jobs)
        tree.add_json(f"selection/{name}.json", sel.to_dict())
        winners[name] = sel.winner.order
        summary[name] = {"winner": sel.winner.order.label(),
                         "winner_order": sel.winner.order.to_dict(),
                         "winner_passed_gates": sel.winner.passed,
                         "candidates": len(sel.entries)}
    report["selection"] = summary
    return winners


def _fit(config, data, tree, report, winners, jobs):
    items = []
    for name, spec in config.models.items():
        order = spec.order or winners.get(name)
        if order is not None:
            items.append((name, order, _train(data[name], spec.train)))

    def run(item):
        name, order, series = item
        model = _quiet_fit(order, series)
        return name, model, _model_block(model, config.backtest)

    blocks = {}
    for name, model, block in _pmap(run, items, jobs):
        tree.add_json(f"models/{name}.json", model_to_dict(model))
        blocks[name] = block
    report["models"] = blocks


def _scenario_order(config, entry, winners) -> ModelOrder:
    order = config.order_for(entry) or winners.get(entry.series)
    if order is None:
        raise ConfigError(f"no model order for scenario {entry.spec.name!r}; "
                          f"run selection or give an order")
    return order


def _scenarios(config, data, tree, report, winners, jobs):
    entries = config.scenarios
    # scenarios that differ only in how the covariate path is produced share a model
    keys = []
    for e in entries:
        order = _scenario_order(config, e, winners)
        cov = e.spec.covariate_name if e.spec.kind.needs_covariate else None
        keys.append((e.series, cov, order, e.spec.train_window))
    unique = list(dict.fromkeys(keys))

    def fit_one(key):
        series, cov, order, window = key
        spec = entries[keys.index(key)].spec
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            model = fit_scenario_model(spec, data[series], order,
                                       None if cov is None else data[cov])
        exog = None if cov is None else [slice_window(data[cov], *window)]
        return model, _model_block(model, config.backtest, exog)

    fitted = dict(zip(unique, _pmap(fit_one, unique, jobs)))

    projections = {}
    for e in entries:
        if e.spec.kind is ScenarioKind.COVARIATE_ADAPTED_TREND:
            cov_order = e.spec.covariate_model_order or DEFAULT_COVARIATE_ORDER
            horizon = e.spec.eval_window[1] - e.spec.train_window[1]
            pkey = (e.spec.covariate_name, cov_order, e.spec.train_window, horizon)
            if pkey not in projections:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    projections[pkey] = project_covariate(
                        data[e.spec.covariate_name], cov_order, e.spec.train_window, horizon)

    # a shared model is named after the first scenario that uses it
    model_ids = {key: f"scenario_{entries[keys.index(key)].spec.name}" for key in unique}
    for key in unique:
        tree.add_json(f"models/{model_ids[key]}.json", model_to_dict(fitted[key][0]))

    results = {}
    blocks = []
    for e, key in zip(entries, keys):
        spec = e.spec
        model, fitness = fitted[key]
        proj = None
        if spec.kind is ScenarioKind.COVARIATE_ADAPTED_TREND:
            cov_order = spec.covariate_model_order or DEFAULT_COVARIATE_ORDER
            horizon = spec.eval_window[1] - spec.train_window[1]
            proj = projections[(spec.covariate_name, cov_order, spec.train_window, horizon)]
        cov = data.get(spec.covariate_name) if spec.covariate_name else None
        res = run_scenario(spec, data[e.series], cov, model=model, covariate_projection=proj)
        results[spec.name] = (e, res)
        base = f"scenarios/{spec.name}"
        tree.add_csv(f"{base}/projection.csv", PROJECTION_HEADER,
                     projection_rows(res.baseline, data[e.series]))
        tree.add_csv(f"{base}/impact.csv", IMPACT_HEADER, impact_rows(res.impact))
        if spec.kind.needs_covariate:
            tree.add_csv(f"{base}/covariate_overlay.csv", *_overlay(e, res, data))
        dev = res.impact.deviation
        blocks.append({
            "name": spec.name, "kind": spec.kind.value, "scenario_number": spec.kind.number,
            "series": e.series, "covariate": spec.covariate_name,
            "train": [str(p) for p in spec.train_window],
            "eval": [str(p) for p in spec.eval_window],
            "model_id": model_ids[key], "fitness": fitness,
            "mean_deviation": float(np.nanmean(dev)),
            "deviation": {str(p): dev[i] for i, p in enumerate(res.impact.periods())},
        })
    report["scenarios"] = blocks
    return results


def _overlay(entry, res, data):
    """Percent change of freight and covariate relative to the last training period."""
    spec = entry.spec
    t1 = spec.train_window[1]
    e1 = spec.eval_window[1]
    freight = slice_window(data[entry.series], t1, e1)
    cov = slice_window(data[spec.covariate_name], t1, e1)
    f_pct = percent_change(freight, t1).values
    c_pct = percent_change(cov, t1).values
    path = res.covariate_path
    base = cov.values[0]
    rows = []
    for i, p in enumerate(freight.periods()):
        used = None
        if i >= 1 and path is not None and i - 1 < len(path):
            used = (path[i - 1] / base - 1.0) * 100.0
        elif i == 0:
            used = 0.0
        rows.append((str(p), f_pct[i], c_pct[i], used))
    return ("period", "freight_pct", "covariate_pct", "covariate_path_pct"), rows


def _recovery(config, tree, report, scenario_results):
    rp = config.recovery_pace
    impacts = {}
    for name, (entry, res) in scenario_results.items():
        if res.spec.kind is rp.kind and entry.series not in impacts:
            impacts[entry.series] = res.impact
    points = recovery_pace_points(impacts, rp.disruption, rp.recovery)
    tree.add_csv("recovery_pace.csv", RECOVERY_HEADER, recovery_rows(points))
    line = best_fit_line(points, rp.exclude)
    block = {"kind": rp.kind.value,
             "disruption": [str(p) for p in rp.disruption],
             "recovery": [str(p) for p in rp.recovery],
             "slope": line.slope, "intercept": line.intercept, "r2": line.r2,
             "excluded": list(line.excluded), "n": line.n}
    tree.add_json("best_fit.json", block)
    report["recovery_pace"] = {**block, "points": [
        {"name": p.name, "x": p.x, "y": p.y, "region": p.region.value} for p in points]}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run_pipeline(config: RunConfig, out_dir=None, stages: Sequence[str] = STAGES,
                 jobs: Optional[int] = None, seed: Optional[int] = None,
                 allow_network: bool = False) -> PipelineResult:
    """Run the requested stages and write all artifacts atomically.

    Configuration problems raise before any data is read; data and
    numerical problems raise before anything is written.
    """
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ConfigError(f"unknown stages {sorted(unknown)}")
    stages = tuple(s for s in STAGES if s in stages)
    if out_dir is None:
        if config.output_dir is None:
            raise ConfigError("no output directory (set output_dir or pass --out)")
        # relative output_dir in the config is relative to the config file
        out_dir = config.base_dir / config.output_dir
    out_dir = Path(out_dir)
    jobs = max(1, jobs or config.jobs)
    seed = config.seed if seed is None else seed
    _check_resolvable(config, stages)
    check_output_dir(out_dir)

    data = load_datasets(config, allow_network)
    tree = OutputTree()
    report = {"version": __version__, "seed": seed, "stages": list(stages)}

    if "diagnose" in stages:
        _diagnose(config, data, tree, report)
    winners = {}
    need_winners = any(s in stages for s in ("select", "fit", "scenario", "recovery-pace"))
    if need_winners and any(m.grid is not None for m in config.models.values()):
        winners = _select(config, data, tree, report, jobs)
    if "fit" in stages:
        _fit(config, data, tree, report, winners, jobs)
    scenario_results = {}
    if "scenario" in stages or ("recovery-pace" in stages and config.recovery_pace):
        scenario_results = _scenarios(config, data, tree, report, winners, jobs)
    if "recovery-pace" in stages and config.recovery_pace is not None:
        _recovery(config, tree, report, scenario_results)

    tree.add_json("report.json", report)
    manifest = tree.manifest({"version": __version__, "seed": seed,
                              "config_sha256": _sha256(config.source_text),
                              "stages": list(stages)})
    tree.add_json("manifest.json", manifest)
    files = tree.commit(out_dir)
    return PipelineResult(out_dir, files, report)
