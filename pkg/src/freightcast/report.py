"""Serialization of fitted models, reports and plot-data files.

Derived numbers in reports and CSVs go through :func:`number`, which rounds
to 12 significant digits so output bytes do not depend on last-bit floating
point noise. Model files store parameters and data with :func:`exact`
(shortest round-trip decimal), so a reloaded model reproduces the fitted
one bit for bit.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, FreightcastError
from .sarimax import FittedModel, Forecast, ModelOrder, ParamVector, model_from_params
from .series import Frequency, TimeSeries, parse_period

MODEL_FORMAT = "freightcast-model/1"


def number(v) -> Optional[float]:
    """Round to 12 significant digits; non-finite values become ``None``."""
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        return None
    out = float(format(v, ".12g"))
    return 0.0 if out == 0 else out


class _Exact(float):
    """Float marked to bypass rounding in :func:`jsonable`."""


def exact(v) -> Optional[float]:
    """Full-precision float for JSON; non-finite values become ``None``."""
    v = float(v)
    return _Exact(v) if math.isfinite(v) else None


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, _Exact):
        return float(obj)
    if isinstance(obj, (float, np.floating)):
        return number(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return str(obj)


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        r = number(v)
        return "" if r is None else format(r, ".12g")
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# fitted models
# ---------------------------------------------------------------------------

def _series_dict(s: TimeSeries) -> dict:
    return {"start": str(s.start), "frequency": s.frequency.value, "name": s.name,
            "values": [exact(v) for v in s.values]}


def _series_from(d: dict) -> TimeSeries:
    freq = Frequency(d["frequency"])
    return TimeSeries(parse_period(d["start"], freq), np.array(d["values"], dtype=float),
                      freq, d.get("name", ""))


def model_to_dict(model: FittedModel) -> dict:
    names = model.param_names
    values = model.params.to_array()
    se = model.std_errors
    out = {
        "format": MODEL_FORMAT,
        "label": model.order.label(),
        "order": model.order.to_dict(),
        "params": {n: exact(v) for n, v in zip(names, values)},
        "std_errors": None if se is None else {n: exact(v) for n, v in zip(names, se)},
        "exog_names": list(model.exog_names),
        "exog_p_values": (None if model.exog_p_values is None else
                          {n: number(v) for n, v in zip(model.exog_names,
                                                         model.exog_p_values)}),
        "loglik": number(model.loglik),
        "aic": number(model.aic),
        "aic_original_scale": number(model.aic_original_scale),
        "k_params": model.k_params,
        "nobs": model.nobs,
        "converged": model.converged,
        "endog": _series_dict(model.endog),
        "exog": None if model.exog is None else [[exact(v) for v in row]
                                                  for row in model.exog.T],
    }
    return out


def model_from_dict(d: dict) -> FittedModel:
    if d.get("format") != MODEL_FORMAT:
        raise FreightcastError(f"unsupported model file format {d.get('format')!r}")
    order = ModelOrder.from_dict(d["order"])
    exog_names = tuple(d.get("exog_names") or ())
    names = ParamVector.names(order, exog_names)
    params = ParamVector.from_array([d["params"][n] for n in names], order, len(exog_names))
    exog = None if d.get("exog") is None else np.array(d["exog"], dtype=float).T
    se = d.get("std_errors")
    pv = d.get("exog_p_values")
    return model_from_params(
        order, params, _series_from(d["endog"]), exog, exog_names,
        converged=bool(d.get("converged", True)),
        std_errors=None if se is None else [np.nan if se[n] is None else se[n] for n in names],
        exog_p_values=None if pv is None else [pv[n] for n in exog_names])


def save_model(model: FittedModel, path):
    Path(path).write_text(dumps_json(model_to_dict(model)), encoding="utf-8")


def load_model(path) -> FittedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# report rows
# ---------------------------------------------------------------------------

def fitness_summary(model: FittedModel, ljung_box=None, metrics=None) -> dict:
    """Parameters, standard errors and fitness measures for one model."""
    names = model.param_names
    values = model.params.to_array()
    se = model.std_errors
    coef = []
    pvals = dict(zip(model.exog_names, [] if model.exog_p_values is None
                     else model.exog_p_values))
    for i, name in enumerate(names):
        row = {"name": name, "value": values[i],
               "std_error": None if se is None else se[i]}
        if name.startswith("exog."):
            row["p_value"] = pvals.get(name[5:])
        coef.append(row)
    out = {"model": model.order.label(), "order": model.order.to_dict(),
           "coefficients": coef, "loglik": model.loglik, "aic": model.aic,
           "aic_original_scale": model.aic_original_scale, "k_params": model.k_params,
           "nobs": model.nobs, "converged": model.converged,
           "train": [str(model.endog.start), str(model.endog.end)]}
    if ljung_box is not None:
        out["ljung_box"] = {"q_stat": ljung_box.q_stat, "df": ljung_box.df,
                            "lags": ljung_box.lags, "p_value": ljung_box.p_value}
    if metrics is not None:
        out["backtest"] = {"mape_1": metrics.mape_1, "mad_1": metrics.mad_1,
                           "mape_12": metrics.mape_12, "mad_12": metrics.mad_12,
                           "n_1": metrics.n_1, "n_12": metrics.n_12}
    return out


PROJECTION_HEADER = ("period", "actual", "median", "lower", "upper")


def projection_rows(baseline: Forecast, actual: Optional[TimeSeries] = None) -> list:
    periods = baseline.as_series().periods()
    rows = []
    for i, p in enumerate(periods):
        a = None
        if actual is not None:
            try:
                a = float(actual.values[actual.index_of(p)])
            except FreightcastError:
                a = None
        rows.append((str(p), a, float(baseline.median[i]), float(baseline.lower[i]),
                     float(baseline.upper[i])))
    return rows


IMPACT_HEADER = ("period", "actual", "baseline", "ratio", "deviation")


def impact_rows(impact) -> list:
    return [(str(p), impact.actual[i], impact.baseline[i], impact.ratio[i],
             impact.deviation[i]) for i, p in enumerate(impact.periods())]


RECOVERY_HEADER = ("name", "x", "y", "region")


def recovery_rows(points) -> list:
    return [(p.name, p.x, p.y, p.region.value) for p in points]


# ---------------------------------------------------------------------------
# output tree
# ---------------------------------------------------------------------------

def check_output_dir(out_dir):
    """Refuse to replace an existing directory that is not a previous run's output."""
    out_dir = Path(out_dir)
    if out_dir.exists():
        if not out_dir.is_dir():
            raise ConfigError(f"output path {out_dir} exists and is not a directory")
        if any(out_dir.iterdir()) and not (out_dir / "manifest.json").is_file():
            raise ConfigError(f"output directory {out_dir} is not empty and holds no "
                              f"manifest.json from an earlier run; refusing to replace it")


class OutputTree:
    """In-memory set of output files committed to disk in one step.

    Files are staged in a temporary sibling directory that replaces the
    target only once everything has been written, so a failed run leaves
    no partial outputs behind.
    """

    def __init__(self):
        self._files = {}

    def __contains__(self, rel):
        return rel in self._files

    def add_text(self, rel: str, text: str):
        if rel in self._files:
            raise FreightcastError(f"output {rel} written twice")
        self._files[rel] = text.encode("utf-8")

    def add_json(self, rel: str, obj):
        self.add_text(rel, dumps_json(obj))

    def add_csv(self, rel: str, header, rows):
        self.add_text(rel, csv_text(header, rows))

    def names(self) -> list:
        return sorted(self._files)

    def manifest(self, extra: dict) -> dict:
        files = {rel: hashlib.sha256(self._files[rel]).hexdigest() for rel in self.names()}
        return {**extra, "files": files}

    def commit(self, out_dir) -> list:
        out_dir = Path(out_dir).resolve()
        check_output_dir(out_dir)
        out_dir.parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
        try:
            for rel in self.names():
                target = stage / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(self._files[rel])
            old = None
            if out_dir.exists():
                old = out_dir.parent / f".{out_dir.name}.old-{os.getpid()}"
                os.replace(out_dir, old)
            os.replace(stage, out_dir)
            if old is not None:
                shutil.rmtree(old, ignore_errors=True)
        except BaseException:
            shutil.rmtree(stage, ignore_errors=True)
            raise
        return [out_dir / rel for rel in self.names()]
