"""Run configuration (YAML) parsing and validation.

Schema::

    seed: 20200401            # recorded in the manifest
    output_dir: out           # --out overrides
    jobs: 1                   # --jobs overrides
    cache_dir: .cache         # for datasets given by url
    datasets:
      <name>:
        path: file.csv        # or url: https://...  (relative paths: config dir)
        value_column: intermodal
        date_column: date
        frequency: weekly     # monthly | weekly
        resample: true        # weekly -> monthly means
        transform: log        # optional domain check on load
    models:
      <series>:
        order: {p: 0, d: 1, q: 1, P: 0, D: 1, Q: 1, S: 12, transform: log}
        # or
        # inclusive [lo, hi] ranges (or one integer); d and D list choices
        grid: {p: [0, 1], q: [0, 1], P: 0, Q: [0, 1], d: [1], D: [1],
               S: 12, transforms: [none, log]}
        train: [2012-01, 2019-12]   # selection/fit window
    scenarios:
      - name: im_s1
        kind: trend_continuation    # | covariate_adapted_trend | actual_covariate_forecast
        series: intermodal
        covariate: ip               # kinds 2 and 3
        covariate_order: {p: 1, d: 1, q: 0}
        order: {...}                # optional override of models.<series>
        train: [2012-01, 2019-12]
        eval: [2020-01, 2020-12]
    recovery_pace:
      kind: trend_continuation
      preset: covid_2020           # or disruption: [..], recovery: [..]
      exclude: [auto]
    backtest:
      eval_fraction: 0.75
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .ingest import DatasetConfig
from .sarimax import ModelOrder
from .scenarios import WINDOW_PRESETS, ScenarioKind, ScenarioSpec
from .selection import CandidateGrid, HoldoutPolicy
from .series import Month


@dataclass(frozen=True)
class ModelSpec:
    series: str
    order: Optional[ModelOrder] = None
    grid: Optional[CandidateGrid] = None
    train: Optional[tuple] = None


@dataclass(frozen=True)
class RecoveryPaceSpec:
    kind: ScenarioKind
    disruption: tuple
    recovery: tuple
    exclude: tuple = ()


@dataclass(frozen=True)
class ScenarioEntry:
    spec: ScenarioSpec
    series: str
    order: Optional[ModelOrder] = None


@dataclass(frozen=True)
class RunConfig:
    datasets: dict
    models: dict
    scenarios: list
    recovery_pace: Optional[RecoveryPaceSpec] = None
    backtest: HoldoutPolicy = HoldoutPolicy()
    output_dir: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    cache_dir: Optional[str] = None
    base_dir: Path = field(default_factory=Path.cwd)
    source_text: str = ""

    def order_for(self, entry: ScenarioEntry) -> Optional[ModelOrder]:
        if entry.order is not None:
            return entry.order
        spec = self.models.get(entry.series)
        return None if spec is None else spec.order


def _window(value, what):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{what} must be a [start, end] pair, got {value!r}")
    try:
        return tuple(Month.parse(str(v)) for v in value)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _order(data, what) -> ModelOrder:
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a mapping")
    try:
        return ModelOrder.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _grid(data, what) -> CandidateGrid:
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a mapping")
    kw = {}
    try:
        for key in ("p", "q", "P", "Q"):
            if key in data:
                v = data[key]
                kw[key] = (int(v), int(v)) if isinstance(v, int) else tuple(int(x) for x in v)
        for key in ("d", "D"):
            if key in data:
                v = data[key]
                kw[key] = (int(v),) if isinstance(v, int) else tuple(int(x) for x in v)
        if "S" in data:
            kw["S"] = int(data["S"])
        if "transforms" in data:
            kw["transforms"] = tuple(data["transforms"])
        if "with_intercept" in data:
            kw["with_intercept"] = data["with_intercept"]
        if "max_size" in data:
            kw["max_size"] = int(data["max_size"])
        unknown = set(data) - {"p", "q", "P", "Q", "d", "D", "S", "transforms",
                               "with_intercept", "max_size"}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        return CandidateGrid(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_config(data: dict, base_dir: Path = Path("."), source_text: str = "") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    known = {"seed", "output_dir", "jobs", "cache_dir", "datasets", "models",
             "scenarios", "recovery_pace", "backtest"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    datasets = {}
    for name, ds in (data.get("datasets") or {}).items():
        if not isinstance(ds, dict):
            raise ConfigError(f"dataset {name!r} must be a mapping")
        try:
            datasets[name] = DatasetConfig(name=name, **ds)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"dataset {name!r}: {exc}") from exc

    models = {}
    for name, m in (data.get("models") or {}).items():
        if name not in datasets:
            raise ConfigError(f"model {name!r} refers to an unknown dataset")
        if not isinstance(m, dict) or (("order" in m) == ("grid" in m)):
            raise ConfigError(f"model {name!r} needs exactly one of 'order' or 'grid'")
        models[name] = ModelSpec(
            series=name,
            order=_order(m["order"], f"models.{name}.order") if "order" in m else None,
            grid=_grid(m["grid"], f"models.{name}.grid") if "grid" in m else None,
            train=_window(m["train"], f"models.{name}.train") if "train" in m else None)

    scenarios = []
    seen = set()
    for i, sc in enumerate(data.get("scenarios") or []):
        what = f"scenarios[{i}]"
        if not isinstance(sc, dict):
            raise ConfigError(f"{what} must be a mapping")
        series = sc.get("series")
        if series not in datasets:
            raise ConfigError(f"{what}: series {series!r} is not a dataset")
        cov = sc.get("covariate")
        if cov is not None and cov not in datasets:
            raise ConfigError(f"{what}: covariate {cov!r} is not a dataset")
        try:
            kind = ScenarioKind(sc.get("kind", "trend_continuation"))
        except ValueError as exc:
            raise ConfigError(f"{what}: {exc}") from exc
        name = sc.get("name") or f"{series}_s{kind.number}"
        if name in seen:
            raise ConfigError(f"{what}: duplicate scenario name {name!r}")
        seen.add(name)
        cov_order = (_order(sc["covariate_order"], f"{what}.covariate_order")
                     if "covariate_order" in sc else None)
        try:
            spec = ScenarioSpec(kind, _window(sc.get("train"), f"{what}.train"),
                                _window(sc.get("eval"), f"{what}.eval"),
                                covariate_name=cov, covariate_model_order=cov_order,
                                name=name)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{what}: {exc}") from exc
        order = _order(sc["order"], f"{what}.order") if "order" in sc else None
        if order is None and series not in models:
            raise ConfigError(f"{what}: no order given and no model for {series!r}")
        scenarios.append(ScenarioEntry(spec, series, order))

    rp = None
    if data.get("recovery_pace"):
        r = data["recovery_pace"]
        if "preset" in r:
            if r["preset"] not in WINDOW_PRESETS:
                raise ConfigError(f"unknown recovery-pace preset {r['preset']!r}; "
                                  f"choose from {sorted(WINDOW_PRESETS)}")
            dis, rec = WINDOW_PRESETS[r["preset"]]
        else:
            dis, rec = r.get("disruption"), r.get("recovery")
        try:
            kind = ScenarioKind(r.get("kind", "trend_continuation"))
        except ValueError as exc:
            raise ConfigError(f"recovery_pace: {exc}") from exc
        rp = RecoveryPaceSpec(kind, _window(dis, "recovery_pace.disruption"),
                              _window(rec, "recovery_pace.recovery"),
                              tuple(r.get("exclude") or ()))

    bt = data.get("backtest") or {}
    try:
        policy = HoldoutPolicy(**bt)
    except TypeError as exc:
        raise ConfigError(f"backtest: {exc}") from exc

    try:
        seed = int(data.get("seed", 0))
        jobs = int(data.get("jobs", 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed/jobs must be integers: {exc}") from exc
    return RunConfig(datasets=datasets, models=models, scenarios=scenarios,
                     recovery_pace=rp, backtest=policy, output_dir=data.get("output_dir"),
                     seed=seed, jobs=jobs, cache_dir=data.get("cache_dir"),
                     base_dir=Path(base_dir), source_text=source_text)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(data or {}, base_dir=path.parent.resolve(), source_text=text)
