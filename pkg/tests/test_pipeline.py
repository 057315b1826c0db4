import hashlib
import json

import pytest

from freightcast.cli import demo_config_path, main
from freightcast.config import load_config
from freightcast.pipeline import run_pipeline

from golden_tree import GOLDEN_DEMO, tree_bytes, tree_diff


@pytest.fixture(scope="module")
def demo_config():
    return load_config(demo_config_path())


@pytest.fixture(scope="module")
def demo_run(demo_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("demo") / "out"
    return run_pipeline(demo_config, out_dir=out)


@pytest.mark.slow
def test_demo_matches_golden_tree(demo_run):
    assert tree_diff(demo_run.out_dir, GOLDEN_DEMO) == []


@pytest.mark.slow
def test_parallel_run_is_byte_identical(demo_config, demo_run, tmp_path):
    again = run_pipeline(demo_config, out_dir=tmp_path / "out", jobs=4)
    assert tree_bytes(again.out_dir) == tree_bytes(demo_run.out_dir)


def test_manifest_hashes_every_file(demo_run):
    manifest = json.loads((demo_run.out_dir / "manifest.json").read_text())
    files = tree_bytes(demo_run.out_dir)
    assert set(manifest["files"]) == set(files) - {"manifest.json"}
    for rel, digest in manifest["files"].items():
        assert hashlib.sha256(files[rel]).hexdigest() == digest


def test_demo_outputs_cover_every_artifact_kind(demo_run, demo_config):
    out = demo_run.out_dir
    report = json.loads((out / "report.json").read_text())
    assert (out / "selection" / "intermodal.json").is_file()
    for name in demo_config.models:
        assert (out / "models" / f"{name}.json").is_file()
    for entry in demo_config.scenarios:
        d = out / "scenarios" / entry.spec.name
        assert (d / "projection.csv").is_file() and (d / "impact.csv").is_file()
    assert (out / "scenarios" / "intermodal_s2" / "covariate_overlay.csv").is_file()
    rows = (out / "recovery_pace.csv").read_text().splitlines()
    assert len(rows) - 1 == 7
    scenarios = {s["name"]: s for s in report["scenarios"]}
    assert scenarios["intermodal_s2"]["model_id"] == scenarios["intermodal_s3"]["model_id"]
    assert scenarios["intermodal_s1"]["model_id"] != scenarios["intermodal_s2"]["model_id"]


def test_demo_recovers_the_intermodal_shock(demo_run):
    report = json.loads((demo_run.out_dir / "report.json").read_text())
    (entry,) = [s for s in report["scenarios"] if s["name"] == "intermodal_s1"]
    dev = entry["deviation"]
    for month in ("2020-04", "2020-05", "2020-06"):
        assert dev[month] == pytest.approx(-0.2, abs=0.03)


def test_stage_subset(demo_config, tmp_path):
    res = run_pipeline(demo_config, out_dir=tmp_path / "out", stages=("diagnose",))
    names = set(tree_bytes(res.out_dir))
    assert names == {n for n in tree_bytes(GOLDEN_DEMO) if n.startswith("diagnostics/")} | \
        {"report.json", "manifest.json"}


def test_demo_command(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["demo", "--out", "d", "--seed", "5"]) == 0
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert manifest["seed"] == 5
