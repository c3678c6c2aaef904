import json
import re
from importlib.resources import files
from pathlib import Path

import pytest

from coordnet.cli import main
from coordnet.errors import ConfigurationError, StageError
from coordnet.pipeline import EventConfig, RunConfig, run_bench, run_pipeline, strip_timestamp
from coordnet.report import render_report
from coordnet.synth import CampaignSpec, GroupSpec, generate, write_dataset
from coordnet.windows import sweep_windows

EXAMPLE = Path(str(files("coordnet") / "data" / "examples" / "two_events.toml"))


@pytest.fixture(scope="module")
def example_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "out"
    config = RunConfig.load(EXAMPLE).with_overrides(out=str(out))
    return config, run_pipeline(config), out


def test_toml_and_json_configs_agree(tmp_path):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    data = tomllib.loads(EXAMPLE.read_text())
    (tmp_path / "c.json").write_text(json.dumps(data))
    a = RunConfig.from_dict(data, EXAMPLE.parent)
    assert RunConfig.load(EXAMPLE) == a
    assert RunConfig.from_dict(json.loads((tmp_path / "c.json").read_text()), EXAMPLE.parent) == a


@pytest.mark.parametrize(
    "change",
    [
        {"events": ()},
        {"window": None},
        {"sweep": (60, 300)},
        {"channels": ("semantic", "email")},
        {"sample_fraction": 0.0},
        {"threshold_passes": 0},
        {"sweep_event": "E7"},
    ],
)
def test_invalid_configs(change):
    base = RunConfig(events=(EventConfig("E1", "p.jsonl"),), window=300)
    from dataclasses import replace

    with pytest.raises(ConfigurationError):
        replace(base, **change).validate()


def test_unknown_config_key():
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict({"events": [], "windw": 3})


def test_two_event_manifest(example_run):
    config, manifest, out = example_run
    graphs = [(e, c) for e, ev in manifest["events"].items() for c in ev["graphs"]]
    assert len(graphs) == 6
    for e, c in graphs:
        g = manifest["events"][e]["graphs"][c]
        assert set(g) >= {"coordinated", "filtered", "threshold", "modularity", "n_communities"}
        assert set(g["filtered"]) >= {"nodes", "links", "density"}
        assert g["filtered"]["links"] <= g["coordinated"]["links"]
        assert (out / f"edges_{e}_{c}.csv").exists()
        assert (out / f"graph_{e}_{c}.graphml").exists()
        assert (out / f"partition_{e}_{c}.csv").exists()
    assert manifest["seed"] == 42 and len(manifest["config_hash"]) == 64
    for name in manifest["files"]:
        assert (out / name).exists(), name
    assert json.loads((out / "manifest.json").read_text()) == manifest
    themes = json.loads((out / "themes.json").read_text())
    assert {t["channel"] for t in themes} == {"semantic", "referral", "social"}
    part = json.loads((out / "participation.json").read_text())
    assert sum(part["venn"].values()) == part["n_distinct_users"]


def _numbers(text):
    return [float(x) for x in re.findall(r"(?<![\w.])-?\d+(?:\.\d+)?(?:e-?\d+)?(?![\w.])", text)]


def _json_numbers(obj, acc):
    if isinstance(obj, bool):
        return acc
    if isinstance(obj, (int, float)):
        acc.add(float(obj))
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _json_numbers(v, acc)
            try:
                acc.add(float(k))
            except ValueError:
                pass
    elif isinstance(obj, list):
        for v in obj:
            _json_numbers(v, acc)
    return acc


def test_report_only_renders_manifest_numbers(example_run):
    _, manifest, out = example_run
    text = (out / "report.md").read_text()
    assert text == render_report(manifest)
    known = _json_numbers(manifest, set())
    nums = _numbers(text)
    assert nums
    assert all(n in known for n in nums), [n for n in nums if n not in known]


def test_rerun_is_identical_apart_from_timestamp(example_run, tmp_path):
    config, manifest, _ = example_run
    again = run_pipeline(config.with_overrides(out=str(tmp_path / "again")))
    assert strip_timestamp(again) == strip_timestamp(manifest)


def test_sweep_mode_records_selected_window(tmp_path):
    spec = CampaignSpec(
        n_background_users=100, vocabulary_size=40, duration=6.0,
        groups=(GroupSpec(8, "semantic"), GroupSpec(10, "social")), seed=1,
    )
    ds, _ = generate(spec)
    write_dataset(ds, tmp_path / "p.jsonl")
    config = RunConfig(
        events=(EventConfig("S", str(tmp_path / "p.jsonl")),),
        out=str(tmp_path / "out"), sweep=(60, 300, 900), sample_fraction=0.5,
    )
    manifest = run_pipeline(config, analyze=False)
    direct = sweep_windows(ds, (60, 300, 900), sample_fraction=0.5)
    assert manifest["window"]["selected"] == direct.selected_window
    assert (tmp_path / "out" / "sweep.csv").exists()
    assert "analysis" not in manifest


def test_failure_is_stage_tagged_and_leaves_nothing(tmp_path):
    good = tmp_path / "p.jsonl"
    write_dataset(generate(CampaignSpec(n_background_users=5))[0], good)
    config = RunConfig(
        events=(EventConfig("A", str(good)), EventConfig("B", str(tmp_path / "missing.jsonl"))),
        out=str(tmp_path / "out"), window=300,
    )
    with pytest.raises(StageError) as err:
        run_pipeline(config)
    assert err.value.stage == "ingest"
    assert not (tmp_path / "out").exists()
    assert [p.name for p in tmp_path.iterdir()] == ["p.jsonl"]


def test_bench_runs_full_pipeline(tmp_path):
    spec = CampaignSpec(
        n_background_users=200, vocabulary_size=100, duration=6.0,
        groups=(GroupSpec(10, "semantic", shared_value_pool_size=5, burst_interval=900),), seed=3,
    )
    result = run_bench(spec, tmp_path, channels=("semantic",))
    assert set(result["score"]) >= {"precision", "recall", "f1", "group_recovery"}
    assert (tmp_path / "run" / "manifest.json").exists()
    assert (tmp_path / "input" / "truth.jsonl").exists()


# command line ---------------------------------------------------------------


def test_cli_ingest_check(capsys):
    assert main(["ingest-check", "--config", str(EXAMPLE)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"E1", "E2"} and out["E1"]["kept"] > 0


def test_cli_detect_and_report(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["detect", "--config", str(EXAMPLE), "--out", str(out), "--channels", "semantic,social", "--seed", "5"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert set(manifest["events"]["E1"]["graphs"]) == {"semantic", "social"}
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    assert "Coordination graphs" in capsys.readouterr().out


def test_cli_sweep_and_analyze(tmp_path, capsys):
    assert main(["sweep", "--config", str(EXAMPLE), "--sweep", "60,300", "--out", str(tmp_path / "s")]) == 0
    assert "selected window" in capsys.readouterr().out
    assert (tmp_path / "s" / "sweep.json").exists()
    assert main(["analyze", "--config", str(EXAMPLE), "--window", "120", "--out", str(tmp_path / "a")]) == 0
    assert (tmp_path / "a" / "annotations.csv").exists()


def test_cli_posts_mode(tmp_path):
    posts = EXAMPLE.parent / "E1_posts.jsonl"
    assert main(["detect", "--posts", str(posts), "--out", str(tmp_path / "o")]) == 0


def test_cli_errors(tmp_path, capsys):
    assert main(["detect", "--config", str(EXAMPLE), "--window", "60", "--sweep", "60", "--out", str(tmp_path)]) == 2
    assert main(["detect", "--posts", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "x")]) == 1
    assert "[ingest]" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()
    with pytest.raises(SystemExit):
        main(["detect", "--channels", "email"])


def test_cli_bench(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_background_users": 50, "groups": [{"size": 6, "action_type": "social"}]}))
    assert main(["bench", "--spec", str(spec), "--out", str(tmp_path / "b")]) == 0
    assert "precision" in json.loads(capsys.readouterr().out)
    assert main(["bench", "--spec", "no-such-spec", "--out", str(tmp_path / "c")]) == 2
