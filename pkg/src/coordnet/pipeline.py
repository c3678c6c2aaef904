"""End-to-end runs: ingest, detect, analyse, and write the report bundle."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from coordnet import __version__
from coordnet.actions import ACTION_TYPES, check_action_type, extract_actions, post_values
from coordnet.community import DEFAULT_SEED, louvain, write_partition_csv
from coordnet.errors import ConfigurationError, CoordnetError, StageError
from coordnet.ingest import EventDataset, load_dataset, load_profiles, parse_timestamp
from coordnet.kernels import BACKEND
from coordnet.report import REFERENCE_BANDS, render_report
from coordnet.network import build_graph, threshold_graph, write_edge_csv, write_graphml
from coordnet.themes import (
    DEFAULT_MIN_SUBSTRING,
    narrative_terms,
    screen_name_substrings,
    url_content_terms,
)
from coordnet.users import (
    annotate_users,
    build_char_distribution,
    load_name_corpus,
    participation_tables,
    write_annotations_csv,
)
from coordnet.windows import DEFAULT_WINDOWS, sweep_windows, write_sweep_csv, write_sweep_json

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
TIMESTAMP_FIELD = "created_at"


@dataclass(frozen=True)
class EventConfig:
    id: str
    posts: str
    profiles: str | None = None
    start: str | None = None
    end: str | None = None

    def timeframe(self):
        if self.start is None and self.end is None:
            return None
        if self.start is None or self.end is None:
            raise ConfigurationError(f"event {self.id}: give both start and end, or neither")
        return parse_timestamp(self.start), parse_timestamp(self.end)


@dataclass(frozen=True)
class RunConfig:
    events: tuple[EventConfig, ...]
    out: str = "coordnet-out"
    window: int | None = None
    sweep: tuple[int, ...] | None = None
    sample_fraction: float = 0.5
    seed: int = DEFAULT_SEED
    channels: tuple[str, ...] = ACTION_TYPES
    threshold_passes: int = 1
    bucketed: bool = False
    verbatim_urls: bool = False
    name_corpus: str | None = None
    normalized_entropy: bool = False
    theme_terms: int = 10
    min_substring: int = DEFAULT_MIN_SUBSTRING
    sweep_event: str | None = None

    def validate(self) -> "RunConfig":
        if not self.events:
            raise ConfigurationError("at least one event is required")
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("event ids must be unique")
        if (self.window is None) == (self.sweep is None):
            raise ConfigurationError("give exactly one of window or sweep")
        if self.window is not None and self.window < 1:
            raise ConfigurationError("window must be >= 1 second")
        if self.sweep is not None and (not self.sweep or min(self.sweep) < 1):
            raise ConfigurationError("sweep grid must be non-empty with windows >= 1 second")
        if not 0 < self.sample_fraction <= 1:
            raise ConfigurationError("sample_fraction must be in (0, 1]")
        if self.threshold_passes < 1:
            raise ConfigurationError("threshold_passes must be >= 1")
        for c in self.channels:
            try:
                check_action_type(c)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
        if self.sweep_event is not None and self.sweep_event not in ids:
            raise ConfigurationError(f"sweep_event {self.sweep_event!r} is not a configured event")
        for e in self.events:
            e.timeframe()
        return self

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "RunConfig":
        data = dict(data)
        base = base or Path(".")

        def resolve(p):
            return None if p is None else str((base / p) if not Path(p).is_absolute() else Path(p))

        events = []
        for e in data.pop("events", []):
            e = dict(e)
            e["posts"] = resolve(e["posts"])
            e["profiles"] = resolve(e.get("profiles"))
            events.append(EventConfig(**e))
        if "sweep" in data and data["sweep"] is not None:
            data["sweep"] = tuple(int(w) for w in data["sweep"])
        if "channels" in data:
            data["channels"] = tuple(data["channels"])
        if "out" in data:
            data["out"] = resolve(data["out"])
        if data.get("name_corpus"):
            data["name_corpus"] = resolve(data["name_corpus"])
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(events=tuple(events), **data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
        return cls.from_dict(data, path.parent)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "window" in kw:
            kw.setdefault("sweep", None)
        elif "sweep" in kw:
            kw["window"] = None
        return replace(self, **kw)

    def as_dict(self, include_out: bool = True) -> dict:
        d = asdict(self)
        if not include_out:
            d.pop("out")
        d["events"] = [asdict(e) for e in self.events]
        for k in ("sweep", "channels"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def digest(self) -> str:
        # the output location does not affect results, so it is left out
        blob = json.dumps(self.as_dict(include_out=False), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (CoordnetError, OSError, ValueError, KeyError) as exc:
        raise StageError(name, str(exc)) from exc


def load_event(ev: EventConfig) -> EventDataset:
    with _stage("ingest"):
        dataset = load_dataset(ev.posts, ev.id, ev.timeframe())
        if ev.profiles:
            dataset = dataset.with_profiles(load_profiles(ev.profiles).profiles)
    return dataset


@dataclass
class ChannelResult:
    threshold: object  # ThresholdResult
    partition: object  # CommunityPartition

    def stats(self) -> dict:
        return {
            "coordinated": self.threshold.coordinated.as_dict(),
            "filtered": self.threshold.filtered.as_dict(),
            "threshold": self.threshold.threshold,
            "modularity": self.partition.modularity,
            "n_communities": self.partition.n_communities,
        }


@dataclass
class EventResult:
    dataset: EventDataset
    channels: dict[str, ChannelResult] = field(default_factory=dict)


def detect_event(dataset: EventDataset, config: RunConfig, window: int) -> EventResult:
    result = EventResult(dataset)
    for channel in config.channels:
        with _stage(f"extract:{dataset.event_id}:{channel}"):
            events = extract_actions(dataset, channel, config.verbatim_urls)
        with _stage(f"build:{dataset.event_id}:{channel}"):
            graph = build_graph(events, window, bucketed=config.bucketed, action_type=channel)
            thr = threshold_graph(graph, config.threshold_passes)
        with _stage(f"cluster:{dataset.event_id}:{channel}"):
            partition = louvain(thr.graph, config.seed)
        result.channels[channel] = ChannelResult(thr, partition)
    return result


def community_themes(result: EventResult, config: RunConfig) -> list[dict]:
    """Theme summaries for every community of every channel.

    A community's action values are the provenance samples of its internal
    links; its posts are the members' posts carrying one of those values.
    """
    out = []
    posts_by_user: dict[str, list] = {}
    for post in result.dataset.posts:
        posts_by_user.setdefault(post.user_id, []).append(post)
    for channel, res in result.channels.items():
        graph = res.threshold.graph
        assignment = res.partition.assignment
        values: dict[int, set[str]] = {}
        for (a, b), prov in graph.provenance.items():
            if assignment[a] == assignment[b]:
                values.setdefault(assignment[a], set()).update(prov)
        for cid, members in sorted(res.partition.members().items()):
            vals = values.get(cid, set())
            contributing = [
                (post, v)
                for user in sorted(members)
                for post in posts_by_user.get(user, [])
                for v in post_values(post, channel, config.verbatim_urls)
                if v in vals
            ]
            if channel == "semantic":
                texts = list({p.post_id: p.text for p, _ in contributing}.values())
                summary = narrative_terms(texts, config.theme_terms, community_id=cid)
            elif channel == "referral":
                summary = url_content_terms([v for _, v in contributing], config.theme_terms, community_id=cid)
            else:
                summary = screen_name_substrings(vals, config.min_substring, config.theme_terms, community_id=cid)
            row = summary.as_dict()
            row.update(event_id=result.dataset.event_id, size=len(members))
            out.append(row)
    return out


class _Writer:
    """Collects output files in a scratch directory and publishes them atomically-ish."""

    def __init__(self, out: Path):
        self.out = out
        out.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".coordnet-", dir=out.parent))
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.tmp / name

    def json(self, name: str, obj) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def commit(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for name in self.files:
            os.replace(self.tmp / name, self.out / name)
        shutil.rmtree(self.tmp, ignore_errors=True)

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _choose_window(config: RunConfig, datasets: dict[str, EventDataset], writer: _Writer) -> dict:
    if config.window is not None:
        return {"mode": "fixed", "selected": config.window}
    event_id = config.sweep_event or config.events[0].id
    with _stage("sweep"):
        result = sweep_windows(
            datasets[event_id],
            config.sweep,
            seed=config.seed,
            sample_fraction=config.sample_fraction,
            action_types=config.channels,
            passes=config.threshold_passes,
        )
    write_sweep_json(writer.path("sweep.json"), result)
    write_sweep_csv(writer.path("sweep.csv"), result)
    return {
        "mode": "sweep",
        "selected": result.selected_window,
        "event": event_id,
        "sample_fraction": config.sample_fraction,
        "grid": list(config.sweep),
        "average_modularity": {str(c.window_seconds): c.average for c in result.candidates},
    }


def run_pipeline(config: RunConfig, analyze: bool = True, _capture: dict | None = None) -> dict:
    """Run every stage for every event and write the report bundle to ``config.out``.

    Returns the manifest. On any failure a :class:`StageError` names the
    stage and nothing is left in the output directory from this run.
    """
    config.validate()
    writer = _Writer(Path(config.out))
    try:
        manifest = _run(config, writer, analyze, _capture)
        writer.json(MANIFEST, manifest)
        writer.path("report.md").write_text(render_report(manifest), encoding="utf-8")
        writer.commit()
    except BaseException:
        writer.abort()
        raise
    return manifest


def _run(config: RunConfig, writer: _Writer, analyze: bool, capture: dict | None) -> dict:
    datasets = {ev.id: load_event(ev) for ev in config.events}
    window = _choose_window(config, datasets, writer)
    results: dict[str, EventResult] = {}
    events_report: dict = {}
    for ev in config.events:
        res = detect_event(datasets[ev.id], config, window["selected"])
        results[ev.id] = res
        graphs = {}
        for channel, ch in res.channels.items():
            stem = f"{ev.id}_{channel}"
            with _stage(f"export:{stem}"):
                write_edge_csv(writer.path(f"edges_{stem}.csv"), ch.threshold.graph)
                attrs = {u: {"community": c} for u, c in ch.partition.assignment.items()}
                write_graphml(writer.path(f"graph_{stem}.graphml"), ch.threshold.graph, attrs)
                write_partition_csv(writer.path(f"partition_{stem}.csv"), ch.partition)
                writer.json(f"communities_{stem}.json", ch.partition.summary())
            graphs[channel] = ch.stats()
        events_report[ev.id] = {
            "ingest": res.dataset.summary.as_dict(),
            "n_profiles": len(res.dataset.profiles),
            "graphs": graphs,
        }
    writer.json("stage_stats.json", {e: r["graphs"] for e, r in events_report.items()})

    manifest = {
        "tool": "coordnet",
        "version": __version__,
        "backend": BACKEND,
        TIMESTAMP_FIELD: datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "config_hash": config.digest(),
        "config": config.as_dict(include_out=False),
        "seed": config.seed,
        "window": window,
        "events": events_report,
        "reference_bands": REFERENCE_BANDS,
    }
    if capture is not None:
        capture["results"] = results
    if analyze:
        manifest["analysis"] = _analyze(config, results, writer)
    manifest["files"] = sorted(set(writer.files) | {MANIFEST, "report.md"})
    return manifest


def _analyze(config: RunConfig, results: dict[str, EventResult], writer: _Writer) -> dict:
    with _stage("themes"):
        themes = [row for res in results.values() for row in community_themes(res, config)]
        writer.json("themes.json", themes)
    with _stage("users"):
        profiles = {}
        names = {}
        for res in results.values():
            profiles.update(res.dataset.profiles)
            for post in res.dataset.posts:
                names.setdefault(post.user_id, post.screen_name)
        dist = build_char_distribution(load_name_corpus(config.name_corpus)) if config.name_corpus else None
        graphs = {
            (eid, ch): cr.threshold.graph for eid, res in results.items() for ch, cr in res.channels.items()
        }
        timeframes = {}
        for eid, res in results.items():
            tf = res.dataset.timeframe
            if tf is None:
                start = res.dataset.start
                tf = (start, start) if start else (datetime.fromtimestamp(0, timezone.utc),) * 2
            timeframes[eid] = tf
        annotations = annotate_users(profiles, graphs, timeframes, dist, names, config.normalized_entropy)
        write_annotations_csv(writer.path("annotations.csv"), annotations)
        participation = participation_tables(annotations, results.keys())
        writer.json("participation.json", participation)
    entropy: dict[str, list[float]] = {}
    for a in annotations:
        entropy.setdefault(a.event_id, []).append(a.entropy_bits)
    return {
        "mean_entropy_bits": {e: sum(v) / len(v) for e, v in sorted(entropy.items())},
        "n_themes": len(themes),
        "n_annotations": len(annotations),
        "participation": participation,
        "strength_definition": "sum of incident filtered-link weights over the event's channels",
    }


def strip_timestamp(manifest: dict) -> dict:
    return {k: v for k, v in manifest.items() if k != TIMESTAMP_FIELD}


def bench_spec_path(name: str = "default") -> Path:
    from importlib.resources import files

    return Path(str(files("coordnet") / "data" / "bench" / f"{name}.json"))


def run_bench(
    spec,
    out,
    *,
    window: int | None = 300,
    sweep: Sequence[int] | None = None,
    sample_fraction: float = 0.5,
    seed: int = DEFAULT_SEED,
    channels: Sequence[str] = ACTION_TYPES,
) -> dict:
    """Generate a planted campaign, push it through :func:`run_pipeline` and score it.

    The generated posts, profiles and ground truth are kept next to the
    run outputs under ``out``; the score is written to ``bench_score.json``
    and also returned inside the manifest.
    """
    from coordnet.synth import generate, score, write_dataset

    out = Path(out)
    data_dir = out / "input"
    data_dir.mkdir(parents=True, exist_ok=True)
    dataset, truth = generate(spec)
    with _stage("bench:generate"):
        write_dataset(dataset, data_dir / "posts.jsonl", data_dir / "profiles.jsonl")
        truth.to_jsonl(data_dir / "truth.jsonl")
        start, end = dataset.timeframe
        (data_dir / "campaign.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    config = RunConfig(
        events=(EventConfig(spec.event_id, str(data_dir / "posts.jsonl"), str(data_dir / "profiles.jsonl"),
                            start.strftime("%Y-%m-%dT%H:%M:%SZ"), end.strftime("%Y-%m-%dT%H:%M:%SZ")),),
        out=str(out / "run"),
        window=None if sweep else window,
        sweep=tuple(sweep) if sweep else None,
        sample_fraction=sample_fraction,
        seed=seed,
        channels=tuple(channels),
    )
    captured: dict = {}
    manifest = run_pipeline(config, _capture=captured)
    result = score([ch.partition for ch in captured["results"][spec.event_id].channels.values()], truth)
    payload = {"score": result.as_dict(), "window": manifest["window"]["selected"], "campaign": spec.to_dict()}
    (out / "bench_score.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload
