"""Synthetic post streams with planted coordinated groups, and detection scoring."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from coordnet.actions import ACTION_TYPES
from coordnet.errors import ConfigurationError
from coordnet.ingest import EventDataset, LoadSummary, PostRecord, UserProfile

_FILLER = (
    "today people news story thread update morning night city country team time "
    "week game music watch read share love great good happy world life think"
).split()
_TOPICS = (
    "freedom rally vote count audit border jobs rights truth justice vaccine "
    "mandate school tax energy health reform fraud ballot court media"
).split()


@dataclass(frozen=True)
class GroupSpec:
    size: int
    action_type: str
    shared_value_pool_size: int = 3
    burst_interval: int = 300
    bursts: int = 5
    jitter: int = 30
    participation: float = 1.0

    def validate(self) -> None:
        if self.action_type not in ACTION_TYPES:
            raise ConfigurationError(f"unknown action type {self.action_type!r}")
        for name in ("size", "shared_value_pool_size", "burst_interval", "bursts"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"group {name} must be >= 1")
        if self.size < 2:
            raise ConfigurationError("a coordinated group needs at least 2 users")
        if not 0 <= self.jitter < self.burst_interval:
            raise ConfigurationError("jitter must be non-negative and smaller than burst_interval")
        if not 0 < self.participation <= 1:
            raise ConfigurationError("participation must be in (0, 1]")


@dataclass(frozen=True)
class CampaignSpec:
    n_background_users: int = 200
    background_rate: float = 1.0
    duration: float = 24.0
    groups: tuple[GroupSpec, ...] = ()
    seed: int = 0
    vocabulary_size: int = 50_000
    start: str = "2020-02-01T00:00:00Z"
    event_id: str = "synthetic"

    def validate(self) -> None:
        if self.n_background_users < 1 or self.duration <= 0 or self.vocabulary_size < 1:
            raise ConfigurationError("background users, duration and vocabulary must be positive")
        if self.background_rate < 0:
            raise ConfigurationError("background_rate must be non-negative")
        for g in self.groups:
            g.validate()
            if g.burst_interval * (g.bursts - 1) + 2 * g.jitter >= self.duration * 3600:
                raise ConfigurationError("group bursts do not fit in the campaign duration")

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignSpec":
        data = dict(data)
        groups = tuple(GroupSpec(**g) for g in data.pop("groups", ()))
        return cls(groups=groups, **data)

    @classmethod
    def from_json(cls, path) -> "CampaignSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = [asdict(g) for g in self.groups]
        return d

    def replace(self, **changes) -> "CampaignSpec":
        d = self.to_dict()
        d.update(changes)
        if "groups" in changes:
            d["groups"] = [asdict(g) if isinstance(g, GroupSpec) else g for g in changes["groups"]]
        return CampaignSpec.from_dict(d)


@dataclass(frozen=True)
class GroundTruth:
    membership: dict[str, int]  # user_id -> planted group index
    group_values: dict[int, tuple[str, ...]] = field(default_factory=dict)
    burst_times: dict[int, tuple[int, ...]] = field(default_factory=dict)  # epoch seconds

    def groups(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for user, g in self.membership.items():
            out.setdefault(g, set()).add(user)
        return out

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for user in sorted(self.membership):
                fh.write(json.dumps({"user_id": user, "group_id": self.membership[user]}) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "GroundTruth":
        membership = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    membership[rec["user_id"]] = int(rec["group_id"])
        return cls(membership)


def _value(action_type: str, token: str) -> str:
    if action_type == "semantic":
        return token
    if action_type == "referral":
        return f"https://{token}"
    return token


def _background_value(action_type: str, k: int) -> str:
    if action_type == "semantic":
        return f"tag{k:05d}"
    if action_type == "referral":
        return f"https://site{k % 97}.example.org/story-{k:05d}"
    return f"user{k:05d}"


def _planted_values(g: int, spec: GroupSpec, rng) -> tuple[str, ...]:
    out = []
    for v in range(spec.shared_value_pool_size):
        topic = _TOPICS[(g * 7 + v) % len(_TOPICS)]
        if spec.action_type == "semantic":
            out.append(f"{topic}now{g}x{v}")
        elif spec.action_type == "referral":
            words = rng.choice(_TOPICS, size=4, replace=False)
            out.append(f"https://campaign{g}.example.net/{'-'.join(words)}-{v}/")
        else:
            out.append(f"i{topic}support{g}x{v}")
    return tuple(out)


def generate(spec: CampaignSpec) -> tuple[EventDataset, GroundTruth]:
    """Generate a post stream with background noise and planted groups.

    Background users post at Poisson times; each post carries one hashtag
    and, with probability 1/2 each, a URL and a mention, drawn uniformly
    from per-channel vocabularies of ``vocabulary_size`` values. Each
    planted group has bursts every ``burst_interval`` seconds; in every
    burst all members post the group's next pool value (cycling through
    the pool) within ``jitter`` seconds of the burst time. With
    ``participation < 1`` each member joins each burst independently with
    that probability.

    All randomness comes from one ``numpy`` generator seeded by
    ``spec.seed``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    t0 = datetime.fromisoformat(spec.start.replace("Z", "+00:00"))
    span = int(spec.duration * 3600)
    rows: list[tuple[int, str, str, dict]] = []  # (offset, user, screen_name, entities)

    for u in range(spec.n_background_users):
        user = f"bg{u:05d}"
        n_posts = rng.poisson(spec.background_rate * spec.duration)
        times = np.sort(rng.integers(0, span, size=n_posts))
        for t in times.tolist():
            ent = {"hashtags": [_background_value("semantic", int(rng.integers(spec.vocabulary_size)))]}
            ent["urls"] = (
                [_background_value("referral", int(rng.integers(spec.vocabulary_size)))]
                if rng.random() < 0.5
                else []
            )
            ent["mentions"] = (
                [_background_value("social", int(rng.integers(spec.vocabulary_size)))]
                if rng.random() < 0.5
                else []
            )
            words = " ".join(rng.choice(_FILLER, size=6).tolist())
            rows.append((t, user, user, {**ent, "text": words}))

    membership: dict[str, int] = {}
    group_values: dict[int, tuple[str, ...]] = {}
    burst_times: dict[int, tuple[int, ...]] = {}
    field_for = {"semantic": "hashtags", "referral": "urls", "social": "mentions"}
    for g, gs in enumerate(spec.groups):
        values = _planted_values(g, gs, rng)
        group_values[g] = values
        members = [f"g{g:02d}u{i:03d}" for i in range(gs.size)]
        for m in members:
            membership[m] = g
        length = gs.burst_interval * (gs.bursts - 1)
        s = int(rng.integers(gs.jitter, span - length - gs.jitter))
        times = []
        topic = _TOPICS[g % len(_TOPICS)]
        for k in range(gs.bursts):
            bt = s + k * gs.burst_interval
            times.append(bt)
            value = values[k % len(values)]
            for m in members:
                if gs.participation < 1 and rng.random() >= gs.participation:
                    continue
                t = bt + int(rng.integers(-gs.jitter, gs.jitter + 1))
                ent = {"hashtags": [], "urls": [], "mentions": []}
                ent[field_for[gs.action_type]] = [value]
                text = f"{topic} {' '.join(rng.choice(_FILLER, size=3).tolist())} stop the {topic} now"
                rows.append((t, m, m, {**ent, "text": text}))
        burst_times[g] = tuple(int((t0 + timedelta(seconds=b)).timestamp()) for b in times)

    rows.sort(key=lambda r: (r[0], r[1]))
    posts = []
    for i, (t, user, screen, ent) in enumerate(rows):
        posts.append(
            PostRecord(
                post_id=f"p{i:07d}",
                user_id=user,
                screen_name=screen,
                timestamp=t0 + timedelta(seconds=t),
                text=ent["text"],
                hashtags=tuple(ent["hashtags"]),
                urls=tuple(ent["urls"]),
                mentions=tuple(ent["mentions"]),
            )
        )
    profiles = _profiles(spec, rng, t0, membership)
    timeframe = (t0, t0 + timedelta(seconds=span))
    summary = LoadSummary(total_lines=len(posts), kept=len(posts))
    dataset = EventDataset(spec.event_id, timeframe, tuple(posts), profiles, summary)
    return dataset, GroundTruth(membership, group_values, burst_times)


def _profiles(spec, rng, t0, membership) -> dict[str, UserProfile]:
    out = {}
    users = [f"bg{u:05d}" for u in range(spec.n_background_users)] + sorted(membership)
    for user in users:
        planted = user in membership
        suspended = bool(rng.random() < (0.3 if planted else 0.02))
        age_days = int(rng.integers(5, 120)) if planted else int(rng.integers(30, 3000))
        created = None if suspended else t0 - timedelta(days=age_days)
        out[user] = UserProfile(user, user, created, suspended)
    return out


@dataclass(frozen=True)
class DetectionScore:
    precision: float
    recall: float
    f1: float
    group_recovery: dict[int, float] = field(default_factory=dict)
    undefined: bool = False

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "group_recovery": {str(g): r for g, r in sorted(self.group_recovery.items())},
            "undefined": self.undefined,
        }


def score(detected, truth: GroundTruth) -> DetectionScore:
    """Compare detected users and communities with the planted membership.

    ``detected`` is one :class:`~coordnet.community.CommunityPartition` or
    an iterable of them (one per channel). Every user in any partition is
    a predicted positive. A group's recovery is the largest fraction of
    its members found together in a single detected community.
    """
    if hasattr(detected, "assignment"):
        detected = [detected]
    partitions = list(detected)
    if not truth.membership:
        nan = float("nan")
        return DetectionScore(nan, nan, nan, {}, undefined=True)
    predicted = set().union(*(p.assignment for p in partitions)) if partitions else set()
    planted = set(truth.membership)
    hits = len(predicted & planted)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(planted)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    communities = [set(m) for p in partitions for m in p.members().values()]
    recovery = {}
    for g, members in sorted(truth.groups().items()):
        best = max((len(members & c) for c in communities), default=0)
        recovery[g] = best / len(members)
    return DetectionScore(precision, recall, f1, recovery)


def write_dataset(dataset: EventDataset, posts_path, profiles_path=None) -> None:
    from coordnet.ingest import post_to_json, profile_to_json, write_jsonl

    write_jsonl(posts_path, (post_to_json(p) for p in dataset.posts))
    if profiles_path is not None:
        write_jsonl(profiles_path, (profile_to_json(p) for p in dataset.profiles.values()))
