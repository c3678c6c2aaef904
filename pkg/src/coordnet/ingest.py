"""Loading of post and profile exports (line-delimited JSON).

Post records map to the source platform's entity fields as follows:

==============  =======================================
field           source entity path
==============  =======================================
``hashtags``    ``entities.hashtags``
``urls``        ``entities.urls.expanded_url``
``mentions``    ``entities.user_mentions.screen_name``
==============  =======================================

Only original posts (``is_original: true``) are kept. The exporter is
responsible for setting that flag; retweet/quote/reply markers are not
re-derived here.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from coordnet.errors import CorruptInputError, InputError

logger = logging.getLogger(__name__)

#: Fraction of malformed lines above which a file is rejected outright.
MAX_MALFORMED_FRACTION = 0.5
_MAX_SAMPLES = 5

_FRACTION_RE = re.compile(r"\.(\d+)")
_POST_STR_FIELDS = ("post_id", "user_id", "screen_name", "text")
_POST_LIST_FIELDS = ("hashtags", "urls", "mentions")


@dataclass(frozen=True, slots=True)
class PostRecord:
    post_id: str
    user_id: str
    screen_name: str
    timestamp: datetime
    text: str
    hashtags: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    is_original: bool = True

    @property
    def epoch(self) -> int:
        """Timestamp as integer UTC epoch seconds."""
        return int(self.timestamp.timestamp())


@dataclass(frozen=True, slots=True)
class UserProfile:
    user_id: str
    screen_name: str
    created_at: datetime | None = None
    suspended: bool = False


@dataclass(frozen=True)
class LoadSummary:
    """Line accounting for one loaded file.

    ``kept + dropped_by_filter + dropped_malformed == total_lines`` always
    holds. Posts outside the event timeframe are counted under
    ``dropped_by_filter`` and broken out in ``dropped_out_of_range``;
    repeated post ids count as malformed and are broken out in
    ``duplicate_ids``.
    """

    total_lines: int = 0
    kept: int = 0
    dropped_by_filter: int = 0
    dropped_malformed: int = 0
    dropped_out_of_range: int = 0
    duplicate_ids: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "total_lines": self.total_lines,
            "kept": self.kept,
            "dropped_by_filter": self.dropped_by_filter,
            "dropped_malformed": self.dropped_malformed,
            "dropped_out_of_range": self.dropped_out_of_range,
            "duplicate_ids": self.duplicate_ids,
        }


@dataclass(frozen=True)
class EventDataset:
    event_id: str
    timeframe: tuple[datetime, datetime] | None
    posts: tuple[PostRecord, ...]
    profiles: dict[str, UserProfile] = field(default_factory=dict)
    summary: LoadSummary = field(default_factory=LoadSummary)

    def __len__(self) -> int:
        return len(self.posts)

    @property
    def start(self) -> datetime | None:
        if self.timeframe is not None:
            return self.timeframe[0]
        if not self.posts:
            return None
        return min(p.timestamp for p in self.posts)

    def with_posts(self, posts: Iterable[PostRecord]) -> "EventDataset":
        return EventDataset(self.event_id, self.timeframe, tuple(posts), self.profiles, self.summary)

    def with_profiles(self, profiles: dict[str, UserProfile]) -> "EventDataset":
        return EventDataset(self.event_id, self.timeframe, self.posts, dict(profiles), self.summary)


@dataclass(frozen=True)
class ProfileTable:
    profiles: dict[str, UserProfile]
    total_lines: int = 0
    duplicates: int = 0
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self) -> Iterator[UserProfile]:
        return iter(self.profiles.values())


def parse_timestamp(value) -> datetime:
    """Parse an RFC 3339 string into an aware UTC datetime (second precision).

    Naive timestamps are taken to be UTC.
    """
    if not isinstance(value, str) or not value:
        raise ValueError(f"timestamp must be a non-empty string, got {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # older fromisoformat only takes 3 or 6 fractional digits
    text = _FRACTION_RE.sub(lambda m: "." + (m.group(1) + "000000")[:6], text)
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_post(obj) -> PostRecord:
    """Validate one decoded JSON object against the post schema.

    Raises ``ValueError`` describing the first violation.
    """
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for name in _POST_STR_FIELDS:
        if not isinstance(obj.get(name), str):
            raise ValueError(f"field {name!r} missing or not a string")
    if not obj["post_id"] or not obj["user_id"]:
        raise ValueError("empty post_id or user_id")
    lists = {}
    for name in _POST_LIST_FIELDS:
        items = obj.get(name)
        if not isinstance(items, list) or not all(isinstance(x, str) for x in items):
            raise ValueError(f"field {name!r} missing or not a list of strings")
        lists[name] = tuple(items)
    original = obj.get("is_original")
    if not isinstance(original, bool):
        raise ValueError("field 'is_original' missing or not a boolean")
    return PostRecord(
        post_id=obj["post_id"],
        user_id=obj["user_id"],
        screen_name=obj["screen_name"],
        timestamp=parse_timestamp(obj.get("timestamp")),
        text=obj["text"],
        is_original=original,
        **lists,
    )


def _read_lines(path: Path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_dataset(
    path,
    event_id: str,
    timeframe: tuple[datetime, datetime] | None = None,
) -> EventDataset:
    """Load a post file, keeping only valid original posts.

    Blank lines are ignored and do not count towards ``total_lines``.
    With ``timeframe`` given, posts outside ``[start, end]`` are dropped
    and counted.
    """
    path = Path(path)
    lines = [ln for ln in _read_lines(path) if ln.strip()]
    posts: list[PostRecord] = []
    seen: set[str] = set()
    malformed = filtered = out_of_range = duplicates = 0
    samples: list[str] = []

    for lineno, line in enumerate(lines, 1):
        try:
            post = parse_post(json.loads(line))
        except (ValueError, TypeError) as exc:
            malformed += 1
            if len(samples) < _MAX_SAMPLES:
                samples.append(f"line {lineno}: {exc}: {line[:80]}")
            continue
        if post.post_id in seen:
            malformed += 1
            duplicates += 1
            if len(samples) < _MAX_SAMPLES:
                samples.append(f"line {lineno}: duplicate post_id {post.post_id!r}")
            continue
        seen.add(post.post_id)
        if not post.is_original:
            filtered += 1
            continue
        if timeframe is not None and not (timeframe[0] <= post.timestamp <= timeframe[1]):
            filtered += 1
            out_of_range += 1
            continue
        posts.append(post)

    total = len(lines)
    if total == 0:
        logger.warning("%s: empty post file, event %s has no posts", path, event_id)
    elif malformed / total > MAX_MALFORMED_FRACTION:
        raise CorruptInputError(
            f"{path}: {malformed} of {total} lines malformed", samples=samples
        )
    elif malformed:
        logger.warning("%s: skipped %d malformed lines", path, malformed)
    if out_of_range:
        logger.warning("%s: dropped %d posts outside the event timeframe", path, out_of_range)

    summary = LoadSummary(
        total_lines=total,
        kept=len(posts),
        dropped_by_filter=filtered,
        dropped_malformed=malformed,
        dropped_out_of_range=out_of_range,
        duplicate_ids=duplicates,
    )
    return EventDataset(event_id, timeframe, tuple(posts), {}, summary)


def parse_profile(obj) -> UserProfile:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    user_id = obj.get("user_id")
    if not isinstance(user_id, str) or not user_id:
        raise ValueError("field 'user_id' missing")
    created = obj.get("created_at")
    return UserProfile(
        user_id=user_id,
        screen_name=str(obj.get("screen_name") or ""),
        created_at=parse_timestamp(created) if created else None,
        suspended=bool(obj.get("suspended", False)),
    )


def load_profiles(path) -> ProfileTable:
    """Load a profile file. Later lines win over earlier ones for the same user."""
    path = Path(path)
    lines = [ln for ln in _read_lines(path) if ln.strip()]
    profiles: dict[str, UserProfile] = {}
    duplicates = skipped = 0
    for line in lines:
        try:
            profile = parse_profile(json.loads(line))
        except (ValueError, TypeError):
            skipped += 1
            continue
        if profile.user_id in profiles:
            duplicates += 1
        profiles[profile.user_id] = profile
    if skipped:
        logger.warning("%s: skipped %d profile records", path, skipped)
    return ProfileTable(profiles, total_lines=len(lines), duplicates=duplicates, skipped=skipped)


def post_to_json(post: PostRecord) -> dict:
    return {
        "post_id": post.post_id,
        "user_id": post.user_id,
        "screen_name": post.screen_name,
        "timestamp": format_timestamp(post.timestamp),
        "text": post.text,
        "hashtags": list(post.hashtags),
        "urls": list(post.urls),
        "mentions": list(post.mentions),
        "is_original": post.is_original,
    }


def profile_to_json(profile: UserProfile) -> dict:
    out = {"user_id": profile.user_id, "screen_name": profile.screen_name}
    if profile.created_at is not None:
        out["created_at"] = format_timestamp(profile.created_at)
    out["suspended"] = profile.suspended
    return out


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
