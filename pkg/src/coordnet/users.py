"""Per-user characterisation: account age, screen-name entropy, participation."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

from coordnet.actions import ACTION_TYPES
from coordnet.errors import ConfigurationError
from coordnet.ingest import UserProfile
from coordnet.network import CoordinationGraph

logger = logging.getLogger(__name__)

UNKNOWN = "<UNK>"
AGE_CATEGORIES = ("suspended", "lt_3_months", "btw_3_6_months", "gt_6_months", "unknown")
THREE_MONTHS = timedelta(days=91)
SIX_MONTHS = timedelta(days=182)


@dataclass(frozen=True)
class CharDistribution:
    """Character probabilities; ``UNKNOWN`` covers characters never seen."""

    probabilities: dict[str, float]
    corpus_size: int = 0
    alphabet_size: int = 0

    def prob(self, ch: str) -> float:
        p = self.probabilities.get(ch)
        if p is None:
            p = self.probabilities.get(UNKNOWN)
        if p is None:
            raise KeyError(f"character {ch!r} not in distribution and no {UNKNOWN} bucket")
        return p


def build_char_distribution(corpus: Iterable[str]) -> CharDistribution:
    """Add-one smoothed character frequencies over all names in ``corpus``.

    Every observed character and one ``UNKNOWN`` bucket get a pseudo-count
    of one, so ``P(c) = (n_c + 1) / (N + |alphabet| + 1)``.
    """
    names = list(corpus)
    if not names:
        raise ConfigurationError("screen-name corpus is empty")
    counts = Counter()
    for name in names:
        counts.update(name)
    total = sum(counts.values()) + len(counts) + 1
    probs = {ch: (n + 1) / total for ch, n in sorted(counts.items())}
    probs[UNKNOWN] = 1 / total
    return CharDistribution(probs, corpus_size=len(names), alphabet_size=len(counts))


def load_name_corpus(path) -> list[str]:
    """One screen name per line; blank lines ignored."""
    text = Path(path).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def screen_name_entropy(name: str, dist: CharDistribution, normalized: bool = False) -> float:
    """Sum over character positions of ``-P(c) log2 P(c)``.

    The sum is not length-normalised, so longer names score higher;
    ``normalized=True`` divides by the name length instead.
    """
    if not name:
        logger.warning("entropy of an empty screen name is 0")
        return 0.0
    h = 0.0
    for ch in name:
        p = dist.prob(ch)
        if p > 0:
            h -= p * math.log2(p)
    return h / len(name) if normalized else h


def age_category(profile: UserProfile | None, event_start: datetime) -> str:
    if profile is None:
        return "unknown"
    if profile.suspended:
        return "suspended"
    if profile.created_at is None:
        return "unknown"
    age = event_start - profile.created_at
    if age < THREE_MONTHS:
        return "lt_3_months"
    if age <= SIX_MONTHS:
        return "btw_3_6_months"
    return "gt_6_months"


@dataclass(frozen=True)
class UserAnnotation:
    event_id: str
    user_id: str
    age_category: str
    entropy_bits: float
    strength: int
    types_participated: tuple[str, ...]
    events_participated: tuple[str, ...]

    def as_row(self) -> list:
        return [
            self.event_id,
            self.user_id,
            self.age_category,
            repr(self.entropy_bits),
            self.strength,
            "|".join(self.types_participated),
            "|".join(self.events_participated),
        ]


def annotate_users(
    profiles: Mapping[str, UserProfile],
    graphs: Mapping[tuple[str, str], CoordinationGraph],
    timeframes: Mapping[str, tuple[datetime, datetime]],
    dist: CharDistribution | None = None,
    screen_names: Mapping[str, str] | None = None,
    normalized_entropy: bool = False,
) -> list[UserAnnotation]:
    """One annotation per (event, user) present in any filtered graph of that event.

    ``graphs`` is keyed by ``(event_id, action_type)`` and must hold
    post-threshold graphs. Strength is the summed weight of the user's
    links over all of that event's graphs. Screen names come from the
    profile, falling back to ``screen_names``; without ``dist`` the
    character distribution is built from those names.
    """
    screen_names = dict(screen_names or {})
    strength: dict[tuple[str, str], int] = Counter()
    types: dict[tuple[str, str], set[str]] = {}
    events: dict[str, set[str]] = {}
    for (event_id, action_type), graph in sorted(graphs.items()):
        for user, s in graph.strength().items():
            key = (event_id, user)
            strength[key] += s
            types.setdefault(key, set()).add(action_type)
            events.setdefault(user, set()).add(event_id)

    def name_of(user):
        prof = profiles.get(user)
        return (prof.screen_name if prof and prof.screen_name else None) or screen_names.get(user, "")

    if dist is None:
        known = [name_of(u) for u in events]
        dist = build_char_distribution([n for n in known if n] or [""])

    out = []
    for event_id, user in sorted(types):
        start = timeframes[event_id][0]
        out.append(
            UserAnnotation(
                event_id=event_id,
                user_id=user,
                age_category=age_category(profiles.get(user), start),
                entropy_bits=screen_name_entropy(name_of(user), dist, normalized_entropy) if name_of(user) else 0.0,
                strength=strength[(event_id, user)],
                types_participated=tuple(t for t in ACTION_TYPES if t in types[(event_id, user)]),
                events_participated=tuple(sorted(events[user])),
            )
        )
    return out


def _pair_key(pair: tuple[str, str]) -> str:
    return "+".join(pair)


def _cell_key(subset: Iterable[str]) -> str:
    return "&".join(subset)


def participation_tables(
    annotations: Iterable[UserAnnotation], event_ids: Iterable[str] = ()
) -> dict:
    """Multi-type and cross-event participation counts.

    Per event: users by number of channels (counts and fractions of the
    event's coordinating users) and a cross-tabulation of two-channel
    users by channel pair. Across events: Venn cells, i.e. the number of
    users whose coordinating activity spans exactly each subset of events.
    Events listed in ``event_ids`` are reported even with no users.
    """
    annotations = list(annotations)
    by_event: dict[str, list[UserAnnotation]] = {e: [] for e in event_ids}
    for a in annotations:
        by_event.setdefault(a.event_id, []).append(a)
    report: dict = {"events": {}, "venn": {}}
    for event_id in sorted(by_event):
        rows = by_event[event_id]
        n = len(rows)
        k_count = Counter(len(a.types_participated) for a in rows)
        pairs = Counter(a.types_participated for a in rows if len(a.types_participated) == 2)
        report["events"][event_id] = {
            "n_users": n,
            "type_count": {str(k): k_count.get(k, 0) for k in (1, 2, 3)},
            "type_fraction": {str(k): (k_count.get(k, 0) / n if n else 0.0) for k in (1, 2, 3)},
            "two_type_pairs": {_pair_key(p): pairs.get(p, 0) for p in combinations(ACTION_TYPES, 2)},
            "by_type": {t: sum(1 for a in rows if t in a.types_participated) for t in ACTION_TYPES},
            "age_categories": {c: sum(1 for a in rows if a.age_category == c) for c in AGE_CATEGORIES},
        }
    user_events: dict[str, frozenset[str]] = {}
    for a in annotations:
        user_events[a.user_id] = user_events.get(a.user_id, frozenset()) | {a.event_id}
    cells = Counter(tuple(sorted(s)) for s in user_events.values())
    event_ids = sorted(by_event)
    for size in range(1, len(event_ids) + 1):
        for subset in combinations(event_ids, size):
            report["venn"][_cell_key(subset)] = cells.get(subset, 0)
    report["n_distinct_users"] = len(user_events)
    return report


def write_annotations_csv(path, annotations: Iterable[UserAnnotation]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event_id", "user_id", "age_category", "entropy_bits", "strength", "types", "events"])
        for a in annotations:
            writer.writerow(a.as_row())
