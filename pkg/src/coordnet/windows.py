"""Choice of the synchronization window by a modularity sweep."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

from coordnet.actions import ACTION_TYPES, extract_actions
from coordnet.community import DEFAULT_SEED, louvain
from coordnet.ingest import EventDataset
from coordnet.network import build_graph, threshold_graph

#: 1, 2, 3, 5, 10, 15, 20 and 30 minutes.
DEFAULT_WINDOWS = (60, 120, 180, 300, 600, 900, 1200, 1800)

_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WindowScore:
    window_seconds: int
    modularity: dict[str, float]  # per action type
    average: float
    empty: tuple[str, ...] = ()  # types whose filtered graph had no links

    def as_dict(self) -> dict:
        return {
            "window_seconds": self.window_seconds,
            "modularity": dict(self.modularity),
            "average": self.average,
            "empty_types": list(self.empty),
        }


@dataclass(frozen=True)
class WindowSweepResult:
    candidates: tuple[WindowScore, ...]
    selected_window: int
    seed: int
    sample_fraction: float = 1.0

    def as_dict(self) -> dict:
        return {
            "selected_window": self.selected_window,
            "seed": self.seed,
            "sample_fraction": self.sample_fraction,
            "candidates": [c.as_dict() for c in self.candidates],
        }


def post_hash_fraction(post_id: str) -> float:
    """Deterministic position of a post id in [0, 1)."""
    digest = hashlib.blake2b(post_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def sample_dataset(dataset: EventDataset, fraction: float) -> EventDataset:
    """Keep the posts whose id hashes below ``fraction``."""
    if not 0 < fraction <= 1:
        raise ValueError("sample fraction must be in (0, 1]")
    if fraction == 1:
        return dataset
    return dataset.with_posts(p for p in dataset.posts if post_hash_fraction(p.post_id) < fraction)


def score_window(events_by_type, window: int, seed: int = DEFAULT_SEED, passes: int = 1) -> WindowScore:
    q = {}
    empty = []
    for action_type, events in events_by_type.items():
        filtered = threshold_graph(build_graph(events, window, action_type=action_type), passes, warn=False).graph
        if not filtered.edges:
            empty.append(action_type)
            q[action_type] = 0.0
        else:
            q[action_type] = louvain(filtered, seed).modularity
    return WindowScore(window, q, sum(q.values()) / len(q), tuple(empty))


def select_window(candidates: Sequence[WindowScore]) -> int:
    best = max(c.average for c in candidates)
    return min(c.window_seconds for c in candidates if c.average >= best - _TIE_TOLERANCE)


def sweep_windows(
    dataset: EventDataset,
    windows: Sequence[int] = DEFAULT_WINDOWS,
    *,
    seed: int = DEFAULT_SEED,
    sample_fraction: float = 1.0,
    action_types: Sequence[str] = ACTION_TYPES,
    passes: int = 1,
    workers: int = 1,
) -> WindowSweepResult:
    """Score each candidate window by the mean Louvain modularity of the
    filtered per-channel graphs and pick the best; ties go to the smaller window.

    A channel whose filtered graph has no links scores 0 and is listed in
    the candidate's ``empty`` field.
    """
    if not windows:
        raise ValueError("no candidate windows")
    if any(w < 1 for w in windows):
        raise ValueError("windows must be >= 1 second")
    data = sample_dataset(dataset, sample_fraction)
    events = {t: extract_actions(data, t) for t in action_types}
    grid = sorted(set(int(w) for w in windows))
    if workers > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            scores = list(pool.map(score_window, [events] * len(grid), grid, [seed] * len(grid), [passes] * len(grid)))
    else:
        scores = [score_window(events, w, seed, passes) for w in grid]
    return WindowSweepResult(tuple(scores), select_window(scores), seed, sample_fraction)


def write_sweep_csv(path, result: WindowSweepResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "Q_semantic", "Q_referral", "Q_social", "Q_avg"])
        for c in result.candidates:
            writer.writerow(
                [c.window_seconds]
                + [repr(c.modularity.get(t, 0.0)) for t in ACTION_TYPES]
                + [repr(c.average)]
            )


def write_sweep_json(path, result: WindowSweepResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.as_dict(), fh, indent=2, sort_keys=True)
