"""Turn posts into per-channel action events.

Channels: ``semantic`` (hashtags), ``referral`` (URLs), ``social``
(@-mentions). Hashtags and mentions are case-folded. URLs lose their
fragment and share-button tracking parameters unless ``verbatim_urls`` is
set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from coordnet.ingest import EventDataset, PostRecord

ACTION_TYPES = ("semantic", "referral", "social")

_FIELD_FOR_TYPE = {"semantic": "hashtags", "referral": "urls", "social": "mentions"}
_TRACKING_PARAMS = frozenset({"fbclid", "gclid"})


@dataclass(frozen=True, slots=True, order=True)
class ActionEvent:
    # field order gives the canonical (value, time) sort
    action_value: str
    timestamp: int  # UTC epoch seconds
    user_id: str
    post_id: str
    action_type: str


def check_action_type(action_type: str) -> str:
    if action_type not in _FIELD_FOR_TYPE:
        raise ValueError(f"unknown action type {action_type!r}; expected one of {ACTION_TYPES}")
    return action_type


def _is_tracking(key: str) -> bool:
    key = key.lower()
    return key.startswith("utm_") or key in _TRACKING_PARAMS


def normalize_url(url: str, verbatim: bool = False) -> str:
    url = url.strip()
    if verbatim or not url:
        return url
    parts = urlsplit(url)
    query = [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True) if not _is_tracking(k)]
    return urlunsplit((parts.scheme, parts.netloc, parts.path, urlencode(query), ""))


def normalize_value(action_type: str, raw: str, verbatim_urls: bool = False) -> str:
    if action_type == "referral":
        return normalize_url(raw, verbatim_urls)
    prefix = "#" if action_type == "semantic" else "@"
    return raw.strip().lstrip(prefix).casefold()


def post_values(post: PostRecord, action_type: str, verbatim_urls: bool = False) -> list[str]:
    """Distinct normalized values of one channel in a post, in first-seen order."""
    raw = getattr(post, _FIELD_FOR_TYPE[action_type])
    out: dict[str, None] = {}
    for item in raw:
        value = normalize_value(action_type, item, verbatim_urls)
        if value:
            out.setdefault(value)
    return list(out)


def extract_actions(
    dataset: EventDataset, action_type: str, verbatim_urls: bool = False
) -> list[ActionEvent]:
    """One event per distinct (post, value) pair, sorted by (value, timestamp)."""
    check_action_type(action_type)
    events = [
        ActionEvent(value, post.epoch, post.user_id, post.post_id, action_type)
        for post in dataset.posts
        for value in post_values(post, action_type, verbatim_urls)
    ]
    events.sort()
    return events


def write_actions_csv(path, events) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "action_type", "action_value", "timestamp"])
        for ev in events:
            writer.writerow([ev.user_id, ev.action_type, ev.action_value, ev.timestamp])
