"""Per-community theme summaries.

* semantic groups: most frequent words and word pairs in post texts;
* referral groups: words from URL paths once the domain is removed;
* social groups: substrings shared by the mentioned screen names.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable
from urllib.parse import unquote, urlsplit

MAX_SAMPLES = 5
DEFAULT_MIN_SUBSTRING = 4

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_ENTITY_RE = re.compile(r"[#@]\w+")
_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_SPLIT_RE = re.compile(r"[\W_]+")
_RUN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class ThemeSummary:
    channel: str
    top_terms: list[tuple[str, int]]
    sample_values: list[str] = field(default_factory=list)
    community_id: int | None = None
    empty: bool = False

    def as_dict(self) -> dict:
        return {
            "community_id": self.community_id,
            "channel": self.channel,
            "top_terms": [[t, c] for t, c in self.top_terms],
            "sample_values": list(self.sample_values),
            "empty": self.empty,
        }


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("coordnet").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))


def _rank(counts: Counter, k: int | None) -> list[tuple[str, int]]:
    ranked = sorted(((t, c) for t, c in counts.items() if c > 0), key=lambda tc: (-tc[1], tc[0]))
    return ranked if k is None else ranked[:k]


def _samples(values: Iterable[str]) -> list[str]:
    return sorted(set(values))[:MAX_SAMPLES]


def text_tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    """Lowercased words of ``text`` without URLs, hashtags, mentions or stop words."""
    text = _ENTITY_RE.sub(" ", _URL_RE.sub(" ", text.lower()))
    return [w for w in _WORD_RE.findall(text) if w not in stopwords]


def narrative_terms(
    texts: Iterable[str],
    k: int = 10,
    stopwords: Iterable[str] | None = None,
    community_id: int | None = None,
) -> ThemeSummary:
    """Rank words and adjacent word pairs by frequency.

    Pairs are formed after stop-word removal, so "stop the steal" yields
    the pair "stop steal". A single word is left out when some pair
    containing it occurs exactly as often, i.e. the word never appears
    outside that phrase.
    """
    texts = list(texts)
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    unigrams: Counter = Counter()
    bigrams: Counter = Counter()
    for text in texts:
        tokens = text_tokens(text, stop)
        unigrams.update(tokens)
        bigrams.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    covered: dict[str, int] = {}
    for pair, count in bigrams.items():
        for word in set(pair.split(" ")):
            covered[word] = max(covered.get(word, 0), count)
    counts = bigrams + Counter({w: c for w, c in unigrams.items() if covered.get(w, 0) < c})
    return ThemeSummary("semantic", _rank(counts, k), _samples(texts), community_id, empty=not texts)


def url_content(url: str) -> str:
    """The words of a URL once scheme and host are removed."""
    return " ".join(url_tokens(url))


def url_tokens(url: str) -> list[str]:
    url = url.strip()
    if "://" not in url and not url.startswith("//"):
        url = "//" + url
    parts = urlsplit(url)
    content = unquote(parts.path)
    if parts.query:
        content += "?" + unquote(parts.query)
    return [t for t in _SPLIT_RE.split(content.lower()) if len(t) > 2 and not t.isdigit()]


def url_content_terms(urls: Iterable[str], k: int = 10, community_id: int | None = None) -> ThemeSummary:
    urls = list(urls)
    counts: Counter = Counter()
    for url in urls:
        counts.update(url_tokens(url))
    return ThemeSummary("referral", _rank(counts, k), _samples(urls), community_id, empty=not counts)


def _pair_maximal(a_runs: list[str], b_runs: list[str], min_len: int) -> set[str]:
    """Common substrings of two names (within alphanumeric runs) of length
    >= ``min_len`` that no longer common substring contains."""
    found: set[str] = set()
    for x in a_runs:
        for y in b_runs:
            if len(x) < min_len or len(y) < min_len:
                continue
            prev = [0] * (len(y) + 1)
            for i in range(1, len(x) + 1):
                cur = [0] * (len(y) + 1)
                for j in range(1, len(y) + 1):
                    if x[i - 1] == y[j - 1]:
                        cur[j] = prev[j - 1] + 1
                # a match ending at (i, j) is kept only if it cannot extend right
                for j in range(1, len(y) + 1):
                    n = cur[j]
                    if n >= min_len and (i == len(x) or j == len(y) or x[i] != y[j]):
                        found.add(x[i - n : i])
                prev = cur
    return {s for s in found if not any(s != t and s in t for t in found)}


def screen_name_substrings(
    names: Iterable[str],
    min_len: int = DEFAULT_MIN_SUBSTRING,
    k: int | None = None,
    community_id: int | None = None,
) -> ThemeSummary:
    """Rank substrings common to pairs of screen names by how many names contain them.

    Names are case-folded; substrings never span a non-alphanumeric
    character, so ``bot_alpha`` and ``bot_beta`` share ``bot``.
    """
    raw = list(names)
    folded = sorted({n.casefold() for n in raw if n})
    if len(folded) < 2:
        return ThemeSummary("social", [], _samples(raw), community_id, empty=True)
    runs = [_RUN_RE.findall(n) for n in folded]
    candidates: set[str] = set()
    for i in range(len(folded)):
        for j in range(i + 1, len(folded)):
            candidates |= _pair_maximal(runs[i], runs[j], min_len)
    counts = Counter({s: sum(1 for n in folded if s in n) for s in candidates})
    return ThemeSummary("social", _rank(counts, k), _samples(raw), community_id, empty=not counts)
