import random
from collections import Counter
from datetime import datetime, timedelta, timezone

from hypothesis import given
from hypothesis import strategies as st

from coordnet.actions import ACTION_TYPES, extract_actions, normalize_url, write_actions_csv
from coordnet.ingest import EventDataset, PostRecord

T0 = datetime(2020, 2, 1, tzinfo=timezone.utc)


def _post(pid, user="u", dt=0, **kw):
    return PostRecord(pid, user, user, T0 + timedelta(seconds=dt), "txt", **kw)


def _ds(posts):
    return EventDataset("E", None, tuple(posts))


def test_hashtag_case_fold_collapses():
    events = extract_actions(_ds([_post("p", hashtags=("MAGA", "maga"))]), "semantic")
    assert [(e.action_value, e.post_id) for e in events] == [("maga", "p")]


def test_tracking_parameters_stripped():
    events = extract_actions(_ds([_post("p", urls=("https://a.com/x?utm_source=t",))]), "referral")
    assert events[0].action_value == "https://a.com/x"


def test_url_normalization_details():
    assert normalize_url("https://a.com/x?id=3&fbclid=zz#top") == "https://a.com/x?id=3"
    assert normalize_url("https://a.com/x?utm_source=t", verbatim=True) == "https://a.com/x?utm_source=t"


def test_mentions_strip_at_and_fold():
    events = extract_actions(_ds([_post("p", mentions=("@Alice", "alice", "bob"))]), "social")
    assert [e.action_value for e in events] == ["alice", "bob"]


def _random_posts(rng, n):
    tags = ["A", "a", "b", "#B", "c"]
    urls = ["https://x.org/1", "https://x.org/1?utm_medium=m", "https://y.org/2#frag", "https://z.org/3?q=1"]
    ments = ["@Ann", "ann", "Ben", "cy"]
    return [
        _post(
            f"p{i}",
            user=f"u{rng.randrange(5)}",
            dt=rng.randrange(1000),
            hashtags=tuple(rng.choices(tags, k=rng.randrange(4))),
            urls=tuple(rng.choices(urls, k=rng.randrange(3))),
            mentions=tuple(rng.choices(ments, k=rng.randrange(3))),
        )
        for i in range(n)
    ]


def _oracle_values(post, action_type):
    # independent per-post enumeration of normalized distinct values
    if action_type == "semantic":
        vals = [h.lstrip("#").lower() for h in post.hashtags]
    elif action_type == "social":
        vals = [m.lstrip("@").lower() for m in post.mentions]
    else:
        vals = []
        for u in post.urls:
            u = u.split("#")[0]
            base, _, query = u.partition("?")
            keep = [kv for kv in query.split("&") if kv and not kv.startswith(("utm_", "fbclid=", "gclid="))]
            vals.append(base + ("?" + "&".join(keep) if keep else ""))
    return set(vals)


def test_twenty_post_fixture_matches_enumeration():
    posts = _random_posts(random.Random(20), 20)
    ds = _ds(posts)
    for t in ACTION_TYPES:
        got = Counter((e.post_id, e.action_value) for e in extract_actions(ds, t))
        want = Counter((p.post_id, v) for p in posts for v in _oracle_values(p, t))
        assert got == want


@given(st.integers(0, 10_000), st.integers(0, 40))
def test_extraction_invariants(seed, n):
    posts = _random_posts(random.Random(seed), n)
    ds = _ds(posts)
    ids = {p.post_id for p in posts}
    for t in ACTION_TYPES:
        events = extract_actions(ds, t)
        field = {"semantic": "hashtags", "referral": "urls", "social": "mentions"}[t]
        assert len(events) <= sum(len(getattr(p, field)) for p in posts)
        assert events == sorted(events)
        assert [(e.action_value, e.timestamp) for e in events] == sorted((e.action_value, e.timestamp) for e in events)
        assert all(e.post_id in ids and e.action_value and e.action_type == t for e in events)
        assert extract_actions(ds, t) == events


def test_equality_iff_no_duplicates():
    ds = _ds([_post("a", hashtags=("x", "y")), _post("b", hashtags=("z",))])
    assert len(extract_actions(ds, "semantic")) == 3
    ds = _ds([_post("a", hashtags=("x", "X"))])
    assert len(extract_actions(ds, "semantic")) == 1


def test_csv_export(tmp_path):
    ds = _ds([_post("a", hashtags=("x",))])
    write_actions_csv(tmp_path / "a.csv", extract_actions(ds, "semantic"))
    assert (tmp_path / "a.csv").read_text().splitlines()[1].startswith("u,semantic,x,")
