import csv
import logging
import random
import string
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coordnet.errors import ConfigurationError
from coordnet.ingest import UserProfile
from coordnet.network import CoordinationGraph, build_graph, threshold_graph
from coordnet.users import (
    UNKNOWN,
    CharDistribution,
    UserAnnotation,
    age_category,
    annotate_users,
    build_char_distribution,
    participation_tables,
    screen_name_entropy,
    write_annotations_csv,
)
from oracles import char_probabilities, entropy, recount_participation
from test_network import random_events

START = datetime(2020, 2, 1, tzinfo=timezone.utc)


def test_add_one_smoothing_example():
    d = build_char_distribution(["aa"])
    assert d.probabilities == {"a": 0.75, UNKNOWN: 0.25}
    assert d.prob("zz"[0]) == 0.25


def test_uniform_alphabet():
    d = build_char_distribution([string.ascii_lowercase] * 3)
    vals = {d.prob(c) for c in string.ascii_lowercase}
    assert len(vals) == 1
    assert sum(d.probabilities.values()) == pytest.approx(1.0)


def test_thousand_name_corpus_matches_counting():
    rng = random.Random(0)
    alphabet = string.ascii_letters + string.digits + "_"
    names = ["".join(rng.choices(alphabet, k=rng.randint(3, 15))) for _ in range(1000)]
    d = build_char_distribution(names)
    probs, unk = char_probabilities(names)
    assert d.probabilities.keys() - {UNKNOWN} == probs.keys()
    for c, p in probs.items():
        assert d.prob(c) == pytest.approx(p, abs=1e-12)
    assert d.prob(UNKNOWN) == pytest.approx(unk, abs=1e-12)
    for name in names[:50] + ["unseen€"]:
        assert screen_name_entropy(name, d) == pytest.approx(entropy(name, probs, unk), abs=1e-9)


def test_empty_corpus_rejected():
    with pytest.raises(ConfigurationError):
        build_char_distribution([])


def test_entropy_examples():
    assert screen_name_entropy("aaa", CharDistribution({"a": 1.0})) == 0.0
    d = CharDistribution({"a": 0.5, "b": 0.25, UNKNOWN: 0.25})
    assert screen_name_entropy("ab", d) == 1.0
    assert screen_name_entropy("ab", d, normalized=True) == 0.5


def test_empty_name_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert screen_name_entropy("", CharDistribution({UNKNOWN: 1.0})) == 0.0
    assert "empty" in caplog.text


def test_missing_unknown_bucket():
    with pytest.raises(KeyError):
        CharDistribution({"a": 1.0}).prob("b")


NAMES = st.text(alphabet="abcdef_12XY", max_size=12)


@given(NAMES, NAMES)
def test_entropy_additive_and_permutation_invariant(x, y):
    d = build_char_distribution(["abcabc_1", "XYfed"])
    hx, hy = screen_name_entropy(x, d), screen_name_entropy(y, d)
    assert screen_name_entropy(x + y, d) == pytest.approx(hx + hy, abs=1e-9)
    assert screen_name_entropy("".join(sorted(x)), d) == pytest.approx(hx, abs=1e-9)


@pytest.mark.parametrize(
    "created,suspended,expected",
    [
        (datetime(2020, 1, 1, tzinfo=timezone.utc), False, "lt_3_months"),
        (START - timedelta(days=91), False, "btw_3_6_months"),
        (START - timedelta(days=90, hours=23), False, "lt_3_months"),
        (START - timedelta(days=182), False, "btw_3_6_months"),
        (START - timedelta(days=183), False, "gt_6_months"),
        (datetime(2019, 1, 1, tzinfo=timezone.utc), True, "suspended"),
        (None, True, "suspended"),
        (None, False, "unknown"),
    ],
)
def test_age_categories(created, suspended, expected):
    assert age_category(UserProfile("u", "u", created, suspended), START) == expected


def test_missing_profile_unknown():
    assert age_category(None, START) == "unknown"


def _g(edges, t):
    return CoordinationGraph.from_edges(edges, t)


def test_two_type_user():
    graphs = {
        ("E1", "semantic"): _g({("u1", "u2"): 3}, "semantic"),
        ("E1", "social"): _g({("u1", "u3"): 2}, "social"),
    }
    ann = {a.user_id: a for a in annotate_users({}, graphs, {"E1": (START, START)})}
    assert ann["u1"].types_participated == ("semantic", "social")
    assert ann["u1"].strength == 5
    tables = participation_tables(ann.values())
    ev = tables["events"]["E1"]
    assert ev["type_count"] == {"1": 2, "2": 1, "3": 0}
    assert ev["two_type_pairs"]["semantic+social"] == 1


def _ann(user, event, types):
    return UserAnnotation(event, user, "unknown", 0.0, 1, tuple(types), (event,))


def test_three_type_fraction():
    rows = [_ann("u0", "E1", ("semantic", "referral", "social"))]
    rows += [_ann(f"u{i}", "E1", ("semantic",)) for i in range(1, 10)]
    assert participation_tables(rows)["events"]["E1"]["type_fraction"]["3"] == 0.1


def test_venn_cells():
    rows = [_ann("u1", "E1", ("semantic",)), _ann("u2", "E1", ("semantic",)), _ann("u2", "E2", ("social",))]
    t = participation_tables(rows)
    assert t["venn"] == {"E1": 1, "E2": 0, "E1&E2": 1}
    assert t["n_distinct_users"] == 2


def test_listed_event_without_users():
    t = participation_tables([_ann("u1", "E1", ("semantic",))], ["E1", "E9"])
    assert t["events"]["E9"]["n_users"] == 0
    assert t["venn"]["E9"] == 0


def _synthetic_graphs(seed, n_events=3):
    rng = random.Random(seed)
    graphs = {}
    for e in range(n_events):
        for t in ("semantic", "referral", "social"):
            events = sorted(random_events(rng, 120, n_users=30, n_values=6, span=3000))
            graphs[(f"E{e}", t)] = threshold_graph(build_graph(events, 300, action_type=t)).graph
    return graphs


@given(st.integers(0, 10_000))
def test_participation_matches_recount(seed):
    graphs = _synthetic_graphs(seed)
    frames = {e: (START, START) for e, _ in graphs}
    ann = annotate_users({}, graphs, frames)
    tables = participation_tables(ann)
    per_event, per_user = recount_participation(
        {k: [(a, b, w) for (a, b), w in g.edges.items()] for k, g in graphs.items()}
    )
    for event, users in per_event.items():
        ev = tables["events"][event]
        assert ev["n_users"] == len(users)
        for k in (1, 2, 3):
            assert ev["type_count"][str(k)] == sum(1 for s in users.values() if len(s) == k)
        two = [frozenset(s) for s in users.values() if len(s) == 2]
        assert sum(ev["two_type_pairs"].values()) == ev["type_count"]["2"] == len(two)
    assert sum(tables["venn"].values()) == tables["n_distinct_users"] == len(per_user)
    for cell, n in tables["venn"].items():
        assert n == sum(1 for s in per_user.values() if s == set(cell.split("&")))
    # every annotated user has a surviving link, so its strength meets some threshold
    for a in ann:
        assert a.strength >= 1
        assert a.events_participated == tuple(sorted(per_user[a.user_id]))


def test_strength_at_least_graph_threshold():
    rng = random.Random(8)
    events = sorted(random_events(rng, 300, n_users=25, n_values=5, span=4000))
    res = threshold_graph(build_graph(events, 300, action_type="semantic"))
    ann = annotate_users({}, {("E", "semantic"): res.graph}, {"E": (START, START)})
    assert ann and all(a.strength >= res.threshold for a in ann)


def test_annotations_csv(tmp_path):
    rows = [_ann("u1", "E1", ("semantic", "social"))]
    write_annotations_csv(tmp_path / "a.csv", rows)
    got = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert got[0]["types"] == "semantic|social" and got[0]["events"] == "E1"


def test_entropy_uses_profile_name_then_fallback():
    graphs = {("E1", "semantic"): _g({("u1", "u2"): 1}, "semantic")}
    profiles = {"u1": UserProfile("u1", "aaaa", None, False)}
    dist = CharDistribution({"a": 0.5, UNKNOWN: 0.5})
    ann = {a.user_id: a for a in annotate_users(profiles, graphs, {"E1": (START, START)}, dist, {"u2": "bb"})}
    assert ann["u1"].entropy_bits == 2.0
    assert ann["u2"].entropy_bits == 1.0
