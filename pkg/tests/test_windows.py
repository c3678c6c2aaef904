import csv
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coordnet.actions import extract_actions
from coordnet.community import louvain
from coordnet.network import build_graph, threshold_graph
from coordnet.synth import CampaignSpec, GroupSpec, generate
from coordnet.windows import (
    WindowScore,
    post_hash_fraction,
    sample_dataset,
    score_window,
    select_window,
    sweep_windows,
    write_sweep_csv,
    write_sweep_json,
)


@pytest.fixture(scope="module")
def dataset():
    spec = CampaignSpec(
        n_background_users=120,
        vocabulary_size=60,
        duration=6.0,
        groups=(GroupSpec(8, "semantic"), GroupSpec(12, "semantic"), GroupSpec(10, "social")),
        seed=4,
    )
    return generate(spec)[0]


def test_single_candidate_selected(dataset):
    assert sweep_windows(dataset, [420]).selected_window == 420


def test_ties_go_to_smallest_window():
    cands = [WindowScore(w, {}, a) for w, a in ((60, 0.3), (120, 0.5), (300, 0.5), (600, 0.5 - 1e-14))]
    assert select_window(cands) == 120


@given(st.lists(st.tuples(st.integers(1, 5000), st.floats(-0.5, 1)), min_size=1, max_size=10, unique_by=lambda t: t[0]))
def test_selected_attains_maximum(pairs):
    cands = [WindowScore(w, {}, a) for w, a in pairs]
    best = select_window(cands)
    top = max(a for _, a in pairs)
    assert dict(pairs)[best] >= top - 1e-12
    assert all(w >= best for w, a in pairs if a >= top - 1e-12)


def test_sweep_result_shape(dataset, tmp_path):
    res = sweep_windows(dataset, [600, 60, 300, 60], seed=7)
    ws = [c.window_seconds for c in res.candidates]
    assert ws == sorted(set(ws)) == [60, 300, 600]
    for c in res.candidates:
        assert c.average == pytest.approx(sum(c.modularity.values()) / 3, abs=1e-12)
        assert set(c.modularity) == {"semantic", "referral", "social"}
    assert sweep_windows(dataset, [600, 60, 300], seed=7) == res
    write_sweep_csv(tmp_path / "s.csv", res)
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert [int(r["window"]) for r in rows] == ws
    assert float(rows[0]["Q_avg"]) == res.candidates[0].average
    write_sweep_json(tmp_path / "s.json", res)
    assert json.loads((tmp_path / "s.json").read_text())["selected_window"] == res.selected_window


def test_score_matches_manual_pipeline(dataset):
    events = {t: extract_actions(dataset, t) for t in ("semantic", "social")}
    score = score_window(events, 300, seed=11)
    for t, ev in events.items():
        g = threshold_graph(build_graph(ev, 300)).graph
        assert score.modularity[t] == (louvain(g, 11).modularity if g.edges else 0.0)


def test_empty_channel_flagged(dataset):
    # the background never repeats a referral value inside one second
    res = sweep_windows(dataset, [1], action_types=("referral",))
    assert res.candidates[0].empty == ("referral",)
    assert res.candidates[0].modularity["referral"] == 0.0


def test_sampling_by_post_hash(dataset):
    half = sample_dataset(dataset, 0.5)
    assert sample_dataset(dataset, 0.5) == half
    assert set(half.posts) <= set(dataset.posts)
    assert all(post_hash_fraction(p.post_id) < 0.5 for p in half.posts)
    assert 0.35 < len(half.posts) / len(dataset.posts) < 0.65
    assert sample_dataset(dataset, 1.0) is dataset
    with pytest.raises(ValueError):
        sample_dataset(dataset, 0)


def test_bad_grid_rejected(dataset):
    with pytest.raises(ValueError):
        sweep_windows(dataset, [])
    with pytest.raises(ValueError):
        sweep_windows(dataset, [0, 60])


def test_parallel_sweep_matches_serial(dataset):
    assert sweep_windows(dataset, [60, 300], workers=2) == sweep_windows(dataset, [60, 300])


def test_noise_free_campaign_scores_flat_beyond_twice_jitter():
    # once every burst is fully captured (W >= 2 * jitter), larger windows
    # only rescale the planted weights, which modularity ignores
    groups = tuple(
        GroupSpec(s, t, burst_interval=300, jitter=30, bursts=6, shared_value_pool_size=6)
        for t in ("semantic", "referral", "social")
        for s in (8, 12)
    )
    ds, _ = generate(CampaignSpec(n_background_users=3, background_rate=0.0, groups=groups, seed=5))
    res = sweep_windows(ds, (60, 120, 300, 600, 1800))
    averages = {c.average for c in res.candidates}
    assert len(averages) == 1 and averages.pop() > 0.4
    assert res.selected_window == 60
