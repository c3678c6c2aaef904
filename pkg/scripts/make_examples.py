"""Regenerate the bundled two-event example under src/coordnet/data/examples."""

from pathlib import Path

from coordnet.synth import CampaignSpec, generate, write_dataset

OUT = Path(__file__).resolve().parent.parent / "src" / "coordnet" / "data" / "examples"
# two groups per channel; E2 grows the first group of each channel, so a few
# planted accounts coordinate in E2 only
SIZES = {"E1": (8, 12), "E2": (10, 12)}
EVENTS = (("E1", 1, "2020-03-01T00:00:00Z"), ("E2", 2, "2020-04-01T00:00:00Z"))


def main():
    for event_id, seed, start in EVENTS:
        groups = [
            dict(size=SIZES[event_id][i], action_type=t, bursts=5, burst_interval=900, shared_value_pool_size=5)
            for t in ("semantic", "referral", "social")
            for i in range(2)
        ]
        spec = CampaignSpec.from_dict(
            dict(n_background_users=150, background_rate=1.0, duration=8.0, vocabulary_size=25,
                 groups=groups, seed=seed, start=start, event_id=event_id)
        )
        dataset, _ = generate(spec)
        write_dataset(dataset, OUT / f"{event_id}_posts.jsonl", OUT / f"{event_id}_profiles.jsonl")
        print(event_id, len(dataset.posts), "posts")


if __name__ == "__main__":
    main()
