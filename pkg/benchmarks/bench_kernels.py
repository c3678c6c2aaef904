"""Time graph construction and Louvain with the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--users 2000] [--rate 1.0] [--repeat 3]
"""

import argparse
import logging
import time
from contextlib import contextmanager
from unittest import mock

from coordnet import community, network
from coordnet.actions import extract_actions
from coordnet.kernels import implementation
from coordnet.synth import CampaignSpec, GroupSpec, generate


@contextmanager
def backend(name):
    impl = implementation(name)
    with mock.patch.object(network, "sync_pairs", impl.sync_pairs), mock.patch.object(
        community, "local_move", impl.local_move
    ):
        yield


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--users", type=int, default=2000)
    ap.add_argument("--rate", type=float, default=1.0)
    ap.add_argument("--vocabulary", type=int, default=300)
    ap.add_argument("--window", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    logging.disable(logging.WARNING)

    spec = CampaignSpec(
        n_background_users=args.users,
        background_rate=args.rate,
        vocabulary_size=args.vocabulary,
        groups=(GroupSpec(30, "semantic"), GroupSpec(20, "semantic")),
    )
    dataset, _ = generate(spec)
    events = extract_actions(dataset, "semantic")
    print(f"{len(dataset.posts)} posts, {len(events)} semantic actions, window {args.window}s")

    results = {}
    for name in ("cython", "python"):
        try:
            implementation(name)
        except ImportError:
            print(f"{name:>7}: not available")
            continue
        with backend(name):
            t_build, graph = best_of(lambda: network.build_graph(events, args.window), args.repeat)
            t_louv, part = best_of(lambda: community.louvain(graph, 42), args.repeat)
        results[name] = (graph, part)
        print(
            f"{name:>7}: build {t_build * 1e3:9.1f} ms ({graph.edge_count} links)  "
            f"louvain {t_louv * 1e3:9.1f} ms (Q={part.modularity:.4f})"
        )
    if len(results) == 2:
        (g1, p1), (g2, p2) = results["cython"], results["python"]
        same = g1.edges == g2.edges and p1.assignment == p2.assignment
        print("backends agree" if same else "BACKENDS DISAGREE")


if __name__ == "__main__":
    main()
