"""Human-readable rendering of a run manifest.

The renderer only formats values already present in the manifest; it
never derives new numbers, so every figure in the text can be traced back
to the JSON.
"""

from __future__ import annotations

import json
from pathlib import Path

# Published ranges on real campaigns, shown next to our own numbers as a
# guide only. They are copied into the manifest so the text stays traceable.
REFERENCE_BANDS = {
    "filtered_density": {"mean": 0.022, "sd": 0.015},
    "entropy_bits": {"mean": 1.42, "sd": 0.43},
    "two_type_fraction": {"mean": 0.055, "sd": 0.002},
    "three_type_fraction": {"mean": 0.0035, "sd": 0.0021},
}


def _num(x) -> str:
    return json.dumps(x)


def _table(header: list[str], rows: list[list]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


def render_report(manifest: dict) -> str:
    out = ["# coordnet run report", ""]
    out.append(f"- config hash: `{manifest['config_hash']}`")
    out.append(f"- seed: {_num(manifest['seed'])}")
    out.append(f"- kernel backend: {manifest.get('backend', 'unknown')}")
    win = manifest["window"]
    out.append(f"- window: {_num(win['selected'])} s ({win['mode']})")
    out.append("")

    if win["mode"] == "sweep":
        out += ["## Window sweep", ""]
        out += _table(
            ["window (s)", "mean modularity"],
            [[w, _num(q)] for w, q in sorted(win["average_modularity"].items(), key=lambda kv: int(kv[0]))],
        )
        out.append("")

    out += ["## Coordination graphs", ""]
    rows = []
    for event_id, ev in manifest["events"].items():
        for channel, g in ev["graphs"].items():
            c, f = g["coordinated"], g["filtered"]
            rows.append([
                event_id, channel,
                _num(c["nodes"]), _num(c["links"]), _num(c["density"]),
                _num(g["threshold"]),
                _num(f["nodes"]), _num(f["links"]), _num(f["density"]),
                _num(g["modularity"]), _num(g["n_communities"]),
            ])
    out += _table(
        ["event", "channel", "nodes", "links", "D", "threshold", "nodes (filtered)",
         "links (filtered)", "D (filtered)", "Q", "communities"],
        rows,
    )
    out.append("")

    out += ["## Ingest", ""]
    rows = [
        [e, _num(ev["ingest"]["kept"]), _num(ev["ingest"]["dropped_malformed"]),
         _num(ev["ingest"]["dropped_by_filter"]), _num(ev["n_profiles"])]
        for e, ev in manifest["events"].items()
    ]
    out += _table(["event", "posts kept", "malformed", "filtered out", "profiles"], rows)
    out.append("")

    analysis = manifest.get("analysis")
    if analysis:
        part = analysis["participation"]
        out += ["## Participation", ""]
        rows = []
        for e, t in part["events"].items():
            fr = t["type_fraction"]
            rows.append([e, _num(t["n_users"]), _num(fr["1"]), _num(fr["2"]), _num(fr["3"])])
        out += _table(["event", "coordinating users", "one channel", "two channels", "three channels"], rows)
        out.append("")
        out += ["### Users by set of events", ""]
        out += _table(["events", "users"], [[k, _num(v)] for k, v in part["venn"].items()])
        out.append("")
        out.append(f"distinct coordinating users: {_num(part['n_distinct_users'])}")
        out.append("")
        out += ["### Mean screen-name entropy (bits)", ""]
        out += _table(["event", "bits"], [[e, _num(v)] for e, v in analysis["mean_entropy_bits"].items()])
        out.append("")

    bands = manifest.get("reference_bands")
    if bands:
        out += ["## Reference ranges (display guide only)", ""]
        out += _table(["quantity", "mean", "sd"], [[k, _num(v["mean"]), _num(v["sd"])] for k, v in bands.items()])
        out.append("")
    return "\n".join(out)


def render_file(manifest_path) -> str:
    return render_report(json.loads(Path(manifest_path).read_text(encoding="utf-8")))
