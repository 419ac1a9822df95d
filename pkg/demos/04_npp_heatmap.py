"""
Non-colocated placement with heatmaps
=====================================

Grow a core configuration step by step: pick a performance node, score
every empty node as the candidate actuator, accept one of the viable
colors, repeat.  Writes each round as an SVG alongside this script.
"""
from pathlib import Path

from derplace import (
    accept_placement,
    heatmap_npp,
    new_session,
    branch_stats,
    parse_feeder,
)
from derplace.svg import export_heatmap_svg

HERE = Path(__file__).resolve().parent
DATA = HERE.parents[0] / "src" / "derplace" / "data" / "feeder25.json"

feeder = parse_feeder(DATA.read_text())
session = new_session(feeder, "npp")

##############################################################################
# Three placements tracking the phasor at lateral node n11.  Every empty
# node sharing a phase with the target is scored; blue means at least 7%
# of the sampled gain grid stabilizes the would-be configuration.
PERF = "n11"
for step in range(1, 4):
    heatmap = heatmap_npp(session, PERF)
    counts = {}
    for e in heatmap.entries:
        counts[e.color] = counts.get(e.color, 0) + 1
    ranked = sorted(
        (e for e in heatmap.entries if e.color in ("blue", "yellow")),
        key=lambda e: -e.fraction,
    )
    svg_path = HERE / f"npp_step{step}.svg"
    svg_path.write_text(export_heatmap_svg(heatmap, feeder))
    print(f"step {step}: {counts} -> {svg_path.name}")

    chosen = ranked[0]
    accept_placement(session, chosen.node, PERF)
    print(f"  placed actuator {chosen.node} (fraction {chosen.fraction:.2f})")

print("core:", [(p.pair.actuator, p.pair.performance) for p in session.core])

##############################################################################
# Branch statistics accumulate over every evaluation the session ran:
# percent stable per branch, branches of at least four nodes.
print("branch report:")
for b in branch_stats(session):
    print(
        f"  {b.start} .. {b.end}  length {b.length}  "
        f"{b.percent_stable:.1f}% stable  ({b.n_used}/{b.n_involving})"
    )
