"""
Automatic co-located placement trials
=====================================

Run the automatic overload process for several seeds: keep placing
co-located pairs at random stable nodes, skipping past failures, until no
remaining node can be stabilized.  Summarize where the pairs landed.
"""
from pathlib import Path

from derplace import new_session, parse_feeder, run_auto_ocpp

DATA = Path(__file__).resolve().parents[1] / "src" / "derplace" / "data" / "feeder25.json"
feeder = parse_feeder(DATA.read_text())

print(f"{'seed':>4} {'placed':>6} {'remaining':>9} {'edge':>5} {'fork':>5} "
      f"{'middle':>6} {'%edge':>6}  last four depths")
for seed in (2, 3, 4, 5, 6, 8):
    session = new_session(feeder, "auto_ocpp", seed=seed)
    stats = run_auto_ocpp(session, seed=seed)
    t = stats.tally
    print(
        f"{seed:>4} {stats.total_placed:>6} {stats.n_remaining:>9} "
        f"{t['on_or_near_edge']:>5} {t['at_fork']:>5} {t['in_middle']:>6} "
        f"{stats.percent_edge:>6.1f}  {list(stats.last_four_distances)}"
    )

##############################################################################
# The run ends with a termination certificate: every node still empty
# scores red on a fresh co-located heatmap (checked inside the run).
# Placements lean toward edge nodes, and the nodes that stay red cluster
# on the heavily coupled trunk.
final = session.latest_heatmap
reds = [e.node for e in final.entries if e.color == "red"]
print(f"\nseed 8 leftovers (all red): {reds}")
