"""
Feeder model basics
===================

Parse the bundled 25-node feeder, walk its tree structure, and build the
voltage-sensitivity matrices that every other capability consumes.
"""
from pathlib import Path

import numpy as np

from derplace import (
    branches,
    build_RX,
    check_pd,
    classify_node,
    main_branch,
    nodal_distance,
    parse_feeder,
    path_to_substation,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "derplace" / "data" / "feeder25.json"

##############################################################################
# Parse and validate. Parsing rejects cycles, disconnected nodes, duplicate
# ids, and impedance blocks that disagree with the declared phases.
feeder = parse_feeder(DATA.read_text())
print(f"feeder: {len(feeder.nodes)} nodes, {len(feeder.lines)} lines")
print(f"substation: {feeder.substation_id}")

##############################################################################
# Tree queries: unique substation paths, hop counts, and node classes.
for nid in ("n8", "n12", "n2", "n7"):
    path = path_to_substation(feeder, nid)
    print(
        f"{nid}: depth {nodal_distance(feeder, nid)}, "
        f"class {classify_node(feeder, nid)}, "
        f"path {' -> '.join(l.from_id for l in reversed(path))} -> {nid}"
    )

##############################################################################
# The main branch is the substation-to-edge path with the most nodes
# hanging off it; branches are maximal paths with degree-2 interiors.
print("main branch:", " - ".join(main_branch(feeder)))
long_branches = [b for b in branches(feeder) if len(b) >= 4]
print("branches with at least 4 nodes:")
for b in long_branches:
    print(f"  {b.start} .. {b.end}  ({len(b)} nodes)")

##############################################################################
# Sensitivity matrices. The bundled feeder mixes a coupled three-phase
# trunk with single-phase laterals, so the multiphase mode matters here.
sens = build_RX(feeder, "multiphase")
print(f"state count m = {sens.n_states} (of {sens.R.shape[0]} slots)")
report = check_pd(sens)
print(
    f"positive definite: R={report.r_pd} (min eig {report.min_eig_r:.4f}), "
    f"X={report.x_pd} (min eig {report.min_eig_x:.4f})"
)

# the diagonal of X grows with electrical depth
diag = np.diag(sens.active_X())
order = np.argsort(diag)
pairs = [(idx, diag[idx]) for idx in (order[0], order[-1])]
inverse = {v: k for k, v in sens.index_of.items()}
for pos, val in pairs:
    node, phase = inverse[sens.active[pos]]
    print(f"  X diagonal at {node} phase {phase}: {val:.4f}")
