"""Feeder parsing, validation, and tree-query tests."""

import json

import numpy as np
import pytest

from derplace import (
    FeederValidationError,
    UnknownNodeError,
    branches,
    classify_node,
    feeder_to_dict,
    main_branch,
    nodal_distance,
    parse_feeder,
    path_to_substation,
    serialize_feeder,
)
from derplace.feeder import FeederFormatError
from derplace.rng import SplitMix64

from conftest import make_feeder, random_feeder, single_phase_doc


# ---------------------------------------------------------------------------
# parsing / validation
# ---------------------------------------------------------------------------


def test_parse_minimal_two_node(two_node):
    assert len(two_node.nodes) == 2
    assert len(two_node.lines) == 1
    line = two_node.lines[0]
    assert line.r_block[0, 0] == 0.05
    assert line.x_block[0, 0] == 0.1
    assert np.count_nonzero(line.r_block) == 1  # scalar form fills one entry


def test_duplicate_node_id_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    doc["nodes"].append({"id": "n1", "phases": "A"})
    with pytest.raises(FeederValidationError, match="duplicate id"):
        parse_feeder(json.dumps(doc))


def test_cycle_rejected():
    doc = single_phase_doc(
        [("s0", "n1", 0.05, 0.1), ("n1", "n2", 0.05, 0.1)]
    )
    doc["lines"].append({"from": "n2", "to": "s0", "phases": "A", "r": 0.05, "x": 0.1})
    with pytest.raises(FeederValidationError, match="not radial"):
        parse_feeder(json.dumps(doc))


def test_disconnected_node_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    doc["nodes"].append({"id": "n2", "phases": "A"})
    with pytest.raises(FeederValidationError, match="not radial|disconnected"):
        parse_feeder(json.dumps(doc))


def test_phase_mismatch_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    doc["lines"][0]["phases"] = "AB"
    with pytest.raises(FeederValidationError, match="phase mismatch"):
        parse_feeder(json.dumps(doc))


def test_scalar_impedance_needs_single_phase():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    doc["nodes"] = [{"id": "s0", "phases": "AB"}, {"id": "n1", "phases": "AB"}]
    doc["lines"][0]["phases"] = "AB"
    with pytest.raises(FeederFormatError, match="scalar"):
        parse_feeder(json.dumps(doc))


def test_asymmetric_block_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    block = [[0.05, 0.01, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
    doc["lines"][0]["r"] = block
    with pytest.raises(FeederValidationError, match="not symmetric"):
        parse_feeder(json.dumps(doc))


def test_nonzero_absent_phase_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    block = [[0.05, 0.0, 0.0], [0.0, 0.02, 0.0], [0.0, 0.0, 0.0]]
    doc["lines"][0]["r"] = block
    with pytest.raises(FeederValidationError, match="absent phase"):
        parse_feeder(json.dumps(doc))


def test_nonpositive_reactance_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, -0.1)])
    with pytest.raises(FeederValidationError, match="non-positive reactance"):
        parse_feeder(json.dumps(doc))


def test_invalid_json_is_format_error():
    with pytest.raises(FeederFormatError, match="invalid JSON"):
        parse_feeder("{nope")


def test_unknown_substation_rejected():
    doc = single_phase_doc([("s0", "n1", 0.05, 0.1)])
    doc["substation"] = "zz"
    with pytest.raises(FeederValidationError, match="unknown substation"):
        parse_feeder(json.dumps(doc))


# ---------------------------------------------------------------------------
# tree queries
# ---------------------------------------------------------------------------


def test_path_chain(chain3):
    path = path_to_substation(chain3, "n2")
    assert [(l.from_id, l.to_id) for l in path] == [("n1", "n2"), ("s0", "n1")]
    assert path_to_substation(chain3, "s0") == []
    with pytest.raises(UnknownNodeError):
        path_to_substation(chain3, "nope")


def test_path_on_tree_matches_hand_walk():
    # 5-node tree: s0 - n1 - n2 - n4 with side leaf n3 at n1
    f = make_feeder(
        [
            ("s0", "n1", 0.05, 0.1),
            ("n1", "n2", 0.05, 0.1),
            ("n1", "n3", 0.05, 0.1),
            ("n2", "n4", 0.05, 0.1),
        ]
    )
    path = path_to_substation(f, "n4")
    assert [(l.from_id, l.to_id) for l in path] == [
        ("n2", "n4"),
        ("n1", "n2"),
        ("s0", "n1"),
    ]
    assert len(path) == 3
    assert nodal_distance(f, "n4") == 3


def test_classify_chain_and_star():
    chain = make_feeder(
        [("s0", "n1", 0.05, 0.1), ("n1", "n2", 0.05, 0.1), ("n2", "n3", 0.05, 0.1)]
    )
    assert classify_node(chain, "n3") == "edge"
    assert classify_node(chain, "n2") == "near_edge"
    assert classify_node(chain, "n1") == "middle"
    assert classify_node(chain, "s0") == "substation"

    star = make_feeder(
        [
            ("s0", "hub", 0.05, 0.1),
            ("hub", "a", 0.05, 0.1),
            ("hub", "b", 0.05, 0.1),
            ("hub", "c", 0.05, 0.1),
        ]
    )
    assert classify_node(star, "hub") == "fork"
    assert classify_node(star, "a") == "edge"


def test_fork_beats_near_edge():
    # hub has degree 3 and an edge neighbor: fork wins by precedence
    f = make_feeder(
        [
            ("s0", "hub", 0.05, 0.1),
            ("hub", "leaf", 0.05, 0.1),
            ("hub", "m1", 0.05, 0.1),
            ("m1", "m2", 0.05, 0.1),
        ]
    )
    assert classify_node(f, "hub") == "fork"


def test_nodal_distance_matches_bfs_depth_on_random_trees():
    rng = SplitMix64(71)
    for _ in range(5):
        f = random_feeder(rng, 20)
        # independent BFS oracle
        depth = {f.substation_id: 0}
        frontier = [f.substation_id]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _ in f.adjacency[u]:
                    if v not in depth:
                        depth[v] = depth[u] + 1
                        nxt.append(v)
            frontier = nxt
        for node in f.nodes:
            assert nodal_distance(f, node.id) == depth[node.id]


def _all_root_to_edge_paths(f):
    """Oracle: enumerate every substation-to-edge path by DFS."""
    paths = []

    def walk(u, acc):
        kids = [v for v, _ in f.adjacency[u] if v not in acc]
        if not kids and u != f.substation_id and f.degree(u) == 1:
            paths.append(list(acc))
        for v in kids:
            acc.append(v)
            walk(v, acc)
            acc.pop()

    walk(f.substation_id, [f.substation_id])
    return paths


def test_main_branch_pure_chain(chain3):
    assert main_branch(chain3) == ["s0", "n1", "n2"]


def test_main_branch_comb_is_spine():
    # spine a1..a4 (a4 bare edge), teeth t1..t3; oracle enumerates all paths
    edges = [("s0", "a1", 0.05, 0.1)]
    for i in range(1, 4):
        edges.append((f"a{i}", f"a{i+1}", 0.05, 0.1))
    for i in range(1, 4):
        edges.append((f"a{i}", f"t{i}", 0.02, 0.05))
    f = make_feeder(edges)

    result = main_branch(f)
    assert result == ["s0", "a1", "a2", "a3", "a4"]

    # oracle: recompute the score of every root-to-edge path by enumeration
    def score(path):
        on = set(path)
        hanging = {v for u in path for v, _ in f.adjacency[u] if v not in on}
        return (len(hanging), len(path))

    best = max(score(p) for p in _all_root_to_edge_paths(f))
    assert score(result) == best


def test_main_branch_balanced_binary_tie_break():
    f = make_feeder(
        [
            ("s0", "a", 0.05, 0.1),
            ("s0", "b", 0.05, 0.1),
            ("a", "a1", 0.05, 0.1),
            ("a", "a2", 0.05, 0.1),
            ("b", "b1", 0.05, 0.1),
            ("b", "b2", 0.05, 0.1),
        ]
    )
    # all four spines tie on score and length: smallest edge id wins
    assert main_branch(f) == ["s0", "a", "a1"]


def test_main_branch_is_substation_to_edge_path():
    rng = SplitMix64(13)
    for _ in range(10):
        f = random_feeder(rng, 12)
        path = main_branch(f)
        assert path[0] == f.substation_id
        assert f.degree(path[-1]) == 1
        for u, v in zip(path, path[1:]):
            assert any(w == v for w, _ in f.adjacency[u])


def test_branches_chain_of_four():
    f = make_feeder(
        [("s0", "n1", 0.05, 0.1), ("n1", "n2", 0.05, 0.1), ("n2", "n3", 0.05, 0.1)]
    )
    out = branches(f)
    assert len(out) == 1
    assert out[0].nodes == ("s0", "n1", "n2", "n3")
    assert len(out[0]) == 4


def test_branches_y_shape():
    # fork c with three 2-node arms; one arm leads to the substation
    f = make_feeder(
        [
            ("s0", "m", 0.05, 0.1),
            ("m", "c", 0.05, 0.1),
            ("c", "x1", 0.05, 0.1),
            ("x1", "x2", 0.05, 0.1),
            ("c", "y1", 0.05, 0.1),
            ("y1", "y2", 0.05, 0.1),
        ]
    )
    out = branches(f)
    assert len(out) == 3
    for b in out:
        assert "c" in b.nodes
    ends = sorted(b.end for b in out)
    assert ends == ["c", "x2", "y2"]


def test_branches_comb():
    edges = [("s0", "a1", 0.05, 0.1)]
    for i in range(1, 3):
        edges.append((f"a{i}", f"a{i+1}", 0.05, 0.1))
    for i in range(1, 3):
        edges.append((f"a{i}", f"t{i}", 0.02, 0.05))
    f = make_feeder(edges)
    out = branches(f)
    # spine segments between junctions plus one branch per tooth
    node_sets = sorted(tuple(b.nodes) for b in out)
    assert node_sets == sorted(
        [("s0", "a1"), ("a1", "a2"), ("a2", "a3"), ("a1", "t1"), ("a2", "t2")]
    )


def test_branch_cover_and_multiplicity():
    rng = SplitMix64(99)
    for _ in range(10):
        f = random_feeder(rng, 14)
        out = branches(f)
        covered = set()
        multiplicity = {}
        for b in out:
            covered.update(b.nodes)
            for nid in b.nodes:
                multiplicity[nid] = multiplicity.get(nid, 0) + 1
        assert covered == set(f.node_by_id)
        # interior (degree-2, non-substation) nodes appear exactly once
        for node in f.nodes:
            if node.id != f.substation_id and f.degree(node.id) == 2:
                assert multiplicity[node.id] == 1
        # total node count identity: sum of lengths minus repeat appearances
        assert sum(len(b) for b in out) - sum(m - 1 for m in multiplicity.values()) == len(
            f.nodes
        )


def test_shared_path_equals_lca_path():
    rng = SplitMix64(5)
    for _ in range(8):
        f = random_feeder(rng, 10)
        ids = [n.id for n in f.nodes]
        for a in ids:
            for b in ids:
                pa = {(l.from_id, l.to_id) for l in path_to_substation(f, a)}
                pb = {(l.from_id, l.to_id) for l in path_to_substation(f, b)}
                # oracle LCA: deepest common node of the two root paths
                ra = _root_chain(f, a)
                rb = _root_chain(f, b)
                lca = next(u for u in reversed(ra) if u in set(rb))
                plca = {(l.from_id, l.to_id) for l in path_to_substation(f, lca)}
                assert pa & pb == plca


def _root_chain(f, nid):
    chain = [nid]
    while chain[-1] != f.substation_id:
        chain.append(f.parent[chain[-1]][0])
    chain.reverse()
    return chain


def test_roundtrip_identity():
    rng = SplitMix64(2024)
    for _ in range(5):
        f = random_feeder(rng, 9)
        assert parse_feeder(serialize_feeder(f)) == f


def test_roundtrip_preserves_positions(feeder25):
    again = parse_feeder(serialize_feeder(feeder25))
    assert again == feeder25
    assert again.positions == feeder25.positions
    assert feeder_to_dict(again) == feeder_to_dict(feeder25)


def test_feeder25_shape(feeder25):
    assert len(feeder25.nodes) == 25
    assert len(feeder25.lines) == 24
    long_branches = [b for b in branches(feeder25) if len(b) >= 4]
    assert len(long_branches) == 2
