"""Shared fixtures: canonical small feeders and seed-stable random trees."""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import pytest

from derplace import parse_feeder
from derplace.rng import SplitMix64

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "derplace" / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def feeder_doc(nodes, lines, substation="s0"):
    return {
        "s_base_kva": 1000.0,
        "v_base_kv": 4.16,
        "substation": substation,
        "nodes": nodes,
        "lines": lines,
    }


def single_phase_doc(edges, substation="s0"):
    """edges: list of (parent, child, r, x); all nodes on phase A."""
    ids = [substation] + [c for _, c, _, _ in edges]
    nodes = [{"id": nid, "phases": "A"} for nid in ids]
    lines = [
        {"from": p, "to": c, "phases": "A", "r": r, "x": x} for p, c, r, x in edges
    ]
    return feeder_doc(nodes, lines, substation)


def make_feeder(edges, substation="s0"):
    return parse_feeder(json.dumps(single_phase_doc(edges, substation)))


def random_tree_edges(rng: SplitMix64, n_nodes: int):
    """Random radial tree, r,x uniform in [0.01, 0.2]; node 0 is substation."""
    edges = []
    for i in range(1, n_nodes):
        parent = rng.below(i)
        r = 0.01 + 0.19 * rng.random()
        x = 0.01 + 0.19 * rng.random()
        edges.append((f"n{parent}" if parent else "s0", f"n{i}", r, x))
    return edges


def random_feeder(rng: SplitMix64, n_nodes: int):
    return make_feeder(random_tree_edges(rng, n_nodes))


@pytest.fixture
def two_node():
    """s0 -- n1 over (r=0.05, x=0.1), single phase A."""
    return make_feeder([("s0", "n1", 0.05, 0.1)])


@pytest.fixture
def chain3():
    """s0 -- n1 -- n2 with (0.05, 0.1) and (0.03, 0.06)."""
    return make_feeder([("s0", "n1", 0.05, 0.1), ("n1", "n2", 0.03, 0.06)])


@pytest.fixture
def feeder25():
    return parse_feeder((DATA_DIR / "feeder25.json").read_text())


def unbalanced_block(x_self, r_self, mut_x, mut_r):
    """Symmetric 3x3 blocks with mild per-phase spread and mutual coupling."""
    x = [[0.0] * 3 for _ in range(3)]
    r = [[0.0] * 3 for _ in range(3)]
    for i in range(3):
        x[i][i] = x_self * (1.0 + 0.1 * i)
        r[i][i] = r_self
    for i, j in itertools.combinations(range(3), 2):
        x[i][j] = x[j][i] = mut_x * x_self
        r[i][j] = r[j][i] = mut_r * r_self
    return r, x


def unbalanced_mini_doc(mut_x=0.9, mut_r=0.85):
    """Two coupled trunk lines, five single-phase laterals on mixed phases."""
    r1, x1 = unbalanced_block(0.1, 0.1, mut_x, mut_r)
    r2, x2 = unbalanced_block(0.12, 0.12, mut_x, mut_r)
    nodes = [
        {"id": "s0", "phases": "ABC"},
        {"id": "n1", "phases": "ABC"},
        {"id": "n2", "phases": "ABC"},
        {"id": "n3", "phases": "A"},
        {"id": "n4", "phases": "B"},
        {"id": "n5", "phases": "C"},
        {"id": "n6", "phases": "A"},
        {"id": "n7", "phases": "B"},
    ]
    lines = [
        {"from": "s0", "to": "n1", "phases": "ABC", "r": r1, "x": x1},
        {"from": "n1", "to": "n2", "phases": "ABC", "r": r2, "x": x2},
        {"from": "n1", "to": "n3", "phases": "A", "r": 0.005, "x": 0.012},
        {"from": "n1", "to": "n4", "phases": "B", "r": 0.004, "x": 0.01},
        {"from": "n2", "to": "n5", "phases": "C", "r": 0.006, "x": 0.014},
        {"from": "n2", "to": "n6", "phases": "A", "r": 0.005, "x": 0.011},
        {"from": "n2", "to": "n7", "phases": "B", "r": 0.004, "x": 0.012},
    ]
    return feeder_doc(nodes, lines)


@pytest.fixture
def unbalanced_mini():
    return parse_feeder(json.dumps(unbalanced_mini_doc()))
