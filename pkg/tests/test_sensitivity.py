"""Sensitivity-matrix tests against an independent path-enumeration oracle."""

import json
import math

import numpy as np
import pytest

from derplace import build_RX, check_pd, parse_feeder, path_to_substation
from derplace.rng import SplitMix64
from derplace.sensitivity import state_index

from conftest import feeder_doc, make_feeder, random_feeder


def oracle_rx_single_phase(f):
    """Eq-by-hand oracle: R_ij = 2 * sum r over the shared substation paths,
    computed by explicit set intersection of enumerated line paths."""
    order = f.non_substation_ids()
    paths = {
        nid: {(l.from_id, l.to_id): (l.r_block[0, 0], l.x_block[0, 0])
              for l in path_to_substation(f, nid)}
        for nid in order
    }
    m = len(order)
    R = np.zeros((m, m))
    X = np.zeros((m, m))
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            shared = set(paths[a]) & set(paths[b])
            R[i, j] = 2.0 * sum(paths[a][k][0] for k in shared)
            X[i, j] = 2.0 * sum(paths[a][k][1] for k in shared)
    return R, X


def test_two_node_direct_substitution(two_node):
    s = build_RX(two_node, "single_phase_equivalent")
    assert np.array_equal(s.active_R(), [[0.1]])
    assert np.array_equal(s.active_X(), [[0.2]])


def test_chain_exact_values(chain3):
    s = build_RX(chain3, "single_phase_equivalent")
    # shared path of n1 and n2 is the first line only
    assert np.array_equal(s.active_R(), np.array([[0.1, 0.1], [0.1, 0.16]]))
    assert np.array_equal(s.active_X(), np.array([[0.2, 0.2], [0.2, 0.32]]))


def test_multiphase_reduces_to_single_phase_on_balanced_diagonal():
    eye = np.eye(3)
    doc = feeder_doc(
        nodes=[{"id": "s0", "phases": "ABC"}, {"id": "n1", "phases": "ABC"}],
        lines=[
            {
                "from": "s0",
                "to": "n1",
                "phases": "ABC",
                "r": (0.05 * eye).tolist(),
                "x": (0.1 * eye).tolist(),
            }
        ],
    )
    f = parse_feeder(json.dumps(doc))
    s = build_RX(f, "multiphase")
    # diagonal entries 2*r and 2*x per phase; off-diagonals stay zero because
    # the impedance blocks carry no mutual terms
    assert s.active_R() == pytest.approx(0.1 * np.eye(3))
    assert s.active_X() == pytest.approx(0.2 * np.eye(3))
    sp = build_RX(f, "single_phase_equivalent")
    assert np.allclose(s.R, sp.R) and np.allclose(s.X, sp.X)


def test_matches_path_enumeration_oracle_on_random_trees():
    rng = SplitMix64(424242)
    for _ in range(50):
        n = 3 + rng.below(6)  # 3..8 nodes
        f = random_feeder(rng, n)
        s = build_RX(f, "single_phase_equivalent")
        R_o, X_o = oracle_rx_single_phase(f)
        np.testing.assert_allclose(s.active_R(), R_o, atol=1e-12, rtol=0)
        np.testing.assert_allclose(s.active_X(), X_o, atol=1e-12, rtol=0)


def test_extending_a_leaf_never_shrinks_diagonals():
    rng = SplitMix64(7)
    base_edges = [("s0", "n1", 0.05, 0.1), ("n1", "n2", 0.03, 0.06)]
    f = make_feeder(base_edges)
    before = np.diag(build_RX(f, "single_phase_equivalent").active_R())
    extended = make_feeder(base_edges + [("n2", "n3", 0.04, 0.08)])
    after = np.diag(build_RX(extended, "single_phase_equivalent").active_R())
    assert np.all(after[: len(before)] >= before - 1e-15)


def test_symmetry_on_active_submatrices():
    rng = SplitMix64(31)
    for _ in range(10):
        f = random_feeder(rng, 7)
        s = build_RX(f, "single_phase_equivalent")
        assert np.max(np.abs(s.active_R() - s.active_R().T)) == 0.0
        assert np.max(np.abs(s.active_X() - s.active_X().T)) == 0.0


def test_positive_definite_with_positive_impedance():
    rng = SplitMix64(8)
    for _ in range(10):
        f = random_feeder(rng, 6)
        report = check_pd(build_RX(f, "single_phase_equivalent"))
        assert report.r_pd and report.x_pd


def test_check_pd_chain_values(chain3):
    s = build_RX(chain3, "single_phase_equivalent")
    report = check_pd(s)
    assert report.r_pd and report.x_pd
    # closed-form 2x2 smallest eigenvalue of X = [[0.2, 0.2], [0.2, 0.32]]
    tr, det = 0.52, 0.2 * 0.32 - 0.2 * 0.2
    expected = (tr - math.sqrt(tr * tr - 4 * det)) / 2
    assert report.min_eig_x == pytest.approx(expected, abs=1e-12)


def test_check_pd_flags_zero_diagonal():
    from derplace.sensitivity import SensitivityMatrices

    X = np.array(
        [[0.0, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.0]]
    )
    s = SensitivityMatrices(
        R=np.eye(3) * 0.1,
        X=X,
        index_of={("n1", "A"): 0, ("n1", "B"): 1},
        active=[0, 1],
        mode="single_phase_equivalent",
    )
    report = check_pd(s)
    assert not report.x_pd
    assert report.r_pd


def test_check_pd_single_entry(two_node):
    report = check_pd(build_RX(two_node, "single_phase_equivalent"))
    assert report.x_pd
    assert report.min_eig_x == pytest.approx(0.2)


def test_inactive_rows_are_zero(unbalanced_mini):
    s = build_RX(unbalanced_mini, "multiphase")
    mask = np.zeros(s.R.shape[0], dtype=bool)
    mask[s.active] = True
    assert np.all(s.R[~mask, :] == 0.0) and np.all(s.R[:, ~mask] == 0.0)
    assert np.all(s.X[~mask, :] == 0.0) and np.all(s.X[:, ~mask] == 0.0)


def test_index_map_layout(unbalanced_mini):
    index_of, active = state_index(unbalanced_mini)
    # nodes in file order, 3i + phase offset; n1 is first and three-phase
    assert index_of[("n1", "A")] == 0
    assert index_of[("n1", "B")] == 1
    assert index_of[("n1", "C")] == 2
    # n3 is the third non-substation node and phase A only
    assert index_of[("n3", "A")] == 6
    assert ("n3", "B") not in index_of
    assert active == sorted(active)
    assert set(active) == set(index_of.values())


def test_unbalanced_mini_stays_pd(unbalanced_mini):
    report = check_pd(build_RX(unbalanced_mini, "multiphase"))
    assert report.r_pd and report.x_pd
