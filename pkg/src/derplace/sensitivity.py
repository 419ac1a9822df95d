"""Voltage-sensitivity matrices for the linearized branch-flow model.

For a single-phase radial network the squared voltage magnitudes obey
``v = R p + X q + v0`` about the 1 p.u. operating point, where entry (i, j)
of each matrix accumulates impedance over the lines shared by the two
substation paths::

    R_ij = 2 * sum of r over P_i ∩ P_j
    X_ij = 2 * sum of x over P_i ∩ P_j

with P_i the unique line path from node i back to the substation.  The
shared path P_i ∩ P_j is exactly the substation path of the lowest common
ancestor of i and j, which is how it is computed here.

Three-phase extension triples the node set (one state per existing phase)
and replaces each scalar entry with a 3x3 block.  Two modes are supported:

``single_phase_equivalent``
    Each phase is treated as an independent copy of the single-phase
    network; line blocks contribute only their diagonals.

``multiphase``
    Blocks couple phases through the rotation matrix gamma = a a^H with
    a = [1, exp(-j2pi/3), exp(+j2pi/3)]^T::

        block_R = 2 * sum( Re(gamma) o r  +  Im(gamma) o x )
        block_X = 2 * sum( Re(gamma) o x  -  Im(gamma) o r )

    (o = elementwise product).  On balanced diagonal impedance blocks this
    reduces to the single-phase form, since diag(Re(gamma)) = 1.

State indexing: non-substation nodes in feeder-file order, node i phase
``phi`` at row 3*i + phi.  Rows/columns of phases that do not exist are
identically zero and are excluded from the ``active`` index list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feeder import PHASE_INDEX, Feeder

_ALPHA = np.array([1.0, np.exp(-2j * np.pi / 3), np.exp(2j * np.pi / 3)])
_GAMMA = np.outer(_ALPHA, _ALPHA.conj())

MODES = ("single_phase_equivalent", "multiphase")

PD_TOLERANCE = 1e-10


def state_index(f: Feeder) -> tuple[dict[tuple[str, str], int], list[int]]:
    """Map (node id, phase) -> 3*i + phi and list the active indices."""
    index_of: dict[tuple[str, str], int] = {}
    active: list[int] = []
    for i, nid in enumerate(f.non_substation_ids()):
        for phase in f.node_by_id[nid].phases:
            idx = 3 * i + PHASE_INDEX[phase]
            index_of[(nid, phase)] = idx
            active.append(idx)
    return index_of, sorted(active)


@dataclass(eq=False)
class SensitivityMatrices:
    """R and X with the index bookkeeping needed to mask absent phases."""

    R: np.ndarray  # 3n x 3n
    X: np.ndarray  # 3n x 3n
    index_of: dict[tuple[str, str], int]
    active: list[int]
    mode: str

    @property
    def n_states(self) -> int:
        """Active state count m (half the closed-loop dimension)."""
        return len(self.active)

    def active_R(self) -> np.ndarray:
        return self.R[np.ix_(self.active, self.active)]

    def active_X(self) -> np.ndarray:
        return self.X[np.ix_(self.active, self.active)]

    def active_position(self, node_id: str, phase: str) -> int:
        """Position of (node, phase) within the active ordering."""
        return self.active.index(self.index_of[(node_id, phase)])


def build_RX(f: Feeder, mode: str = "multiphase") -> SensitivityMatrices:
    """Assemble the sensitivity matrices for a validated feeder."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    index_of, active = state_index(f)
    order = f.non_substation_ids()
    pos = {nid: i for i, nid in enumerate(order)}
    n = len(order)

    # per-line 3x3 contribution blocks
    re_g, im_g = _GAMMA.real, _GAMMA.imag
    kr: dict[int, np.ndarray] = {}
    kx: dict[int, np.ndarray] = {}
    for li, line in enumerate(f.lines):
        r, x = line.r_block, line.x_block
        if mode == "single_phase_equivalent":
            kr[li] = np.diag(np.diag(r))
            kx[li] = np.diag(np.diag(x))
        else:
            kr[li] = re_g * r + im_g * x
            kx[li] = re_g * x - im_g * r

    # cumulative substation-path sums per node; shared path = path of the LCA
    line_index = {id(line): li for li, line in enumerate(f.lines)}
    cum_r = {f.substation_id: np.zeros((3, 3))}
    cum_x = {f.substation_id: np.zeros((3, 3))}
    for nid in sorted(order, key=f.depth.__getitem__):
        parent_id, line = f.parent[nid]
        li = line_index[id(line)]
        cum_r[nid] = cum_r[parent_id] + kr[li]
        cum_x[nid] = cum_x[parent_id] + kx[li]

    R = np.zeros((3 * n, 3 * n))
    X = np.zeros((3 * n, 3 * n))
    for i, ni in enumerate(order):
        for j, nj in enumerate(order):
            if j < i:
                continue
            anc = _lca(f, ni, nj)
            R[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = 2.0 * cum_r[anc]
            X[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = 2.0 * cum_x[anc]
            if j != i:
                R[3 * j : 3 * j + 3, 3 * i : 3 * i + 3] = R[3 * i : 3 * i + 3, 3 * j : 3 * j + 3]
                X[3 * j : 3 * j + 3, 3 * i : 3 * i + 3] = X[3 * i : 3 * i + 3, 3 * j : 3 * j + 3]

    # zero out inactive rows/columns (phases that do not exist at a node)
    mask = np.zeros(3 * n, dtype=bool)
    mask[active] = True
    R[~mask, :] = 0.0
    R[:, ~mask] = 0.0
    X[~mask, :] = 0.0
    X[:, ~mask] = 0.0
    return SensitivityMatrices(R=R, X=X, index_of=index_of, active=active, mode=mode)


def _lca(f: Feeder, a: str, b: str) -> str:
    da, db = f.depth[a], f.depth[b]
    while da > db:
        a = f.parent[a][0]
        da -= 1
    while db > da:
        b = f.parent[b][0]
        db -= 1
    while a != b:
        a = f.parent[a][0]
        b = f.parent[b][0]
    return a


@dataclass(frozen=True)
class PDReport:
    """Positive-definiteness report for the active R and X submatrices."""

    r_pd: bool
    x_pd: bool
    min_eig_r: float
    min_eig_x: float
    tolerance: float


def check_pd(s: SensitivityMatrices, tolerance: float = PD_TOLERANCE) -> PDReport:
    """Report whether the active submatrices are positive definite.

    This is a load-time warning gate, not a hard failure: unbalanced
    multiphase data may be borderline and the caller decides what to do.
    Eigenvalues are taken of the symmetrized submatrix.
    """
    if not s.active:
        return PDReport(True, True, math.inf, math.inf, tolerance)

    def min_eig(mat: np.ndarray) -> float:
        sym = (mat + mat.T) / 2.0
        return float(np.linalg.eigvalsh(sym)[0])

    mr = min_eig(s.active_R())
    mx = min_eig(s.active_X())
    return PDReport(
        r_pd=mr > tolerance,
        x_pd=mx > tolerance,
        min_eig_r=mr,
        min_eig_x=mx,
        tolerance=tolerance,
    )
