"""Controller configurations, gain structure, and closed-loop assembly.

The plant state stacks squared-voltage-magnitude errors over phase-angle
errors, ``x = [e_v; e_ang]``, and the input stacks the per-step changes in
inverter reactive and real power, ``u = [u_q; u_p]``.  On active indices

    x_{k+1} = x_k + B u_k,      B = [[ X,    R  ],
                                     [-R/2,  X/2]]

and the integrator feedback ``u_k = -F x_k`` yields ``A_cl = I - B F``.

A configuration is an ordered set of actuator-performance node pairs: the
actuator injects p, q to drive the performance node's voltage phasor on the
listed phases.  Two structural assumptions shape F:

  1. each (actuator, phase) tracks a single target, so every row of F has
     at most one nonzero entry;
  2. reactive power reacts only to magnitude error and real power only to
     angle error (the off-diagonal quadrants of F are zero), and per-node
     3x3 blocks are phase-diagonal.

Gains are two shared non-negative scalars (f_q, f_p) placed at the free
entries, sampled from a box whose upper bounds invert the mean actuation
sensitivity of the configuration: at the bound, a co-located scalar loop
lands its eigenvalue about at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feeder import Feeder
from .rng import SplitMix64
from .sensitivity import SensitivityMatrices, state_index


class ConfigurationError(ValueError):
    """Configuration is inconsistent with the feeder or the F structure."""


@dataclass(frozen=True)
class APNP:
    """Actuator-performance node pair on a phase subset."""

    actuator: str
    performance: str
    phases: str

    def colocated(self) -> bool:
        return self.actuator == self.performance


@dataclass(frozen=True)
class Configuration:
    pairs: tuple[APNP, ...] = ()

    def __len__(self) -> int:
        return len(self.pairs)

    def with_pair(self, pair: APNP) -> "Configuration":
        return Configuration(self.pairs + (pair,))

    def validate(self, f: Feeder) -> None:
        seen: set[tuple[str, str]] = set()
        for pair in self.pairs:
            for role, nid in (("actuator", pair.actuator), ("performance", pair.performance)):
                if nid not in f.node_by_id:
                    raise ConfigurationError(f"{role} node {nid!r} does not exist")
                if nid == f.substation_id:
                    raise ConfigurationError(f"{role} cannot be the substation")
                node_phases = set(f.node_by_id[nid].phases)
                if not set(pair.phases) <= node_phases:
                    raise ConfigurationError(
                        f"{role} {nid!r} lacks phase(s) {set(pair.phases) - node_phases}"
                    )
            for phase in pair.phases:
                key = (pair.actuator, phase)
                if key in seen:
                    raise ConfigurationError(
                        f"duplicate actuator-phase: {pair.actuator!r} phase {phase} "
                        "appears in more than one pair"
                    )
                seen.add(key)


def configuration_from_dict(doc: dict) -> Configuration:
    """Read {"pairs": [{"actuator", "performance", "phases"}, ...]}."""
    from .feeder import canonical_phases

    pairs = []
    for entry in doc.get("pairs", []):
        pairs.append(
            APNP(
                actuator=entry["actuator"],
                performance=entry["performance"],
                phases=canonical_phases(entry["phases"]),
            )
        )
    return Configuration(tuple(pairs))


def configuration_to_dict(c: Configuration) -> dict:
    return {
        "pairs": [
            {"actuator": p.actuator, "performance": p.performance, "phases": p.phases}
            for p in c.pairs
        ]
    }


@dataclass(eq=False)
class StructuralIdentity:
    """0/1 mask of the free gain entries, 6n x 6n, quadrant-aligned with F."""

    i_w: np.ndarray  # uint8, shape (6n, 6n)
    active: list[int]
    n_nodes: int  # non-substation node count n

    def active_mask(self) -> np.ndarray:
        """Restrict the mask to active state coordinates (2m x 2m)."""
        rows = list(self.active) + [3 * self.n_nodes + a for a in self.active]
        return self.i_w[np.ix_(rows, rows)]


def structural_identity(c: Configuration, f: Feeder) -> StructuralIdentity:
    """Place a 1 at every free entry of F implied by the configuration.

    Free entries sit at (index(actuator, phase), index(performance, phase))
    inside the magnitude and angle quadrants; the cross quadrants stay zero.
    """
    c.validate(f)
    index_of, active = state_index(f)
    n = len(f.non_substation_ids())
    i_w = np.zeros((6 * n, 6 * n), dtype=np.uint8)
    for pair in c.pairs:
        for phase in pair.phases:
            row = index_of[(pair.actuator, phase)]
            col = index_of[(pair.performance, phase)]
            i_w[row, col] = 1
            i_w[3 * n + row, 3 * n + col] = 1
    return StructuralIdentity(i_w=i_w, active=active, n_nodes=n)


@dataclass(frozen=True)
class GainSample:
    f_q: float  # p.u. VAr per p.u. squared-volt error
    f_p: float  # p.u. W per radian error


@dataclass(frozen=True)
class GainBounds:
    f_q_ub: float
    f_p_ub: float


@dataclass(frozen=True)
class SamplingParams:
    scheme: str = "grid"  # "grid" | "uniform_random"
    count: int = 100
    seed: int = 0


def assemble_B(s: SensitivityMatrices) -> np.ndarray:
    """Active-restricted input matrix [[X, R], [-R/2, X/2]] (2m x 2m)."""
    r, x = s.active_R(), s.active_X()
    return np.block([[x, r], [-r / 2.0, x / 2.0]])


def gain_bounds(c: Configuration, s: SensitivityMatrices) -> GainBounds:
    """Heuristic gain box from mean actuation sensitivity over the pairs.

    The magnitude loop sees one p.u. VAr at the actuator move the tracked
    squared voltage by the X entry linking the pair; the angle loop sees one
    p.u. W move the angle by the X/2 entry.  The bound inverts the mean of
    those entries across all pairs and phases.
    """
    if not c.pairs:
        raise ConfigurationError("gain bounds need a non-empty configuration")
    entries = []
    for pair in c.pairs:
        for phase in pair.phases:
            row = s.index_of[(pair.actuator, phase)]
            col = s.index_of[(pair.performance, phase)]
            entries.append(s.X[row, col])
    if min(entries) <= 0.0:
        raise ConfigurationError("non-positive actuation sensitivity")
    s_q = float(np.mean(entries))
    s_p = s_q / 2.0
    return GainBounds(f_q_ub=1.0 / s_q, f_p_ub=1.0 / s_p)


def sample_gains(
    bounds: GainBounds,
    scheme: str = "grid",
    count: int = 100,
    seed: int = 0,
) -> list[GainSample]:
    """Sample the gain box (0, ub_q] x (0, ub_p].

    ``grid`` lays ceil(sqrt(count))^2 lattice points (never the origin);
    ``uniform_random`` draws i.i.d. points, reproducible by seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if scheme == "grid":
        g = math.isqrt(count)
        if g * g < count:
            g += 1
        qs = [bounds.f_q_ub * i / g for i in range(1, g + 1)]
        ps = [bounds.f_p_ub * j / g for j in range(1, g + 1)]
        return [GainSample(f_q=q, f_p=p) for q in qs for p in ps]
    if scheme == "uniform_random":
        rng = SplitMix64(seed)
        return [
            GainSample(
                f_q=rng.uniform_open_closed(bounds.f_q_ub),
                f_p=rng.uniform_open_closed(bounds.f_p_ub),
            )
            for _ in range(count)
        ]
    raise ValueError(f"unknown sampling scheme {scheme!r}")


def build_F(iw: StructuralIdentity, g: GainSample) -> np.ndarray:
    """Gain matrix on active coordinates: f_q at free magnitude entries,
    f_p at free angle entries, zero elsewhere."""
    mask = iw.active_mask().astype(float)
    m = len(iw.active)
    F = np.zeros_like(mask)
    F[:m, :m] = g.f_q * mask[:m, :m]
    F[m:, m:] = g.f_p * mask[m:, m:]
    return F


def closed_loop(B: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """A_cl = I - B F and the tracked index set p (nonzero columns of F)."""
    if B.shape != F.shape or B.shape[0] != B.shape[1]:
        raise ValueError(f"shape mismatch: B {B.shape} vs F {F.shape}")
    a_cl = np.eye(B.shape[0]) - B @ F
    tracked = tuple(int(j) for j in np.nonzero(np.any(F != 0.0, axis=0))[0])
    return a_cl, tracked


@dataclass(eq=False)
class StateSpace:
    """Assembled closed-loop system on active coordinates."""

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    A_cl: np.ndarray
    tracked: tuple[int, ...]


def assemble_state_space(
    s: SensitivityMatrices, iw: StructuralIdentity, g: GainSample
) -> StateSpace:
    B = assemble_B(s)
    F = build_F(iw, g)
    a_cl, tracked = closed_loop(B, F)
    return StateSpace(A=np.eye(B.shape[0]), B=B, F=F, A_cl=a_cl, tracked=tracked)
