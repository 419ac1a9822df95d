"""Placement processes: stepwise heatmaps and seeded co-located runs.

Three workflows share one primitive, the stable fraction of a candidate
configuration:

* non-colocated placement (mode ``npp``): pick a performance node, score
  every empty node as the candidate actuator, render a heatmap, let the
  planner accept a blue or yellow node into the core, repeat;
* overload co-located placement (``ocpp``): seeded random co-located
  placements until the first draw that cannot be stabilized;
* automatic overload placement (``auto_ocpp``): keep drawing without
  replacement past failures and stop only when every remaining node fails,
  then report topology tallies of what was placed.

Color rule: a node with a placed pair is grey; otherwise blue when the
stable fraction reaches the threshold (default 7%), yellow when positive
but below it, red when not one sampled gain worked.

Sessions are event-sourced: every heatmap, placement, undo, and seeded run
is appended to the history log, and replaying the log against the same
feeder reproduces every result bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .control import APNP, Configuration, ConfigurationError, SamplingParams
from .feeder import Feeder, branches, classify_node, nodal_distance
from .rng import SplitMix64
from .sensitivity import SensitivityMatrices, build_RX
from .stability import (
    DEFAULT_TOLERANCES,
    StableFractionResult,
    Tolerances,
    stable_fraction,
)

DEFAULT_THRESHOLD = 0.07

COLORS = ("blue", "yellow", "red", "grey")


class PlacementRejectedError(ValueError):
    """A placement request violated the accept rules (red/grey/stale)."""


def color_of(fraction: float, placed: bool, threshold: float = DEFAULT_THRESHOLD) -> str:
    """Grey if placed; else blue / yellow / red by the threshold rule."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if placed:
        return "grey"
    if fraction == 0.0:
        return "red"
    if fraction >= threshold:
        return "blue"
    return "yellow"


@dataclass(frozen=True)
class HeatmapEntry:
    node: str
    fraction: float
    n_stable: int
    n_samples: int
    color: str
    # detail-panel extras: first stable gain pairs and the spectral radius
    # of the first witness closed loop (None when nothing was stable)
    witnesses: tuple[tuple[float, float], ...] = ()
    spectral_radius: float | None = None


@dataclass(frozen=True)
class Heatmap:
    step: int
    context: str  # performance node id, or "colocated"
    threshold: float
    entries: tuple[HeatmapEntry, ...]

    def entry(self, node: str) -> HeatmapEntry:
        for e in self.entries:
            if e.node == node:
                return e
        raise KeyError(f"node {node!r} not in heatmap")

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "context": self.context,
            "threshold": self.threshold,
            "entries": [
                {
                    "node": e.node,
                    "fraction": e.fraction,
                    "n_stable": e.n_stable,
                    "n_samples": e.n_samples,
                    "color": e.color,
                    "witnesses": [list(w) for w in e.witnesses],
                    "spectral_radius": e.spectral_radius,
                }
                for e in self.entries
            ],
        }


@dataclass(frozen=True)
class PlacedPair:
    """Core configuration member plus its admission-time score."""

    pair: APNP
    fraction: float
    n_stable: int
    n_samples: int
    heatmaps_at: int = 0  # heatmap count when admitted; undo rewinds to it


@dataclass(frozen=True)
class EvaluationRecord:
    """One candidate-configuration evaluation (feeds branch statistics)."""

    actuator: str
    performance: str
    fraction: float
    stable: bool


@dataclass(frozen=True)
class BranchStat:
    start: str
    end: str
    length: int
    percent_stable: float
    n_used: int
    n_involving: int


@dataclass(frozen=True)
class AutoTrialStats:
    """Summary of one automatic co-located run."""

    seed: int
    total_placed: int
    last_four_distances: tuple[int, ...]  # oldest of the final four first
    tally: dict[str, int]  # on_or_near_edge / at_fork / in_middle
    percent_edge: float
    n_remaining: int

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "total_placed": self.total_placed,
            "last_four_distances": list(self.last_four_distances),
            "tally": dict(self.tally),
            "percent_edge": self.percent_edge,
            "n_remaining": self.n_remaining,
        }


MODES = ("npp", "ocpp", "auto_ocpp")


@dataclass(eq=False)
class Session:
    """Mutable placement session over an immutable feeder.

    ``history`` is the replayable event log; all mutation goes through the
    module-level operations so that replay stays faithful.
    """

    feeder: Feeder
    mode: str
    sampling: SamplingParams = SamplingParams()
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 0
    tolerances: Tolerances = DEFAULT_TOLERANCES
    rx_mode: str = "multiphase"
    workers: int | None = None
    core: list[PlacedPair] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    evaluations: list[EvaluationRecord] = field(default_factory=list)
    heatmaps: list[Heatmap] = field(default_factory=list)
    step: int = 0
    _sens: SensitivityMatrices | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def sens(self) -> SensitivityMatrices:
        if self._sens is None:
            self._sens = build_RX(self.feeder, self.rx_mode)
        return self._sens

    @property
    def latest_heatmap(self) -> Heatmap | None:
        return self.heatmaps[-1] if self.heatmaps else None

    def core_configuration(self) -> Configuration:
        return Configuration(tuple(p.pair for p in self.core))

    def occupied(self) -> set[str]:
        return {p.pair.actuator for p in self.core}

    def empty_candidates(self) -> list[str]:
        """Non-substation nodes with no placed pair, in feeder-file order."""
        occupied = self.occupied()
        return [
            nid
            for nid in self.feeder.non_substation_ids()
            if nid not in occupied
        ]


def new_session(
    feeder: Feeder,
    mode: str,
    sampling: SamplingParams = SamplingParams(),
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    **kwargs: Any,
) -> Session:
    return Session(
        feeder=feeder, mode=mode, sampling=sampling, threshold=threshold, seed=seed, **kwargs
    )


# ---------------------------------------------------------------------------
# Candidate evaluation
# ---------------------------------------------------------------------------


def _shared_phases(f: Feeder, a: str, b: str) -> str:
    pa = set(f.node_by_id[a].phases)
    pb = set(f.node_by_id[b].phases)
    return "".join(sorted(pa & pb, key="ABC".index))


def _evaluate_candidate(s: Session, pair: APNP) -> StableFractionResult:
    trial = s.core_configuration().with_pair(pair)
    try:
        result = stable_fraction(
            trial,
            s.feeder,
            s.sens,
            sampling=s.sampling,
            tol=s.tolerances,
            workers=s.workers,
        )
    except ConfigurationError:
        # no actuation authority over the target in the linear model
        # (zero shared substation path): nothing can stabilize, score red
        result = StableFractionResult(
            fraction=0.0, n_stable=0, n_samples=0, witnesses=[]
        )
    s.evaluations.append(
        EvaluationRecord(
            actuator=pair.actuator,
            performance=pair.performance,
            fraction=result.fraction,
            stable=result.fraction > 0.0,
        )
    )
    return result


def _build_heatmap(s: Session, context: str, make_pair) -> Heatmap:
    """Score each empty candidate; placed nodes appear grey with their
    admission-time numbers."""
    s.step += 1
    placed = {p.pair.actuator: p for p in s.core}
    entries: list[HeatmapEntry] = []
    for nid in s.feeder.non_substation_ids():
        if nid in placed:
            p = placed[nid]
            entries.append(
                HeatmapEntry(
                    node=nid,
                    fraction=p.fraction,
                    n_stable=p.n_stable,
                    n_samples=p.n_samples,
                    color="grey",
                )
            )
            continue
        pair = make_pair(nid)
        if pair is None:
            continue
        result = _evaluate_candidate(s, pair)
        entries.append(
            HeatmapEntry(
                node=nid,
                fraction=result.fraction,
                n_stable=result.n_stable,
                n_samples=result.n_samples,
                color=color_of(result.fraction, placed=False, threshold=s.threshold),
                witnesses=tuple((w.f_q, w.f_p) for w in result.witnesses),
                spectral_radius=result.witness_spectral_radius,
            )
        )
    heatmap = Heatmap(
        step=s.step, context=context, threshold=s.threshold, entries=tuple(entries)
    )
    s.heatmaps.append(heatmap)
    return heatmap


def heatmap_npp(s: Session, perf: str) -> Heatmap:
    """Score every empty node as candidate actuator tracking ``perf``.

    The candidate pair uses the phases common to candidate and performance
    node; nodes sharing no phase with the target are skipped.
    """
    s.feeder.require_node(perf)
    s.history.append({"type": "heatmap_npp", "perf": perf})

    def make_pair(nid: str) -> APNP | None:
        phases = _shared_phases(s.feeder, nid, perf)
        if not phases:
            return None
        return APNP(actuator=nid, performance=perf, phases=phases)

    return _build_heatmap(s, context=perf, make_pair=make_pair)


def heatmap_colocated(s: Session) -> Heatmap:
    """Score a co-located pair at each empty node (full node phase set)."""
    s.history.append({"type": "heatmap_colocated"})

    def make_pair(nid: str) -> APNP:
        return APNP(actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases)

    return _build_heatmap(s, context="colocated", make_pair=make_pair)


def accept_placement(s: Session, actuator: str, perf: str) -> Session:
    """Admit a blue or yellow candidate from the latest heatmap into the core."""
    heatmap = s.latest_heatmap
    if heatmap is None:
        raise PlacementRejectedError("no heatmap computed yet")
    if heatmap.context == "colocated":
        if actuator != perf:
            raise PlacementRejectedError(
                "latest heatmap is co-located; actuator and performance must match"
            )
    elif heatmap.context != perf:
        raise PlacementRejectedError(
            f"latest heatmap tracks {heatmap.context!r}, not {perf!r}"
        )
    try:
        entry = heatmap.entry(actuator)
    except KeyError:
        raise PlacementRejectedError(f"node {actuator!r} was not evaluated") from None
    if entry.color == "grey":
        raise PlacementRejectedError(f"node {actuator!r} already hosts a placed pair")
    if entry.color == "red":
        raise PlacementRejectedError("candidate unstable")

    phases = _shared_phases(s.feeder, actuator, perf)
    s.history.append({"type": "place", "actuator": actuator, "performance": perf})
    s.core.append(
        PlacedPair(
            pair=APNP(actuator=actuator, performance=perf, phases=phases),
            fraction=entry.fraction,
            n_stable=entry.n_stable,
            n_samples=entry.n_samples,
            heatmaps_at=len(s.heatmaps),
        )
    )
    return s


def undo(s: Session) -> Session:
    """Remove the most recent placement and restore the heatmap view.

    Heatmaps computed after the undone placement are dropped (they showed
    the node as placed); the heatmap that admitted it becomes latest again,
    so a different candidate can be accepted from it without recompute.
    """
    if not s.core:
        raise PlacementRejectedError("nothing to undo")
    s.history.append({"type": "undo"})
    popped = s.core.pop()
    del s.heatmaps[popped.heatmaps_at :]
    return s


# ---------------------------------------------------------------------------
# Seeded co-located runs
# ---------------------------------------------------------------------------


def _place_colocated(s: Session, nid: str, result: StableFractionResult) -> None:
    s.core.append(
        PlacedPair(
            pair=APNP(actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases),
            fraction=result.fraction,
            n_stable=result.n_stable,
            n_samples=result.n_samples,
            heatmaps_at=len(s.heatmaps),
        )
    )


def run_ocpp(s: Session, seed: int | None = None) -> tuple[Session, Heatmap]:
    """Seeded random co-located placements until the first unstable draw.

    Every stable draw (fraction > 0) is placed; the run stops at the first
    draw with no stable gain, or when no empty node remains, and finishes
    with a co-located heatmap of the remaining nodes.
    """
    seed = s.seed if seed is None else seed
    s.history.append({"type": "ocpp", "seed": seed})
    rng = SplitMix64(seed)
    while True:
        empty = s.empty_candidates()
        if not empty:
            break
        nid = empty[rng.below(len(empty))]
        pair = APNP(actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases)
        result = _evaluate_candidate(s, pair)
        if result.fraction > 0.0:
            _place_colocated(s, nid, result)
        else:
            break

    def make_pair(nid: str) -> APNP:
        return APNP(actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases)

    heatmap = _build_heatmap(s, context="colocated", make_pair=make_pair)
    return s, heatmap


def run_auto_ocpp(s: Session, seed: int | None = None) -> AutoTrialStats:
    """Co-located placements past failures until no remaining node works.

    Draws nodes without replacement within a round; a stable find is placed
    and opens a fresh round over the updated empty set.  Termination is
    certified by re-scoring every remaining node and requiring all red.
    """
    seed = s.seed if seed is None else seed
    s.history.append({"type": "auto_ocpp", "seed": seed})
    rng = SplitMix64(seed)
    placements: list[str] = []
    while True:
        round_pool = s.empty_candidates()
        placed_this_round = False
        while round_pool:
            nid = round_pool.pop(rng.below(len(round_pool)))
            pair = APNP(
                actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases
            )
            result = _evaluate_candidate(s, pair)
            if result.fraction > 0.0:
                _place_colocated(s, nid, result)
                placements.append(nid)
                placed_this_round = True
                break
        if not placed_this_round:
            break

    # termination certificate: every remaining node must now score red
    def make_pair(nid: str) -> APNP:
        return APNP(actuator=nid, performance=nid, phases=s.feeder.node_by_id[nid].phases)

    final = _build_heatmap(s, context="colocated", make_pair=make_pair)
    not_red = [e.node for e in final.entries if e.color not in ("red", "grey")]
    if not_red:
        raise RuntimeError(f"termination certificate violated at nodes {not_red}")

    tally = {"on_or_near_edge": 0, "at_fork": 0, "in_middle": 0}
    for nid in placements:
        cls = classify_node(s.feeder, nid)
        if cls in ("edge", "near_edge"):
            tally["on_or_near_edge"] += 1
        elif cls == "fork":
            tally["at_fork"] += 1
        else:
            tally["in_middle"] += 1
    total = len(placements)
    last_four = tuple(nodal_distance(s.feeder, nid) for nid in placements[-4:])
    return AutoTrialStats(
        seed=seed,
        total_placed=total,
        last_four_distances=last_four,
        tally=tally,
        percent_edge=(100.0 * tally["on_or_near_edge"] / total) if total else 0.0,
        n_remaining=len(s.empty_candidates()),
    )


# ---------------------------------------------------------------------------
# Branch statistics
# ---------------------------------------------------------------------------


def branch_stats(s: Session, min_length: int = 4) -> list[BranchStat]:
    """Per-branch success rate of the session's candidate evaluations.

    A branch is involved each time an evaluated candidate actuator lies on
    it and used when that evaluation was stable; branches shorter than
    ``min_length`` nodes or never involved are omitted.  Sorted by percent
    stable, highest first.
    """
    stats: list[BranchStat] = []
    for branch in branches(s.feeder):
        if len(branch) < min_length:
            continue
        members = set(branch.nodes)
        involving = [e for e in s.evaluations if e.actuator in members]
        if not involving:
            continue
        used = sum(1 for e in involving if e.stable)
        stats.append(
            BranchStat(
                start=branch.start,
                end=branch.end,
                length=len(branch),
                percent_stable=100.0 * used / len(involving),
                n_used=used,
                n_involving=len(involving),
            )
        )
    stats.sort(key=lambda b: (-b.percent_stable, b.start, b.end))
    return stats


# ---------------------------------------------------------------------------
# Event replay
# ---------------------------------------------------------------------------


def apply_event(s: Session, event: dict) -> None:
    """Re-execute one logged event (used by session persistence)."""
    from dataclasses import replace as _replace

    kind = event.get("type")
    override = event.get("samples")
    original = s.sampling
    if override and kind in ("heatmap_npp", "heatmap_colocated"):
        s.sampling = _replace(original, count=int(override))
    try:
        _apply_event_inner(s, event, kind)
    finally:
        s.sampling = original


def _apply_event_inner(s: Session, event: dict, kind: str | None) -> None:
    if kind == "heatmap_npp":
        heatmap_npp(s, event["perf"])
    elif kind == "heatmap_colocated":
        heatmap_colocated(s)
    elif kind == "place":
        accept_placement(s, event["actuator"], event["performance"])
    elif kind == "undo":
        undo(s)
    elif kind == "ocpp":
        run_ocpp(s, seed=event["seed"])
    elif kind == "auto_ocpp":
        run_auto_ocpp(s, seed=event["seed"])
    else:
        raise ValueError(f"unknown session event type {kind!r}")


def replay(
    feeder: Feeder,
    mode: str,
    events: list[dict],
    sampling: SamplingParams = SamplingParams(),
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    **kwargs: Any,
) -> Session:
    """Rebuild a session by replaying its event log from scratch."""
    s = new_session(feeder, mode, sampling=sampling, threshold=threshold, seed=seed, **kwargs)
    for event in events:
        fresh = dict(event)
        apply_event(s, fresh)
    # replay must not double-log
    s.history = list(events)
    return s
