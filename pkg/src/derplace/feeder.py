"""Radial distribution feeder model: parsing, validation, and tree queries.

A feeder is a tree of nodes rooted at the substation.  Each line carries a
3x3 per-unit resistance and reactance block (rows/columns in phase order
A, B, C); phases absent from a line are represented by zero rows/columns so
every block stays 3x3 and downstream code masks by active indices.

The on-disk format is a single JSON document::

    {
      "s_base_kva": 1000.0,
      "v_base_kv": 4.16,
      "substation": "s0",
      "nodes": [{"id": "s0", "phases": "ABC", "pos": [0, 0]}, ...],
      "lines": [{"from": "s0", "to": "n1", "phases": "A",
                 "r": 0.05, "x": 0.1}, ...]
    }

A line may give "r"/"x" either as full 3x3 nested lists or, for a
single-phase line, as scalars that expand to one nonzero diagonal entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PHASE_ORDER = "ABC"
PHASE_INDEX = {"A": 0, "B": 1, "C": 2}


class FeederFormatError(ValueError):
    """The document is not structurally readable as a feeder file."""


class FeederValidationError(ValueError):
    """A readable feeder document violates a model invariant."""


class UnknownNodeError(KeyError):
    """A queried node id does not exist in the feeder."""


def canonical_phases(raw: str) -> str:
    """Normalize a phase-subset string to 'ABC' order, rejecting junk."""
    if not isinstance(raw, str) or raw == "":
        raise FeederFormatError(f"phase set must be a non-empty string, got {raw!r}")
    chars = list(raw.upper())
    if any(c not in PHASE_INDEX for c in chars):
        raise FeederFormatError(f"phase set {raw!r} contains characters outside ABC")
    if len(set(chars)) != len(chars):
        raise FeederFormatError(f"phase set {raw!r} repeats a phase")
    return "".join(sorted(chars, key=PHASE_INDEX.__getitem__))


@dataclass(frozen=True)
class Node:
    id: str
    phases: str  # canonical subset of "ABC", non-empty


@dataclass(eq=False)
class Line:
    """Directed storage of an undirected feeder line (from = substation side)."""

    from_id: str
    to_id: str
    phases: str
    r_block: np.ndarray  # 3x3 p.u. resistance
    x_block: np.ndarray  # 3x3 p.u. reactance

    def __eq__(self, other) -> bool:
        if not isinstance(other, Line):
            return NotImplemented
        return (
            self.from_id == other.from_id
            and self.to_id == other.to_id
            and self.phases == other.phases
            and np.array_equal(self.r_block, other.r_block)
            and np.array_equal(self.x_block, other.x_block)
        )

    def endpoints(self) -> tuple[str, str]:
        return (self.from_id, self.to_id)


@dataclass(eq=False)
class Feeder:
    """Validated radial feeder. Immutable after construction; safe to share."""

    substation_id: str
    nodes: tuple[Node, ...]
    lines: tuple[Line, ...]
    s_base_kva: float
    v_base_kv: float
    positions: dict[str, tuple[float, float]] = field(default_factory=dict)

    # -- identity ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Feeder):
            return NotImplemented
        return (
            self.substation_id == other.substation_id
            and self.nodes == other.nodes
            and list(self.lines) == list(other.lines)
            and self.s_base_kva == other.s_base_kva
            and self.v_base_kv == other.v_base_kv
            and self.positions == other.positions
        )

    # -- cached structure --------------------------------------------------

    @cached_property
    def node_by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, Line]]]:
        adj: dict[str, list[tuple[str, Line]]] = {n.id: [] for n in self.nodes}
        for line in self.lines:
            adj[line.from_id].append((line.to_id, line))
            adj[line.to_id].append((line.from_id, line))
        return adj

    @cached_property
    def parent(self) -> dict[str, tuple[str, Line]]:
        """Map node id -> (parent id, connecting line); substation excluded."""
        parent: dict[str, tuple[str, Line]] = {}
        seen = {self.substation_id}
        frontier = [self.substation_id]
        while frontier:
            u = frontier.pop()
            for v, line in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    parent[v] = (u, line)
                    frontier.append(v)
        return parent

    @cached_property
    def depth(self) -> dict[str, int]:
        d = {self.substation_id: 0}
        order = [self.substation_id]
        while order:
            u = order.pop()
            for v, _ in self.adjacency[u]:
                if v not in d:
                    d[v] = d[u] + 1
                    order.append(v)
        return d

    def require_node(self, node_id: str) -> Node:
        try:
            return self.node_by_id[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node id: {node_id!r}") from None

    def degree(self, node_id: str) -> int:
        self.require_node(node_id)
        return len(self.adjacency[node_id])

    def non_substation_ids(self) -> list[str]:
        """Node ids in file order, substation excluded (state ordering)."""
        return [n.id for n in self.nodes if n.id != self.substation_id]


@dataclass(frozen=True)
class Branch:
    """Maximal path whose interior nodes all have degree 2."""

    start: str  # endpoint nearer the substation
    end: str
    nodes: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def _parse_block(value, phases: str, what: str) -> np.ndarray:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if len(phases) != 1:
            raise FeederFormatError(
                f"scalar {what} is only valid for a single-phase line, got phases {phases!r}"
            )
        block = np.zeros((3, 3))
        i = PHASE_INDEX[phases]
        block[i, i] = float(value)
        return block
    try:
        block = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise FeederFormatError(f"{what} block is not numeric") from None
    if block.shape != (3, 3):
        raise FeederFormatError(f"{what} block must be 3x3, got shape {block.shape}")
    return block


def feeder_from_dict(doc: dict) -> Feeder:
    """Build and validate a Feeder from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise FeederFormatError("feeder document must be a JSON object")
    for key in ("s_base_kva", "v_base_kv", "substation", "nodes", "lines"):
        if key not in doc:
            raise FeederFormatError(f"missing required key {key!r}")

    nodes: list[Node] = []
    positions: dict[str, tuple[float, float]] = {}
    seen_ids: set[str] = set()
    for entry in doc["nodes"]:
        nid = entry.get("id")
        if not isinstance(nid, str) or nid == "":
            raise FeederFormatError(f"node id must be a non-empty string, got {nid!r}")
        if nid in seen_ids:
            raise FeederValidationError(f"duplicate id: {nid!r}")
        seen_ids.add(nid)
        nodes.append(Node(id=nid, phases=canonical_phases(entry.get("phases", ""))))
        if "pos" in entry:
            x, y = entry["pos"]
            positions[nid] = (float(x), float(y))

    substation = doc["substation"]
    if substation not in seen_ids:
        raise FeederValidationError(f"unknown substation: {substation!r}")

    node_phases = {n.id: n.phases for n in nodes}
    lines: list[Line] = []
    for entry in doc["lines"]:
        u, v = entry.get("from"), entry.get("to")
        for endpoint in (u, v):
            if endpoint not in seen_ids:
                raise FeederValidationError(f"line references unknown node: {endpoint!r}")
        phases = canonical_phases(entry.get("phases", ""))
        for endpoint in (u, v):
            if not set(phases) <= set(node_phases[endpoint]):
                raise FeederValidationError(
                    f"phase mismatch: line {u}-{v} carries {phases!r} "
                    f"but node {endpoint!r} has {node_phases[endpoint]!r}"
                )
        r_block = _parse_block(entry.get("r"), phases, "r")
        x_block = _parse_block(entry.get("x"), phases, "x")
        _check_impedance(u, v, phases, r_block, x_block)
        lines.append(Line(from_id=u, to_id=v, phases=phases, r_block=r_block, x_block=x_block))

    feeder = Feeder(
        substation_id=substation,
        nodes=tuple(nodes),
        lines=tuple(lines),
        s_base_kva=float(doc["s_base_kva"]),
        v_base_kv=float(doc["v_base_kv"]),
        positions=positions,
    )
    _check_radial(feeder)
    return feeder


def _check_impedance(u, v, phases, r_block, x_block) -> None:
    name = f"line {u}-{v}"
    for what, block in (("r", r_block), ("x", x_block)):
        if not np.all(np.isfinite(block)):
            raise FeederValidationError(f"{name}: non-finite {what} entry")
        if not np.array_equal(block, block.T):
            raise FeederValidationError(f"{name}: {what} block not symmetric")
        absent = [i for p, i in PHASE_INDEX.items() if p not in phases]
        if absent and (np.any(block[absent, :] != 0.0) or np.any(block[:, absent] != 0.0)):
            raise FeederValidationError(f"{name}: nonzero {what} on absent phase")
    for p in phases:
        i = PHASE_INDEX[p]
        if x_block[i, i] <= 0.0:
            raise FeederValidationError(f"{name}: non-positive reactance on phase {p}")


def _check_radial(f: Feeder) -> None:
    n = len(f.nodes)
    for line in f.lines:
        if line.from_id == line.to_id:
            raise FeederValidationError(f"not radial: self-loop at {line.from_id!r}")
    if len(f.lines) > n - 1:
        raise FeederValidationError("not radial: cycle detected")
    if len(f.lines) < n - 1:
        raise FeederValidationError("not radial: graph is disconnected")
    reached = set(f.depth)
    if len(reached) != n:
        missing = sorted(set(f.node_by_id) - reached)
        raise FeederValidationError(f"disconnected node: {missing[0]!r}")
    # n-1 lines + connected => tree, but parallel edges both get traversed:
    if len(f.parent) != n - 1:
        raise FeederValidationError("not radial: cycle detected")


def parse_feeder(text: str) -> Feeder:
    """Parse feeder-file contents, returning a validated Feeder."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FeederFormatError(f"invalid JSON: {exc}") from None
    return feeder_from_dict(doc)


def feeder_to_dict(f: Feeder) -> dict:
    """Canonical JSON-ready document (blocks always written as full 3x3)."""
    nodes = []
    for n in f.nodes:
        entry: dict = {"id": n.id, "phases": n.phases}
        if n.id in f.positions:
            entry["pos"] = list(f.positions[n.id])
        nodes.append(entry)
    lines = [
        {
            "from": ln.from_id,
            "to": ln.to_id,
            "phases": ln.phases,
            "r": ln.r_block.tolist(),
            "x": ln.x_block.tolist(),
        }
        for ln in f.lines
    ]
    return {
        "s_base_kva": f.s_base_kva,
        "v_base_kv": f.v_base_kv,
        "substation": f.substation_id,
        "nodes": nodes,
        "lines": lines,
    }


def serialize_feeder(f: Feeder) -> str:
    return json.dumps(feeder_to_dict(f), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Tree queries
# ---------------------------------------------------------------------------


def path_to_substation(f: Feeder, node_id: str) -> list[Line]:
    """Ordered lines from ``node_id`` up to the substation (empty for it)."""
    f.require_node(node_id)
    path = []
    current = node_id
    while current != f.substation_id:
        parent_id, line = f.parent[current]
        path.append(line)
        current = parent_id
    return path


def nodal_distance(f: Feeder, node_id: str) -> int:
    """Hop count from ``node_id`` to the substation."""
    f.require_node(node_id)
    return f.depth[node_id]


def classify_node(f: Feeder, node_id: str) -> str:
    """One of substation | edge | fork | near_edge | middle.

    Classes are not mutually exclusive on a tree, so precedence is fixed:
    edge beats fork beats near_edge beats middle.
    """
    f.require_node(node_id)
    if node_id == f.substation_id:
        return "substation"
    deg = f.degree(node_id)
    if deg == 1:
        return "edge"
    if deg >= 3:
        return "fork"
    if any(v != f.substation_id and f.degree(v) == 1 for v, _ in f.adjacency[node_id]):
        return "near_edge"
    return "middle"


def _edge_nodes(f: Feeder) -> list[str]:
    return [
        n.id
        for n in f.nodes
        if n.id != f.substation_id and f.degree(n.id) == 1
    ]


def _root_path_nodes(f: Feeder, node_id: str) -> list[str]:
    """Node ids from the substation down to ``node_id`` (inclusive)."""
    chain = [node_id]
    while chain[-1] != f.substation_id:
        chain.append(f.parent[chain[-1]][0])
    chain.reverse()
    return chain


def main_branch(f: Feeder) -> list[str]:
    """Substation-to-edge path with the most off-path nodes hanging from it.

    The score of a candidate path is the number of nodes outside the path
    that are adjacent to some node on it.  Ties go to the longer path, then
    to the lexicographically smallest edge-node id.
    """
    edges = _edge_nodes(f)
    if not edges:
        return [f.substation_id]
    best: tuple[int, int, str] | None = None
    best_path: list[str] = []
    for e in sorted(edges):
        path = _root_path_nodes(f, e)
        on_path = set(path)
        hanging = {
            v
            for u in path
            for v, _ in f.adjacency[u]
            if v not in on_path
        }
        key = (len(hanging), len(path), e)
        # larger count, then longer path, then smaller id (ids iterate sorted)
        if best is None or key[0] > best[0] or (key[0] == best[0] and key[1] > best[1]):
            best = key
            best_path = path
    return best_path


def branches(f: Feeder) -> list[Branch]:
    """Decompose the tree into maximal degree-2-interior paths.

    Endpoints are the substation, forks (degree >= 3), or edge nodes; a fork
    belongs to every incident branch.  A single-node feeder yields one
    degenerate branch so that every node is covered.
    """
    if not f.lines:
        return [Branch(start=f.substation_id, end=f.substation_id, nodes=(f.substation_id,))]

    def is_junction(nid: str) -> bool:
        return nid == f.substation_id or f.degree(nid) != 2

    # junctions in breadth-first order so each branch starts nearer the root
    order = sorted(f.node_by_id, key=lambda nid: (f.depth[nid], nid))
    used: set[frozenset[str]] = set()
    out: list[Branch] = []
    for j in order:
        if not is_junction(j):
            continue
        for v, _ in sorted(f.adjacency[j], key=lambda t: t[0]):
            key = frozenset((j, v))
            if key in used:
                continue
            chain = [j, v]
            used.add(key)
            while not is_junction(chain[-1]):
                nxt = next(w for w, _ in f.adjacency[chain[-1]] if w != chain[-2])
                used.add(frozenset((chain[-1], nxt)))
                chain.append(nxt)
            out.append(Branch(start=chain[0], end=chain[-1], nodes=tuple(chain)))
    return out
