"""SVG rendering of placement heatmaps.

One circle per node filled with its heatmap color, the performance node
marked with a square outline, and a legend carrying the threshold.  Node
coordinates come from the feeder file when present; otherwise a
deterministic layered tree layout is computed (depth on y, leaves spread on
x in sorted order, interior nodes centered over their children).
"""

from __future__ import annotations

from .feeder import Feeder
from .placement import Heatmap

FILL = {
    "blue": "#2c7fb8",
    "yellow": "#fdd835",
    "red": "#e34a33",
    "grey": "#9e9e9e",
}
SUBSTATION_FILL = "#ffffff"

_W, _H, _MARGIN, _R = 640, 480, 48.0, 9.0


def tree_layout(f: Feeder) -> dict[str, tuple[float, float]]:
    """Deterministic layered layout: y = depth, leaves at integer x."""
    children: dict[str, list[str]] = {n.id: [] for n in f.nodes}
    for nid, (parent_id, _) in f.parent.items():
        children[parent_id].append(nid)
    for kids in children.values():
        kids.sort()

    xs: dict[str, float] = {}
    next_leaf = [0.0]

    def place(nid: str) -> float:
        kids = children[nid]
        if not kids:
            xs[nid] = next_leaf[0]
            next_leaf[0] += 1.0
        else:
            got = [place(k) for k in kids]
            xs[nid] = sum(got) / len(got)
        return xs[nid]

    place(f.substation_id)
    return {nid: (xs[nid], float(f.depth[nid])) for nid in xs}


def _scaled_positions(f: Feeder) -> dict[str, tuple[float, float]]:
    raw = f.positions if len(f.positions) == len(f.nodes) else tree_layout(f)
    xs = [p[0] for p in raw.values()]
    ys = [p[1] for p in raw.values()]
    span_x = (max(xs) - min(xs)) or 1.0
    span_y = (max(ys) - min(ys)) or 1.0
    return {
        nid: (
            _MARGIN + (x - min(xs)) / span_x * (_W - 2 * _MARGIN),
            _MARGIN + (y - min(ys)) / span_y * (_H - 2 * _MARGIN),
        )
        for nid, (x, y) in raw.items()
    }


def export_heatmap_svg(h: Heatmap, f: Feeder) -> str:
    """Render the heatmap as a standalone SVG document string."""
    pos = _scaled_positions(f)
    colors = {e.node: e.color for e in h.entries}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    for line in f.lines:
        x1, y1 = pos[line.from_id]
        x2, y2 = pos[line.to_id]
        parts.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            'stroke="#666" stroke-width="1.5"/>'
        )
    for node in f.nodes:
        nid = node.id
        x, y = pos[nid]
        if nid == f.substation_id:
            fill = SUBSTATION_FILL
        else:
            fill = FILL.get(colors.get(nid, "grey"), "#cccccc")
        if h.context != "colocated" and nid == h.context:
            side = 2 * _R + 8
            parts.append(
                f'<rect x="{x - side / 2:.1f}" y="{y - side / 2:.1f}" '
                f'width="{side:.0f}" height="{side:.0f}" fill="none" '
                'stroke="black" stroke-width="2"/>'
            )
        parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{_R:.0f}" fill="{fill}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{y + _R + 12:.1f}" font-size="9" '
            f'text-anchor="middle" font-family="sans-serif">{nid}</text>'
        )
    pct = 100.0 * h.threshold
    legend = [
        ("blue", f"stable fraction >= {pct:g}%"),
        ("yellow", f"below {pct:g}% but nonzero"),
        ("red", "no stable gains found"),
        ("grey", "placed pair"),
    ]
    for i, (color, label) in enumerate(legend):
        y = 16 + 16 * i
        parts.append(
            f'<rect x="8" y="{y - 9}" width="12" height="12" fill="{FILL[color]}" '
            'stroke="black" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="26" y="{y}" font-size="11" font-family="sans-serif">{label}</text>'
        )
    parts.append(
        f'<text x="{_W - 8}" y="16" font-size="11" text-anchor="end" '
        f'font-family="sans-serif">step {h.step} | context {h.context}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
