"""SVG drawings of processed networks over their photomask.

Each wire is cut at its junctions and every piece becomes one ``<line>``.  A
piece is classed by the most advanced junction state at its two ends, in the
order pristine < da < welded < broken, so pieces next to a broken junction
draw as fragment stubs.  The mask is drawn underneath as translucent
rectangles, one per horizontal run of equal pixels.
"""
from __future__ import annotations

import numpy as np

from .masks import RegionMask
from .netgen import WireSet
from .topology import JunctionSet, JunctionState

MAX_RENDER_WIRES = 100_000
CANVAS_PX = 800.0

STROKES = {
    JunctionState.PRISTINE: ("pristine", "#7f7f7f"),
    JunctionState.DA_DECORATED: ("da", "#1f77b4"),
    JunctionState.WELDED: ("welded", "#2ca02c"),
    JunctionState.BROKEN: ("broken", "#d62728"),
}
MASK_FILL = {True: "#fff3b0", False: "#c8c8c8"}


class RenderGuardError(ValueError):
    pass


def subsample(wires: WireSet, junctions: JunctionSet, every: int):
    """Keep every ``every``-th wire and the junctions among the kept wires."""
    if every < 1:
        raise ValueError("subsampling step must be >= 1")
    keep = np.arange(len(wires)) % every == 0
    new_index = np.cumsum(keep) - 1
    sel = keep[junctions.wire_a] & keep[junctions.wire_b]
    sub = JunctionSet(
        new_index[junctions.wire_a[sel]],
        new_index[junctions.wire_b[sel]],
        junctions.position[sel],
        junctions.t_a[sel],
        junctions.t_b[sel],
        junctions.state[sel],
    )
    return wires.subset(keep), sub


def wire_pieces(wires: WireSet, junctions: JunctionSet):
    """Wire pieces between consecutive junctions.

    Returns ``(start, end, state_class)`` with points in um and the class as a
    :class:`JunctionState` value.
    """
    n = len(wires)
    ev_wire = np.concatenate([np.repeat(np.arange(n), 2), junctions.wire_a, junctions.wire_b])
    ev_t = np.concatenate([np.tile([0.0, 1.0], n), junctions.t_a, junctions.t_b])
    ev_cls = np.concatenate([np.zeros(2 * n, np.int8), junctions.state, junctions.state])
    order = np.lexsort((ev_t, ev_wire))
    ev_wire, ev_t, ev_cls = ev_wire[order], ev_t[order], ev_cls[order]
    i = np.flatnonzero((ev_wire[1:] == ev_wire[:-1]) & (ev_t[1:] > ev_t[:-1]))
    w = ev_wire[i]
    d = wires.p1 - wires.p0
    start = wires.p0[w] + ev_t[i][:, None] * d[w]
    end = wires.p0[w] + ev_t[i + 1][:, None] * d[w]
    return start, end, np.maximum(ev_cls[i], ev_cls[i + 1])


def _runs(row: np.ndarray):
    """``(start, stop, value)`` of maximal runs of equal values."""
    edges = np.flatnonzero(np.diff(row.astype(np.int8))) + 1
    starts = np.r_[0, edges]
    stops = np.r_[edges, len(row)]
    return [(int(a), int(b), bool(row[a])) for a, b in zip(starts, stops)]


def _num(x: float) -> str:
    return f"{x:.6g}"


def svg_text(wires: WireSet, junctions: JunctionSet, mask: RegionMask | None = None, max_wires: int = MAX_RENDER_WIRES) -> str:
    if len(wires) > max_wires:
        raise RenderGuardError(
            f"network has {len(wires)} wires, above the render limit of {max_wires}; "
            f"subsample it first (for example --subsample {int(np.ceil(len(wires) / max_wires))})"
        )
    dom = wires.domain
    W, H = dom.width, dom.height
    scale = CANVAS_PX / max(W, H)
    stroke = max(W, H) / 1000.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(W * scale)}" height="{_num(H * scale)}" '
        f'viewBox="0 0 {_num(W)} {_num(H)}">',
    ]
    if mask is not None:
        out.append('<g id="mask" fill-opacity="0.5" stroke="none">')
        p = mask.pitch
        for r in range(mask.height_px):
            y_top = H - (r + 1) * p  # raster row 0 sits at the bottom of the domain
            for a, b, exposed in _runs(mask.bits[r]):
                cls = "exposed" if exposed else "shadowed"
                out.append(
                    f'<rect class="{cls}" x="{_num(a * p)}" y="{_num(y_top)}" width="{_num((b - a) * p)}" '
                    f'height="{_num(p)}" fill="{MASK_FILL[exposed]}"/>'
                )
        out.append("</g>")
    start, end, cls = wire_pieces(wires, junctions)
    out.append(f'<g id="wires" stroke-width="{_num(stroke)}" stroke-linecap="round">')
    for (x0, y0), (x1, y1), c in zip(start, end, cls):
        name, color = STROKES[JunctionState(int(c))]
        out.append(
            f'<line class="{name}" x1="{_num(x0)}" y1="{_num(H - y0)}" x2="{_num(x1)}" y2="{_num(H - y1)}" stroke="{color}"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(wires: WireSet, junctions: JunctionSet, mask: RegionMask | None, path, max_wires: int = MAX_RENDER_WIRES):
    text = svg_text(wires, junctions, mask, max_wires)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return text
