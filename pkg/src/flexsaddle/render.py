"""Deterministic SVG drawings of planar frameworks."""
from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .framework import Framework

ARROW_THRESHOLD = 1e-3  # relative to the largest vertex displacement


class RenderError(ValueError):
    pass


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_svg(
    fw: Framework,
    coords=None,
    flex: Optional[np.ndarray] = None,
    labels: Optional[Sequence[str]] = None,
    width: int = 480,
    arrow_length: float = 0.15,
) -> str:
    """SVG with bars as lines (free edge dashed), labelled vertices and flex arrows.

    ``flex`` is an ambient velocity vector; an arrow is drawn at every
    vertex whose displacement exceeds ``ARROW_THRESHOLD`` times the largest
    one, the largest arrow being ``arrow_length`` of the drawing diagonal.
    """
    if fw.dim != 2:
        raise RenderError(f"only planar frameworks can be rendered (d = {fw.dim})")
    pts = fw.config.points if coords is None else np.asarray(coords, dtype=float).reshape(-1, 2)
    labels = list(labels) if labels is not None else [str(i) for i in range(fw.n)]

    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    diag = float(np.hypot(*span))
    arrows = []
    if flex is not None:
        disp = np.asarray(flex, dtype=float).reshape(-1, 2)
        mags = np.linalg.norm(disp, axis=1)
        top = mags.max()
        if top > 0:
            scale = arrow_length * diag / top
            for i in range(fw.n):
                if mags[i] > ARROW_THRESHOLD * top:
                    arrows.append((i, pts[i], pts[i] + scale * disp[i]))
            ends = np.array([a[2] for a in arrows]) if arrows else np.zeros((0, 2))
            if len(ends):
                lo = np.minimum(lo, ends.min(axis=0))
                hi = np.maximum(hi, ends.max(axis=0))
                span = np.maximum(hi - lo, 1e-9)
    margin = 0.1 * span
    lo, hi = lo - margin, hi + margin
    span = hi - lo
    height = max(1, int(round(width * span[1] / span[0])))
    s = width / span[0]

    def xy(p):
        return s * (p[0] - lo[0]), s * (hi[1] - p[1])

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        "<defs>",
        '<marker id="arrowhead" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto">'
        '<path d="M0,0 L8,4 L0,8 z" fill="red"/></marker>',
        "</defs>",
    ]
    for k, (a, b) in enumerate(fw.topology.edges):
        x1, y1 = xy(pts[a])
        x2, y2 = xy(pts[b])
        if k == fw.topology.free_edge:
            style = 'class="bar free" stroke="red" stroke-width="3" stroke-dasharray="8,6"'
        else:
            style = 'class="bar" stroke="black" stroke-width="3"'
        out.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" {style}/>')
    for i, p in enumerate(pts):
        x, y = xy(p)
        out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="5" fill="black"/>')
        out.append(f'<text x="{_f(x + 7)}" y="{_f(y - 7)}" font-size="14" font-family="sans-serif">{escape(labels[i])}</text>')
    for i, p, q in arrows:
        x1, y1 = xy(p)
        x2, y2 = xy(q)
        out.append(
            f'<path class="flex-arrow" data-vertex="{escape(labels[i])}" '
            f'd="M{_f(x1)},{_f(y1)} L{_f(x2)},{_f(y2)}" stroke="red" stroke-width="2" '
            f'fill="none" marker-end="url(#arrowhead)"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
