"""SVG pictures of subdivided complexes of dimension at most two.

One ``<polygon>`` is emitted per top simplex (edges as two-point polygons),
so the element count of a picture equals the number of maximal simplices.
When a retraction is supplied, top simplices squashed into the boundary of
their carrier are grey and those mapped onto their carrier are highlighted;
with ``stages`` each vertex gets a thick segment to its image under ``r_j``.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

import numpy as np

from .complex_core import SimplicialMap
from .subdivision import SubdivisionRecord, as_record

CANVAS = 480.0
MARGIN = 24.0

FILL_PLAIN = "#ffffff"
FILL_SQUASHED = "#bdbdbd"
FILL_ONTO = "#d62728"
STAGE_COLOURS = ("#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class UnsupportedRenderError(ValueError):
    pass


def auto_layout(base) -> np.ndarray:
    """Plane coordinates for a single simplex of dimension at most two."""
    tops = base.maximal_simplices()
    if len(tops) != 1 or base.dim > 2:
        raise UnsupportedRenderError("automatic layout needs a single simplex of dimension <= 2; "
                                     "give layout coordinates")
    n = len(base.vertices)
    if n == 1:
        return np.zeros((1, 2))
    if n == 2:
        return np.array([[0.0, 0.0], [1.0, 0.0]])
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def _to_canvas(xy: np.ndarray) -> np.ndarray:
    lo = xy.min(axis=0)
    span = float((xy.max(axis=0) - lo).max()) or 1.0
    scale = (CANVAS - 2 * MARGIN) / span
    out = (xy - lo) * scale + MARGIN
    out[:, 1] = CANVAS - out[:, 1]  # y up
    return out


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(space, r: SimplicialMap | None = None, stages=None, layout=None) -> str:
    """SVG text for ``space`` (a complex or a subdivision record).

    Args:
        space: complex or ``SubdivisionRecord`` of dimension <= 2.
        r: optional map ``Sd^level X → X`` used to colour top simplices.
        stages: optional list ``[r_1, ..., r_i]``; ``r_j`` maps
            ``Sd^j X → Sd^(j-1) X``.  Each vertex of every ``Sd^j X`` gets a
            thick segment to its image.
        layout: ``(V, 2)`` or ``(V, 3)`` coordinates of the base vertices;
            generated for a single simplex when omitted.
    """
    rec: SubdivisionRecord = as_record(space)
    if rec.complex.dim > 2:
        raise UnsupportedRenderError(f"cannot draw a {rec.complex.dim}-dimensional complex")
    base_xy = auto_layout(rec.base) if layout is None else np.asarray(layout, dtype=float)
    if base_xy.shape != (len(rec.base.vertices), base_xy.shape[1]) or base_xy.shape[1] not in (2, 3):
        raise UnsupportedRenderError("layout must give 2 or 3 coordinates per base vertex")
    base_xy = base_xy[:, :2]

    records = [rec]
    if stages:
        records = [rec.ancestor(k) for k in range(rec.level + 1)]
    all_xy = np.concatenate([q.positions @ base_xy for q in records])
    canvas_all = _to_canvas(all_xy)
    # one affine map for every level, so stage segments line up
    offsets = np.cumsum([0] + [len(q.positions) for q in records])
    canvas_of = {q.level: canvas_all[offsets[n]:offsets[n + 1]] for n, q in enumerate(records)}
    pts = canvas_of[rec.level]

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{int(CANVAS)}" '
        f'height="{int(CANVAS)}" viewBox="0 0 {int(CANVAS)} {int(CANVAS)}">',
        f"<title>{_title(rec, r)}</title>",
        '<g id="simplices" stroke="#000000" stroke-width="0.8" stroke-linejoin="round">',
    ]
    K = rec.complex
    for s in K.maximal_simplices():
        idx = K.index_of_vertex(list(s))
        coords = pts[idx]
        if len(coords) == 1:
            coords = np.repeat(coords, 2, axis=0)
        fill, kind = FILL_PLAIN, "plain"
        if r is not None:
            carrier = rec.carrier(s, 0)
            image = r.image(s)
            if len(image) == len(carrier) and len(image) > 1:
                fill, kind = FILL_ONTO, "onto"
            elif len(image) < len(carrier):
                fill, kind = FILL_SQUASHED, "squashed"
        point_str = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
        stroke = ' stroke-width="2.5"' if len(s) == 2 and K.dim == 1 else ""
        lines.append(f'<polygon points="{point_str}" fill="{fill}"{stroke} '
                     f'data-simplex={quoteattr(" ".join(map(str, s)))} class="{kind}"/>')
    lines.append("</g>")
    if stages:
        lines.append('<g id="stages" stroke-linecap="round" fill="none">')
        for j, rj in enumerate(stages, start=1):
            if j > rec.level:
                break
            dst = records[j - 1]
            colour = STAGE_COLOURS[(j - 1) % len(STAGE_COLOURS)]
            a = canvas_of[j]
            b = canvas_of[j - 1][dst.complex.index_of_vertex(rj.vertex_images)]
            for (x0, y0), (x1, y1) in zip(a, b):
                if abs(x0 - x1) + abs(y0 - y1) < 1e-9:
                    continue
                lines.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" '
                             f'y2="{_fmt(y1)}" stroke="{colour}" stroke-width="{4.0 - 0.5 * j:.1f}" '
                             f'class="stage-{j}"/>')
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _title(rec: SubdivisionRecord, r) -> str:
    what = f"Sd^{rec.level}" if rec.level else "complex"
    return f"{what}, {len(rec.complex.maximal_simplices())} top simplices" + (
        ", coloured by r" if r is not None else "")


__all__ = ["UnsupportedRenderError", "auto_layout", "render_svg"]
