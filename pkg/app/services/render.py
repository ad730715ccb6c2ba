"""
SVG rendering of patterns: Robinson tiles, curve-layer arrows and curves,
petal outlines.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import svgwrite

from app.schemas.pattern import Cell, Pattern
from app.schemas.render import RenderStyle
from app.services.builtin_sfts import BLACK, DOWN, RIGHT
from app.services.delta import SEP, curves
from app.services.petals import extract_petals
from app.services.robinson import is_robinson_symbol, parse_tile
from app.utils.error_handler import NotAdmissible

logger = logging.getLogger(__name__)

_STEP = {"N": (0, -1), "S": (0, 1), "E": (1, 0), "W": (-1, 0)}


def curve_symbol(symbol: str) -> Optional[str]:
    """→ or ↓ carried by a plain or layered curve-layer symbol"""
    if symbol in (RIGHT, DOWN):
        return symbol
    parts = symbol.split(SEP)
    if len(parts) >= 2 and parts[-1] in (RIGHT, DOWN):
        return parts[-1]
    if len(parts) >= 4 and parts[-3] in (RIGHT, DOWN):
        return parts[-3]
    return None


class _Canvas:
    def __init__(self, pattern: Pattern, style: RenderStyle):
        self.style = style
        self.x0, self.y0, self.x1, self.y1 = pattern.bounds()
        cp = style.cell_px
        size = ((self.x1 - self.x0 + 1) * cp, (self.y1 - self.y0 + 1) * cp)
        self.dwg = svgwrite.Drawing(size=size, profile="full")
        self.dwg.add(self.dwg.rect(insert=(0, 0), size=size, fill=style.color("background")))

    def origin(self, cell: Cell) -> Tuple[float, float]:
        cp = self.style.cell_px
        return (cell[0] - self.x0) * cp, (self.y1 - cell[1]) * cp

    def center(self, cell: Cell) -> Tuple[float, float]:
        x, y = self.origin(cell)
        half = self.style.cell_px / 2
        return x + half, y + half

    def arrow(self, start: Tuple[float, float], end: Tuple[float, float], color: str, width: float = 1.5) -> None:
        self.dwg.add(self.dwg.line(start=start, end=end, stroke=color, stroke_width=width))
        dx, dy = end[0] - start[0], end[1] - start[1]
        length = max((dx * dx + dy * dy) ** 0.5, 1e-9)
        ux, uy = dx / length, dy / length
        head = self.style.cell_px / 6
        left = (end[0] - head * ux - head * uy / 2, end[1] - head * uy + head * ux / 2)
        right = (end[0] - head * ux + head * uy / 2, end[1] - head * uy - head * ux / 2)
        self.dwg.add(self.dwg.polygon(points=[end, left, right], fill=color))


def _draw_robinson(canvas: _Canvas, cell: Cell, symbol: str) -> None:
    t = parse_tile(symbol)
    style = canvas.style
    x, y = canvas.origin(cell)
    cp = style.cell_px
    cx, cy = canvas.center(cell)
    line = style.color("line")
    if t.is_corner:
        canvas.dwg.add(canvas.dwg.rect(insert=(x, y), size=(cp, cp), fill=style.color(t.color or "red")))
        return
    if not style.draw_arrows:
        return
    sx, sy = _STEP[t.direction]
    half = cp / 2
    canvas.arrow((cx - sx * half, cy - sy * half), (cx + sx * half * 0.9, cy + sy * half * 0.9), line)
    if t.rail:
        off = cp / 6
        ox, oy = (off, 0) if t.vertical else (0, off)
        canvas.dwg.add(canvas.dwg.line(start=(cx - sx * half + ox, cy - sy * half + oy),
                                       end=(cx + sx * half + ox, cy + sy * half + oy), stroke=line, stroke_width=1))
    lat = (1, 0) if t.vertical else (0, 1)
    canvas.dwg.add(canvas.dwg.line(start=(cx - lat[0] * half, cy - lat[1] * half), end=(cx, cy),
                                   stroke=line, stroke_width=0.75))


def _draw_curve_cell(canvas: _Canvas, cell: Cell, arrow: str) -> None:
    style = canvas.style
    if not style.draw_arrows:
        return
    cx, cy = canvas.center(cell)
    half = style.cell_px * 0.35
    if arrow == RIGHT:
        canvas.arrow((cx - half, cy), (cx + half, cy), style.color("line"))
    else:
        canvas.arrow((cx, cy - half), (cx, cy + half), style.color("line"))


def _draw_curves(canvas: _Canvas, pattern: Pattern) -> None:
    layer = Pattern.of({c: curve_symbol(s) for c, s in pattern.cells.items()})
    try:
        dec = curves(layer)
    except NotAdmissible:
        logger.warning("Curve layer is not admissible; drawing arrows only")
        return
    for curve in dec.curves:
        points = [canvas.center(c) for c in curve.cells]
        if len(points) == 1:
            continue
        canvas.dwg.add(canvas.dwg.polyline(points=points, stroke=canvas.style.color("curve"),
                                           fill="none", stroke_width=2, stroke_opacity=0.7))


def _draw_petals(canvas: _Canvas, pattern: Pattern) -> None:
    hierarchy = extract_petals(pattern)
    cp = canvas.style.cell_px
    for petal in hierarchy.petals:
        x0, y0 = petal.origin
        left, _ = canvas.center((x0, y0))
        _, top = canvas.center((x0, y0 + petal.side - 1))
        side = (petal.side - 1) * cp
        canvas.dwg.add(canvas.dwg.rect(insert=(left, top), size=(side, side), fill="none",
                                       stroke=canvas.style.color("petal"), stroke_width=1 + petal.order))


def render_pattern(pattern: Pattern, style: Optional[RenderStyle] = None) -> str:
    """SVG document for the pattern"""
    style = style or RenderStyle()
    if not pattern.cells:
        raise ValueError("Nothing to render: empty pattern")
    canvas = _Canvas(pattern, style)
    cp = style.cell_px
    robinson = all(is_robinson_symbol(s) for s in pattern.cells.values())
    layered = not robinson and all(curve_symbol(s) is not None for s in pattern.cells.values())
    for cell, symbol in sorted(pattern.cells.items(), key=lambda kv: (-kv[0][1], kv[0][0])):
        if robinson:
            _draw_robinson(canvas, cell, symbol)
        elif layered:
            _draw_curve_cell(canvas, cell, curve_symbol(symbol))
        else:
            x, y = canvas.origin(cell)
            fill = style.palette.get(symbol, style.color("line") if symbol == BLACK else style.color("background"))
            canvas.dwg.add(canvas.dwg.rect(insert=(x, y), size=(cp, cp), fill=fill, stroke=style.color("grid")))
    if layered and style.draw_curves:
        _draw_curves(canvas, pattern)
    if robinson and style.draw_petals:
        _draw_petals(canvas, pattern)
    return canvas.dwg.tostring()


def render_to_file(pattern: Pattern, path: Union[str, Path], style: Optional[RenderStyle] = None) -> Path:
    path = Path(path)
    path.write_text(render_pattern(pattern, style), encoding="utf-8")
    logger.info(f"Rendered {len(pattern.cells)} cells to {path}")
    return path
