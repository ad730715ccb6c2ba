"""
The curve layer: a two-symbol subshift over {→, ↓} whose configurations
cut the plane into monotone curves.

A → cell lies on a curve; a ↓ cell is the gap above a curve that steps
down in that column. From a curve cell (x, y) the curve continues to
(x+1, y-1) when (x+1, y) is ↓ and to (x+1, y) otherwise.
"""

import logging
from typing import Dict, List, Optional, Tuple

from app.schemas.delta import Curve, CurveDecomposition, DeltaCompletion
from app.schemas.pattern import Cell, Pattern, Violation
from app.services.builtin_sfts import DOWN, RIGHT, delta_sft
from app.services.sft_core import check_pattern
from app.utils.error_handler import NotAdmissible

logger = logging.getLogger(__name__)

BLANK_X = "_"
SEP = "|"

Cells = Dict[Cell, str]

# Completion of a single ↓, listed top row first; the ↓ of the input is at (0, 1)
_SINGLE_DOWN = ["→→→", "→↓↓", "↓→→", "→→→"]


def delta_check(pattern: Pattern) -> List[Violation]:
    return check_pattern(delta_sft(), pattern)


def split_symbol(symbol: str, counters: bool = False) -> Tuple[str, str, Optional[str], Optional[str]]:
    """(base symbol, curve symbol, counter, color) of a distorted-layer symbol"""
    parts = symbol.split(SEP)
    if counters:
        if len(parts) < 4:
            raise NotAdmissible(f"Symbol {symbol!r} has no counter layer")
        return SEP.join(parts[:-3]), parts[-3], parts[-2], parts[-1]
    if len(parts) < 2:
        raise NotAdmissible(f"Symbol {symbol!r} has no curve layer")
    return SEP.join(parts[:-1]), parts[-1], None, None


def delta_layer(pattern: Pattern, counters: bool = False) -> Pattern:
    return Pattern.of({c: split_symbol(s, counters)[1] for c, s in pattern.cells.items()})


def _has_predecessor(cells: Cells, x: int, y: int) -> bool:
    if cells.get((x - 1, y)) == RIGHT:
        return True
    return cells.get((x - 1, y + 1)) == RIGHT and cells.get((x, y + 1)) == DOWN


def _start_kind(cells: Cells, x: int, y: int, x0: int) -> str:
    if x == x0 or (x - 1, y) not in cells:
        return "left"
    if (x, y + 1) not in cells or (x - 1, y + 1) not in cells:
        return "top"
    return "interior"


def _trace(cells: Cells, start: Cell, x1: int) -> Tuple[List[Cell], List[int], str]:
    x, y = start
    path = [start]
    shifts: List[int] = []
    while True:
        right = cells.get((x + 1, y))
        if right is None:
            return path, shifts, "right" if x == x1 else "open"
        if right == DOWN:
            if (x + 1, y - 1) not in cells:
                return path, shifts, "bottom"
            shifts.append(x)
            x, y = x + 1, y - 1
        else:
            x = x + 1
        path.append((x, y))


def interior_starts(pattern: Pattern) -> List[Cell]:
    """→ cells off the left edge with no curve leading into them from inside the window"""
    cells = pattern.cells
    x0 = pattern.bounds()[0]
    out = [(x, y) for (x, y), s in cells.items()
           if s == RIGHT and not _has_predecessor(cells, x, y) and _start_kind(cells, x, y, x0) == "interior"]
    return sorted(out, key=lambda c: (c[0], c[1]))


def curve_count_formula(pattern: Pattern) -> Tuple[int, int]:
    """→ cells on the south-west/north-east diagonal, and shifts whose ↓ sits on it"""
    p = pattern.normalized()
    cells = p.cells
    side = min(p.width, p.height)
    straight = sum(1 for i in range(side) if cells.get((i, i)) == RIGHT)
    crossing = sum(1 for i in range(1, side)
                   if cells.get((i, i)) == DOWN and cells.get((i - 1, i)) == RIGHT and cells.get((i, i - 1)) == RIGHT)
    return straight, crossing


def curves(pattern: Pattern, validate: bool = True) -> CurveDecomposition:
    """Curves through the window, entering ones first (bottom to top), then the others by column"""
    if not pattern.cells:
        return CurveDecomposition()
    if validate:
        violations = delta_check(pattern)
        if violations:
            raise NotAdmissible("Pattern is not admissible for the curve layer",
                                details={"anchor": list(violations[0].anchor)})
    cells = pattern.cells
    x0, _, x1, _ = pattern.bounds()
    starts = []
    for (x, y), s in cells.items():
        if s == RIGHT and not _has_predecessor(cells, x, y):
            kind = _start_kind(cells, x, y, x0)
            starts.append((0 if kind == "left" else 1, x, y, kind))
    starts.sort(key=lambda t: (t[0], t[1], t[2]) if t[0] == 1 else (t[0], t[2], t[1]))

    result = []
    for cid, (_, x, y, kind) in enumerate(starts):
        path, shifts, end = _trace(cells, (x, y), x1)
        result.append(Curve(id=cid, cells=path, start=kind, end=end, shift_columns=shifts))
    diagonal = curve_count_formula(pattern) if pattern.is_rectangle() else None
    return CurveDecomposition(
        curves=result,
        interior_starts=[(x, y) for _, x, y, kind in starts if kind == "interior"],
        diagonal=diagonal,
    )


def _require_completable(p: Pattern) -> None:
    violations = delta_check(p)
    if violations:
        raise NotAdmissible("Block is not admissible for the curve layer",
                            details={"anchor": list(violations[0].anchor)})
    starts = interior_starts(p)
    if starts:
        raise NotAdmissible("Block has a curve starting inside it; no rectangle with left-to-right curves contains it",
                            details={"cell": list(starts[0])})


def _column_extents(cells: Cells) -> Dict[int, Tuple[int, int]]:
    ext: Dict[int, Tuple[int, int]] = {}
    for x, y in cells:
        lo, hi = ext.get(x, (y, y))
        ext[x] = (min(lo, y), max(hi, y))
    return ext


def _extend_entries_top(cells: Cells, width: int, y: int) -> None:
    """Continue the curves entering through the top row, one row per round"""
    while True:
        row = {x: cells[(x, y)] for x in range(width) if (x, y) in cells}
        entries = [x + 1 for x in sorted(row) if row[x] == DOWN and row.get(x + 1) == RIGHT]
        if not entries:
            return
        new = {x: DOWN for x in entries}
        for e in entries:
            x = e - 1
            while x >= 0 and x not in new:
                new[x] = RIGHT
                x -= 1
        y += 1
        for x, s in new.items():
            cells[(x, y)] = s


def _extend_exits_bottom(cells: Cells, width: int, y: int) -> None:
    """Continue the curves leaving through the bottom row, one row per round"""
    while True:
        row = {x: cells[(x, y)] for x in range(width) if (x, y) in cells}
        exits = [x for x in sorted(row) if row[x] == RIGHT and row.get(x + 1) == DOWN]
        if not exits:
            return
        new = {x: DOWN for x in exits}
        for x in exits:
            z = x + 1
            while z < width and z not in new:
                new[z] = RIGHT
                z += 1
        y -= 1
        for x, s in new.items():
            cells[(x, y)] = s


def _boundary_curve(cells: Cells, width: int, top: bool) -> List[int]:
    """Highest (or lowest) curve cell per column, checked to form one curve"""
    ext = _column_extents(cells)
    heights = []
    for x in range(width):
        lo, hi = ext[x]
        ys = range(hi, lo - 1, -1) if top else range(lo, hi + 1)
        y = next((y for y in ys if cells.get((x, y)) == RIGHT), None)
        if y is None:
            raise NotAdmissible(f"Column {x} carries no curve")
        heights.append(y)
    for x in range(width - 1):
        expected = heights[x] - 1 if cells.get((x + 1, heights[x])) == DOWN else heights[x]
        if heights[x + 1] != expected:
            raise NotAdmissible("Boundary cells do not form a single curve", details={"column": x})
    return heights


def _straight_edge(cells: Cells, width: int, top: bool) -> bool:
    ext = _column_extents(cells)
    edge = [ext[x][1] if top else ext[x][0] for x in range(width)]
    return len(set(edge)) == 1 and all(cells[(x, edge[0])] == RIGHT for x in range(width))


def _add_curve_above(cells: Cells, width: int) -> None:
    """New top curve, straight except where the gap below it would exceed one"""
    c = _boundary_curve(cells, width, top=True)
    gap = 1 if (0, c[0] + 1) in cells else 0
    gaps = [gap]
    shifts = []
    for x in range(width - 1):
        if c[x + 1] == c[x] - 1:
            shifts.append(gap == 1)
            gap = 1
        else:
            shifts.append(False)
            if (x + 1, c[x + 1] + 1) in cells and gap == 0:
                raise NotAdmissible("Top boundary leaves an isolated gap", details={"column": x + 1})
        gaps.append(gap)
    d = [c[x] + 1 + gaps[x] for x in range(width)]
    for x in range(width):
        if gaps[x]:
            cells.setdefault((x, c[x] + 1), DOWN)
        cells[(x, d[x])] = RIGHT
    for x, shifted in enumerate(shifts):
        if shifted:
            cells[(x + 1, d[x])] = DOWN


def _bottom_gaps(b: List[int], forced: List[bool]) -> Tuple[List[int], List[int]]:
    """Fewest downward steps for a curve under b; returns (gaps, steps)"""
    width = len(b)
    steps_b = [1 if b[x + 1] == b[x] - 1 else 0 for x in range(width - 1)]

    def need(x: int) -> bool:
        return forced[x] or (x < width - 1 and steps_b[x] == 1)

    inf = (width + 5, 2)
    best: List[Dict[int, Tuple[int, int]]] = [dict() for _ in range(width)]
    choice: List[Dict[int, Tuple[int, int]]] = [dict() for _ in range(width)]
    for g in (0, 1):
        best[width - 1][g] = inf if need(width - 1) and g == 0 else (0, g)
    for x in range(width - 2, -1, -1):
        for g in (0, 1):
            if need(x) and g == 0:
                best[x][g] = inf
                continue
            options = []
            for e in (0, 1):
                ng = g - steps_b[x] + e
                if ng not in (0, 1) or (e == 1 and ng != 1):
                    continue
                cost, last = best[x + 1][ng]
                if (cost, last) == inf:
                    continue
                options.append(((cost + e, last), e, ng))
            if options:
                score, e, ng = min(options, key=lambda o: (o[0], o[1]))
                best[x][g] = score
                choice[x][g] = (e, ng)
            else:
                best[x][g] = inf
    g = min((0, 1), key=lambda s: (best[0][s], -s))
    if best[0][g] == inf:
        raise NotAdmissible("Bottom boundary cannot be closed by a curve")
    gaps, steps = [g], []
    for x in range(width - 1):
        e, g = choice[x][g]
        steps.append(e)
        gaps.append(g)
    return gaps, steps


def _add_curve_below(cells: Cells, width: int) -> None:
    """New bottom curve, stepping down only where a curve above needs a gap"""
    b = _boundary_curve(cells, width, top=False)
    forced = [(x, b[x] - 1) in cells for x in range(width)]
    gaps, steps = _bottom_gaps(b, forced)
    e = [b[x] - 1 - gaps[x] for x in range(width)]
    for x in range(width):
        if gaps[x]:
            cells.setdefault((x, b[x] - 1), DOWN)
        cells[(x, e[x])] = RIGHT
    for x, stepped in enumerate(steps):
        if stepped:
            cells[(x, e[x] - 1)] = DOWN


def _columns(cells: Cells) -> Tuple[int, int, int, int]:
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    return min(xs), min(ys), max(xs), max(ys)


def _curve_starts(cells: Cells) -> List[int]:
    x0, y0, _, y1 = _columns(cells)
    return [y for y in range(y0, y1 + 1) if cells.get((x0, y)) == RIGHT]


def complete_T(pattern: Pattern) -> DeltaCompletion:
    """Rectangle containing the block whose curves all run from the left side to the right side.

    Curves entering through the top or leaving through the bottom are
    continued first; curves are then added above and below until the top
    and bottom rows are straight; finally columns or straight rows are
    added until there are as many curves as columns.
    """
    p = pattern.normalized()
    if not p.is_rectangle() or p.width != p.height:
        raise ValueError("complete_T takes an n-block")
    _require_completable(p)
    n = p.width
    if n == 1:
        if p.cells[(0, 0)] == RIGHT:
            return DeltaCompletion(pattern=p, offset=(0, 0), curves=1)
        return DeltaCompletion(pattern=Pattern.from_rows(_SINGLE_DOWN), offset=(0, 1), curves=3)

    cells = dict(p.cells)
    _extend_entries_top(cells, n, n - 1)
    _extend_exits_bottom(cells, n, 0)
    rounds = 0
    while not _straight_edge(cells, n, top=True):
        _add_curve_above(cells, n)
        rounds += 1
        if rounds > 4 * n:
            raise NotAdmissible("Top completion did not terminate")
    rounds = 0
    while not _straight_edge(cells, n, top=False):
        _add_curve_below(cells, n)
        rounds += 1
        if rounds > 4 * n:
            raise NotAdmissible("Bottom completion did not terminate")

    x0, y0, x1, y1 = _columns(cells)
    count = len(_curve_starts(cells))
    width = x1 - x0 + 1
    if width < count:
        for x in range(x1 + 1, x1 + 1 + count - width):
            for y in range(y0, y1 + 1):
                cells[(x, y)] = cells[(x1, y)]
    elif count < width:
        for y in range(y1 + 1, y1 + 1 + width - count):
            for x in range(x0, x1 + 1):
                cells[(x, y)] = RIGHT
        count = width

    result = Pattern.of(cells)
    _, y0, _, _ = result.bounds()
    logger.debug(f"T: {n}-block -> {result.width}x{result.height}, {count} curves")
    return DeltaCompletion(pattern=result.normalized(), offset=(0, -y0), curves=count)


def compactify(pattern: Pattern) -> Pattern:
    """Add columns on the right until the curves leaving the last column have no gaps between them"""
    cells = dict(pattern.normalized().cells)
    x = max(c[0] for c in cells)
    while True:
        col = {y: s for (cx, y), s in cells.items() if cx == x}
        tops = [y for y, s in col.items() if s == RIGHT and col.get(y - 1) == DOWN]
        if not tops:
            break
        new: Dict[int, str] = {}
        for y in tops:
            new[y] = DOWN
            new[y - 1] = RIGHT
        for y, s in col.items():
            if s == RIGHT and y not in new:
                new[y] = RIGHT
        x += 1
        for y, s in new.items():
            cells[(x, y)] = s
    return Pattern.of(cells)


def shift_triangle(pattern: Pattern) -> Tuple[Pattern, List[Cell]]:
    """One downward step for every curve leaving the last column, as a staircase of ↓.

    Returns the pattern and the ↓ cells of the staircase, lowest curve first.
    """
    cells = dict(pattern.cells)
    xl = max(c[0] for c in cells)
    ys = sorted(y for (x, y), s in cells.items() if x == xl and s == RIGHT)
    if not ys:
        raise ValueError("No curve leaves the last column")
    if ys != list(range(ys[0], ys[0] + len(ys))):
        raise ValueError("Curves leaving the last column must be contiguous; compactify first")
    frontier = []
    for j, y in enumerate(ys):
        for i in range(1, j + 1):
            cells[(xl + i, y)] = RIGHT
        cells[(xl + 1 + j, y)] = DOWN
        frontier.append((xl + 1 + j, y))
    return Pattern.of(cells), frontier


def shift_curves(pattern: Pattern, t: int, complete: bool = True) -> Pattern:
    """Shift every curve leaving a compactified pattern t times downwards.

    With complete, the curves are then continued with → up to the last
    column added.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    staircase, frontier = shift_triangle(pattern.normalized())
    cells = dict(staircase.cells)
    for _ in range(t - 1):
        step = []
        for x, y in frontier:
            cells[(x, y - 1)] = RIGHT
            cells[(x + 1, y - 1)] = DOWN
            step.append((x + 1, y - 1))
        frontier = step
    for x, y in frontier:
        cells[(x, y - 1)] = RIGHT
    if complete:
        x_last = max(c[0] for c in cells)
        snapshot = dict(cells)
        x0 = min(c[0] for c in snapshot)
        for (x, y), s in snapshot.items():
            if s != RIGHT or _has_predecessor(snapshot, x, y):
                continue
            path, _, end = _trace(snapshot, (x, y), x_last)
            if end != "open":
                continue
            ex, ey = path[-1]
            for z in range(ex + 1, x_last + 1):
                cells.setdefault((z, ey), RIGHT)
        logger.debug(f"shift_curves t={t}: completed to column {x_last - x0}")
    return Pattern.of(cells)


def _complete_curves(pattern: Pattern, counters: bool = False) -> List[Curve]:
    cells = delta_layer(pattern, counters).cells
    dec = curves(Pattern.of(cells))
    bad = [c for c in dec.curves if c.start != "left" or c.end != "right"]
    if bad:
        raise NotAdmissible("Every curve must cross the window from left to right",
                            details={"curve": bad[0].id, "start": bad[0].start, "end": bad[0].end})
    return dec.curves


def pseudo_project(window: Pattern, counters: bool = False) -> Pattern:
    """Straighten the window: row j of the result is read along curve j"""
    w = window.normalized()
    for cell, s in w.cells.items():
        x_sym, d_sym, _, _ = split_symbol(s, counters)
        if (d_sym == DOWN) != (x_sym == BLANK_X):
            raise NotAdmissible("Base symbols must sit exactly on curve cells", details={"cell": list(cell)})
    out = {}
    for j, curve in enumerate(_complete_curves(w, counters)):
        for i, cell in enumerate(curve.cells):
            out[(i, j)] = split_symbol(w.cells[cell], counters)[0]
    return Pattern.of(out)


def embed_along(pattern: Pattern, layer: Pattern) -> Pattern:
    """Write the rows of pattern along the curves of a curve-layer window of the same width"""
    p = pattern.normalized()
    d = layer.normalized()
    if p.width != d.width:
        raise ValueError(f"Widths differ: {p.width} and {d.width}")
    dec = curves(d)
    crossing = [c for c in dec.curves if c.start == "left" and c.end == "right"]
    if len(crossing) != len(dec.curves) or len(crossing) != p.height:
        raise NotAdmissible(f"Layer has {len(dec.curves)} curves, {len(crossing)} crossing; need {p.height}")
    out = {cell: f"{BLANK_X}{SEP}{DOWN}" for cell, s in d.cells.items() if s == DOWN}
    for j, curve in enumerate(crossing):
        for i, cell in enumerate(curve.cells):
            out[cell] = f"{p.cells[(i, j)]}{SEP}{RIGHT}"
    return Pattern.of(out)


def embed_straight(pattern: Pattern) -> Pattern:
    p = pattern.normalized()
    return Pattern.of({c: f"{s}{SEP}{RIGHT}" for c, s in p.cells.items()})
