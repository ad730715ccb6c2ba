"""
Petal, cell and density extraction for Robinson windows
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from app.schemas.pattern import Pattern
from app.schemas.robinson import ORIENTATIONS, DensityReport, Petal, PetalCell, PetalHierarchy
from app.services.robinson import RobinsonTile, is_robinson_symbol, parse_tile, supertile

logger = logging.getLogger(__name__)


def _tiles(pattern: Pattern) -> Dict[Tuple[int, int], RobinsonTile]:
    return {c: parse_tile(s) for c, s in pattern.cells.items() if is_robinson_symbol(s)}


def _ring_is_double(tiles: Dict[Tuple[int, int], RobinsonTile], x0: int, y0: int, d: int) -> bool:
    for t in range(1, d):
        for cell in ((x0 + t, y0), (x0 + t, y0 + d)):
            tile = tiles.get(cell)
            if tile is None or not tile.horizontal_double():
                return False
        for cell in ((x0, y0 + t), (x0 + d, y0 + t)):
            tile = tiles.get(cell)
            if tile is None or not tile.vertical_double():
                return False
    return True


def extract_petals(pattern: Pattern) -> PetalHierarchy:
    """Every complete petal in the window with its parent/child links"""
    tiles = _tiles(pattern)
    if not tiles:
        return PetalHierarchy()
    _, _, max_x, max_y = pattern.bounds()
    corners = {c: t for c, t in tiles.items() if t.is_corner}

    found: List[Tuple[int, Tuple[int, int], int, int]] = []
    used = set()
    for (x, y), tile in sorted(corners.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if tile.label != "sw":
            continue
        d = 2
        while x + d <= max_x and y + d <= max_y:
            ring = [(x + d, y, "se"), (x, y + d, "nw"), (x + d, y + d, "ne")]
            if all(corners.get((cx, cy)) is not None and corners[(cx, cy)].label == lab
                   and corners[(cx, cy)].color == tile.color and corners[(cx, cy)].value == tile.value
                   for cx, cy, lab in ring) and _ring_is_double(tiles, x, y, d):
                order = d.bit_length() - 2
                if (order == 0) == tile.is_blue:
                    found.append((order, (x, y), d + 1, tile.value))
                    used.update([(x, y)] + [(cx, cy) for cx, cy, _ in ring])
                    break
            d *= 2

    found.sort(key=lambda f: (f[0], f[1][1], f[1][0]))
    petals = [Petal(id=i, order=o, origin=origin, side=side, value=value)
              for i, (o, origin, side, value) in enumerate(found)]

    by_corner: Dict[Tuple[int, Tuple[int, int]], int] = {}
    by_center: Dict[Tuple[int, Tuple[int, int]], int] = {}
    for p in petals:
        for c in p.corners().values():
            by_corner[(p.order, c)] = p.id
        by_center[(p.order, p.center)] = p.id
    for p in petals:
        p.parent = by_corner.get((p.order + 1, p.center))
        if p.order > 0:
            for c in p.corners().values():
                child = by_center.get((p.order - 1, c))
                if child is not None:
                    p.children.append(child)
            p.missing_children = 4 - len(p.children)

    incomplete = sorted((c for c in corners if c not in used), key=lambda c: (c[1], c[0]))
    logger.debug(f"Extracted {len(petals)} petals, {len(incomplete)} corners without a complete petal")
    return PetalHierarchy(petals=petals, incomplete_corners=incomplete)


def extract_cells(pattern: Pattern, hierarchy: Optional[PetalHierarchy] = None) -> List[PetalCell]:
    """Cells: the order-n cell is the region enclosed by a petal of order 2n+1"""
    hierarchy = hierarchy or extract_petals(pattern)
    cells = [PetalCell(order=(p.order - 1) // 2, petal_id=p.id, origin=p.origin, side=p.side)
             for p in hierarchy.petals if p.order % 2 == 1]
    return sorted(cells, key=lambda c: (c.order, c.origin[1], c.origin[0]))


def _inside(inner: PetalCell, outer: PetalCell) -> bool:
    x0, y0 = outer.origin
    ix, iy = inner.origin
    return (x0 <= ix and y0 <= iy and ix + inner.side <= x0 + outer.side and iy + inner.side <= y0 + outer.side
            and inner.petal_id != outer.petal_id)


def properly_contained(cells: List[PetalCell], cell: PetalCell, order: int) -> List[PetalCell]:
    """Cells of the given order inside cell but outside every intermediate-order cell inside it"""
    inside = [c for c in cells if _inside(c, cell)]
    intermediate = [c for c in inside if order < c.order < cell.order]
    return [c for c in inside if c.order == order and not any(_inside(c, m) for m in intermediate)]


def periodic_occurrences(container: Pattern, sub: Pattern) -> List[Tuple[int, int]]:
    """Offsets where sub occurs verbatim in container, found through sub's center symbol"""
    sub = sub.normalized()
    w, h = sub.width, sub.height
    centre = (w // 2, h // 2)
    key = sub.cells[centre]
    x0, y0, x1, y1 = container.bounds()
    out = []
    for (x, y), s in container.cells.items():
        if s != key:
            continue
        ox, oy = x - centre[0], y - centre[1]
        if ox < x0 or oy < y0 or ox + w - 1 > x1 or oy + h - 1 > y1:
            continue
        if container.contains(sub, (ox, oy)):
            out.append((ox, oy))
    return sorted(out, key=lambda c: (c[1], c[0]))


def density(pattern: Pattern, max_order: int = 2) -> DensityReport:
    """Blue corners by smallest enclosing cell order, plus the non-blue share.

    Every position of the window counts in the total, including those near the
    edge whose enclosing cell is cut off; their blue corners land in residual,
    so small windows understate the per-order shares.
    """
    tiles = _tiles(pattern)
    total = len(pattern.cells)
    blue = [c for c, t in tiles.items() if t.is_blue]
    cells = [c for c in extract_cells(pattern) if c.order <= max_order]
    counts = {k: 0 for k in range(max_order + 1)}
    residual = 0
    for b in blue:
        orders = [c.order for c in cells if c.encloses(b)]
        if orders:
            counts[min(orders)] += 1
        else:
            residual += 1
    non_blue = total - len(blue)
    lam = {k: Fraction(v, total) for k, v in counts.items()}
    targets = {"lambda_star": 0.75}
    for k in counts:
        targets[f"lambda_{k}"] = (3 ** k) / (4 ** (k + 2))
    report = DensityReport(
        window_cells=total,
        lambda_star=str(Fraction(non_blue, total)),
        lambda_by_order={k: str(v) for k, v in lam.items()},
        residual=str(Fraction(residual, total)),
        targets=targets,
    )
    logger.info(f"Density over {total} cells: lambda_star={report.lambda_star}, by order {report.lambda_by_order}")
    return report


def supertile_occurrences(container: Pattern, sub_order: int) -> Dict[str, List[Tuple[int, int]]]:
    """Occurrences of the order-m supertiles of every orientation inside container"""
    return {o: periodic_occurrences(container, supertile(sub_order, o)) for o in ORIENTATIONS}


def cell_occurrences(pattern: Pattern, order: int) -> List[Tuple[int, int]]:
    """Origins of the complete order-n cells of the window, row-major"""
    return sorted((c.origin for c in extract_cells(pattern) if c.order == order), key=lambda c: (c[1], c[0]))
