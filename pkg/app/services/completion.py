"""
Completion of Robinson blocks into supertiles.

Any n-block of the aligned Robinson subshift sits inside an order
ceil(log2 n) + 4 supertile. Blocks are located through a symbol index of the
four supertiles of that order: the rarest symbol of the block pins the
candidate offsets and the remaining cells confirm one of them.
"""

import logging
import math
from collections import Counter
from typing import Dict, List, Optional, Tuple

from app.config import settings
from app.schemas.pattern import Pattern
from app.schemas.robinson import ORIENTATIONS, CompletionResult
from app.services.cache_service import cached_result
from app.services.robinson import is_robinson_symbol, parse_tile, supertile, v2, verify_rules
from app.utils.error_handler import CompletionFailed, NotAdmissible

logger = logging.getLogger(__name__)


def completion_order(n: int) -> int:
    """Order of the supertile guaranteed to contain any n-block"""
    if n < 1:
        raise ValueError("Block side must be positive")
    return math.ceil(math.log2(n)) + 4


@cached_result("supertile_index", key_func=lambda order, orientation: {"n": order, "o": orientation})
def _symbol_index(order: int, orientation: str) -> Dict[str, List[Tuple[int, int]]]:
    index: Dict[str, List[Tuple[int, int]]] = {}
    for cell, s in supertile(order, orientation, copy=False).cells.items():
        index.setdefault(s, []).append(cell)
    for positions in index.values():
        positions.sort(key=lambda c: (c[1], c[0]))
    return index


def locate(block: Pattern, order: int, orientation: str) -> Optional[Tuple[int, int]]:
    """Offset of the block's (0, 0) in the given supertile, first in row-major order"""
    index = _symbol_index(order, orientation)
    anchor, best = None, None
    for cell, s in block.cells.items():
        positions = index.get(s)
        if positions is None:
            return None
        if best is None or len(positions) < len(best):
            anchor, best = cell, positions
    tile = supertile(order, orientation, copy=False)
    hits = []
    for px, py in best:
        offset = (px - anchor[0], py - anchor[1])
        if tile.contains(block, offset):
            hits.append(offset)
    if not hits:
        return None
    return min(hits, key=lambda c: (c[1], c[0]))


def _orientation_order(block: Pattern) -> List[str]:
    """Orientations named by the block's alignment marks first, then alphabetical"""
    marks = Counter()
    for s in block.cells.values():
        if is_robinson_symbol(s):
            t = parse_tile(s)
            if t.mark:
                marks[t.mark] += 1
            elif t.is_corner:
                marks[t.label] += 1
    return sorted(ORIENTATIONS, key=lambda o: (-marks[o], o))


def complete_block(block: Pattern) -> CompletionResult:
    """Supertile of order ceil(log2 n) + 4 containing the block verbatim"""
    block = block.normalized()
    violations = verify_rules(block)
    if violations:
        raise NotAdmissible("Block violates the aligned Robinson rules",
                            details={"anchor": list(violations[0].anchor),
                                     "pattern_index": violations[0].pattern_index})
    n = max(block.width, block.height)
    order = completion_order(n)
    if order > settings.supertile_cap:
        raise CompletionFailed(f"Completion of a {n}-block needs order {order}, above the cap",
                               details={"n": n, "order": order, "cap": settings.supertile_cap})
    for orientation in _orientation_order(block):
        offset = locate(block, order, orientation)
        if offset is not None:
            return CompletionResult(order=order, orientation=orientation, offset=offset,
                                    supertile=supertile(order, orientation, copy=False))
    logger.warning(f"No order-{order} supertile contains the {n}-block")
    raise CompletionFailed(f"No supertile of order {order} contains the block",
                           details={"n": n, "order": order})


def classify_window(block: Pattern) -> str:
    """single_supertile, split (one line of higher order crosses) or cross (two lines cross)"""
    result = complete_block(block)
    block = block.normalized()
    n = max(block.width, block.height)
    m = math.ceil(math.log2(n)) if n > 1 else 0
    ox, oy = result.offset
    cols = [x for x in range(ox, ox + block.width) if v2(x + 1) > m]
    rows = [y for y in range(oy, oy + block.height) if v2(y + 1) > m]
    if cols and rows:
        return "cross"
    if cols or rows:
        return "split"
    return "single_supertile"
