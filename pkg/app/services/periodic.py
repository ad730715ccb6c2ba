"""
Periodic points of gluing SFTs: pigeonhole constructions, membership and
exhaustive refutation of small periods.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from app.config import settings
from app.schemas.gluing import FundamentalDomain, GapTable
from app.schemas.pattern import Cell, Pattern, SftDefinition
from app.services.builtin_sfts import BLACK, WHITE
from app.services.sft_core import compile_sft, extend_pattern, find_torus, is_admissible, rect
from app.utils.error_handler import (BoundTooLarge, Inadmissible, KExhausted, NoWitness, ThresholdUnmet,
                                     WitnessUnavailable)

logger = logging.getLogger(__name__)

GapWitness = Callable[[SftDefinition, Pattern, Sequence[Cell]], Optional[Pattern]]

_WITNESSES: Dict[str, GapWitness] = {}


def register_witness(name: str):
    """Register a constructive gap filler for the SFT with the given name"""
    def decorator(func: GapWitness) -> GapWitness:
        _WITNESSES[name] = func
        return func
    return decorator


@register_witness("even")
def _even_witness(sft: SftDefinition, fixed: Pattern, region: Sequence[Cell]) -> Optional[Pattern]:
    filled = dict(fixed.cells)
    for c in region:
        filled.setdefault(c, WHITE)
    result = Pattern.of(filled)
    return result if is_admissible(sft, result) else None


@register_witness("chess")
def _chess_witness(sft: SftDefinition, fixed: Pattern, region: Sequence[Cell]) -> Optional[Pattern]:
    """Checkerboard phase read off the fixed cells"""
    phases = {(x + y + (0 if s == BLACK else 1)) % 2 for (x, y), s in fixed.cells.items()}
    if len(phases) > 1:
        return None
    phase = phases.pop() if phases else 0
    filled = dict(fixed.cells)
    for x, y in region:
        filled.setdefault((x, y), BLACK if (x + y) % 2 == phase else WHITE)
    return Pattern.of(filled)


def fill_gap(sft: SftDefinition, fixed: Pattern, region: Sequence[Cell]) -> Optional[Pattern]:
    """Registered witness for the SFT, falling back to search"""
    witness = _WITNESSES.get(sft.name)
    if witness is not None:
        return witness(sft, fixed, region)
    return extend_pattern(sft, fixed, region)


def threshold_holds(alphabet_size: int, rank: int, n: int, gap: int) -> bool:
    """f(n) < log_|A|(n - r + 2) / (r - 1) - r + 2"""
    if rank <= 1 or alphabet_size <= 1:
        return True
    if n - rank + 2 <= 0:
        return False
    return gap < math.log(n - rank + 2, alphabet_size) / (rank - 1) - rank + 2


def _columns(cells: Dict[Cell, str], x: int, width: int, height: int) -> Tuple[str, ...]:
    return tuple(cells.get((x + dx, y), "") for dx in range(width) for y in range(height))


def _domain(cells: Dict[Cell, str], x0: int, width: int, height: int, method: str) -> FundamentalDomain:
    pattern = Pattern.of({(x - x0, y): s for (x, y), s in cells.items() if x0 <= x < x0 + width and 0 <= y < height})
    return FundamentalDomain(width=width, height=height, pattern=pattern, method=method)


def _first_repeat(cells: Dict[Cell, str], positions: Sequence[int], col_width: int,
                  col_height: int) -> Optional[Tuple[int, int]]:
    """Smallest k, then smallest l, with equal column patterns at k and k + l"""
    cols = {x: _columns(cells, x, col_width, col_height) for x in positions}
    for i, k in enumerate(positions):
        for later in positions[i + 1:]:
            if cols[k] == cols[later]:
                return k, later
    return None


def verify_domain(sft: SftDefinition, domain: FundamentalDomain) -> bool:
    """The doubly periodic repetition of the domain is admissible"""
    if len(domain.pattern.cells) != domain.width * domain.height:
        return False
    return is_admissible(sft, domain.pattern, wrap=(domain.width, domain.height))


def reduce_domain(domain: FundamentalDomain) -> FundamentalDomain:
    """Smallest divisor periods under which the domain repeats itself"""
    cells = domain.pattern.cells
    w, h = domain.width, domain.height

    def repeats(pw: int, ph: int) -> bool:
        return all(cells[(x, y)] == cells[(x % pw, y % ph)] for (x, y) in cells)

    best = (w, h)
    for pw in (d for d in range(1, w + 1) if w % d == 0):
        for ph in (d for d in range(1, h + 1) if h % d == 0):
            if pw * ph < best[0] * best[1] and repeats(pw, ph):
                best = (pw, ph)
    if best == (w, h):
        return domain
    pw, ph = best
    return FundamentalDomain(width=pw, height=ph, method=domain.method,
                             pattern=Pattern.of({(x, y): s for (x, y), s in cells.items() if x < pw and y < ph}))


def _unary_domain(sft: SftDefinition) -> FundamentalDomain:
    compiled = compile_sft(sft)
    allowed = [s for i, s in enumerate(compiled.symbols) if not (compiled.unary >> i) & 1]
    if not allowed:
        raise NoWitness(f"{sft.name} has no allowed symbol")
    return FundamentalDomain(width=1, height=1, pattern=Pattern.of({(0, 0): allowed[0]}), method="rank-one")


def find_periodic_point(sft: SftDefinition, gap: GapTable, n: int) -> FundamentalDomain:
    """Fundamental domain built from an n-wide strip glued over itself"""
    r = sft.rank
    if r <= 1:
        return _unary_domain(sft)
    fn = gap(n)
    if not threshold_holds(len(sft.alphabet), r, n, fn):
        raise ThresholdUnmet(f"f({n}) = {fn} does not meet the periodicity threshold",
                             details={"n": n, "f": fn, "rank": r, "alphabet": len(sft.alphabet)})
    compiled = compile_sft(sft)
    period = fn + r - 1
    region = rect(n, period + r - 1)
    filled = None
    for strip in compiled.solutions(rect(n, r - 1)):
        bottom = compiled.decode(dict(strip))
        fixed = bottom.merge(bottom.translate(0, period))
        filled = fill_gap(sft, fixed, region)
        if filled is not None:
            break
    if filled is None:
        raise NoWitness(f"No strip of width {n} glues over itself at distance {fn}")

    repeat = _first_repeat(filled.cells, list(range(n - r + 2)), r - 1, period)
    if repeat is None:
        raise NoWitness("No repeated column pattern; the strip is too narrow")
    k, later = repeat
    domain = _domain(filled.cells, k, later - k, period, method="strip pigeonhole")
    if not verify_domain(sft, domain):
        raise NoWitness("Constructed domain failed the torus check")
    domain = reduce_domain(domain)
    logger.info(f"Periodic point of {sft.name}: {domain.width}x{domain.height} domain")
    return domain


def _copy_distance(sft: SftDefinition, chain: Pattern, width: int, start: int, spread: int) -> Optional[int]:
    """Smallest distance in [start, start + spread] at which the chain glues to its own copy"""
    for d in range(start, start + spread + 1):
        merged = chain.merge(chain.translate(d, 0))
        if merged is not None and fill_gap(sft, merged, rect(d + width, chain.height)) is not None:
            return d
    return None


def _close_chain(sft: SftDefinition, chain: Pattern, positions: Sequence[int], width: int, gap: GapTable,
                 spread: int) -> Optional[FundamentalDomain]:
    """Cap the chain with (r-1)-row strips below and above, then cut between two equal columns"""
    r = sft.rank
    compiled = compile_sft(sft)
    gv = gap(width)
    base = (r - 1) + gv
    lifted = chain.translate(0, base)
    usable = [p for p in positions if p + r - 1 <= width]
    first = base + chain.height + gv
    for period in range(first, first + spread + 1):
        region = rect(width, period + r - 1)
        for strip in compiled.solutions(rect(width, r - 1), limit=16):
            cap = compiled.decode(dict(strip))
            fixed = lifted.merge(cap)
            fixed = fixed.merge(cap.translate(0, period)) if fixed is not None else None
            if fixed is None:
                continue
            filled = fill_gap(sft, fixed, region)
            if filled is None:
                continue
            repeat = _first_repeat(filled.cells, usable, r - 1, period)
            if repeat is None:
                continue
            x0, x1 = repeat
            domain = _domain(filled.cells, x0, x1 - x0, period, method=f"chain of {len(positions)} copies")
            if verify_domain(sft, domain):
                return domain
    return None


def periodic_point_containing(sft: SftDefinition, block: Pattern, gap: GapTable,
                              k_cap: Optional[int] = None, spread: int = 4) -> FundamentalDomain:
    """Fundamental domain of a periodic point in which block occurs.

    The chain doubles k times; each copy sits at the smallest distance in
    [width + f(width), width + f(width) + spread] the gap witness accepts, and
    the vertical period is chosen from the same kind of range.
    """
    block = block.normalized()
    if not is_admissible(sft, block):
        raise Inadmissible("Block is not locally admissible")
    if sft.rank <= 1:
        cells = dict(block.cells)
        fallback = _unary_domain(sft).pattern.cells[(0, 0)]
        for c in rect(block.width, block.height):
            cells.setdefault(c, fallback)
        return FundamentalDomain(width=block.width, height=block.height, pattern=Pattern.of(cells), method="rank-one")

    w, h = block.width, block.height
    k_cap = k_cap or settings.k_cap
    chain, positions, width = block, [0], w
    for k in range(1, k_cap + 1):
        d = _copy_distance(sft, chain, width, width + gap(width), spread)
        if d is None:
            raise WitnessUnavailable(f"The {len(positions)}-copy chain does not glue to itself within "
                                     f"{spread} cells of distance {width + gap(width)}",
                                     details={"k": k, "width": width})
        chain = chain.merge(chain.translate(d, 0))
        positions = positions + [p + d for p in positions]
        width += d
        domain = _close_chain(sft, chain, positions, width, gap, spread)
        if domain is None:
            logger.debug(f"k={k}: {len(positions)} copies do not close, doubling the chain")
            continue
        logger.info(f"Periodic point of {sft.name} containing a {w}x{h} block: k={k}, "
                    f"{domain.width}x{domain.height}")
        return reduce_domain(domain)
    raise KExhausted(f"No periodic point found up to k = {k_cap}", details={"k_cap": k_cap})


def construction_bound(sft: SftDefinition, block: Pattern, gap: GapTable) -> int:
    """Area of the domain the chain construction is guaranteed to reach"""
    r = max(sft.rank, 2)
    w, h = block.width, block.height
    g = gap(max(w, h))
    period = (r - 1) + 2 * g + h
    k = math.ceil(math.log2(len(sft.alphabet) ** ((r - 1) * period) + 1))
    width = w
    for _ in range(k):
        width = 2 * width + gap(width)
    return width * period


def _torus_with(sft: SftDefinition, block: Pattern, w: int, h: int) -> Optional[Pattern]:
    fixed: Dict[Cell, str] = {}
    for (x, y), s in block.cells.items():
        c = (x % w, y % h)
        if fixed.get(c, s) != s:
            return None
        fixed[c] = s
    return find_torus(sft, w, h, fixed=Pattern.of(fixed))


def membership_domain(sft: SftDefinition, block: Pattern, gap: GapTable,
                      budget: Optional[int] = None) -> Optional[FundamentalDomain]:
    """Smallest-area torus containing block, searched up to the cell budget"""
    block = block.normalized()
    compiled = compile_sft(sft)
    if not compiled.is_admissible(compiled.encode(block)):
        return None
    budget = budget or settings.cell_budget
    for area in range(1, budget + 1):
        for w in range(1, area + 1):
            if area % w:
                continue
            torus = _torus_with(sft, block, w, area // w)
            if torus is not None:
                return FundamentalDomain(width=w, height=area // w, pattern=torus, method="torus search")
    bound = construction_bound(sft, block, gap)
    if bound > budget:
        raise BoundTooLarge(f"Undecided within {budget} cells; the construction needs up to {bound}",
                            details={"budget": budget, "bound": bound})
    return None


def decide_membership(sft: SftDefinition, block: Pattern, gap: GapTable, budget: Optional[int] = None) -> bool:
    """Whether block occurs in some periodic point"""
    return membership_domain(sft, block, gap, budget) is not None


def refute_period(sft: SftDefinition, max_period: int, threads: Optional[int] = None) -> List[FundamentalDomain]:
    """Every torus size w, h <= max_period that carries a configuration, sizes searched in parallel"""
    sizes = [(w, h) for h in range(1, max_period + 1) for w in range(1, max_period + 1)]
    workers = threads or settings.threads
    compile_sft(sft)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tori = list(pool.map(lambda wh: find_torus(sft, wh[0], wh[1]), sizes))
    else:
        tori = [find_torus(sft, w, h) for w, h in sizes]
    found = [FundamentalDomain(width=w, height=h, pattern=torus, method="torus search")
             for (w, h), torus in zip(sizes, tori) if torus is not None]
    logger.info(f"refute_period {sft.name} <= {max_period}: {len(found)} tori, {workers} workers")
    return found
