"""
Gluing sets and uniform gap estimates.

A gluing of p and q at offset u is certified when q at the origin and p at
u agree on their overlap and the union extends over its bounding box grown
by the margin. Certificates are locally admissible only: the margin is the
trust knob.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.schemas.gluing import (GAP_CLASSES, GapProfile, GapTable, GluingClass, GluingClassReport, GluingReport,
                                NetGluingWitness, PowerSequenceGaps, RingResult)
from app.schemas.pattern import Cell, Pattern, SftDefinition
from app.services.robinson import robinson_sft, supertile, supertile_side
from app.services.sft_core import CompiledSft, compile_sft, enumerate_blocks, rect
from app.utils.error_handler import Inadmissible, OrderTooLarge

logger = logging.getLogger(__name__)


def _ring(radius: int) -> List[Cell]:
    if radius == 0:
        return [(0, 0)]
    cells = [(x, y) for y in range(-radius, radius + 1) for x in range(-radius, radius + 1)
             if max(abs(x), abs(y)) == radius]
    return sorted(cells, key=lambda c: (c[1], c[0]))


def _glues(compiled: CompiledSft, p: Dict[Cell, int], q: Dict[Cell, int], u: Cell, margin: int) -> bool:
    union = dict(q)
    for (x, y), a in p.items():
        c = (x + u[0], y + u[1])
        b = union.get(c)
        if b is not None and b != a:
            return False
        union[c] = a
    xs = [c[0] for c in union]
    ys = [c[1] for c in union]
    x0, y0 = min(xs) - margin, min(ys) - margin
    region = rect(max(xs) - x0 + 1 + margin, max(ys) - y0 + 1 + margin, x0, y0)
    return compiled.first_solution(region, fixed=union) is not None


def _require(compiled: CompiledSft, pattern: Pattern, name: str) -> Dict[Cell, int]:
    encoded = compiled.encode(pattern)
    if not compiled.is_admissible(encoded):
        raise Inadmissible(f"Block {name} is not locally admissible for {compiled.sft.name}")
    return encoded


def gluing_set(sft: SftDefinition, p: Pattern, q: Pattern, window: int, margin: int = 1) -> List[Cell]:
    """Offsets u with ||u|| <= window, u != 0, where p at u glues to q at the origin"""
    compiled = compile_sft(sft)
    pe = _require(compiled, p, "p")
    qe = _require(compiled, q, "q")
    out = []
    for r in range(1, window + 1):
        for u in _ring(r):
            if _glues(compiled, pe, qe, u, margin):
                out.append(u)
    return sorted(out, key=lambda c: (c[1], c[0]))


def _half_ring(radius: int) -> List[Cell]:
    """One offset of each {u, -u} pair on the ring"""
    return [u for u in _ring(radius) if (u[1], u[0]) > (-u[1], -u[0])]


def _check_pair(compiled: CompiledSft, blocks: List[Dict[Cell, int]], i: int, j: int, radius: int,
                margin: int) -> Tuple[int, Optional[Cell]]:
    """Offsets checked and the first failing offset for one unordered pair"""
    offsets = _half_ring(radius) if i == j else _ring(radius)
    checked = 0
    for u in offsets:
        checked += 1
        # u in G(p_i, p_j) covers -u in G(p_j, p_i)
        if not _glues(compiled, blocks[i], blocks[j], u, margin):
            return checked, u
    return checked, None


def gap_estimate(sft: SftDefinition, n: int, window: int, margin: int = 1,
                 threads: Optional[int] = None, fit: bool = True) -> GluingReport:
    """Least g such that every pair of n-blocks glues at every offset of norm n+g..window.

    With fit, the gaps at 1..n-1 are measured at the same slack window - 2n and
    the whole sequence is fitted for the class hint.
    """
    if window < 2 * n:
        raise ValueError(f"Window {window} must be at least 2n = {2 * n}")
    compiled = compile_sft(sft)
    patterns = enumerate_blocks(sft, n)
    blocks = [compiled.encode(p) for p in patterns]
    pairs = [(i, j) for i in range(len(blocks)) for j in range(i, len(blocks))]
    workers = threads or settings.threads
    logger.info(f"gap_estimate {sft.name} n={n}: {len(blocks)} blocks, {len(pairs)} pairs, window={window}")

    rings: List[RingResult] = []
    failing: Optional[int] = None
    for radius in range(window, 0, -1):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda ij: _check_pair(compiled, blocks, ij[0], ij[1], radius, margin), pairs))
        else:
            results = []
            for i, j in pairs:
                res = _check_pair(compiled, blocks, i, j, radius, margin)
                results.append(res)
                if res[1] is not None:
                    break
        checked = sum(r[0] for r in results)
        failure = None
        for (i, j), (_, u) in zip(pairs, results):
            if u is not None:
                failure = (i, j, u)
                break
        rings.append(RingResult(radius=radius, offsets_checked=checked, certified=failure is None,
                                first_failure=failure))
        if failure is not None:
            failing = radius
            break

    if failing is None:
        gap: Optional[int] = 0
    elif failing == window:
        gap = None
    else:
        gap = max(0, failing + 1 - n)
    certified = [u for r in rings if r.certified for u in _ring(r.radius)]
    hint = "unknown"
    if fit:
        gaps = {k: gap_estimate(sft, k, window - 2 * n + 2 * k, margin, threads, fit=False).min_uniform_gap
                for k in range(1, n)}
        gaps[n] = gap
        if len(gaps) > 1:
            hint = classify_gaps(gaps)[0] or "unknown"
    logger.info(f"gap_estimate {sft.name} n={n}: outermost failing ring {failing}, gap {gap}, hint {hint}")
    return GluingReport(sft=sft.name, n=n, window=window, margin=margin, blocks=len(blocks),
                        pair_count=len(blocks) ** 2, min_uniform_gap=gap,
                        certified_offsets=sorted(certified, key=lambda c: (c[1], c[0])), class_hint=hint, rings=rings)


def classify_gaps(gaps: Dict[int, Optional[int]]) -> Tuple[Optional[str], Dict[str, float]]:
    """Least-squares fit of the gap sequence against constant, a log2 n + b and a n + b"""
    points = sorted((n, g) for n, g in gaps.items() if g is not None)
    if not points:
        return None, {}
    ns = np.array([p[0] for p in points], dtype=float)
    gs = np.array([p[1] for p in points], dtype=float)
    designs = {
        "constant": np.ones((len(ns), 1)),
        "logarithmic": np.column_stack([np.log2(ns), np.ones(len(ns))]),
        "linear": np.column_stack([ns, np.ones(len(ns))]),
    }
    residuals = {}
    for name, design in designs.items():
        coef, *_ = np.linalg.lstsq(design, gs, rcond=None)
        residuals[name] = float(np.sum((design @ coef - gs) ** 2))
    best = min(residuals.values())
    hint = next(name for name in GAP_CLASSES if residuals[name] <= best + 1e-6)
    return hint, residuals


def gap_profile(sft: SftDefinition, ns: Sequence[int], margin: int = 1, extra: int = 2) -> GapProfile:
    """Gap estimates for several n with window 2n + extra, plus the class hint"""
    gaps = {n: gap_estimate(sft, n, 2 * n + extra, margin, fit=False).min_uniform_gap for n in ns}
    hint, residuals = classify_gaps(gaps)
    return GapProfile(sft=sft.name, gaps=gaps, class_hint=hint, residuals=residuals)


def min_vertical_separation(sft: SftDefinition, block: Pattern, margin: int = 1, limit: int = 64) -> Optional[int]:
    """Fewest rows strictly between block and a copy stacked above it that still glue"""
    compiled = compile_sft(sft)
    encoded = _require(compiled, block.normalized(), "block")
    height = block.height
    for gap in range(0, limit + 1):
        if _glues(compiled, encoded, encoded, (0, height + gap), margin):
            return gap
    return None


def net_gluing_level(n: int) -> int:
    """m with 2^(m+1) - 1 < n <= 2^(m+2) - 1"""
    if n < 1:
        raise ValueError("n must be positive")
    m = -1
    while not ((1 << (m + 1)) - 1 < n <= (1 << (m + 2)) - 1):
        m += 1
    return m


def _lattice_inside(offsets: set, shortest: int, longest: int, window: int) -> Optional[Tuple[int, Cell]]:
    """Smallest period L in [shortest, longest] and base u with u + L(Z^2 - 0) inside offsets up to the window"""
    for period in range(max(shortest, 1), longest + 1):
        steps = range(-(window // period) - 1, window // period + 2)
        for bx in range(period):
            for by in range(period):
                points = [(bx + a * period, by + b * period) for b in steps for a in steps if (a, b) != (0, 0)]
                points = [u for u in points if max(abs(u[0]), abs(u[1])) <= window]
                if points and all(u in offsets for u in points):
                    return period, (bx, by)
    return None


def _occurrence_offsets(container: Pattern, p: Pattern, q: Pattern, window: int) -> set:
    """Offsets u with ||u|| <= window such that the container holds q at some s and p at s + u"""
    x0, y0, x1, y1 = container.bounds()
    spots = [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]
    spots_p = [s for s in spots if container.contains(p, s)]
    spots_q = [s for s in spots if container.contains(q, s)]
    out = {(tx - sx, ty - sy) for sx, sy in spots_q for tx, ty in spots_p
           if max(abs(tx - sx), abs(ty - sy)) <= window}
    out.discard((0, 0))
    return out


def net_gluing_witness(sft: SftDefinition, p: Pattern, q: Pattern, window: int, margin: int = 1,
                       container: Optional[Pattern] = None, shortest: int = 1) -> Optional[Tuple[Cell, int]]:
    """Anchor u and smallest period T <= window with u + T(Z^2 - 0) certified inside the window.

    Offsets are certified by gluing_set, or, given a container pattern known to
    be globally admissible, read off the occurrences of q and p inside it.
    Ties on T go to the lexicographically least anchor.
    """
    p, q = p.normalized(), q.normalized()
    if container is None:
        offsets = set(gluing_set(sft, p, q, window, margin))
    else:
        offsets = _occurrence_offsets(container, p, q, window)
    found = _lattice_inside(offsets, shortest, window, window)
    if found is None:
        logger.info(f"net gluing {sft.name}: no lattice within window {window}")
        return None
    period, anchor = found
    logger.info(f"net gluing {sft.name}: anchor {anchor}, period {period}")
    return anchor, period


def robinson_net_period(n: int) -> NetGluingWitness:
    """Closed-form lattice period 2^(m+6) for n-blocks of the aligned Robinson subshift"""
    m = net_gluing_level(n)
    return NetGluingWitness(n=n, level=m, period=1 << (m + 6), linear_bound=32 * n)


def robinson_net_witness(p: Pattern, q: Pattern, orientation: str = "sw",
                         window: Optional[int] = None) -> NetGluingWitness:
    """Closed-form period for two Robinson blocks, with the lattice found among their supertile occurrences"""
    n = max(p.width, p.height, q.width, q.height)
    witness = robinson_net_period(n)
    window = window or witness.period
    order = 0
    while supertile_side(order) < 3 * window + n:
        order += 1
    if order > settings.supertile_cap:
        raise OrderTooLarge(f"Window {window} needs a supertile of order {order}",
                            details={"order": order, "cap": settings.supertile_cap})
    found = net_gluing_witness(robinson_sft(), p, q, window, container=supertile(order, orientation, copy=False))
    if found is not None:
        witness.anchor, witness.found_period = found
    logger.info(f"robinson net gluing n={n}: m={witness.level}, period={witness.period}, "
                f"found={witness.found_period}, bound={witness.linear_bound}")
    return witness


def classify_gluing(sft: SftDefinition, gap: GapTable, n_max: int, margin: int = 1,
                    window: Optional[int] = None) -> GluingClassReport:
    """Block gluing, net gluing and block transitivity for n <= n_max, as far as the window shows"""
    classes = []
    for n in range(1, n_max + 1):
        f = gap(n)
        reach = n + f
        win = window or 2 * reach
        patterns = enumerate_blocks(sft, n)
        sets = {(i, j): set(gluing_set(sft, patterns[i], patterns[j], win, margin))
                for i in range(len(patterns)) for j in range(len(patterns))}
        far = [u for r in range(reach, win + 1) for u in _ring(r)]
        block = all(u in s for s in sets.values() for u in far)
        near = {u for r in range(1, reach + 1) for u in _ring(r)}
        common = set(near)
        for s in sets.values():
            common &= s
        lattices = {}
        for (i, j), s in sets.items():
            found = _lattice_inside(s, n, reach, win)
            if found is None:
                break
            lattices[f"{i},{j}"] = found
        net = len(lattices) == len(sets)
        classes.append(GluingClass(n=n, gap=f, window=win, blocks=len(patterns), block_gluing=block,
                                   net_gluing=net, block_transitive=bool(common), net_periods=lattices))
        logger.info(f"classify_gluing {sft.name} n={n} f={f}: block={block} net={net} transitive={bool(common)}")
    return GluingClassReport(sft=sft.name, margin=margin, classes=classes)


def _ceil_log(value: int, base: int) -> int:
    l, power = 0, 1
    while power < value:
        power *= base
        l += 1
    return l


def power_sequence_gaps(sft: SftDefinition, c: int, m: int, l_max: int, margin: int = 1,
                        extra: int = 2) -> PowerSequenceGaps:
    """Measure gaps at c^l + m only and extend them to every n <= c^l_max + m"""
    if c < 2:
        raise ValueError("c must be at least 2")
    sampled: Dict[int, Optional[int]] = {}
    for l in range(l_max + 1):
        size = c ** l + m
        sampled[size] = gap_estimate(sft, size, 2 * size + extra, margin, fit=False).min_uniform_gap
    derived: Dict[int, Optional[int]] = {}
    for n in range(1, c ** l_max + m + 1):
        l = _ceil_log(n - m, c) if n > m else 0
        size = c ** l + m
        f = sampled.get(size)
        derived[n] = None if f is None else f + size - n
    return PowerSequenceGaps(sft=sft.name, c=c, m=m, sampled=sampled, derived=derived)
