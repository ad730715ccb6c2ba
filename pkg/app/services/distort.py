"""
Operators on SFT definitions: curve distortion (with optional counter and
color layers) and rotation by a quarter turn.

A distorted SFT superimposes the curve layer on a second layer whose
symbols sit on curve cells; read along the curves, the second layer must be
a configuration of the base SFT. Its forbidden set is computed by lifting
each base pattern through every local curve geometry it could be drawn on.
"""

import itertools
import logging
import math
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from app.config import settings
from app.schemas.delta import CurveDecomposition, DistortedSft
from app.schemas.pattern import Cell, Derivation, ForbiddenPattern, Pattern, SftDefinition
from app.services.builtin_sfts import DOWN, RIGHT
from app.services.delta import BLANK_X, SEP, curves, delta_layer, split_symbol
from app.utils.error_handler import DefinitionError, NotAdmissible, RZero

logger = logging.getLogger(__name__)

# Cell -> y of each curve per column, plus the ↓ cells that pin the geometry
Geometry = Tuple[List[List[int]], List[Cell]]


def curve_geometries(height: int, width: int) -> List[Geometry]:
    """Every way `height` contiguous curves can cross `width` columns.

    Returns, per geometry, y[j][i] for curve j at column i (curve 0 starts
    at y = 0) and the ↓ cells between or above the curves.
    """
    out: List[Geometry] = []
    for gaps0 in itertools.product((0, 1), repeat=height - 1):
        for flat in itertools.product((0, 1), repeat=height * (width - 1)):
            shifts = [flat[j * (width - 1):(j + 1) * (width - 1)] for j in range(height)]
            geometry = _build_geometry(list(gaps0), shifts, height, width)
            if geometry is not None:
                out.append(geometry)
    return out


def _build_geometry(gaps0: List[int], shifts: Sequence[Sequence[int]], height: int, width: int) -> Optional[Geometry]:
    gaps = [gaps0]
    for i in range(width - 1):
        prev = gaps[-1]
        nxt = [prev[j] - shifts[j + 1][i] + shifts[j][i] for j in range(height - 1)]
        if any(g not in (0, 1) for g in nxt):
            return None
        for j in range(height):
            if not shifts[j][i]:
                continue
            if j < height - 1 and nxt[j] != 1:
                return None
            if j > 0 and prev[j - 1] != 1:
                return None
        gaps.append(nxt)

    ys = [[0] * width for _ in range(height)]
    for i in range(width):
        if i > 0:
            ys[0][i] = ys[0][i - 1] - shifts[0][i - 1]
        for j in range(1, height):
            ys[j][i] = ys[j - 1][i] + 1 + gaps[i][j - 1]
    downs = []
    for i in range(width):
        for j in range(height - 1):
            if gaps[i][j]:
                downs.append((i, ys[j][i] + 1))
    for i in range(width - 1):
        if shifts[height - 1][i]:
            downs.append((i + 1, ys[height - 1][i]))
    return ys, downs


def _right(symbols: Iterable[str], counters: Optional[int]) -> FrozenSet[str]:
    if counters is None:
        return frozenset(f"{a}{SEP}{RIGHT}" for a in symbols)
    return frozenset(f"{a}{SEP}{RIGHT}{SEP}{c}{SEP}{col}"
                     for a in symbols for c in range(counters) for col in (0, 1))


def _right_with(base: Sequence[str], counters: int, counter: Optional[Set[int]] = None,
                color: Optional[Set[int]] = None) -> FrozenSet[str]:
    return frozenset(f"{a}{SEP}{RIGHT}{SEP}{c}{SEP}{col}"
                     for a in base for c in range(counters) for col in (0, 1)
                     if (counter is None or c in counter) and (color is None or col in color))


def _blank(counters: Optional[int]) -> str:
    if counters is None:
        return f"{BLANK_X}{SEP}{DOWN}"
    return f"{BLANK_X}{SEP}{DOWN}{SEP}{BLANK_X}{SEP}{BLANK_X}"


def _alphabet(base: Sequence[str], counters: Optional[int]) -> List[str]:
    if counters is None:
        return [f"{a}{SEP}{RIGHT}" for a in base] + [_blank(None)]
    symbols = [f"{a}{SEP}{RIGHT}{SEP}{c}{SEP}{col}" for a in base for c in range(counters) for col in (0, 1)]
    return symbols + [_blank(counters)]


def _key(cells: Dict[Cell, FrozenSet[str]]) -> FrozenSet:
    x0 = min(c[0] for c in cells)
    y0 = min(c[1] for c in cells)
    return frozenset(((x - x0, y - y0), s) for (x, y), s in cells.items())


class _ForbiddenSet:
    """Forbidden patterns with duplicates (up to translation) dropped"""

    def __init__(self):
        self.patterns: List[ForbiddenPattern] = []
        self._seen: Set[FrozenSet] = set()

    def add(self, cells: Dict[Cell, FrozenSet[str]], label: str) -> bool:
        if any(not s for s in cells.values()):
            return False
        key = _key(cells)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.patterns.append(ForbiddenPattern(cells=cells, label=label))
        return True


def _delta_rules(out: _ForbiddenSet, base: Sequence[str], counters: Optional[int]) -> None:
    blank = frozenset([_blank(counters)])
    right = _right(base, counters)
    out.add({(0, 0): blank, (0, 1): blank}, "stacked ↓")
    out.add({(0, 1): right, (1, 1): blank, (0, 0): right, (1, 0): right}, "merge")


def _lift(out: _ForbiddenSet, sft: SftDefinition, counters: Optional[int]) -> Tuple[int, Dict[str, int]]:
    blank = frozenset([_blank(counters)])
    any_right = _right(sft.alphabet, counters)
    cache: Dict[Tuple[int, int], List[Geometry]] = {}
    lifted = 0
    used: Dict[str, int] = {}
    for fp in sft.forbidden:
        w, h = fp.size
        if (h, w) not in cache:
            cache[(h, w)] = curve_geometries(h, w)
            logger.debug(f"{len(cache[(h, w)])} curve geometries for {h} curves over {w} columns")
        geometries = cache[(h, w)]
        used[f"{h}x{w}"] = len(geometries)
        for ys, downs in geometries:
            cells: Dict[Cell, FrozenSet[str]] = {}
            for j in range(h):
                for i in range(w):
                    allowed = fp.cells.get((i, j))
                    cells[(i, ys[j][i])] = _right(allowed, counters) if allowed is not None else any_right
            for c in downs:
                cells[c] = blank
            if out.add(cells, fp.label or "lifted"):
                lifted += 1
    return lifted, used


def _counter_rules(out: _ForbiddenSet, base: Sequence[str], r: int) -> None:
    blank = frozenset([_blank(r)])
    for c in range(r):
        succ = (c + 1) % r
        wrong = set(range(r)) - {succ}
        out.add({(0, 0): _right_with(base, r, {c}), (1, 0): _right_with(base, r, wrong)}, "counter step")
        if c != r - 1:
            out.add({(0, 0): _right_with(base, r, {c}), (1, 0): blank}, "shift off the last counter")
    out.add({(0, 1): _right_with(base, r, {r - 1}), (1, 1): blank, (1, 0): _right_with(base, r, set(range(1, r)))},
            "counter after a shift")


def _color_rules(out: _ForbiddenSet, base: Sequence[str], r: int, radius: int) -> None:
    blank = frozenset([_blank(r)])
    for c in range(r - 1):
        out.add({(0, 0): _right_with(base, r, {c}, {0}), (1, 0): _right_with(base, r, {c + 1}, {1})},
                "1 after 0 in a segment")
    start = _right_with(base, r, {0}, {1})
    for i in range(r):
        for d in range(1, radius + 1):
            for dy in (d, -d):
                out.add({(0, 0): start, (i, dy): blank}, "isolated segment not 0^r")


def _check_base(sft: SftDefinition) -> None:
    bad = [a for a in sft.alphabet if BLANK_X in a.split(SEP)]
    if bad:
        raise DefinitionError(f"Base symbol {bad[0]!r} collides with the blank symbol {BLANK_X!r}")


def _derivation(sft: SftDefinition, token: str, bounds: Dict) -> Derivation:
    if sft.derivation is not None:
        merged = dict(sft.derivation.bounds)
        merged.update(bounds)
        return Derivation(base=sft.derivation.base, chain=sft.derivation.chain + [token], bounds=merged)
    return Derivation(base=sft.name, chain=[token], bounds=bounds)


def distort_sft(sft: SftDefinition) -> DistortedSft:
    """Base configurations drawn along the curves of the curve layer"""
    _check_base(sft)
    out = _ForbiddenSet()
    _delta_rules(out, sft.alphabet, None)
    lifted, used = _lift(out, sft, None)
    derived = SftDefinition(
        name=f"d({sft.name})",
        alphabet=_alphabet(sft.alphabet, None),
        forbidden=out.patterns,
        derivation=_derivation(sft, "d", {"geometries": used}),
    )
    logger.info(f"Distorted {sft.name}: {len(derived.alphabet)} symbols, {len(out.patterns)} forbidden "
                f"({lifted} lifted)")
    return DistortedSft(base=sft.name, derived=derived, lifted=lifted, geometries=used)


def distort_sft_r(sft: SftDefinition, r: int) -> DistortedSft:
    """Distortion with a counter mod r along the curves and a color word per length-r segment.

    Curves shift down only after counter r-1; every complete segment
    carries a color word 1^k 0^(r-k), and 0^r unless surrounded by curves.
    """
    if r < 1:
        raise RZero(f"r must be at least 1, got {r}", details={"r": r})
    _check_base(sft)
    radius = settings.isolation_radius
    out = _ForbiddenSet()
    _delta_rules(out, sft.alphabet, r)
    lifted, used = _lift(out, sft, r)
    _counter_rules(out, sft.alphabet, r)
    _color_rules(out, sft.alphabet, r, radius)
    bounds = {
        "geometries": used,
        "isolation_radius": radius,
        "entropy_increment": math.log2(1 + r) / r,
    }
    derived = SftDefinition(
        name=f"d{r}({sft.name})",
        alphabet=_alphabet(sft.alphabet, r),
        forbidden=out.patterns,
        derivation=_derivation(sft, f"d_r:{r}", bounds),
    )
    logger.info(f"Distorted {sft.name} with r={r}: {len(derived.alphabet)} symbols, "
                f"{len(out.patterns)} forbidden ({lifted} lifted)")
    return DistortedSft(base=sft.name, counter_r=r, colors=True, derived=derived, lifted=lifted, geometries=used)


def rotate_sft(sft: SftDefinition) -> SftDefinition:
    """Quarter turn counterclockwise: (a, b) -> (-b, a)"""
    forbidden = [ForbiddenPattern(cells={(-y, x): s for (x, y), s in fp.cells.items()}, label=fp.label)
                 for fp in sft.forbidden]
    return SftDefinition(name=f"rho({sft.name})", alphabet=list(sft.alphabet), forbidden=forbidden,
                         derivation=_derivation(sft, "rho", {}))


def apply_chain(sft: SftDefinition, chain: Sequence[str]) -> SftDefinition:
    """Apply operators left to right: "d", "d_r:<r>" or "rho" """
    current = sft
    for token in chain:
        if token == "d":
            current = distort_sft(current).derived
        elif token.startswith("d_r:"):
            try:
                r = int(token.split(":", 1)[1])
            except ValueError as e:
                raise DefinitionError(f"Bad operator {token!r}", original_error=e)
            current = distort_sft_r(current, r).derived
        elif token == "rho":
            current = rotate_sft(current)
        else:
            raise DefinitionError(f"Unknown operator {token!r}", details={"known": ["d", "d_r:<r>", "rho"]})
    return current


def decompose_layers(window: Pattern, r: int) -> CurveDecomposition:
    """Curves of a counter-layer window with their counters and segment color words"""
    w = window.normalized()
    dec = curves(delta_layer(w, counters=True))
    counter_of: Dict[Cell, int] = {}
    colors: Dict[int, List[str]] = {}
    for curve in dec.curves:
        words = []
        run: List[str] = []
        for cell in curve.cells:
            _, _, c, col = split_symbol(w.cells[cell], counters=True)
            try:
                value = int(c)
            except (TypeError, ValueError):
                raise NotAdmissible(f"Curve cell {cell} carries no counter", details={"cell": list(cell)})
            counter_of[cell] = value
            if value == 0:
                run = []
            if run is not None and len(run) == value:
                run.append(col)
                if value == r - 1:
                    words.append("".join(run))
                    run = []
            else:
                run = None
        colors[curve.id] = words
    return dec.model_copy(update={"counters": counter_of, "colors": colors})
