"""
Aligned Robinson subshift: tile model, rule set and supertile generation.

Supertile of order n has side 2^(n+1) - 1. In cell (x, y) let kx and ky be
the 2-adic valuations of x + 1 and y + 1. kx == ky gives a corner of level
kx, kx > ky a cell on the vertical line of a level-kx corner, ky > kx a cell
on a horizontal line. Every symbol below is produced by cell_symbol and
parsed back by parse_tile; the rule set is derived from the same edge
signatures, so generated supertiles satisfy it by construction.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Tuple

from app.config import settings
from app.schemas.pattern import Pattern, SftDefinition, Violation
from app.schemas.robinson import ORIENTATIONS
from app.services.cache_service import cached_result
from app.services.sft_core import check_pattern, forbid
from app.utils.error_handler import OrderTooLarge

logger = logging.getLogger(__name__)

SIDES = ("N", "E", "S", "W")
OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
ALLOWED_MARKS = {"E": ("ne", "se"), "W": ("nw", "sw"), "N": ("ne", "nw"), "S": ("se", "sw")}


@dataclass(frozen=True)
class RobinsonTile:
    """Parsed Robinson symbol"""
    kind: str                       # C, A3, A4, A5, A6
    color: Optional[str] = None     # corners only
    label: Optional[str] = None
    value: int = 0
    direction: Optional[str] = None  # long line direction of arrow tiles
    rail: Optional[str] = None      # second rail of a double long line
    lrail: Optional[str] = None     # second rail of double laterals
    i: int = 0
    j: int = 0
    mark: Optional[str] = None

    @property
    def is_corner(self) -> bool:
        return self.kind == "C"

    @property
    def is_blue(self) -> bool:
        return self.kind == "C" and self.color == "blue"

    @property
    def single_long(self) -> bool:
        return self.kind in ("A3", "A5")

    @property
    def vertical(self) -> bool:
        return self.direction in ("N", "S")

    def horizontal_double(self) -> bool:
        """A double line crosses this cell horizontally"""
        if self.kind == "C" or self.direction is None:
            return False
        return self.rail is not None if not self.vertical else self.lrail is not None

    def vertical_double(self) -> bool:
        if self.kind == "C" or self.direction is None:
            return False
        return self.rail is not None if self.vertical else self.lrail is not None

    def symbol(self) -> str:
        if self.kind == "C":
            return f"C:{self.color}:{self.label}:{self.value}"
        parts = [self.kind, self.direction]
        if self.rail:
            parts.append(f"r={self.rail}")
        if self.lrail:
            parts.append(f"l={self.lrail}")
        parts += [f"i={self.i}", f"j={self.j}"]
        text = ":".join(parts)
        if self.mark:
            text += f"@{self.mark}"
        return text


@lru_cache(maxsize=None)
def parse_tile(symbol: str) -> RobinsonTile:
    if symbol.startswith("C:"):
        _, color, label, value = symbol.split(":")
        v = int(value)
        return RobinsonTile(kind="C", color=color, label=label, value=v, i=v, j=v)
    mark = None
    if "@" in symbol:
        symbol, mark = symbol.split("@")
    parts = symbol.split(":")
    fields = dict(p.split("=") for p in parts[2:])
    return RobinsonTile(kind=parts[0], direction=parts[1], rail=fields.get("r"), lrail=fields.get("l"),
                        i=int(fields["i"]), j=int(fields["j"]), mark=mark)


def is_robinson_symbol(symbol: str) -> bool:
    return symbol.startswith("C:") or symbol[:2] in ("A3", "A4", "A5", "A6")


# ---- geometry -----------------------------------------------------------

def v2(m: int) -> int:
    return (m & -m).bit_length() - 1


def opening(label: str) -> Tuple[int, int]:
    """Direction the corner opens towards, as (ox, oy)"""
    ox = -1 if label.endswith("e") else 1
    oy = -1 if label.startswith("n") else 1
    return ox, oy


def level_label(k: int, x: int, y: int, n: int, orientation: str) -> str:
    """Label of the level-k corner whose block holds (x, y)"""
    if k == n:
        return orientation
    ns = "n" if (y >> (k + 1)) & 1 else "s"
    ew = "e" if (x >> (k + 1)) & 1 else "w"
    return ns + ew


def _x_side(offset: int) -> str:
    return "e" if offset > 0 else "w"


def _y_side(offset: int) -> str:
    return "n" if offset > 0 else "s"


def cell_tile(n: int, orientation: str, x: int, y: int) -> RobinsonTile:
    """Tile at (x, y) of the order-n supertile with the given orientation"""
    kx, ky = v2(x + 1), v2(y + 1)
    if kx == ky:
        label = level_label(kx, x, y, n, orientation)
        return RobinsonTile(kind="C", color="blue" if kx == 0 else "red", label=label,
                            value=kx & 1, i=kx & 1, j=kx & 1)
    if kx > ky:
        big, small = kx, ky
        label = level_label(big, x, y, n, orientation)
        ox, oy = opening(label)
        centre = ((y >> (big + 1)) << (big + 1)) + (1 << big) - 1
        direction = "N" if y > centre else "S"
        double = (1 if direction == "N" else -1) == oy
        rail = _x_side(-ox) if double else None
        lrail = None
        if big == small + 1:
            lrail = _y_side(-opening(level_label(small, x - 1, y, n, orientation))[1])
    else:
        big, small = ky, kx
        label = level_label(big, x, y, n, orientation)
        ox, oy = opening(label)
        centre = ((x >> (big + 1)) << (big + 1)) + (1 << big) - 1
        direction = "E" if x > centre else "W"
        double = (1 if direction == "E" else -1) == ox
        rail = _y_side(-oy) if double else None
        lrail = None
        if big == small + 1:
            lrail = _x_side(-opening(level_label(small, x, y - 1, n, orientation))[0])
    kind = {(False, False): "A3", (True, False): "A4", (False, True): "A5", (True, True): "A6"}[
        (rail is not None, lrail is not None)]
    return RobinsonTile(kind=kind, direction=direction, rail=rail, lrail=lrail, i=kx & 1, j=ky & 1,
                        mark=None if double else label)


def cell_symbol(n: int, orientation: str, x: int, y: int) -> str:
    return cell_tile(n, orientation, x, y).symbol()


# ---- edge signatures ----------------------------------------------------

Signature = FrozenSet[Tuple[int, str]]


def _offsets(rail: Optional[str]) -> List[int]:
    if rail is None:
        return [0]
    return [0, 1 if rail in ("e", "n") else -1]


@lru_cache(maxsize=None)
def edge_signatures(symbol: str) -> Dict[str, Signature]:
    """Per side: set of (offset along the side, flow) for every rail crossing it"""
    t = parse_tile(symbol)
    sig: Dict[str, set] = {s: set() for s in SIDES}
    if t.is_corner:
        ox, oy = opening(t.label)
        arms = {
            "N": (oy == 1, _x_side(-ox)),
            "S": (oy == -1, _x_side(-ox)),
            "E": (ox == 1, _y_side(-oy)),
            "W": (ox == -1, _y_side(-oy)),
        }
        for side, (double, rail) in arms.items():
            for off in _offsets(rail if double else None):
                sig[side].add((off, "out"))
    else:
        for off in _offsets(t.rail):
            sig[t.direction].add((off, "out"))
            sig[OPPOSITE[t.direction]].add((off, "in"))
        lateral_sides = ("E", "W") if t.vertical else ("N", "S")
        for side in lateral_sides:
            for off in _offsets(t.lrail):
                sig[side].add((off, "in"))
    return {s: frozenset(v) for s, v in sig.items()}


def _flip(sig: Signature) -> Signature:
    return frozenset((off, "in" if flow == "out" else "out") for off, flow in sig)


def edges_match(left_or_below: str, right_or_above: str, axis: str) -> bool:
    """Rule 1 plus the counter rule for a pair of neighbors"""
    a, b = parse_tile(left_or_below), parse_tile(right_or_above)
    if axis == "h":
        if a.j != b.j:
            return False
        return edge_signatures(left_or_below)["E"] == _flip(edge_signatures(right_or_above)["W"])
    if a.i != b.i:
        return False
    return edge_signatures(left_or_below)["N"] == _flip(edge_signatures(right_or_above)["S"])


# ---- alphabet and rule set ----------------------------------------------

@lru_cache(maxsize=1)
def robinson_alphabet() -> Tuple[str, ...]:
    symbols: List[str] = []
    for label in ORIENTATIONS:
        symbols.append(RobinsonTile(kind="C", color="blue", label=label, value=0).symbol())
        for value in (0, 1):
            symbols.append(RobinsonTile(kind="C", color="red", label=label, value=value, i=value, j=value).symbol())
    for direction in ("N", "S", "E", "W"):
        vertical = direction in ("N", "S")
        rails = ("e", "w") if vertical else ("n", "s")
        lrails = ("n", "s") if vertical else ("e", "w")
        for rail in (None,) + rails:
            for lrail in (None,) + lrails:
                kind = {(False, False): "A3", (True, False): "A4", (False, True): "A5", (True, True): "A6"}[
                    (rail is not None, lrail is not None)]
                for i in (0, 1):
                    for j in (0, 1):
                        if lrail is not None and i == j:
                            continue
                        marks = ALLOWED_MARKS[direction] if rail is None else (None,)
                        for mark in marks:
                            symbols.append(RobinsonTile(kind=kind, direction=direction, rail=rail, lrail=lrail,
                                                        i=i, j=j, mark=mark).symbol())
    return tuple(symbols)


def _grouped_pairs(alphabet, offset, incompatible, label):
    """One set-valued pattern per group of symbols sharing an incompatible set"""
    groups: Dict[FrozenSet[str], List[str]] = {}
    for a in alphabet:
        bad = frozenset(b for b in alphabet if incompatible(a, b))
        if bad:
            groups.setdefault(bad, []).append(a)
    out = []
    for bad, firsts in sorted(groups.items(), key=lambda kv: kv[1][0]):
        out.append(forbid({(0, 0): firsts, offset: sorted(bad)}, label=label))
    return out


@cached_result("robinson_sft", key_func=lambda: {"name": "robinson_adr"})
def robinson_sft() -> SftDefinition:
    """The aligned Robinson rule set as a rank-3 SFT"""
    alphabet = list(robinson_alphabet())
    tiles = {s: parse_tile(s) for s in alphabet}
    blue = [s for s in alphabet if tiles[s].is_blue]
    non_blue = [s for s in alphabet if not tiles[s].is_blue]
    forbidden = []
    forbidden += _grouped_pairs(alphabet, (1, 0), lambda a, b: not edges_match(a, b, "h"), "edges east")
    forbidden += _grouped_pairs(alphabet, (0, 1), lambda a, b: not edges_match(a, b, "v"), "edges north")

    forbidden.append(forbid({(0, 0): non_blue, (1, 0): non_blue, (0, 1): non_blue, (1, 1): non_blue},
                            label="blue in every 2x2"))
    for offset in ((2, 0), (0, 2)):
        forbidden.append(forbid({(0, 0): blue, offset: non_blue}, label="blue lattice"))
        forbidden.append(forbid({(0, 0): non_blue, offset: blue}, label="blue lattice"))

    singles = {d: [s for s in alphabet if tiles[s].direction == d and tiles[s].single_long] for d in "NSEW"}
    corners_by_label = {lab: [s for s in alphabet if tiles[s].is_corner and tiles[s].label == lab]
                        for lab in ORIENTATIONS}
    behind = {"N": (0, 1), "E": (1, 0)}
    for lab in ORIENTATIONS:
        # induction: the first single cell of an arm carries the corner's label
        for d, (dx, dy) in (("N", (0, 1)), ("E", (1, 0))):
            wrong = [s for s in singles[d] if tiles[s].mark != lab]
            if wrong:
                forbidden.append(forbid({(0, 0): corners_by_label[lab], (dx, dy): wrong}, label="induction"))
        for d, (dx, dy) in (("S", (0, 1)), ("W", (1, 0))):
            wrong = [s for s in singles[d] if tiles[s].mark != lab]
            if wrong:
                forbidden.append(forbid({(dx, dy): corners_by_label[lab], (0, 0): wrong}, label="induction"))
    for d in "NSEW":
        step = behind["N"] if d in ("N", "S") else behind["E"]
        for mark in ALLOWED_MARKS[d]:
            with_mark = [s for s in singles[d] if tiles[s].mark == mark]
            other = [s for s in singles[d] if tiles[s].mark != mark]
            if d in ("N", "E"):
                forbidden.append(forbid({(0, 0): with_mark, step: other}, label="transmission"))
            else:
                forbidden.append(forbid({step: with_mark, (0, 0): other}, label="transmission"))

    sync_h = {("ne", "nw"), ("se", "sw")}
    for a in ALLOWED_MARKS["E"]:
        for c in ALLOWED_MARKS["W"]:
            if (a, c) not in sync_h:
                forbidden.append(forbid({(0, 0): [s for s in singles["E"] if tiles[s].mark == a],
                                         (2, 0): [s for s in singles["W"] if tiles[s].mark == c]},
                                        label="synchronization"))
    sync_v = {("ne", "se"), ("nw", "sw")}
    for a in ALLOWED_MARKS["N"]:
        for c in ALLOWED_MARKS["S"]:
            if (a, c) not in sync_v:
                forbidden.append(forbid({(0, 0): [s for s in singles["N"] if tiles[s].mark == a],
                                         (0, 2): [s for s in singles["S"] if tiles[s].mark == c]},
                                        label="synchronization"))
    sft = SftDefinition(name="robinson_adr", alphabet=alphabet, forbidden=forbidden)
    logger.info(f"Built robinson_adr: {len(alphabet)} symbols, {len(forbidden)} forbidden patterns")
    return sft


# ---- supertiles ---------------------------------------------------------

def supertile_side(n: int) -> int:
    return (1 << (n + 1)) - 1


def _check_order(n: int) -> None:
    if n < 0:
        raise ValueError("Supertile order must be non-negative")
    if n > settings.supertile_cap:
        raise OrderTooLarge(f"Supertile order {n} exceeds the cap {settings.supertile_cap}",
                            details={"order": n, "cap": settings.supertile_cap})


@cached_result("supertile", key_func=lambda n, orientation: {"n": n, "o": orientation})
def _supertile_cells(n: int, orientation: str) -> Dict[Tuple[int, int], str]:
    if n == 0:
        return {(0, 0): cell_symbol(0, orientation, 0, 0)}
    half = 1 << n
    cells: Dict[Tuple[int, int], str] = {}
    quadrants = {"sw": (0, 0), "se": (half, 0), "nw": (0, half), "ne": (half, half)}
    for label, (qx, qy) in quadrants.items():
        for (x, y), s in _supertile_cells(n - 1, label).items():
            cells[(qx + x, qy + y)] = s
    side = supertile_side(n)
    cross = half - 1
    for t in range(side):
        cells[(cross, t)] = cell_symbol(n, orientation, cross, t)
        cells[(t, cross)] = cell_symbol(n, orientation, t, cross)
    return cells


def supertile(n: int, orientation: str, copy: bool = True) -> Pattern:
    """Order-n supertile on [0, 2^(n+1) - 1)^2; copy=False shares the cached cells (read only)"""
    if orientation not in ORIENTATIONS:
        raise ValueError(f"Orientation must be one of {ORIENTATIONS}")
    _check_order(n)
    cells = _supertile_cells(n, orientation)
    return Pattern.of(dict(cells) if copy else cells)


def verify_rules(pattern: Pattern) -> List[Violation]:
    """Violations of the aligned Robinson rules in a window"""
    return check_pattern(robinson_sft(), pattern)


def tiles_of(pattern: Pattern) -> Dict[Tuple[int, int], RobinsonTile]:
    return {c: parse_tile(s) for c, s in pattern.cells.items()}
