"""
Core SFT kernel: rule compilation, pattern checking and a backtracking solver.

Every search in the toolkit (block enumeration, extension, strip rows, tori,
gluing certificates) runs through CompiledSft.solutions, an iterative
depth-first search over cells in row-major order (y, then x) that branches
on symbols in alphabet order and forward-checks two-cell rules.
"""

import logging
import math
import random
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.schemas.pattern import Cell, ForbiddenPattern, Pattern, SftDefinition, TransferCount, Violation
from app.services.cache_service import cache_key_from_params, memory_cache
from app.utils.error_handler import NotAdmissible, UnknownSymbol, WidthTooSmall

logger = logging.getLogger(__name__)

Wrap = Optional[Tuple[Optional[int], Optional[int]]]


def _bits(mask: int) -> List[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class CompiledSft:
    """Integer form of an SFT: symbols interned, cell sets as bitmasks"""

    def __init__(self, sft: SftDefinition):
        self.sft = sft
        self.symbols: List[str] = list(sft.alphabet)
        self.index: Dict[str, int] = {s: i for i, s in enumerate(self.symbols)}
        self.n = len(self.symbols)
        self.full = (1 << self.n) - 1
        self.unary = 0
        self.unary_index: Dict[int, int] = {}
        # pair[v][a]: symbols forbidden at offset v from a cell holding a
        self.pair: Dict[Cell, List[int]] = {}
        self.pair_index: Dict[Tuple[Cell, int, int], int] = {}
        # general[a]: (pattern index, offset of the a-cell inside the pattern, cells)
        self.general: List[List[Tuple[int, Cell, List[Tuple[Cell, int]]]]] = [[] for _ in range(self.n)]
        self.general_patterns: List[Tuple[int, List[Tuple[Cell, int]]]] = []
        self.masked: List[List[Tuple[Cell, int]]] = []
        for idx, fp in enumerate(sft.forbidden):
            cells = [(c, self.mask(s)) for c, s in sorted(fp.cells.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
            self.masked.append(cells)
            if len(cells) == 1:
                self.unary |= cells[0][1]
                for a in _bits(cells[0][1]):
                    self.unary_index.setdefault(a, idx)
            elif len(cells) == 2:
                (c1, m1), (c2, m2) = cells
                self._add_pair((c2[0] - c1[0], c2[1] - c1[1]), m1, m2, idx)
            else:
                self.general_patterns.append((idx, cells))
                for c, m in cells:
                    for a in _bits(m):
                        self.general[a].append((idx, c, cells))
        self.offsets: List[Cell] = sorted(self.pair, key=lambda v: (v[1], v[0]))

    def _add_pair(self, v: Cell, m1: int, m2: int, idx: int) -> None:
        neg = (-v[0], -v[1])
        fwd = self.pair.setdefault(v, [0] * self.n)
        back = self.pair.setdefault(neg, [0] * self.n)
        for a in _bits(m1):
            fwd[a] |= m2
            for b in _bits(m2):
                self.pair_index.setdefault((v, a, b), idx)
                self.pair_index.setdefault((neg, b, a), idx)
        for b in _bits(m2):
            back[b] |= m1

    def mask(self, symbols) -> int:
        m = 0
        for s in symbols:
            if s not in self.index:
                raise UnknownSymbol(f"Unknown symbol {s!r} for {self.sft.name}", details={"symbol": s})
            m |= 1 << self.index[s]
        return m

    def encode(self, pattern: Pattern) -> Dict[Cell, int]:
        out = {}
        for c, s in pattern.cells.items():
            i = self.index.get(s)
            if i is None:
                raise UnknownSymbol(f"Unknown symbol {s!r} for {self.sft.name}", details={"symbol": s, "cell": list(c)})
            out[c] = i
        return out

    def decode(self, assignment: Dict[Cell, int]) -> Pattern:
        return Pattern.of({c: self.symbols[a] for c, a in assignment.items()})

    # ---- checking -------------------------------------------------------

    def violations(self, assign: Dict[Cell, int], wrap: Wrap = None, first_only: bool = False) -> List[Violation]:
        """All placements of forbidden patterns inside an encoded window"""
        norm = _normalizer(wrap)
        found = set()
        for fp_idx, masks in enumerate(self.masked):
            o0, m0 = masks[0]
            for c, a in assign.items():
                if not (m0 >> a) & 1:
                    continue
                anchor = (c[0] - o0[0], c[1] - o0[1])
                ok = True
                for (dx, dy), m in masks:
                    b = assign.get(norm((anchor[0] + dx, anchor[1] + dy)))
                    if b is None or not (m >> b) & 1:
                        ok = False
                        break
                if ok:
                    if wrap is not None:
                        anchor = norm(anchor)
                    found.add((anchor, fp_idx))
                    if first_only:
                        return [Violation(anchor=anchor, pattern_index=fp_idx)]
        return [Violation(anchor=a, pattern_index=i) for a, i in sorted(found)]

    def is_admissible(self, assign: Dict[Cell, int], wrap: Wrap = None) -> bool:
        return not self.violations(assign, wrap=wrap, first_only=True)

    # ---- search ---------------------------------------------------------

    def solutions(self, region: Sequence[Cell], fixed: Optional[Dict[Cell, int]] = None, wrap: Wrap = None,
                  domains: Optional[Dict[Cell, int]] = None, rng: Optional[random.Random] = None,
                  limit: Optional[int] = None) -> Iterator[Dict[Cell, int]]:
        """Yield every admissible assignment of region extending fixed.

        The yielded dict is reused between solutions; copy it to keep it.
        Cells outside region and fixed stay empty, so only forbidden
        patterns fully inside the assigned cells are excluded.
        """
        norm = _normalizer(wrap)
        assign: Dict[Cell, int] = {norm(c): a for c, a in (fixed or {}).items()}
        if not self.is_admissible(assign, wrap=wrap):
            return
        order: List[Cell] = []
        seen = set(assign)
        for c in sorted((norm(c) for c in region), key=lambda c: (c[1], c[0])):
            if c not in seen:
                seen.add(c)
                order.append(c)
        nvars = len(order)
        if nvars == 0:
            yield assign
            return
        var_of = {c: i for i, c in enumerate(order)}
        dom = []
        for c in order:
            m = self.full & ~self.unary
            if domains is not None and c in domains:
                m &= domains[c]
            dom.append(m)

        # neighbor table: per variable, (offset, target var index or -1, target cell)
        neigh: List[List[Tuple[Cell, int, Cell]]] = []
        for c in order:
            row = []
            for v in self.offsets:
                t = norm((c[0] + v[0], c[1] + v[1]))
                row.append((v, var_of.get(t, -1), t))
            neigh.append(row)

        # prune by fixed context
        for c, a in assign.items():
            for v in self.offsets:
                forb = self.pair[v][a]
                if not forb:
                    continue
                j = var_of.get(norm((c[0] + v[0], c[1] + v[1])))
                if j is not None:
                    dom[j] &= ~forb
        if any(m == 0 for m in dom):
            return

        trail: List[Tuple[int, int]] = []
        pair = self.pair
        general = self.general

        def candidates(i: int) -> List[int]:
            cands = _bits(dom[i])
            if rng is not None:
                rng.shuffle(cands)
            return cands

        def place(i: int, a: int) -> bool:
            c = order[i]
            for v, j, t in neigh[i]:
                forb = pair[v][a]
                if not forb:
                    continue
                if t == c:
                    if (forb >> a) & 1:
                        return False
                    continue
                b = assign.get(t)
                if b is not None:
                    if (forb >> b) & 1:
                        return False
                elif j >= 0:
                    m = dom[j]
                    nm = m & ~forb
                    if nm != m:
                        trail.append((j, m))
                        dom[j] = nm
                        if nm == 0:
                            return False
            for _, (ox, oy), cells in general[a]:
                ax, ay = c[0] - ox, c[1] - oy
                hit = True
                for (dx, dy), m in cells:
                    b = assign.get(norm((ax + dx, ay + dy)))
                    if b is None or not (m >> b) & 1:
                        hit = False
                        break
                if hit:
                    return False
            return True

        produced = 0
        stack: List[List] = [[0, candidates(0), 0, len(trail)]]
        while stack:
            frame = stack[-1]
            i, cands, pos, mark = frame
            c = order[i]
            while len(trail) > mark:
                j, m = trail.pop()
                dom[j] = m
            assign.pop(c, None)
            if pos >= len(cands):
                stack.pop()
                continue
            frame[2] = pos + 1
            a = cands[pos]
            assign[c] = a
            if not place(i, a):
                continue
            if i + 1 == nvars:
                yield assign
                produced += 1
                if limit is not None and produced >= limit:
                    return
                continue
            stack.append([i + 1, candidates(i + 1), 0, len(trail)])

    def first_solution(self, region: Sequence[Cell], fixed: Optional[Dict[Cell, int]] = None, wrap: Wrap = None,
                       domains: Optional[Dict[Cell, int]] = None,
                       rng: Optional[random.Random] = None) -> Optional[Dict[Cell, int]]:
        for sol in self.solutions(region, fixed=fixed, wrap=wrap, domains=domains, rng=rng, limit=1):
            return dict(sol)
        return None

    def count_solutions(self, region: Sequence[Cell], fixed: Optional[Dict[Cell, int]] = None, wrap: Wrap = None,
                        domains: Optional[Dict[Cell, int]] = None) -> int:
        total = 0
        for _ in self.solutions(region, fixed=fixed, wrap=wrap, domains=domains):
            total += 1
        return total


def _normalizer(wrap: Wrap):
    if wrap is None:
        return lambda c: c
    w, h = wrap
    if w and h:
        return lambda c: (c[0] % w, c[1] % h)
    if w:
        return lambda c: (c[0] % w, c[1])
    return lambda c: (c[0], c[1] % h)


def compile_sft(sft: SftDefinition) -> CompiledSft:
    """Compiled form, memoized on the full definition"""
    key = "compiled:" + cache_key_from_params(sft=sft.to_json_dict())
    compiled = memory_cache.get(key)
    if compiled is None:
        compiled = CompiledSft(sft)
        memory_cache.set(key, compiled)
        logger.debug(f"Compiled {sft.name}: {compiled.n} symbols, {len(compiled.offsets)} pair offsets, "
                     f"{len(compiled.general_patterns)} general patterns")
    return compiled


def rect(width: int, height: int, x0: int = 0, y0: int = 0) -> List[Cell]:
    return [(x0 + x, y0 + y) for y in range(height) for x in range(width)]


# ---- public operations --------------------------------------------------

def check_pattern(sft: SftDefinition, pattern: Pattern, wrap: Wrap = None) -> List[Violation]:
    """Violations of a finite window, ordered by (anchor, pattern index)"""
    compiled = compile_sft(sft)
    return compiled.violations(compiled.encode(pattern), wrap=wrap)


def is_admissible(sft: SftDefinition, pattern: Pattern, wrap: Wrap = None) -> bool:
    compiled = compile_sft(sft)
    return compiled.is_admissible(compiled.encode(pattern), wrap=wrap)


def enumerate_blocks(sft: SftDefinition, n: int, limit: Optional[int] = None) -> List[Pattern]:
    """Locally admissible n x n blocks on [0, n)^2 in search order"""
    compiled = compile_sft(sft)
    return [compiled.decode(dict(sol)) for sol in compiled.solutions(rect(n, n), limit=limit)]


def count_blocks(sft: SftDefinition, n: int) -> int:
    compiled = compile_sft(sft)
    return compiled.count_solutions(rect(n, n))


def extend_pattern(sft: SftDefinition, pattern: Pattern, region: Sequence[Cell],
                   rng: Optional[random.Random] = None) -> Optional[Pattern]:
    """First admissible filling of region that agrees with pattern, or None"""
    compiled = compile_sft(sft)
    sol = compiled.first_solution(region, fixed=compiled.encode(pattern), rng=rng)
    if sol is None:
        return None
    return compiled.decode(sol)


def extend_rect(sft: SftDefinition, pattern: Pattern, margin: int = 0,
                rng: Optional[random.Random] = None) -> Optional[Pattern]:
    """Extend over the bounding box of pattern inflated by margin"""
    x0, y0, x1, y1 = pattern.bounds()
    region = rect(x1 - x0 + 1 + 2 * margin, y1 - y0 + 1 + 2 * margin, x0 - margin, y0 - margin)
    return extend_pattern(sft, pattern, region, rng=rng)


def find_torus(sft: SftDefinition, width: int, height: int, fixed: Optional[Pattern] = None) -> Optional[Pattern]:
    """A width x height fundamental domain of a periodic point, or None"""
    compiled = compile_sft(sft)
    sol = compiled.first_solution(rect(width, height), fixed=compiled.encode(fixed) if fixed else None,
                                  wrap=(width, height))
    if sol is None:
        return None
    return compiled.decode(sol)


def admissible_rows(sft: SftDefinition, width: int, periodic: bool = False,
                    domains: Optional[Dict[int, Sequence[str]]] = None) -> List[Tuple[int, ...]]:
    """Admissible single rows as symbol-index tuples"""
    compiled = compile_sft(sft)
    dom = None
    if domains:
        dom = {(x, 0): compiled.mask(syms) for x, syms in domains.items()}
    rows = []
    for sol in compiled.solutions(rect(width, 1), wrap=(width, None) if periodic else None, domains=dom):
        rows.append(tuple(sol[(x, 0)] for x in range(width)))
    return rows


def compatibility_matrix(sft: SftDefinition, rows: List[Tuple[int, ...]], width: int,
                         periodic: bool = False) -> np.ndarray:
    """C[i, j] is True when row j may sit directly above row i.

    Only valid for rule sets of depth at most one; rows are assumed to be
    admissible on their own.
    """
    compiled = compile_sft(sft)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), width)
    compat = np.ones((len(rows), len(rows)), dtype=bool)
    for fp in sft.forbidden:
        pw, ph = fp.size
        if ph != 2:
            continue
        bottom = [(c, compiled.mask(s)) for c, s in fp.cells.items() if c[1] == 0]
        top = [(c, compiled.mask(s)) for c, s in fp.cells.items() if c[1] == 1]
        placements = range(width) if periodic else range(width - pw + 1)
        for x in placements:
            b_match = _row_match(arr, bottom, x, width, compiled.n)
            if not b_match.any():
                continue
            t_match = _row_match(arr, top, x, width, compiled.n)
            if not t_match.any():
                continue
            compat &= ~np.outer(b_match, t_match)
    return compat


def _row_match(arr: np.ndarray, cells: List[Tuple[Cell, int]], x: int, width: int, nsym: int) -> np.ndarray:
    match = np.ones(arr.shape[0], dtype=bool)
    for (dx, _), m in cells:
        lookup = np.array([(m >> a) & 1 for a in range(nsym)], dtype=bool)
        match &= lookup[arr[:, (x + dx) % width]]
    return match


def strip_counts(sft: SftDefinition, width: int, max_height: int, boundary: str = "free") -> TransferCount:
    """Admissible fillings of width x h strips for every h up to max_height.

    free counts locally admissible rectangles; periodic counts fillings of
    the width x h torus, wrapping in both directions. Depth-one rule sets use
    successive powers of the row compatibility matrix.
    """
    if boundary not in ("free", "periodic"):
        raise ValueError(f"Unknown boundary {boundary!r}")
    if max_height < 1:
        raise ValueError("max_height must be positive")
    if width < sft.rank:
        raise WidthTooSmall(f"Width {width} is below the rank {sft.rank} of {sft.name}",
                            details={"width": width, "rank": sft.rank})
    periodic = boundary == "periodic"
    depth = sft.depth
    heights = range(1, max_height + 1)
    counts: Dict[int, int] = {}
    if depth >= 2:
        compiled = compile_sft(sft)
        for h in heights:
            counts[h] = compiled.count_solutions(rect(width, h), wrap=(width, h) if periodic else None)
        return _transfer(width, boundary, counts)

    rows = admissible_rows(sft, width, periodic=periodic)
    if not rows or depth == 0:
        return _transfer(width, boundary, {h: len(rows) ** h for h in heights})

    compat = compatibility_matrix(sft, rows, width, periodic=periodic)
    if periodic:
        # a torus of height one puts each row above itself
        compiled = compile_sft(sft)
        counts[1] = compiled.count_solutions(rect(width, 1), wrap=(width, 1))
        big = len(rows) ** max_height >= 2 ** 62
        mat = compat.astype(object if big else np.int64)
        power = mat
        for h in heights:
            if h > 1:
                power = power.dot(mat)
                counts[h] = int(np.trace(power))
    else:
        vec = np.ones(len(rows), dtype=object)
        mat = compat.astype(object)
        for h in heights:
            if h > 1:
                vec = vec.dot(mat)
            counts[h] = int(sum(vec))
    logger.debug(f"strip_counts {sft.name} w={width} h<={max_height} {boundary}: {len(rows)} rows, "
                 f"count={counts.get(max_height)}")
    return _transfer(width, boundary, counts)


def _transfer(width: int, boundary: str, counts: Dict[int, int]) -> TransferCount:
    top = max(counts)
    return TransferCount(width=width, max_height=top, boundary=boundary, count=counts[top],
                         counts_by_height=counts)


def log2_count(count: int) -> float:
    if count <= 0:
        return 0.0
    return math.log2(count)


def require_admissible(sft: SftDefinition, pattern: Pattern, what: str = "pattern",
                       error: type = NotAdmissible) -> None:
    violations = check_pattern(sft, pattern)
    if violations:
        first = violations[0]
        raise error(f"{what} is not locally admissible for {sft.name}",
                    details={"anchor": list(first.anchor), "pattern_index": first.pattern_index})


def forbid(cells: Dict[Cell, Union[str, Sequence[str]]], label: Optional[str] = None) -> ForbiddenPattern:
    return ForbiddenPattern.build(cells, label=label)
