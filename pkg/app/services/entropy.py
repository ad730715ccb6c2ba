"""
Entropy estimates: exact block ratios, strip bounds, the lower-bound check
for counter-and-color distortions, and the blue-corner density laws of the
Robinson layer.
"""

import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

from app.schemas.entropy import BlockCount, EntropyReport, EntropyShiftReport, WitnessCheck
from app.schemas.pattern import Pattern, SftDefinition
from app.services.builtin_sfts import trivial_sft
from app.services.distort import distort_sft_r
from app.services.petals import density
from app.services.sft_core import compile_sft, count_blocks, log2_count, rect, strip_counts
from app.utils.error_handler import RZero, WidthTooSmall

logger = logging.getLogger(__name__)


def block_count(sft: SftDefinition, n: int) -> int:
    """N_n by transfer counting where the width allows it, by search otherwise"""
    if n >= sft.rank:
        return strip_counts(sft, n, n).count
    return count_blocks(sft, n)


def entropy_estimate(sft: SftDefinition, n_max: int, strip_width: int,
                     target: Optional[float] = None) -> EntropyReport:
    """Exact log2(N_n)/n^2 for n <= n_max and strip bounds at strip_width for heights 1..n_max"""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    if strip_width < sft.rank:
        raise WidthTooSmall(f"Strip width {strip_width} is below the rank {sft.rank} of {sft.name}",
                            details={"width": strip_width, "rank": sft.rank})
    per_n = []
    for n in range(1, n_max + 1):
        count = block_count(sft, n)
        per_n.append(BlockCount(n=n, count=count, ratio=log2_count(count) / (n * n)))
        logger.debug(f"{sft.name}: N_{n} = {count}")

    w = strip_width
    free_counts = strip_counts(sft, w, n_max).counts_by_height
    free = [free_counts[h] for h in range(1, n_max + 1)]
    upper: List[float] = []
    for h, count in enumerate(free, start=1):
        ratio = log2_count(count) / (w * h)
        upper.append(min(ratio, upper[-1]) if upper else ratio)
    growth = [log2_count(free[i]) / w - log2_count(free[i - 1]) / w if free[i - 1] else 0.0
              for i in range(1, len(free))]
    tori = strip_counts(sft, w, n_max, boundary="periodic").counts_by_height
    lower = [min(log2_count(tori[h]) / (w * h), upper[h - 1]) for h in range(1, n_max + 1)]

    report = EntropyReport(sft=sft.name, strip_width=w, per_n=per_n, upper_seq=upper,
                           lower_seq=lower, growth_seq=growth, target=target)
    if upper:
        logger.info(f"Entropy of {sft.name}: upper {upper[-1]:.4f}, lower {lower[-1]:.4f} at width {w}")
    return report


def segment_words(r: int) -> int:
    """Color words a single length-r segment can carry"""
    derived = distort_sft_r(trivial_sft(), r).derived
    compiled = compile_sft(derived)
    domains = {}
    for x in range(r):
        symbols = [s for s in derived.alphabet if s.split("|")[-2] == str(x)]
        domains[(x, 0)] = compiled.mask(symbols)
    return compiled.count_solutions(rect(r, 1), domains=domains)


def witness_family_count(base: SftDefinition, r: int, k: int) -> int:
    """Straight curves, counters starting at 0 on the left edge, free colors, any base block"""
    if r < 1:
        raise RZero(f"r must be at least 1, got {r}", details={"r": r})
    side = k * r
    return segment_words(r) ** (k * side) * block_count(base, side)


def entropy_shift_check(base: SftDefinition, r: int, n_max: int = 0,
                        strip_width: Optional[int] = None) -> EntropyShiftReport:
    """Exact lower-bound check at k = 1, 2 plus an optional strip estimate of the distortion"""
    derived = distort_sft_r(base, r).derived
    base_entropy = 0.0
    if len(base.alphabet) > 1:
        base_entropy = min(log2_count(block_count(base, n)) / (n * n) for n in range(1, 2 * r + 1))
    target = base_entropy + math.log2(1 + r) / r

    checks = []
    for k in (1, 2):
        side = k * r
        full = block_count(derived, side)
        witness = witness_family_count(base, r, k)
        bound = (r + 1) ** (r * k * k) * block_count(base, side)
        checks.append(WitnessCheck(k=k, side=side, full_count=full, witness_count=witness, bound=bound,
                                   holds=full >= witness >= bound))
        logger.info(f"d{r}({base.name}) k={k}: N_{side} = {full}, witness {witness}, bound {bound}")

    estimate = None
    gap = None
    if n_max > 0:
        estimate = entropy_estimate(derived, n_max, strip_width or max(derived.rank, 2 * r), target=target)
        gap = estimate.upper_seq[-1] - target
    return EntropyShiftReport(base=base.name, r=r, base_entropy=base_entropy, target=target,
                              checks=checks, estimate=estimate, gap=gap)


def density_lambda(pattern: Pattern, k: int) -> Fraction:
    """Share of the window taken by blue corners whose smallest enclosing cell has order k"""
    return Fraction(density(pattern, max_order=k).lambda_by_order[k])


def density_star(pattern: Pattern) -> Fraction:
    return Fraction(density(pattern, max_order=0).lambda_star)


def density_complement(pattern: Pattern, m: int) -> Tuple[Fraction, Fraction]:
    """(1/4 - sum of the order <= m shares, its limit 3^(m+1)/4^(m+2))"""
    report = density(pattern, max_order=m)
    measured = Fraction(1, 4) - sum((Fraction(v) for v in report.lambda_by_order.values()), Fraction(0))
    return measured, Fraction(3 ** (m + 1), 4 ** (m + 2))
