"""
Pydantic schemas for gluing sets, gap estimates and periodic points
"""

from pydantic import BaseModel, Field, validator
from typing import Dict, List, Optional, Tuple

from app.schemas.pattern import Pattern

GAP_CLASSES = ("constant", "logarithmic", "linear")


class RingResult(BaseModel):
    radius: int = Field(..., ge=1)
    offsets_checked: int = Field(0, ge=0)
    certified: bool = Field(...)
    first_failure: Optional[Tuple[int, int, Tuple[int, int]]] = Field(
        None, description="(block index, block index, offset) of the first failing gluing")


class GluingReport(BaseModel):
    """Uniform gap estimate for all pairs of n-blocks"""
    sft: str
    n: int = Field(..., ge=1)
    window: int = Field(..., ge=1)
    margin: int = Field(..., ge=0)
    blocks: int = Field(..., ge=0)
    pair_count: int = Field(..., ge=0, description="Ordered pairs of blocks covered")
    min_uniform_gap: Optional[int] = Field(None, description="Absent when the outermost ring fails")
    certified_offsets: List[Tuple[int, int]] = Field(
        default_factory=list, description="Offsets certified for every pair: the rings outside the failing one")
    class_hint: str = Field("unknown", description="Best fit of the gaps at 1..n")
    rings: List[RingResult] = Field(default_factory=list, description="Rings scanned, outermost first")

    @validator('class_hint')
    def validate_class_hint(cls, v):
        if v != "unknown" and v not in GAP_CLASSES:
            raise ValueError(f'class_hint must be unknown or one of: {", ".join(GAP_CLASSES)}')
        return v


class GapProfile(BaseModel):
    sft: str
    gaps: Dict[int, Optional[int]] = Field(default_factory=dict)
    class_hint: Optional[str] = None
    residuals: Dict[str, float] = Field(default_factory=dict)

    @validator('class_hint')
    def validate_class_hint(cls, v):
        if v is not None and v not in GAP_CLASSES:
            raise ValueError(f'class_hint must be one of: {", ".join(GAP_CLASSES)}')
        return v


class NetGluingWitness(BaseModel):
    """Period of the lattice along which n-blocks of the aligned Robinson subshift glue"""
    n: int = Field(..., ge=1)
    level: int = Field(..., description="m with 2^(m+1) - 1 < n <= 2^(m+2) - 1")
    period: int = Field(..., description="2^(m+6)")
    linear_bound: int = Field(..., description="32 n")
    anchor: Optional[Tuple[int, int]] = Field(None, description="Anchor of the lattice found in a supertile")
    found_period: Optional[int] = Field(None, description="Smallest lattice period found in a supertile")

    @property
    def within_bound(self) -> bool:
        return self.period <= self.linear_bound

    @property
    def found_divides(self) -> bool:
        """The closed-form lattice is a sublattice of the one found"""
        return self.found_period is not None and self.period % self.found_period == 0


class FundamentalDomain(BaseModel):
    """Rectangle whose doubly periodic repetition is a configuration"""
    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    pattern: Pattern
    method: str = Field("", description="How the domain was produced")


class GapTable(BaseModel):
    """Gap function f given by values; beyond the table the last value is used"""
    values: Dict[int, int] = Field(..., description="n -> f(n)")

    @validator('values')
    def validate_values(cls, v):
        if not v:
            raise ValueError('Gap table must not be empty')
        if any(g < 0 for g in v.values()):
            raise ValueError('Gaps must be non-negative')
        return v

    @classmethod
    def constant(cls, value: int, upto: int = 1) -> "GapTable":
        return cls(values={n: value for n in range(1, upto + 1)})

    def __call__(self, n: int) -> int:
        if n in self.values:
            return self.values[n]
        below = [k for k in self.values if k <= n]
        if below:
            return self.values[max(below)]
        return self.values[min(self.values)]


class GluingClass(BaseModel):
    """Gluing properties of the n-blocks read off the gluing sets inside a window"""
    n: int = Field(..., ge=1)
    gap: int = Field(..., ge=0, description="f(n)")
    window: int = Field(..., ge=1)
    blocks: int = Field(..., ge=0)
    block_gluing: bool
    net_gluing: bool
    block_transitive: bool
    net_periods: Dict[str, Tuple[int, Tuple[int, int]]] = Field(
        default_factory=dict, description="'i,j' -> (period, base offset) of a lattice inside G(p_i, p_j)")

    @property
    def implications_hold(self) -> bool:
        """block gluing => net gluing => block transitive"""
        if self.block_gluing and not self.net_gluing:
            return False
        return not (self.net_gluing and not self.block_transitive)


class GluingClassReport(BaseModel):
    sft: str
    margin: int = Field(1, ge=0)
    classes: List[GluingClass] = Field(default_factory=list)


class PowerSequenceGaps(BaseModel):
    """Gaps sampled at sizes c^l + m and the gap function they imply for every n"""
    sft: str
    c: int = Field(..., ge=2)
    m: int = Field(0, ge=0)
    sampled: Dict[int, Optional[int]] = Field(default_factory=dict, description="c^l + m -> measured gap")
    derived: Dict[int, Optional[int]] = Field(default_factory=dict, description="n -> f(c^l(n) + m) + c^l(n) + m - n")
