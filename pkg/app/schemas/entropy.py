"""
Pydantic schemas for entropy estimates and the entropy-shift check
"""

from pydantic import BaseModel, Field, validator
from typing import List, Optional


class BlockCount(BaseModel):
    n: int = Field(..., ge=1)
    count: int = Field(..., ge=0, description="Locally admissible n x n blocks")
    ratio: float = Field(..., ge=0, description="log2(count) / n^2")

    @validator('ratio')
    def validate_ratio(cls, v):
        if v != v or v == float("inf"):
            raise ValueError('ratio must be finite')
        return v


class EntropyReport(BaseModel):
    """Exact block ratios plus strip bounds at a fixed width"""
    sft: str
    strip_width: int = Field(..., ge=1)
    per_n: List[BlockCount] = Field(default_factory=list)
    upper_seq: List[float] = Field(default_factory=list, description="Running minimum of free-strip ratios, by height")
    lower_seq: List[float] = Field(default_factory=list, description="Periodic-strip ratios, by height")
    growth_seq: List[float] = Field(default_factory=list, description="log2 of the count growth per added row, per column")
    target: Optional[float] = None

    def to_csv(self) -> str:
        lines = ["n,count,ratio,upper,lower"]
        for row in self.per_n:
            i = row.n - 1
            upper = f"{self.upper_seq[i]:.6f}" if i < len(self.upper_seq) else ""
            lower = f"{self.lower_seq[i]:.6f}" if i < len(self.lower_seq) else ""
            lines.append(f"{row.n},{row.count},{row.ratio:.6f},{upper},{lower}")
        return "\n".join(lines) + "\n"


class WitnessCheck(BaseModel):
    k: int = Field(..., ge=1)
    side: int = Field(..., ge=1, description="k * r")
    full_count: int = Field(..., ge=0)
    witness_count: int = Field(..., ge=0)
    bound: int = Field(..., ge=0, description="(r+1)^(r k^2) * N_kr(base)")
    holds: bool


class EntropyShiftReport(BaseModel):
    """Lower-bound check on the counter-and-color distortion of a base SFT"""
    base: str
    r: int = Field(..., ge=1)
    base_entropy: float = Field(0.0, ge=0)
    target: float
    checks: List[WitnessCheck] = Field(default_factory=list)
    estimate: Optional[EntropyReport] = None
    gap: Optional[float] = Field(None, description="Last upper bound minus target")
