"""
Pydantic schemas for the curve layer and distorted SFTs
"""

from pydantic import BaseModel, Field, validator
from typing import Dict, List, Optional, Tuple

from app.schemas.pattern import Pattern, SftDefinition

CURVE_STARTS = ("left", "top", "interior")
CURVE_ENDS = ("right", "bottom", "open")


class Curve(BaseModel):
    """Cells of one curve, left to right"""
    id: int = Field(..., ge=0)
    cells: List[Tuple[int, int]] = Field(..., min_length=1)
    start: str = Field("left", description="Where the curve enters the window")
    end: str = Field("right", description="Where the curve leaves the window")
    shift_columns: List[int] = Field(default_factory=list,
                                     description="x of every cell where the curve is shifted downwards")

    @validator('start')
    def validate_start(cls, v):
        if v not in CURVE_STARTS:
            raise ValueError(f'start must be one of: {", ".join(CURVE_STARTS)}')
        return v

    @validator('end')
    def validate_end(cls, v):
        if v not in CURVE_ENDS:
            raise ValueError(f'end must be one of: {", ".join(CURVE_ENDS)}')
        return v


class CurveDecomposition(BaseModel):
    curves: List[Curve] = Field(default_factory=list)
    interior_starts: List[Tuple[int, int]] = Field(default_factory=list,
                                                   description="→ cells with no predecessor inside the window")
    counters: Optional[Dict[Tuple[int, int], int]] = Field(None, description="Counter value per curve cell")
    colors: Optional[Dict[int, List[str]]] = Field(None, description="Color word of every complete segment, per curve")
    diagonal: Optional[Tuple[int, int]] = Field(None, description="(→ on the diagonal, shifts across it)")

    @property
    def count(self) -> int:
        return len(self.curves)


class DeltaCompletion(BaseModel):
    """Rectangle produced from a block, with the block's position inside it"""
    pattern: Pattern
    offset: Tuple[int, int] = Field((0, 0), description="Position of the input's (0, 0)")
    curves: int = Field(0, ge=0)

    @property
    def width(self) -> int:
        return self.pattern.width

    @property
    def height(self) -> int:
        return self.pattern.height


class DistortedSft(BaseModel):
    """Product SFT built over the curve layer"""
    base: str
    counter_r: Optional[int] = Field(None, ge=1, description="Segment length when the counter layer is present")
    colors: bool = False
    derived: SftDefinition
    lifted: int = Field(0, ge=0, description="Forbidden patterns lifted from the base")
    geometries: Dict[str, int] = Field(default_factory=dict, description="'h x w' -> local curve geometries used")
