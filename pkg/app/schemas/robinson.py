"""
Pydantic schemas for the aligned Robinson subshift: petals, cells, completion
"""

from pydantic import BaseModel, Field, validator
from typing import Dict, List, Optional, Tuple

from app.schemas.pattern import Pattern

ORIENTATIONS = ("sw", "se", "nw", "ne")


class Petal(BaseModel):
    """Square ring of double lines closed by four same-order corners"""
    id: int = Field(..., ge=0)
    order: int = Field(..., ge=0, description="0 for the blue petals")
    origin: Tuple[int, int] = Field(..., description="Bottom-left (sw) corner cell")
    side: int = Field(..., description="Side length in cells, 2^(order+1)+1")
    value: int = Field(..., ge=0, le=1, description="Shared corner value")
    parent: Optional[int] = Field(None, description="Id of the next-order petal through this petal's center")
    children: List[int] = Field(default_factory=list)
    missing_children: int = Field(0, ge=0, description="Children cut by the window edge")

    @property
    def kind(self) -> str:
        return "support" if self.value == 1 else "transmission"

    @property
    def center(self) -> Tuple[int, int]:
        half = (self.side - 1) // 2
        return self.origin[0] + half, self.origin[1] + half

    def corners(self) -> Dict[str, Tuple[int, int]]:
        x0, y0 = self.origin
        d = self.side - 1
        return {"sw": (x0, y0), "se": (x0 + d, y0), "nw": (x0, y0 + d), "ne": (x0 + d, y0 + d)}

    def encloses(self, cell: Tuple[int, int]) -> bool:
        """Strictly inside the ring"""
        x0, y0 = self.origin
        d = self.side - 1
        return x0 < cell[0] < x0 + d and y0 < cell[1] < y0 + d


class PetalHierarchy(BaseModel):
    petals: List[Petal] = Field(default_factory=list)
    incomplete_corners: List[Tuple[int, int]] = Field(
        default_factory=list, description="Corners whose petal is cut by the window edge")

    def by_order(self, order: int) -> List[Petal]:
        return [p for p in self.petals if p.order == order]

    def get(self, petal_id: int) -> Petal:
        return self.petals[petal_id]


class PetalCell(BaseModel):
    """Region enclosed by an odd-order petal: order n cell <-> petal of order 2n+1"""
    order: int = Field(..., ge=0)
    petal_id: int = Field(..., ge=0)
    origin: Tuple[int, int]
    side: int

    def contains(self, other: "PetalCell") -> bool:
        x0, y0 = self.origin
        ox, oy = other.origin
        return (x0 <= ox and y0 <= oy and ox + other.side <= x0 + self.side
                and oy + other.side <= y0 + self.side and other is not self)

    def encloses(self, cell: Tuple[int, int]) -> bool:
        x0, y0 = self.origin
        d = self.side - 1
        return x0 < cell[0] < x0 + d and y0 < cell[1] < y0 + d


class CompletionResult(BaseModel):
    """A supertile containing a given block"""
    order: int = Field(..., ge=0)
    orientation: str = Field(...)
    offset: Tuple[int, int] = Field(..., description="Position of the block's (0, 0) inside the supertile")
    supertile: Pattern

    @validator('orientation')
    def validate_orientation(cls, v):
        if v not in ORIENTATIONS:
            raise ValueError(f'Orientation must be one of: {", ".join(ORIENTATIONS)}')
        return v


class DensityReport(BaseModel):
    """Exact frequencies over a window; fractions serialized as 'p/q'"""
    window_cells: int
    lambda_star: str = Field(..., description="Non-blue positions")
    lambda_by_order: Dict[int, str] = Field(default_factory=dict, description="Blue corners by smallest enclosing cell order")
    residual: str = Field(..., description="Blue corners in no complete cell of order <= max_order")
    targets: Dict[str, float] = Field(default_factory=dict)
