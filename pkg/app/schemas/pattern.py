"""
Pydantic schemas for patterns, forbidden patterns and SFT definitions
"""

from pydantic import BaseModel, Field, validator
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

Cell = Tuple[int, int]

BLANK = "·"


class Pattern(BaseModel):
    """Finite partial coloring of Z^2: cell -> symbol"""
    cells: Dict[Tuple[int, int], str] = Field(default_factory=dict, description="Mapping (x, y) -> symbol")

    @classmethod
    def of(cls, cells: Dict[Cell, str]) -> "Pattern":
        """Build without validation; used on hot paths"""
        return cls.model_construct(cells=cells)

    @classmethod
    def from_rows(cls, rows: Sequence[Union[str, Sequence[str]]], origin: Cell = (0, 0),
                  blank: Optional[str] = BLANK) -> "Pattern":
        """Build from rows listed top row first; the bottom row sits at origin[1]"""
        cells: Dict[Cell, str] = {}
        height = len(rows)
        ox, oy = origin
        for r, row in enumerate(rows):
            y = oy + height - 1 - r
            for x, sym in enumerate(row):
                if blank is not None and sym == blank:
                    continue
                cells[(ox + x, y)] = sym
        return cls.of(cells)

    @classmethod
    def filled(cls, width: int, height: int, symbol: str, origin: Cell = (0, 0)) -> "Pattern":
        ox, oy = origin
        return cls.of({(ox + x, oy + y): symbol for y in range(height) for x in range(width)})

    @property
    def support(self) -> List[Cell]:
        return sorted(self.cells, key=lambda c: (c[1], c[0]))

    def bounds(self) -> Tuple[int, int, int, int]:
        """(min_x, min_y, max_x, max_y); raises ValueError on the empty pattern"""
        if not self.cells:
            raise ValueError("empty pattern has no bounds")
        xs = [c[0] for c in self.cells]
        ys = [c[1] for c in self.cells]
        return min(xs), min(ys), max(xs), max(ys)

    @property
    def width(self) -> int:
        if not self.cells:
            return 0
        x0, _, x1, _ = self.bounds()
        return x1 - x0 + 1

    @property
    def height(self) -> int:
        if not self.cells:
            return 0
        _, y0, _, y1 = self.bounds()
        return y1 - y0 + 1

    def is_rectangle(self) -> bool:
        return len(self.cells) == self.width * self.height

    def translate(self, dx: int, dy: int) -> "Pattern":
        return Pattern.of({(x + dx, y + dy): s for (x, y), s in self.cells.items()})

    def normalized(self) -> "Pattern":
        """Translate so that the bounding box starts at (0, 0)"""
        if not self.cells:
            return Pattern.of({})
        x0, y0, _, _ = self.bounds()
        return self.translate(-x0, -y0)

    def restrict(self, cells: Iterable[Cell]) -> "Pattern":
        return Pattern.of({c: self.cells[c] for c in cells if c in self.cells})

    def window(self, x0: int, y0: int, width: int, height: int) -> "Pattern":
        return Pattern.of({
            (x, y): s for (x, y), s in self.cells.items()
            if x0 <= x < x0 + width and y0 <= y < y0 + height
        })

    def merge(self, other: "Pattern") -> Optional["Pattern"]:
        """Union of two patterns, or None when they disagree on a shared cell"""
        merged = dict(self.cells)
        for c, s in other.cells.items():
            if merged.get(c, s) != s:
                return None
            merged[c] = s
        return Pattern.of(merged)

    def contains(self, other: "Pattern", offset: Cell = (0, 0)) -> bool:
        dx, dy = offset
        return all(self.cells.get((x + dx, y + dy)) == s for (x, y), s in other.cells.items())

    def to_rows(self, blank: str = BLANK) -> List[List[str]]:
        """Rows of the bounding box, top row first"""
        if not self.cells:
            return []
        x0, y0, x1, y1 = self.bounds()
        return [[self.cells.get((x, y), blank) for x in range(x0, x1 + 1)] for y in range(y1, y0 - 1, -1)]

    def to_text(self, blank: str = BLANK) -> List[str]:
        return ["".join(row) for row in self.to_rows(blank)]

    def to_json_dict(self) -> Dict[str, Any]:
        return {"cells": [[x, y, s] for (x, y), s in sorted(self.cells.items(), key=lambda kv: (kv[0][1], kv[0][0]))]}

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Pattern":
        if "rows" in data:
            return cls.from_rows(data["rows"])
        return cls.of({(int(x), int(y)): str(s) for x, y, s in data.get("cells", [])})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Pattern) and self.cells == other.cells

    def __hash__(self) -> int:
        return hash(frozenset(self.cells.items()))


class ForbiddenPattern(BaseModel):
    """Forbidden pattern whose cells carry sets of symbols; normalized to a (0, 0) corner"""
    cells: Dict[Tuple[int, int], FrozenSet[str]] = Field(..., description="Mapping (x, y) -> allowed-to-match symbols")
    label: Optional[str] = Field(None, description="Human readable rule name")

    @validator('cells')
    def validate_cells(cls, v):
        if not v:
            raise ValueError('Forbidden pattern must have at least one cell')
        if any(len(s) == 0 for s in v.values()):
            raise ValueError('Forbidden pattern cells must carry at least one symbol')
        x0 = min(c[0] for c in v)
        y0 = min(c[1] for c in v)
        return {(x - x0, y - y0): frozenset(s) for (x, y), s in v.items()}

    @classmethod
    def build(cls, cells: Dict[Cell, Union[str, Iterable[str]]], label: Optional[str] = None) -> "ForbiddenPattern":
        return cls(cells={c: frozenset([s]) if isinstance(s, str) else frozenset(s) for c, s in cells.items()},
                   label=label)

    @property
    def size(self) -> Tuple[int, int]:
        return max(c[0] for c in self.cells) + 1, max(c[1] for c in self.cells) + 1

    def symbols(self) -> FrozenSet[str]:
        out: FrozenSet[str] = frozenset()
        for s in self.cells.values():
            out = out | s
        return out

    def matches(self, pattern: Pattern, anchor: Cell) -> bool:
        ax, ay = anchor
        for (x, y), allowed in self.cells.items():
            if pattern.cells.get((ax + x, ay + y)) not in allowed:
                return False
        return True

    def to_json_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"cells": [
            [x, y, sorted(s)[0] if len(s) == 1 else sorted(s)]
            for (x, y), s in sorted(self.cells.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]}
        if self.label:
            data["label"] = self.label
        return data

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "ForbiddenPattern":
        return cls.build({(int(x), int(y)): s for x, y, s in data["cells"]}, label=data.get("label"))


class Derivation(BaseModel):
    """Provenance of a derived SFT"""
    base: str = Field(..., description="Name of the SFT the chain was applied to")
    chain: List[str] = Field(default_factory=list, description="Operators applied in order")
    bounds: Dict[str, Any] = Field(default_factory=dict, description="Entropy targets and bounds")


class SftDefinition(BaseModel):
    """Alphabet plus finite forbidden set"""
    name: str = Field(..., min_length=1, description="Identifier of the SFT")
    alphabet: List[str] = Field(..., description="Ordered alphabet; order fixes every search")
    forbidden: List[ForbiddenPattern] = Field(default_factory=list, description="Forbidden patterns")
    derivation: Optional[Derivation] = Field(None, description="Set when built by an operator chain")

    @validator('alphabet')
    def validate_alphabet(cls, v):
        if not v:
            raise ValueError('Alphabet must not be empty')
        if len(set(v)) != len(v):
            raise ValueError('Alphabet symbols must be distinct')
        return v

    @validator('forbidden')
    def validate_forbidden(cls, v, values):
        alphabet = set(values.get('alphabet') or [])
        for fp in v:
            unknown = fp.symbols() - alphabet
            if unknown:
                raise ValueError(f'unknown symbol {sorted(unknown)[0]!r} in forbidden pattern')
        return v

    @property
    def rank(self) -> int:
        """Side of the smallest square containing every forbidden support"""
        if not self.forbidden:
            return 1
        return max(max(fp.size) for fp in self.forbidden)

    @property
    def depth(self) -> int:
        """Transfer depth: tallest forbidden pattern minus one"""
        if not self.forbidden:
            return 0
        return max(fp.size[1] for fp in self.forbidden) - 1

    def to_json_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "name": self.name,
            "alphabet": list(self.alphabet),
            "forbidden": [fp.to_json_dict() for fp in self.forbidden],
        }
        if self.derivation is not None:
            data["derivation"] = self.derivation.model_dump()
        return data


class Violation(BaseModel):
    """A forbidden pattern occurring in a window"""
    anchor: Tuple[int, int] = Field(..., description="Translation placing the forbidden pattern")
    pattern_index: int = Field(..., ge=0, description="Index in the SFT's forbidden list")


class TransferCount(BaseModel):
    """Admissible fillings of width x h strips for h = 1..max_height"""
    width: int = Field(..., ge=1)
    max_height: int = Field(..., ge=1)
    boundary: str = Field("free", description="free, or periodic for the width x h torus wrapping both ways")
    count: int = Field(..., ge=0, description="Count at max_height")
    counts_by_height: Dict[int, int] = Field(default_factory=dict)
