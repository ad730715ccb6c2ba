"""
Pydantic schema for SVG rendering options
"""

from pydantic import BaseModel, Field, validator
from typing import Dict

DEFAULT_PALETTE = {
    "blue": "#7fa7e0",
    "red": "#e08f7f",
    "line": "#202020",
    "curve": "#c0392b",
    "petal": "#2e86c1",
    "background": "#ffffff",
    "grid": "#d0d0d0",
}


class RenderStyle(BaseModel):
    cell_px: int = Field(24, description="Side of one cell in pixels")
    palette: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_PALETTE),
                                    description="Color per symbol class, or per raw symbol")
    draw_arrows: bool = True
    draw_curves: bool = True
    draw_petals: bool = False

    @validator('cell_px')
    def validate_cell_px(cls, v):
        if v < 4:
            raise ValueError('cell_px must be at least 4')
        return v

    def color(self, key: str) -> str:
        return self.palette.get(key, DEFAULT_PALETTE.get(key, "#000000"))
