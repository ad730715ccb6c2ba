"""
Unit tests for SVG rendering
"""

import pytest

from app.schemas.pattern import Pattern
from app.schemas.render import RenderStyle
from app.services.builtin_sfts import BLACK, WHITE
from app.services.render import curve_symbol, render_pattern, render_to_file
from app.services.robinson import supertile


class TestCurveSymbol:
    def test_plain_and_layered(self):
        """Arrows are found in plain, distorted and counter-layer symbols"""
        assert curve_symbol("→") == "→"
        assert curve_symbol("■|↓") == "↓"
        assert curve_symbol("o|→|1|0") == "→"
        assert curve_symbol("■") is None


class TestRenderPattern:
    """SVG documents for the three kinds of pattern"""

    def test_robinson_with_petals(self):
        """Supertiles render with petal outlines"""
        svg = render_pattern(supertile(2, "sw"), RenderStyle(cell_px=8, draw_petals=True))
        assert svg.startswith("<svg")
        assert "rect" in svg

    def test_curve_layer(self):
        """Curve-layer windows render arrows and curve polylines"""
        svg = render_pattern(Pattern.from_rows(["→→", "→↓", "↓→"]))
        assert "polyline" in svg

    def test_plain_symbols(self):
        """Other alphabets render as colored squares"""
        svg = render_pattern(Pattern.from_rows([BLACK + WHITE]), RenderStyle(palette={BLACK: "#123456"}))
        assert "#123456" in svg

    def test_empty(self):
        """The empty pattern has nothing to render"""
        with pytest.raises(ValueError):
            render_pattern(Pattern.of({}))

    def test_cell_px_floor(self):
        """Cells smaller than 4 pixels are refused"""
        with pytest.raises(ValueError):
            RenderStyle(cell_px=2)

    def test_to_file(self, tmp_path):
        """The document is written to disk"""
        path = render_to_file(Pattern.from_rows(["→"]), tmp_path / "one.svg")
        assert path.read_text(encoding="utf-8").startswith("<svg")


if __name__ == "__main__":
    pytest.main([__file__])
