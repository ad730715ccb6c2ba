"""
Unit tests for the aligned Robinson subshift: supertiles, petals, densities, completion
"""

import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from app.schemas.pattern import Pattern
from app.schemas.robinson import ORIENTATIONS
from app.services.completion import classify_window, complete_block, completion_order
from app.services.entropy import density_complement, density_lambda, density_star
from app.services.petals import (cell_occurrences, density, extract_cells, extract_petals, periodic_occurrences,
                                 properly_contained, supertile_occurrences)
from app.services.robinson import (is_robinson_symbol, parse_tile, robinson_alphabet, robinson_sft, supertile,
                                   supertile_side, verify_rules)
from app.utils.error_handler import NotAdmissible, OrderTooLarge


class TestSupertiles:
    """Supertile generation and the rule set"""

    @pytest.mark.parametrize("orientation", ORIENTATIONS)
    def test_small_orders_admissible(self, orientation):
        """Supertiles up to order 3 satisfy every rule"""
        for n in range(4):
            assert verify_rules(supertile(n, orientation)) == []

    @pytest.mark.slow
    @pytest.mark.parametrize("orientation", ORIENTATIONS)
    def test_order_five_admissible(self, orientation):
        """Supertiles of orders 4 and 5 satisfy every rule"""
        for n in (4, 5):
            assert verify_rules(supertile(n, orientation)) == []

    def test_edge_mismatch_rejected(self):
        """A double eastern arm beside a single western arrow breaks the edge rule"""
        drawn = supertile(2, "sw").cells
        pair = Pattern.of({(0, 0): drawn[(0, 0)], (1, 0): drawn[(0, 3)]})
        labels = {robinson_sft().forbidden[v.pattern_index].label for v in verify_rules(pair)}
        assert labels == {"edges east"}

    def test_square_without_blue_rejected(self):
        """A 2x2 window of non-blue tiles breaks the blue rule"""
        arrow = supertile(2, "sw").cells[(3, 0)]
        square = Pattern.of({(x, y): arrow for y in range(2) for x in range(2)})
        labels = {robinson_sft().forbidden[v.pattern_index].label for v in verify_rules(square)}
        assert "blue in every 2x2" in labels

    def test_side(self):
        """Order n has side 2^(n+1) - 1"""
        for n in range(5):
            tile = supertile(n, "sw")
            assert tile.width == tile.height == supertile_side(n) == 2 ** (n + 1) - 1
            assert tile.is_rectangle()

    def test_center_corner(self):
        """The center of an order-n supertile is a corner with its orientation"""
        for orientation in ORIENTATIONS:
            tile = parse_tile(supertile(3, orientation).cells[(7, 7)])
            assert tile.is_corner
            assert tile.label == orientation

    def test_blue_lattice(self):
        """Blue corners sit exactly on even coordinates"""
        tile = supertile(3, "ne")
        for (x, y), s in tile.cells.items():
            assert parse_tile(s).is_blue == (x % 2 == 0 and y % 2 == 0)

    def test_symbols_in_alphabet(self):
        """Generated symbols belong to the rule set's alphabet"""
        alphabet = set(robinson_alphabet())
        assert set(supertile(4, "sw").cells.values()) <= alphabet
        assert all(is_robinson_symbol(s) for s in alphabet)

    def test_order_cap(self):
        """Orders above the cap are refused"""
        with pytest.raises(OrderTooLarge):
            supertile(99, "sw")

    def test_sub_supertile_period(self):
        """Order-m supertiles of one orientation recur with period 2^(m+2) in an order-n supertile"""
        for n in (3, 4):
            big = supertile(n, "sw", copy=False)
            for m in range(n):
                step = 2 ** (m + 2)
                found = set(periodic_occurrences(big, supertile(m, "sw")))
                aligned = {(a, b) for a in range(0, big.width, step) for b in range(0, big.height, step)
                           if a + supertile_side(m) <= big.width and b + supertile_side(m) <= big.height}
                assert aligned <= found

    def test_quadrant_orientations(self):
        """The four quadrants of an order-n supertile are the order n-1 supertiles"""
        big = supertile(3, "sw")
        half = 2 ** 3
        for orientation, (ox, oy) in {"sw": (0, 0), "se": (half, 0), "nw": (0, half), "ne": (half, half)}.items():
            assert big.contains(supertile(2, orientation), (ox, oy))


FIGURE = Path(__file__).parent / "data" / "supertile_order2_sw.json"
CORNER_LABELS = {"bas": "s", "haut": "n", "gauche": "w", "droite": "e"}


def figure_cells() -> dict:
    """(x, y) -> tile name of the drawn order-2 supertile, y growing upwards"""
    rows = json.loads(FIGURE.read_text(encoding="utf-8"))["rows"]
    return {(x, len(rows) - 1 - r): name for r, row in enumerate(rows) for x, name in enumerate(row)}


def corner_of(name: str):
    """(color, label) of a drawn corner, None for arrow symbols"""
    for color in ("blue", "red"):
        if name.startswith(color):
            rest = name[len(color):].replace("bast", "bas").replace("hautt", "haut")
            vertical = "bas" if rest.startswith("bas") else "haut"
            return color, CORNER_LABELS[vertical] + CORNER_LABELS[rest[len(vertical):]]
    return None


def arrow_class(symbol: str):
    tile = parse_tile(symbol)
    return tile.kind, tile.direction, tile.rail, tile.lrail


class TestFigureSupertile:
    """The drawn south west order-2 supertile against generation in every orientation"""

    @pytest.mark.parametrize("orientation", ORIENTATIONS)
    def test_corners(self, orientation):
        """Corners carry the drawn color and label; the center takes the orientation"""
        cells = supertile(2, orientation).cells
        for (x, y), name in figure_cells().items():
            tile = parse_tile(cells[(x, y)])
            drawn = corner_of(name)
            assert tile.is_corner == (drawn is not None)
            if drawn is None:
                continue
            color, label = drawn
            assert tile.color == color
            assert tile.label == (orientation if (x, y) == (3, 3) else label)

    @pytest.mark.parametrize("orientation", ORIENTATIONS)
    def test_arrow_classes(self, orientation):
        """Equal drawn names mean equal arrow tiles and different names different tiles, on and off the cross"""
        cells = supertile(2, orientation).cells
        for on_cross in (False, True):
            classes = {}
            for (x, y), name in figure_cells().items():
                if corner_of(name) is None and (x == 3 or y == 3) == on_cross:
                    classes.setdefault(name, set()).add(arrow_class(cells[(x, y)]))
            assert all(len(found) == 1 for found in classes.values())
            assert len({next(iter(found)) for found in classes.values()}) == len(classes)

    def test_sw_whole_figure(self):
        """For the drawn orientation the name to tile correspondence holds across the whole supertile"""
        cells = supertile(2, "sw").cells
        classes = {}
        for cell, name in figure_cells().items():
            if corner_of(name) is None:
                classes.setdefault(name, set()).add(arrow_class(cells[cell]))
        assert len(classes) == 16
        assert all(len(found) == 1 for found in classes.values())
        assert len({next(iter(found)) for found in classes.values()}) == 16

    @pytest.mark.parametrize("orientation", ORIENTATIONS)
    def test_off_cross_shared(self, orientation):
        """Only the central cross depends on the orientation"""
        cells, drawn = supertile(2, orientation).cells, supertile(2, "sw").cells
        assert all(cells[c] == drawn[c] for c in figure_cells() if c[0] != 3 and c[1] != 3)


class TestPetals:
    """Petal hierarchy and densities"""

    def test_petal_sides(self):
        """Every petal of order k has side 2^(k+1) + 1"""
        hierarchy = extract_petals(supertile(4, "sw"))
        assert hierarchy.petals
        for petal in hierarchy.petals:
            assert petal.side == 2 ** (petal.order + 1) + 1

    def test_order_two_petals(self):
        """The order-2 supertile holds four blue petals and one order-1 petal around its center"""
        hierarchy = extract_petals(supertile(2, "sw"))
        assert [p.origin for p in hierarchy.by_order(0)] == [(0, 0), (4, 0), (0, 4), (4, 4)]
        assert [(p.origin, p.side) for p in hierarchy.by_order(1)] == [((1, 1), 5)]
        assert len(hierarchy.petals) == 5

    def test_small_window_residual(self):
        """Blue corners outside every complete cell stay in the residual share"""
        report = density(supertile(2, "sw"), max_order=0)
        assert report.window_cells == 49
        assert Fraction(report.lambda_by_order[0]) == Fraction(4, 49)
        assert Fraction(report.residual) == Fraction(12, 49)
        assert Fraction(report.lambda_star) == Fraction(33, 49)

    def test_supertile_occurrences(self):
        """Order-1 supertiles of each orientation sit on 8Z^2 shifted by their quadrant"""
        found = supertile_occurrences(supertile(4, "sw"), 1)
        shifts = {"sw": (0, 0), "se": (4, 0), "nw": (0, 4), "ne": (4, 4)}
        for orientation, (sx, sy) in shifts.items():
            expected = [(sx + 8 * a, sy + 8 * b) for b in range(4) for a in range(4)]
            assert found[orientation] == expected

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [0, 1])
    def test_cell_recurrence(self, n):
        """Order-n cells have side 4^(n+1)+1 and repeat verbatim with period 4^(n+2)"""
        window = supertile(7, "sw", copy=False)
        side, period = 4 ** (n + 1) + 1, 4 ** (n + 2)
        origins = cell_occurrences(window, n)
        step = 2 ** (2 * n + 3)
        first = 2 ** (2 * n + 1) - 1
        span = range(255 // step + 1)
        expected = [(first + step * a, first + step * b) for b in span for a in span
                    if first + step * max(a, b) + side <= 255]
        assert origins == expected
        present = set(origins)
        for x, y in origins:
            if (x + period, y) in present:
                here = window.window(x, y, side, side).normalized()
                assert window.window(x + period, y, side, side).normalized() == here
            if (x, y + period) in present:
                here = window.window(x, y, side, side).normalized()
                assert window.window(x, y + period, side, side).normalized() == here

    @pytest.mark.slow
    def test_properly_contained_counts(self):
        """Each order-2 cell properly contains 4 order-1 cells and 4 * 12 order-0 cells"""
        cells = extract_cells(supertile(7, "sw", copy=False))
        largest = [c for c in cells if c.order == 2]
        assert len(largest) == 4
        for cell in largest:
            assert cell.side == 65
            assert len(properly_contained(cells, cell, 1)) == 4
            assert len(properly_contained(cells, cell, 0)) == 4 * 12

    def test_partition_identity(self):
        """Non-blue share, blue shares by order and residual add up to one"""
        report = density(supertile(5, "sw"), max_order=2)
        total = Fraction(report.lambda_star) + Fraction(report.residual)
        total += sum(Fraction(v) for v in report.lambda_by_order.values())
        assert total == 1

    def test_lambda_star(self):
        """Three quarters of the positions are not blue corners"""
        window = supertile(6, "sw")
        assert abs(density_star(window) - Fraction(3, 4)) < Fraction(2, window.width)

    @pytest.mark.slow
    def test_lambda_zero(self):
        """Blue corners in order-0 cells and no smaller have density near 1/16"""
        window = supertile(6, "sw")
        assert abs(density_lambda(window, 0) - Fraction(1, 16)) < Fraction(2, window.width)

    @pytest.mark.slow
    def test_complement(self):
        """1/4 minus the order <= 1 shares approaches 3^2/4^3"""
        window = supertile(6, "sw")
        measured, limit = density_complement(window, 1)
        assert limit == Fraction(9, 64)
        assert abs(measured - limit) < Fraction(4, window.width)


class TestCompletion:
    """Completion of blocks into supertiles"""

    def test_completion_order(self):
        """chi(n) = ceil(log2 n) + 4"""
        assert completion_order(1) == 4
        assert completion_order(2) == 5
        assert completion_order(3) == 6
        assert completion_order(5) == 7

    def test_blocks_from_supertile(self):
        """Sampled 2-blocks complete into an order chi(2) supertile that holds them at the reported offset"""
        rng = random.Random(7)
        source = supertile(5, "sw", copy=False)
        for _ in range(25):
            x, y = rng.randrange(0, source.width - 2), rng.randrange(0, source.height - 2)
            block = source.window(x, y, 2, 2).normalized()
            result = complete_block(block)
            assert result.order == completion_order(2)
            assert result.supertile.contains(block, result.offset)

    @pytest.mark.slow
    def test_many_blocks(self):
        """A thousand sampled n-blocks from an order-6 supertile complete at order chi(n) into admissible supertiles"""
        rng = random.Random(11)
        source = supertile(6, "sw", copy=False)
        admissible = {}
        for n in (2, 3, 5):
            for _ in range(1000 // 3 + 1):
                x, y = rng.randrange(0, source.width - n), rng.randrange(0, source.height - n)
                block = source.window(x, y, n, n).normalized()
                result = complete_block(block)
                assert result.order == completion_order(n)
                assert result.supertile.contains(block, result.offset)
                key = (result.order, result.orientation)
                if key not in admissible:
                    admissible[key] = verify_rules(result.supertile) == []
                assert admissible[key]

    def test_inadmissible_block(self):
        """Blocks breaking the rules are refused"""
        blue = supertile(0, "sw").cells[(0, 0)]
        block = Pattern.of({(0, 0): blue, (1, 0): blue})
        with pytest.raises(NotAdmissible):
            complete_block(block)

    def test_classify_window(self):
        """Window labels are one of the three classes"""
        block = supertile(5, "sw").window(10, 10, 3, 3).normalized()
        assert classify_window(block) in ("single_supertile", "split", "cross")

    def test_classify_known_windows(self):
        """A 3-window on one level-3 line is split, on two crossing ones a cross, below them a single supertile"""
        source = supertile(5, "sw")
        assert classify_window(source.window(6, 1, 3, 3).normalized()) == "split"
        assert classify_window(source.window(1, 6, 3, 3).normalized()) == "split"
        assert classify_window(source.window(6, 6, 3, 3).normalized()) == "cross"
        assert classify_window(source.window(0, 0, 3, 3).normalized()) == "single_supertile"


if __name__ == "__main__":
    pytest.main([__file__])
