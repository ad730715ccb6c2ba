"""
Unit tests for the SFT kernel: checking, enumeration, extension, strip counts
"""

import itertools
import json

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.schemas.pattern import ForbiddenPattern, Pattern, SftDefinition
from app.services.builtin_sfts import (BLACK, WHITE, chess_sft, delta_sft, even_sft, full_shift, get_builtin,
                                       load_sft, sft_from_json_dict)
from app.services.sft_core import (check_pattern, count_blocks, enumerate_blocks, extend_pattern, find_torus,
                                   is_admissible, rect, strip_counts)
from app.utils.error_handler import DefinitionError, UnknownSymbol, WidthTooSmall


def brute_force_count(sft: SftDefinition, width: int, height: int) -> int:
    total = 0
    for symbols in itertools.product(sft.alphabet, repeat=width * height):
        cells = {c: s for c, s in zip(rect(width, height), symbols)}
        if not check_pattern(sft, Pattern.of(cells)):
            total += 1
    return total


class TestCheckPattern:
    """Forbidden pattern placement"""

    def test_chess_horizontal_pair(self):
        """Two black cells side by side violate the chess rules once"""
        violations = check_pattern(chess_sft(), Pattern.from_rows([BLACK + BLACK]))
        assert len(violations) == 1
        assert violations[0].anchor == (0, 0)

    def test_empty_pattern(self):
        """The empty pattern has no violation"""
        assert check_pattern(chess_sft(), Pattern.of({})) == []

    def test_even_all_white(self):
        """A white 3x3 block is admissible for hard squares"""
        assert check_pattern(even_sft(), Pattern.filled(3, 3, WHITE)) == []

    def test_unknown_symbol(self):
        """Symbols outside the alphabet are rejected"""
        with pytest.raises(UnknownSymbol):
            check_pattern(chess_sft(), Pattern.from_rows(["x"]))

    def test_vertical_down_pair(self):
        """Stacked ↓ in the curve layer is one violation"""
        assert len(check_pattern(delta_sft(), Pattern.from_rows(["↓", "↓"]))) == 1


class TestEnumerateBlocks:
    """Block enumeration and counting"""

    def test_full_shift(self):
        """No constraints: 2^9 blocks of side 3"""
        assert count_blocks(full_shift(2), 3) == 512

    def test_chess_two_phases(self):
        """Only the two checkerboard phases survive at n = 2"""
        assert count_blocks(chess_sft(), 2) == 2

    def test_delta_single_cell(self):
        """Both curve symbols are allowed on their own"""
        assert count_blocks(delta_sft(), 1) == 2

    def test_collect_matches_count(self):
        """Collected blocks are distinct, admissible and as many as counted"""
        blocks = enumerate_blocks(even_sft(), 3)
        assert len(blocks) == count_blocks(even_sft(), 3)
        assert len(set(blocks)) == len(blocks)
        assert all(is_admissible(even_sft(), b) for b in blocks)

    def test_deterministic_order(self):
        """Search order is reproducible"""
        assert enumerate_blocks(even_sft(), 2) == enumerate_blocks(even_sft(), 2)

    def test_matches_brute_force(self):
        """Backtracking agrees with trying every filling"""
        for sft in (even_sft(), chess_sft(), delta_sft()):
            assert count_blocks(sft, 2) == brute_force_count(sft, 2, 2)


class TestExtendPattern:
    """Search completion of partial patterns"""

    def test_even_single_black(self):
        """A lone black cell extends to a 3x3 block"""
        result = extend_pattern(even_sft(), Pattern.of({(0, 0): BLACK}), rect(3, 3))
        assert result is not None
        assert result.cells[(0, 0)] == BLACK
        assert check_pattern(even_sft(), result) == []

    def test_chess_conflict(self):
        """Two horizontal black cells never extend"""
        fixed = Pattern.of({(0, 0): BLACK, (1, 0): BLACK})
        assert extend_pattern(chess_sft(), fixed, rect(3, 3)) is None

    def test_already_filled(self):
        """An admissible filling of the target comes back unchanged"""
        block = Pattern.from_rows([WHITE + BLACK, BLACK + WHITE])
        assert extend_pattern(chess_sft(), block, rect(2, 2)) == block


class TestStripCounts:
    """Transfer counting on strips"""

    def test_full_shift_free(self):
        """Free 3x2 strips of the full shift"""
        assert strip_counts(full_shift(2), 3, 2).count == 64

    def test_even_free_matches_brute_force(self):
        """Hard squares on a 2x2 square: 7 fillings"""
        assert strip_counts(even_sft(), 2, 2).count == brute_force_count(even_sft(), 2, 2) == 7

    def test_chess_torus(self):
        """The 4x4 torus carries both checkerboards"""
        assert strip_counts(chess_sft(), 4, 4, boundary="periodic").count == 2

    def test_counts_by_height(self):
        """One transfer pass gives every height: 3, 7, 17 hard-square fillings of width 2"""
        result = strip_counts(even_sft(), 2, 3)
        assert result.max_height == 3
        assert result.counts_by_height == {1: 3, 2: 7, 3: 17}
        assert result.count == 17

    def test_heights_match_single_calls(self):
        """Each per-height count equals the count asked for at that height"""
        for boundary in ("free", "periodic"):
            counts = strip_counts(even_sft(), 3, 4, boundary).counts_by_height
            assert counts == {h: strip_counts(even_sft(), 3, h, boundary).count for h in range(1, 5)}

    def test_chess_tori_by_height(self):
        """Width-2 chess tori exist at even heights only"""
        counts = strip_counts(chess_sft(), 2, 4, boundary="periodic").counts_by_height
        assert counts == {1: 0, 2: 2, 3: 0, 4: 2}

    def test_width_below_rank(self):
        """Strips narrower than the rank are refused"""
        with pytest.raises(WidthTooSmall):
            strip_counts(chess_sft(), 1, 3)

    def test_free_at_least_periodic(self):
        """Torus fillings are free fillings too"""
        for w, h in [(2, 2), (3, 3), (4, 2)]:
            assert strip_counts(even_sft(), w, h).count >= strip_counts(even_sft(), w, h, "periodic").count

    @given(st.integers(min_value=1, max_value=3), st.integers(min_value=1, max_value=3),
           st.integers(min_value=2, max_value=3))
    @hyp_settings(max_examples=20, deadline=None)
    def test_submultiplicative(self, a, b, c):
        """N(c, a+b) <= N(c, a) N(c, b) under free boundary"""
        sft = even_sft()
        assert strip_counts(sft, c, a + b).count <= strip_counts(sft, c, a).count * strip_counts(sft, c, b).count


class TestDefinitions:
    """Definition loading and validation"""

    def test_json_round_trip(self):
        """A definition reloads to an equal value"""
        sft = even_sft()
        again = sft_from_json_dict(json.loads(json.dumps(sft.to_json_dict())))
        assert again == sft

    def test_unknown_symbol_in_forbidden(self):
        """Forbidden cells must use alphabet symbols"""
        with pytest.raises(UnknownSymbol):
            sft_from_json_dict({"name": "bad", "alphabet": ["a"], "forbidden": [{"cells": [[0, 0, "b"]]}]})

    def test_missing_alphabet(self):
        """The alphabet is required"""
        with pytest.raises(DefinitionError):
            sft_from_json_dict({"name": "bad"})

    def test_unknown_builtin(self):
        """Unknown names are definition errors"""
        with pytest.raises(DefinitionError):
            get_builtin("nope")

    def test_rank(self):
        """The rank is the side of the largest forbidden support"""
        sft = SftDefinition(name="t", alphabet=["a", "b"], forbidden=[
            ForbiddenPattern.build({(0, 0): "a", (2, 1): "b"})])
        assert sft.rank == 3
        assert sft.depth == 1

    def test_load_from_file(self, tmp_path):
        """Definitions load from JSON files"""
        path = tmp_path / "even.json"
        path.write_text(json.dumps(even_sft().to_json_dict()), encoding="utf-8")
        assert load_sft(path).forbidden == even_sft().forbidden

    def test_torus_search(self):
        """Chess has a 2x2 torus but no 1x1 torus"""
        assert find_torus(chess_sft(), 2, 2) is not None
        assert find_torus(chess_sft(), 1, 1) is None


if __name__ == "__main__":
    pytest.main([__file__])
