"""
Unit tests for periodic point constructions and bounded period refutation
"""

import pytest

from app.schemas.gluing import FundamentalDomain, GapTable
from app.schemas.pattern import Pattern
from app.services.builtin_sfts import BLACK, WHITE, chess_sft, even_sft, get_builtin, trivial_sft
from app.services.periodic import (decide_membership, find_periodic_point, membership_domain,
                                   periodic_point_containing, reduce_domain, refute_period, threshold_holds,
                                   verify_domain)
from app.services.sft_core import enumerate_blocks, find_torus
from app.utils.error_handler import Inadmissible, ThresholdUnmet


def occurs_periodically(domain: FundamentalDomain, block: Pattern) -> bool:
    """Block occurs somewhere in the doubly periodic repetition of the domain"""
    w, h = domain.width, domain.height
    for oy in range(h):
        for ox in range(w):
            if all(domain.pattern.cells[((x + ox) % w, (y + oy) % h)] == s for (x, y), s in block.cells.items()):
                return True
    return False


class TestThreshold:
    """Periodicity threshold on the gap function"""

    def test_rank_one(self):
        """Rank one always qualifies"""
        assert threshold_holds(2, 1, 1, 100)

    def test_even_values(self):
        """f(n) = 1 qualifies from n = 3 for a binary alphabet of rank 2"""
        assert not threshold_holds(2, 2, 2, 1)
        assert threshold_holds(2, 2, 3, 1)


class TestFindPeriodicPoint:
    """Periodic points from a strip glued over itself"""

    @pytest.mark.parametrize("n", [3, 4])
    def test_even(self, n):
        """The domain passes the torus check"""
        domain = find_periodic_point(even_sft(), GapTable.constant(1), n)
        assert verify_domain(even_sft(), domain)

    def test_chess(self):
        """Chess gives the 2x2 checkerboard"""
        domain = find_periodic_point(chess_sft(), GapTable.constant(1), 4)
        assert verify_domain(chess_sft(), domain)
        assert (domain.width, domain.height) == (2, 2)

    def test_threshold_unmet(self):
        """Too narrow a strip for the gap is refused"""
        with pytest.raises(ThresholdUnmet):
            find_periodic_point(even_sft(), GapTable.constant(5), 3)

    @pytest.mark.parametrize("n", range(3, 9))
    def test_even_threshold_law(self, n):
        """Whenever f = 1 meets the threshold, hard squares yield a periodic point"""
        assert threshold_holds(2, 2, n, 1)
        assert verify_domain(even_sft(), find_periodic_point(even_sft(), GapTable.constant(1), n))

    def test_reduce(self):
        """An all-white domain reduces to a single cell"""
        domain = FundamentalDomain(width=2, height=4, pattern=Pattern.filled(2, 4, WHITE))
        reduced = reduce_domain(domain)
        assert (reduced.width, reduced.height) == (1, 1)


class TestContaining:
    """Periodic points through a given block"""

    def test_even_single_black(self):
        """A black cell lies on a periodic point of hard squares"""
        block = Pattern.of({(0, 0): BLACK})
        domain = periodic_point_containing(even_sft(), block, GapTable.constant(1))
        assert verify_domain(even_sft(), domain)
        assert occurs_periodically(domain, block)

    def test_even_diagonal_block(self):
        """A diagonal pair of black cells lies on a periodic point"""
        block = Pattern.from_rows([WHITE + BLACK, BLACK + WHITE])
        domain = periodic_point_containing(even_sft(), block, GapTable.constant(1))
        assert verify_domain(even_sft(), domain)
        assert occurs_periodically(domain, block)

    def test_inadmissible(self):
        """Inadmissible blocks are refused"""
        with pytest.raises(Inadmissible):
            periodic_point_containing(even_sft(), Pattern.from_rows([BLACK + BLACK]), GapTable.constant(1))

    def test_chess_single_black(self):
        """A black cell lies on the checkerboard"""
        block = Pattern.of({(0, 0): BLACK})
        domain = periodic_point_containing(chess_sft(), block, GapTable.constant(1))
        assert verify_domain(chess_sft(), domain)
        assert (domain.width, domain.height) == (2, 2)
        assert occurs_periodically(domain, block)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_chess_every_block(self, n):
        """Copies are spaced so that their checkerboard phases agree"""
        for block in enumerate_blocks(chess_sft(), n):
            domain = periodic_point_containing(chess_sft(), block, GapTable.constant(1))
            assert verify_domain(chess_sft(), domain)
            assert occurs_periodically(domain, block)

    @pytest.mark.parametrize("n", [2, 3])
    def test_even_every_block(self, n):
        """Every hard-square block lies on a periodic point"""
        for block in enumerate_blocks(even_sft(), n):
            domain = periodic_point_containing(even_sft(), block, GapTable.constant(1))
            assert verify_domain(even_sft(), domain)
            assert occurs_periodically(domain, block)


class TestMembership:
    """Deciding whether a block occurs in a periodic point"""

    def test_even_two_blocks(self):
        """Agrees with a direct torus search on every 2-block of hard squares"""
        for block in enumerate_blocks(even_sft(), 2):
            brute = any(find_torus(even_sft(), w, h, fixed=block) is not None
                        for w in range(2, 5) for h in range(2, 5))
            assert decide_membership(even_sft(), block, GapTable.constant(1)) == brute

    def test_domain_contains_block(self):
        """The torus found carries the block"""
        block = Pattern.from_rows([WHITE + BLACK, BLACK + WHITE])
        domain = membership_domain(even_sft(), block, GapTable.constant(1))
        assert domain is not None
        assert verify_domain(even_sft(), domain)
        assert occurs_periodically(domain, block)

    def test_inadmissible(self):
        """Inadmissible blocks are never members"""
        assert not decide_membership(even_sft(), Pattern.from_rows([BLACK + BLACK]), GapTable.constant(1))

    def test_blocks_of_returned_domain(self):
        """Every 2-block read off a constructed periodic point is a member"""
        domain = periodic_point_containing(even_sft(), Pattern.from_rows([WHITE + BLACK, BLACK + WHITE]),
                                           GapTable.constant(1))
        w, h = domain.width, domain.height
        for oy in range(h):
            for ox in range(w):
                block = Pattern.of({(x, y): domain.pattern.cells[((ox + x) % w, (oy + y) % h)]
                                    for y in range(2) for x in range(2)})
                assert decide_membership(even_sft(), block, GapTable.constant(1))

    def test_decision_matches_domain(self):
        """decide_membership is true exactly when membership_domain finds a torus"""
        for block in enumerate_blocks(chess_sft(), 2) + [Pattern.from_rows([BLACK + BLACK])]:
            domain = membership_domain(chess_sft(), block, GapTable.constant(1))
            assert decide_membership(chess_sft(), block, GapTable.constant(1)) == (domain is not None)
            if domain is not None:
                assert occurs_periodically(domain, block)


class TestRefutePeriod:
    """Exhaustive torus search"""

    def test_chess(self):
        """Chess has a 2x2 period"""
        found = [(d.width, d.height) for d in refute_period(chess_sft(), 2)]
        assert (2, 2) in found
        assert (1, 1) not in found

    def test_trivial(self):
        """The one-symbol shift has period 1"""
        assert (1, 1) in [(d.width, d.height) for d in refute_period(trivial_sft(), 1)]

    def test_threads_agree(self):
        """Parallel search finds the same tori in the same order"""
        serial = [(d.width, d.height) for d in refute_period(chess_sft(), 4)]
        assert [(d.width, d.height) for d in refute_period(chess_sft(), 4, threads=3)] == serial
        assert serial == [(2, 2), (4, 2), (2, 4), (4, 4)]

    @pytest.mark.slow
    def test_robinson(self):
        """The aligned Robinson subshift has no period up to 4"""
        assert refute_period(get_builtin("robinson_adr"), 4) == []


if __name__ == "__main__":
    pytest.main([__file__])
