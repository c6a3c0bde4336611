"""Unit tests for the order-preserving process map."""

import math

import pytest

from src.utils.parallel import ordered_map


class TestOrderedMap:
    """Tests for ordered_map function."""

    def test_serial(self):
        """Test jobs=1 maps in input order."""
        assert ordered_map(math.factorial, [3, 0, 5]) == [6, 1, 120]

    def test_parallel_matches_serial(self):
        """Test worker processes return results in input order."""
        items = list(range(12, 0, -1))
        assert ordered_map(math.factorial, items, jobs=3) == [
            math.factorial(i) for i in items
        ]

    def test_accepts_iterators(self):
        """Test generators are consumed once."""
        assert ordered_map(abs, (x for x in (-1, -2)), jobs=2) == [1, 2]

    def test_empty(self):
        """Test an empty input gives an empty list."""
        assert ordered_map(abs, [], jobs=4) == []

    def test_invalid_jobs(self):
        """Test fewer than one job is rejected."""
        with pytest.raises(ValueError, match="at least 1"):
            ordered_map(abs, [1], jobs=0)
