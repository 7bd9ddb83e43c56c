"""
Unit tests for budgets and top-score selection

Tests selection functionality including:
- Budget parsing and resolution
- Ordering by score with id tie-break
- Agreement with exhaustive search
"""

from itertools import combinations

import numpy as np
import pytest

from src.core.errors import ArgumentError, NumericError
from src.core.selection import rank_frames, select_top
from src.models.selection import Budget, BudgetKind, ScoringStrategy, SelectionResult
from src.services.selftest import ORACLE_TRIALS, check_selection_oracle


class TestBudget:
    """Test suite for Budget"""

    def test_parse_integer_is_count(self):
        assert Budget.parse(5) == Budget.count(5)
        assert Budget.parse("12").kind is BudgetKind.COUNT

    def test_parse_fraction_and_percent(self):
        assert Budget.parse(0.05).resolve(100) == 5
        assert Budget.parse("5%").resolve(100) == 5
        assert Budget.parse("0.2").kind is BudgetKind.FRACTION

    def test_fraction_floors_with_minimum_one(self):
        assert Budget.fraction(0.01).resolve(10) == 1
        assert Budget.fraction(0.25).resolve(10) == 2

    def test_count_over_domain_size(self):
        with pytest.raises(ArgumentError):
            Budget.count(6).resolve(5)

    @pytest.mark.parametrize("value", [0, -3, 1.5, "abc", True])
    def test_invalid_budgets(self, value):
        with pytest.raises((ArgumentError, ValueError)):
            Budget.parse(value)

    def test_empty_domain(self):
        with pytest.raises(ArgumentError):
            Budget.count(1).resolve(0)

    def test_str(self):
        assert str(Budget.count(3)) == "3"
        assert str(Budget.fraction(0.05)) == "0.05"


class TestSelectTop:
    """Test suite for select_top"""

    def test_hand_example(self):
        result = select_top([(0, 0.9), (1, 0.1), (2, 0.5)], Budget.count(2))
        assert result.frame_ids == [0, 2]
        assert result.scores == [0.9, 0.5]

    def test_ties_break_on_smaller_id(self):
        result = select_top([(7, 0.5), (3, 0.5), (5, 0.5)], Budget.count(2))
        assert result.frame_ids == [3, 5]

    def test_full_budget_is_permutation(self):
        scored = [(i, s) for i, s in enumerate(np.random.default_rng(0).uniform(size=6))]
        result = select_top(scored, Budget.count(6))
        assert sorted(result.frame_ids) == list(range(6))

    def test_strategy_recorded(self):
        result = select_top([(1, 0.2)], Budget.count(1), ScoringStrategy.RANDOM)
        assert result.strategy is ScoringStrategy.RANDOM

    def test_budget_too_large(self):
        with pytest.raises(ArgumentError):
            select_top([(1, 0.2), (2, 0.3)], Budget.count(3))

    def test_nan_score(self):
        with pytest.raises(NumericError):
            rank_frames([(1, float("nan"))])

    def test_duplicate_ids(self):
        with pytest.raises(ArgumentError):
            rank_frames([(1, 0.1), (1, 0.2)])

    def test_maximises_total_score(self):
        rng = np.random.default_rng(4)
        scores = rng.uniform(size=8)
        result = select_top(enumerate(scores.tolist()), Budget.count(3))
        best = max(sum(scores[list(c)]) for c in combinations(range(8), 3))
        assert sum(result.scores) == pytest.approx(best)

    def test_exhaustive_search_agrees(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            n = int(rng.integers(1, 11))
            b = int(rng.integers(1, n + 1))
            scores = rng.integers(0, 5, size=n) / 4.0
            result = select_top(enumerate(scores.tolist()), Budget.count(b))
            best = max(
                combinations(range(n), b),
                key=lambda c: (sum(scores[list(c)]), [-i for i in c]),
            )
            assert sorted(result.frame_ids) == list(best)

    def test_random_instances_match_oracle(self):
        result = check_selection_oracle(seed=11)
        assert result.passed, result.detail
        assert result.detail.startswith(f"{ORACLE_TRIALS} ")


class TestSelectionResult:
    """Test suite for SelectionResult validation"""

    def test_rejects_increasing_scores(self):
        with pytest.raises(ArgumentError):
            SelectionResult(frame_ids=[1, 2], scores=[0.1, 0.2], budget=2)

    def test_rejects_duplicates(self):
        with pytest.raises(ArgumentError):
            SelectionResult(frame_ids=[1, 1], scores=[0.2, 0.1], budget=2)

    def test_dict_round_trip(self):
        result = SelectionResult(frame_ids=[4, 2], scores=[0.8, 0.3], budget=2, strategy=ScoringStrategy.TWO_D_ONLY)
        assert SelectionResult.from_dict(result.to_dict()) == result
