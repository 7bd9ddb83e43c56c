"""
Unit tests for confusion counting, mIoU and domain metrics
"""

import numpy as np
import pytest

from src.core.errors import ArgumentError, BoundsError, ShapeError, UndefinedMetricError
from src.core.metrics import confusion, domain_accuracy, domain_auc, miou
from src.models.report import ConfusionMatrix
from src.services.selftest import ORACLE_TRIALS, check_miou_oracle


class TestConfusion:
    """Test suite for confusion"""

    def test_hand_example(self):
        cm = confusion(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 2)
        assert cm.to_list() == [[1, 1], [0, 2]]

    def test_perfect_prediction_is_diagonal(self):
        gt = np.array([0, 2, 1, 2])
        cm = confusion(gt, gt, 3)
        np.testing.assert_array_equal(cm.counts, np.diag([1, 1, 2]))

    def test_all_ignored(self):
        cm = confusion(np.array([-1, -1]), np.array([0, 1]), 2)
        assert cm.total == 0

    def test_total_counts_non_ignored(self):
        gt = np.array([0, -1, 1, 2, -1])
        assert confusion(gt, np.array([1, 1, 1, 1, 1]), 3).total == 3

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            confusion(np.array([0, 1]), np.array([0]), 2)

    def test_prediction_out_of_range(self):
        with pytest.raises(BoundsError):
            confusion(np.array([0]), np.array([2]), 2)

    def test_matrices_add(self):
        a = confusion(np.array([0]), np.array([1]), 2)
        b = confusion(np.array([1]), np.array([1]), 2)
        assert (a + b).to_list() == [[0, 1], [0, 1]]


class TestMIoU:
    """Test suite for miou"""

    def test_hand_example(self):
        ious, mean = miou(confusion(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 2))
        assert ious == pytest.approx([0.5, 2.0 / 3.0])
        assert mean == pytest.approx(7.0 / 12.0)

    def test_diagonal(self):
        ious, mean = miou(ConfusionMatrix(np.diag([3, 1, 2])))
        assert ious == [1.0, 1.0, 1.0]
        assert mean == 1.0

    def test_zero_union_class_excluded(self):
        ious, mean = miou(ConfusionMatrix(np.array([[2, 0, 0], [0, 0, 0], [0, 0, 1]])))
        assert ious[1] is None
        assert mean == 1.0

    def test_undefined(self):
        with pytest.raises(UndefinedMetricError):
            miou(ConfusionMatrix.zeros(3))

    def test_matches_counting_oracle(self):
        result = check_miou_oracle(seed=3)
        assert result.passed, result.detail
        assert result.detail.startswith(f"{ORACLE_TRIALS} ")


class TestDomainMetrics:
    """Test suite for domain accuracy and AUC"""

    def test_accuracy(self):
        assert domain_accuracy([0.2, 0.7, 0.4, 0.9], [0, 1, 1, 1]) == pytest.approx(0.75)

    def test_auc_perfect(self):
        assert domain_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_auc_needs_both_classes(self):
        with pytest.raises(ArgumentError):
            domain_auc([0.1, 0.2], [1, 1])
