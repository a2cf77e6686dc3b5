"""
Tests for evaluation metrics and the text report.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ferex.errors import DataValidationError
from ferex.models.schemas import ClassLabel
from ferex.services.metrics import (
    CONFUSION_HEADER,
    ConfusionMatrix,
    argmax_labels,
    confusion_to_csv,
    evaluate,
    predict,
    read_confusion_csv,
    render_report,
    report_from_confusion,
    write_confusion_csv,
)


def _labels_from_counts(counts: list[list[int]]) -> tuple[list[int], list[int]]:
    """Expand a confusion matrix into parallel prediction/label lists."""
    preds, truth = [], []
    for t, row in enumerate(counts):
        for p, k in enumerate(row):
            preds += [p] * k
            truth += [t] * k
    return preds, truth


class TestEvaluate:
    """Tests for evaluate."""

    def test_small_example(self):
        """Three of four right gives 0.75 overall and the expected matrix."""
        report = evaluate([0, 1, 2, 2], [0, 1, 2, 1])
        assert report.overall_accuracy == 0.75
        assert report.per_class_recall == (1.0, 0.5, 1.0)
        assert report.confusion.counts.tolist() == [[1, 0, 0], [0, 1, 1], [0, 0, 1]]
        assert report.n == 4

    def test_accepts_class_labels(self):
        """ClassLabel members count as their integer index."""
        report = evaluate([ClassLabel.NEGATIVE, ClassLabel.POSITIVE], [ClassLabel.NEGATIVE, ClassLabel.NEUTRAL])
        assert report.overall_accuracy == 0.5

    def test_trace_identity(self):
        """Overall accuracy equals trace / total."""
        preds, truth = _labels_from_counts([[5, 2, 1], [3, 7, 0], [0, 4, 8]])
        report = evaluate(preds, truth)
        assert report.overall_accuracy == pytest.approx(20 / 30)
        assert report.confusion.total == 30

    def test_empty_row_recall_is_zero(self):
        """A class absent from the labels has recall 0 and no division error."""
        report = evaluate([0, 0, 2], [0, 0, 2])
        assert report.per_class_recall[ClassLabel.NEUTRAL] == 0.0
        assert report.confusion.empty_rows == [ClassLabel.NEUTRAL]

    @pytest.mark.parametrize(
        ("preds", "labels"),
        [([0, 1], [0]), ([], []), ([3], [0]), ([0], [-1])],
    )
    def test_invalid_input(self, preds, labels):
        """Mismatched lengths, empty input and out-of-range values are rejected."""
        with pytest.raises(DataValidationError):
            evaluate(preds, labels)

    @settings(max_examples=50, deadline=None)
    @given(
        pairs=st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=60),
        perm=st.permutations(range(3)),
    )
    def test_permutation_invariance(self, pairs, perm):
        """Relabelling classes consistently keeps overall accuracy."""
        preds = [p for p, _ in pairs]
        truth = [t for _, t in pairs]
        base = evaluate(preds, truth).overall_accuracy
        moved = evaluate([perm[p] for p in preds], [perm[t] for t in truth]).overall_accuracy
        assert moved == pytest.approx(base)


class TestConfusionMatrix:
    """Tests for ConfusionMatrix."""

    def test_normalized_rows_sum_to_one(self):
        """Non-empty rows sum to 1 and empty rows stay zero."""
        matrix = ConfusionMatrix(counts=np.array([[2, 2, 0], [0, 0, 0], [1, 0, 3]]))
        norm = matrix.normalized()
        assert norm[0].tolist() == [0.5, 0.5, 0.0]
        assert norm[1].tolist() == [0.0, 0.0, 0.0]
        assert norm[2].sum() == pytest.approx(1.0)

    def test_rejects_bad_shape(self):
        """Only non-negative 3x3 matrices are valid."""
        with pytest.raises(DataValidationError):
            ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64))
        with pytest.raises(DataValidationError):
            ConfusionMatrix(counts=-np.ones((3, 3), dtype=np.int64))

    def test_report_from_confusion_matches_evaluate(self):
        """Rebuilding the report from counts gives the same numbers."""
        direct = evaluate([0, 1, 2, 2, 1], [0, 1, 2, 1, 1])
        rebuilt = report_from_confusion(direct.confusion)
        assert rebuilt.overall_accuracy == direct.overall_accuracy
        assert rebuilt.per_class_recall == direct.per_class_recall

    def test_report_from_empty_confusion(self):
        """A matrix with no observations cannot make a report."""
        with pytest.raises(DataValidationError):
            report_from_confusion(ConfusionMatrix(counts=np.zeros((3, 3), dtype=np.int64)))


class TestRenderReport:
    """Tests for render_report."""

    def _report(self):
        # recalls 0.80 / 0.39 / 0.91 over class sizes 10 / 100 / 100
        counts = [[8, 1, 1], [30, 39, 31], [4, 5, 91]]
        return evaluate(*_labels_from_counts(counts))

    def test_percentages_and_counts(self):
        """Overall accuracy and per-class recall print with one decimal."""
        text = render_report(self._report(), title="test set")
        lines = text.splitlines()
        assert lines[0] == "== test set =="
        assert lines[1] == "overall accuracy: 65.7%"
        assert lines[2] == "examples: 210"
        assert "  negative   80.0%  (n=10)" in lines
        assert "  neutral    39.0%  (n=100)" in lines
        assert "  positive   91.0%  (n=100)" in lines

    def test_matrix_rows(self):
        """Matrix rows are row-normalised with two decimals."""
        text = render_report(self._report())
        assert "  negative       0.80      0.10      0.10" in text.splitlines()
        assert "rows = true label" in text

    def test_chance_verdict(self):
        """Every recall above 1/3 reads yes; one below reads no."""
        assert render_report(self._report()).rstrip().endswith("for every class: yes")
        weak = evaluate(*_labels_from_counts([[1, 3, 0], [0, 3, 0], [0, 0, 3]]))
        assert weak.beats_chance is False
        assert render_report(weak).rstrip().endswith("for every class: no")

    def test_empty_row_marked(self):
        """A class without examples is flagged n=0."""
        text = render_report(evaluate([0, 2], [0, 2]))
        assert any(line.startswith("  neutral") and line.endswith("(n=0)") for line in text.splitlines())


class TestConfusionCsv:
    """Tests for the confusion CSV."""

    def test_layout(self):
        """Header then one row of raw counts per true class."""
        matrix = ConfusionMatrix(counts=np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]]))
        lines = confusion_to_csv(matrix).splitlines()
        assert lines[0] == ",".join(CONFUSION_HEADER)
        assert lines[1:] == ["negative,1,2,3", "neutral,4,5,6", "positive,7,8,9"]

    def test_write_and_read(self, tmp_path):
        """A written matrix reads back unchanged."""
        matrix = ConfusionMatrix(counts=np.array([[3, 0, 1], [0, 2, 0], [1, 1, 4]]))
        path = tmp_path / "confusion.csv"
        write_confusion_csv(matrix, path)
        assert read_confusion_csv(path).counts.tolist() == matrix.counts.tolist()

    def test_read_rejects_foreign_file(self, tmp_path):
        """A CSV without the confusion header is rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("epoch,train_acc\n1,0.5\n")
        with pytest.raises(DataValidationError):
            read_confusion_csv(path)


class TestPredict:
    """Tests for argmax_labels and predict."""

    def test_ties_go_to_lowest_index(self):
        """Equal logits resolve to the first class."""
        logits = np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]], dtype=np.float32)
        assert argmax_labels(logits) == [ClassLabel.NEGATIVE, ClassLabel.NEUTRAL]

    def test_predict_zero_network_uses_head_bias(self, tiny_config, tiny_params):
        """With zero weights every image gets the class with the largest head bias."""
        params = tiny_params.zeros_like()
        params.fc[-1].bias[:] = np.array([0.0, 0.0, 1.0], dtype=np.float32)
        images = np.random.default_rng(0).random((5, 1, 16, 16)).astype(np.float32)
        assert predict(params, tiny_config, images) == [ClassLabel.POSITIVE] * 5
