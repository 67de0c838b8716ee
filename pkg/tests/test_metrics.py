import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privsense.metrics import (
    evaluate,
    majority_baseline,
    random_baseline,
    read_predictions,
    render_report_table,
)
from privsense.errors import (
    BadDistribution,
    EmptyInput,
    FormatError,
    LengthMismatch,
    OutOfRange,
)

TABLE1_SHARES = (0.4601, 0.1658, 0.1681, 0.1421, 0.0638)


class TestEvaluate:
    def test_identity(self):
        gold = [1, 2, 3, 4, 5, 3]
        report = evaluate(gold, gold)
        assert report.accuracy == 1.0
        assert report.mae == 0.0
        assert report.adjacent_error_share == 0.0

    def test_extreme_miss(self):
        report = evaluate([1] * 10, [5] * 10)
        assert report.mae == 4.0
        assert report.accuracy == 0.0

    def test_mae_and_adjacent_share(self):
        report = evaluate([2, 4], [1, 2])
        assert report.mae == pytest.approx(1.5)
        assert report.adjacent_error_share == pytest.approx(0.5)

    def test_confusion_counts(self):
        report = evaluate([1, 1, 2], [1, 2, 2])
        cm = report.confusion.counts
        assert cm.sum() == 3
        assert cm[0, 0] == 1 and cm[0, 1] == 1 and cm[1, 1] == 1

    def test_macro_is_mean_of_per_class(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 50))
            gold = rng.integers(1, 6, n)
            pred = rng.integers(1, 6, n)
            report = evaluate(gold, pred)
            assert report.macro_f1 == pytest.approx(
                np.mean(report.per_class_f1), abs=1e-12
            )

    def test_absent_class_f1_zero(self):
        report = evaluate([1, 1], [1, 1])
        assert report.per_class_f1[0] == 1.0
        assert report.per_class_f1[1:] == [0.0] * 4

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evaluate([1, 2], [1])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            evaluate([], [])

    def test_out_of_scale(self):
        with pytest.raises(OutOfRange):
            evaluate([1, 6], [1, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 5)), min_size=1, max_size=40))
    def test_reversal_leaves_mae_invariant(self, pairs):
        gold = [g for g, _ in pairs]
        pred = [p for _, p in pairs]
        flipped = evaluate([6 - g for g in gold], [6 - p for p in pred])
        assert flipped.mae == pytest.approx(evaluate(gold, pred).mae, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 5)), min_size=1, max_size=40))
    def test_mae_zero_iff_perfect(self, pairs):
        gold = [g for g, _ in pairs]
        pred = [p for _, p in pairs]
        report = evaluate(gold, pred)
        assert (report.mae == 0.0) == (report.accuracy == 1.0)
        assert report.adjacent_error_share <= 1.0


class TestMajorityBaseline:
    def test_corpus_distribution_matches_reported_values(self):
        report = majority_baseline(TABLE1_SHARES)
        assert report.accuracy == pytest.approx(0.460, abs=0.01)
        assert report.macro_f1 == pytest.approx(0.126, abs=0.01)

    def test_uniform(self):
        report = majority_baseline([0.2] * 5)
        assert report.accuracy == pytest.approx(0.2)
        # closed form 2p/(5(1+p)) with p = 0.2
        assert report.macro_f1 == pytest.approx(2 * 0.2 / (5 * 1.2), abs=1e-12)

    def test_degenerate_single_class(self):
        report = majority_baseline([1, 0, 0, 0, 0])
        assert report.accuracy == 1.0
        assert report.macro_f1 == pytest.approx(0.2)
        assert report.per_class_f1 == [1.0, 0.0, 0.0, 0.0, 0.0]
        assert report.mae == 0.0

    def test_tie_breaks_to_lowest_class(self):
        report = majority_baseline([0.3, 0.3, 0.2, 0.1, 0.1])
        # argmax tie between class 1 and 2 resolves to class 1
        assert report.per_class_f1[0] > 0
        assert report.per_class_f1[1] == 0.0

    def test_bad_distributions(self):
        for shares in ([0.5, 0.5], [0.5, 0.2, 0.2, 0.2, 0.2], [-0.2, 0.4, 0.4, 0.2, 0.2]):
            with pytest.raises(BadDistribution):
                majority_baseline(shares)


class TestRandomBaseline:
    def test_corpus_distribution_matches_reported_values(self):
        report = random_baseline(TABLE1_SHARES)
        assert report.accuracy == pytest.approx(0.2, abs=1e-12)
        assert report.macro_f1 == pytest.approx(0.181, abs=0.005)

    def test_uniform(self):
        report = random_baseline([0.2] * 5)
        assert report.accuracy == pytest.approx(0.2)
        assert report.macro_f1 == pytest.approx(0.2, abs=1e-12)

    def test_degenerate_single_class(self):
        report = random_baseline([1, 0, 0, 0, 0])
        assert report.accuracy == pytest.approx(0.2)
        assert report.per_class_f1[0] == pytest.approx(2 * 0.2 / 1.2, abs=1e-12)

    def test_mae_closed_form_uniform(self):
        report = random_baseline([0.2] * 5)
        dist = np.abs(np.arange(5)[:, None] - np.arange(5)[None, :])
        assert report.mae == pytest.approx(dist.mean(), abs=1e-12)


class TestSimulationConvergence:
    def test_majority_simulation_matches_closed_form(self):
        rng = np.random.default_rng(123)
        shares = np.asarray(TABLE1_SHARES) / sum(TABLE1_SHARES)
        gold = rng.choice(np.arange(1, 6), size=100_000, p=shares)
        pred = np.full_like(gold, 1 + int(np.argmax(shares)))
        simulated = evaluate(gold, pred)
        expected = majority_baseline(TABLE1_SHARES)
        assert simulated.accuracy == pytest.approx(expected.accuracy, abs=0.01)
        assert simulated.macro_f1 == pytest.approx(expected.macro_f1, abs=0.01)
        assert simulated.mae == pytest.approx(expected.mae, abs=0.01)

    def test_random_simulation_matches_closed_form(self):
        rng = np.random.default_rng(321)
        shares = np.asarray(TABLE1_SHARES) / sum(TABLE1_SHARES)
        gold = rng.choice(np.arange(1, 6), size=100_000, p=shares)
        pred = rng.integers(1, 6, size=100_000)
        simulated = evaluate(gold, pred)
        expected = random_baseline(TABLE1_SHARES)
        assert simulated.accuracy == pytest.approx(expected.accuracy, abs=0.01)
        assert simulated.macro_f1 == pytest.approx(expected.macro_f1, abs=0.01)
        assert simulated.mae == pytest.approx(expected.mae, abs=0.01)


class TestPredictionIO:
    def test_read_predictions(self, tmp_path):
        p = tmp_path / "pred.jsonl"
        p.write_text(
            '{"_provenance": {"seed": 0}}\n'
            '{"id": "a", "gold": 3, "pred": 2}\n'
            '{"id": "b", "gold": 1, "pred": 1}\n',
            encoding="utf-8",
        )
        gold, pred = read_predictions(p)
        assert gold == [3, 1] and pred == [2, 1]

    def test_bad_row(self, tmp_path):
        p = tmp_path / "pred.jsonl"
        p.write_text('{"id": "a", "gold": "x", "pred": 2}\n', encoding="utf-8")
        with pytest.raises(FormatError):
            read_predictions(p)

    def test_render_table_has_all_columns(self):
        report = evaluate([1, 2, 3], [1, 2, 4])
        table = render_report_table({"m": report})
        assert table.splitlines()[0].count("|") == 10
        assert "| m |" in table
