import random

import pytest

from litscreen.errors import CoverageError, LitscreenError
from litscreen.evaluation import (
    ConfusionMatrix,
    GroundTruthLabel,
    agreement_stats,
    confusion,
    estimate_cost,
    estimate_manual_effort,
    estimate_run_cost,
    metrics,
    misjudgment_histogram,
    parse_labels_csv,
)
from litscreen.verdicts import Label, Verdict

import oracles

# Published evaluation table: counts and the derived percentages
# (five models plus the two consensus columns), 8,323 labeled papers.
REFERENCE_TABLE = {
    "llama3-8b": ((86, 774, 7461, 2), (90.68, 10.00, 97.73, 18.14)),
    "llama3-70b": ((85, 194, 8041, 3), (97.63, 30.47, 96.59, 46.32)),
    "gemini-1.5-flash": ((67, 91, 8144, 21), (98.65, 42.41, 76.14, 54.47)),
    "claude-3.5-sonnet": ((76, 95, 8140, 12), (98.71, 44.44, 86.36, 58.69)),
    "gpt-4o": ((80, 50, 8185, 8), (99.30, 61.54, 90.91, 73.39)),
    "consensus-all": ((87, 862, 7373, 1), (89.63, 9.17, 98.86, 16.78)),
    "consensus-best": ((87, 167, 8068, 1), (97.98, 34.25, 98.86, 50.88)),
}


def _labels(included_ids, discarded_ids):
    return [
        *(GroundTruthLabel(paper_id=p, label=Label.INCLUDED) for p in included_ids),
        *(GroundTruthLabel(paper_id=p, label=Label.DISCARDED) for p in discarded_ids),
    ]


class TestConfusion:
    def test_perfect_predictions(self):
        labels = _labels(["i1", "i2"], ["d1", "d2", "d3"])
        predictions = {"i1": Verdict.INCLUDE, "i2": Verdict.INCLUDE,
                       "d1": Verdict.DISCARD, "d2": Verdict.DISCARD, "d3": Verdict.DISCARD}
        cm = confusion(predictions, labels)
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (2, 0, 3, 0)

    def test_ambiguous_counts_as_include(self):
        labels = _labels(["i1"], ["d1"])
        predictions = {"i1": Verdict.AMBIGUOUS, "d1": Verdict.ERROR}
        cm = confusion(predictions, labels)
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (1, 1, 0, 0)

    def test_unlabeled_predictions_ignored(self):
        labels = _labels(["i1"], [])
        predictions = {"i1": Verdict.INCLUDE, "extra": Verdict.DISCARD}
        assert confusion(predictions, labels).total() == 1

    def test_missing_prediction_is_coverage_error(self):
        labels = _labels(["i1"], ["d1"])
        with pytest.raises(CoverageError):
            confusion({"i1": Verdict.INCLUDE}, labels)

    def test_randomized_matches_brute_force(self):
        rng = random.Random(1234)
        paper_ids = [f"p{i}" for i in range(200)]
        labels = [
            GroundTruthLabel(paper_id=p, label=rng.choice([Label.INCLUDED, Label.DISCARDED]))
            for p in paper_ids
        ]
        predictions = {p: rng.choice(list(Verdict)) for p in paper_ids}
        cm = confusion(predictions, labels)
        expected = oracles.confusion_counts(
            {p: v.value for p, v in predictions.items()},
            {gt.paper_id: gt.label.value for gt in labels},
        )
        assert cm.as_dict() == expected

    def test_conservation(self):
        labels = _labels([f"i{k}" for k in range(7)], [f"d{k}" for k in range(13)])
        predictions = {gt.paper_id: Verdict.INCLUDE for gt in labels}
        assert confusion(predictions, labels).total() == 20


class TestMetrics:
    @pytest.mark.parametrize("column", sorted(REFERENCE_TABLE))
    def test_reference_table_reproduced(self, column):
        (tp, fp, tn, fn), (acc, prec, rec, f1) = REFERENCE_TABLE[column]
        cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
        assert cm.total() == 8323
        report = metrics(cm)
        assert report.accuracy == pytest.approx(acc, abs=0.005)
        assert report.precision == pytest.approx(prec, abs=0.005)
        assert report.recall == pytest.approx(rec, abs=0.005)
        assert report.f1 == pytest.approx(f1, abs=0.005)

    def test_perfect_predictor_scores_100(self):
        report = metrics(ConfusionMatrix(tp=5, fp=0, tn=5, fn=0))
        assert (report.accuracy, report.precision, report.recall, report.f1) == (
            100.0, 100.0, 100.0, 100.0,
        )

    def test_undefined_precision(self):
        report = metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=5))
        assert report.precision is None
        assert report.recall == 0.0
        assert report.f1 is None

    def test_zero_f1_when_both_zero(self):
        report = metrics(ConfusionMatrix(tp=0, fp=3, tn=5, fn=5))
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_empty_matrix_rejected(self):
        with pytest.raises(LitscreenError):
            metrics(ConfusionMatrix())

    def test_rounded_display(self):
        report = metrics(ConfusionMatrix(tp=80, fp=50, tn=8185, fn=8))
        assert report.rounded() == {
            "accuracy": 99.30, "precision": 61.54, "recall": 90.91, "f1": 73.39,
        }


class TestMisjudgmentHistogram:
    AGENTS = ["a", "b", "c", "d", "e"]

    def test_all_correct_gives_empty_maps(self):
        labels = _labels(["i1"], ["d1"])
        matrix = {
            "i1": {a: Verdict.INCLUDE for a in self.AGENTS},
            "d1": {a: Verdict.DISCARD for a in self.AGENTS},
        }
        histogram = misjudgment_histogram(matrix, labels)
        assert histogram.false_inclusions.buckets == {}
        assert histogram.false_exclusions.buckets == {}

    def test_unanimously_lost_paper(self):
        labels = _labels(["i1"], [])
        matrix = {"i1": {a: Verdict.DISCARD for a in self.AGENTS}}
        histogram = misjudgment_histogram(matrix, labels)
        assert histogram.false_exclusions.buckets == {5: 1}
        assert histogram.false_exclusions.agent_counts[5] == {a: 1 for a in self.AGENTS}

    def test_incomplete_matrix_rejected(self):
        labels = _labels(["i1"], ["d1"])
        matrix = {"i1": {"a": Verdict.INCLUDE}, "d1": {"b": Verdict.DISCARD}}
        with pytest.raises(CoverageError):
            misjudgment_histogram(matrix, labels)

    def test_randomized_matches_brute_force(self):
        rng = random.Random(99)
        papers = [f"p{i}" for i in range(100)]
        agents = ["a", "b", "c", "d"]
        labels = [
            GroundTruthLabel(paper_id=p, label=rng.choice([Label.INCLUDED, Label.DISCARDED]))
            for p in papers
        ]
        matrix = {p: {a: rng.choice(list(Verdict)) for a in agents} for p in papers}
        histogram = misjudgment_histogram(matrix, labels)
        expected_fi, expected_fe = oracles.misjudgment_buckets(
            {p: {a: v.value for a, v in row.items()} for p, row in matrix.items()},
            {gt.paper_id: gt.label.value for gt in labels},
        )
        assert histogram.false_inclusions.buckets == expected_fi
        assert histogram.false_exclusions.buckets == expected_fe

    def test_bucket_totals_equal_union_error_counts(self, mock_script, golden_summary,
                                                    screening_labels):
        matrix = _verdict_matrix(mock_script, golden_summary["agents"])
        histogram = misjudgment_histogram(matrix, screening_labels)
        golden = golden_summary["histogram"]
        assert histogram.false_inclusions.buckets == {
            int(k): v for k, v in golden["false_inclusions"]["buckets"].items()
        }
        assert histogram.false_exclusions.buckets == {
            int(k): v for k, v in golden["false_exclusions"]["buckets"].items()
        }
        for bucket, counts in golden["false_inclusions"]["agent_counts"].items():
            assert histogram.false_inclusions.agent_counts[int(bucket)] == counts


class TestAgreement:
    def test_identical_agents_fully_agree_and_tie(self):
        matrix = {
            "p1": {"a": Verdict.INCLUDE, "b": Verdict.INCLUDE},
            "p2": {"a": Verdict.DISCARD, "b": Verdict.DISCARD},
        }
        stats = agreement_stats(matrix)
        assert stats.matrix["a"]["b"] == 1.0
        assert stats.outliers == {"a", "b"}

    def test_disagreeing_agent_flagged(self):
        papers = [f"p{i}" for i in range(10)]
        matrix = {}
        for i, p in enumerate(papers):
            same = Verdict.INCLUDE if i % 2 else Verdict.DISCARD
            matrix[p] = {"a": same, "b": same, "c": same,
                         "d": same if i < 6 else (
                             Verdict.DISCARD if same == Verdict.INCLUDE else Verdict.INCLUDE)}
        stats = agreement_stats(matrix)
        assert stats.outliers == {"d"}
        assert stats.matrix["a"]["d"] == 0.6

    def test_matrix_symmetric_with_unit_diagonal(self, mock_script, golden_summary):
        matrix = _verdict_matrix(mock_script, golden_summary["agents"])
        stats = agreement_stats(matrix)
        for a in stats.agent_ids:
            assert stats.matrix[a][a] == 1.0
            for b in stats.agent_ids:
                assert stats.matrix[a][b] == stats.matrix[b][a]

    def test_mock_fixture_matches_golden(self, mock_script, golden_summary):
        matrix = _verdict_matrix(mock_script, golden_summary["agents"])
        stats = agreement_stats(matrix)
        golden = golden_summary["agreement"]
        for pair, value in golden["pairs"].items():
            a, b = pair.split("|")
            assert stats.matrix[a][b] == pytest.approx(value)
        for agent, value in golden["mean"].items():
            assert stats.mean_agreement[agent] == pytest.approx(value)
        assert stats.outliers == set(golden["outliers"])

    def test_single_agent_rejected(self):
        with pytest.raises(LitscreenError):
            agreement_stats({"p1": {"a": Verdict.INCLUDE}})


class TestCostAndEffort:
    def test_published_cost_fixture(self):
        estimate = estimate_cost(4_432_169, 443_735, 5.00, 15.00)
        assert estimate.total_cost == pytest.approx(28.82, abs=0.02)

    def test_zero_tokens_zero_cost(self):
        assert estimate_cost(0, 0, 5.0, 15.0).total_cost == 0.0

    def test_per_paper_averages_consistent(self):
        # ~532 input and ~53 output tokens per paper over 8,323 papers.
        assert 4_432_169 / 8_323 == pytest.approx(532, abs=1)
        assert 443_735 / 8_323 == pytest.approx(53, abs=1)
        estimate = estimate_cost(532 * 8_323, 53 * 8_323, 5.00, 15.00)
        assert estimate.total_cost == pytest.approx(28.82, abs=0.35)

    def test_negative_price_rejected(self):
        with pytest.raises(ValueError):
            estimate_cost(1, 1, -1.0, 0.0)

    def test_run_cost_breakdown(self):
        breakdown = estimate_run_cost(
            {"a": (1_000_000, 0), "b": (0, 2_000_000)},
            {"a": (5.0, 15.0), "b": (2.5, 10.0)},
        )
        assert breakdown.per_agent["a"].total_cost == pytest.approx(5.0)
        assert breakdown.per_agent["b"].total_cost == pytest.approx(20.0)
        assert breakdown.total_cost == pytest.approx(25.0)

    def test_run_cost_requires_pricing(self):
        with pytest.raises(LitscreenError):
            estimate_run_cost({"a": (1, 1)}, {})

    def test_manual_effort_published_figures(self):
        assert estimate_manual_effort(8_000) == pytest.approx(66.7, abs=0.1)
        assert estimate_manual_effort(8_323) == pytest.approx(69.4, abs=0.1)

    def test_manual_effort_zero_papers(self):
        assert estimate_manual_effort(0) == 0.0

    def test_manual_effort_requires_positive_rate(self):
        with pytest.raises(ValueError):
            estimate_manual_effort(10, rate_per_minute=0)


class TestLabelsCsv:
    def test_header_and_aliases(self):
        data = b"paper_id,label\np1,INCLUDED\np2,discard\n"
        labels = parse_labels_csv(data)
        assert [(l.paper_id, l.label) for l in labels] == [
            ("p1", Label.INCLUDED), ("p2", Label.DISCARDED),
        ]

    def test_unknown_label_rejected(self):
        with pytest.raises(LitscreenError):
            parse_labels_csv(b"p1,MAYBE\n")

    def test_fixture_labels(self, screening_labels):
        assert len(screening_labels) == 50
        included = [l for l in screening_labels if l.label == Label.INCLUDED]
        assert len(included) == 10


def _verdict_matrix(script, agents):
    from litscreen.agents import parse_response

    matrix = {}
    for paper_id, per_agent in script.items():
        matrix[paper_id] = {}
        for agent_id in agents:
            entry = per_agent[agent_id]
            matrix[paper_id][agent_id] = (
                Verdict.ERROR if isinstance(entry, dict) else parse_response(entry)[0]
            )
    return matrix
