"""Scoring screening outcomes against human ground truth.

Covers confusion counts and the derived accuracy/precision/recall/F1
percentages, misjudgment histograms (how many agents were wrong per
paper), pairwise agreement with outlier detection, and the cost/time
estimators used to compare LLM screening with manual effort.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from litscreen.errors import CoverageError, LitscreenError
from litscreen.verdicts import Label, Verdict


@dataclass
class GroundTruthLabel:
    paper_id: str
    label: Label
    source: str = "human screening"


_LABEL_ALIASES = {
    "INCLUDED": Label.INCLUDED,
    "INCLUDE": Label.INCLUDED,
    "DISCARDED": Label.DISCARDED,
    "DISCARD": Label.DISCARDED,
}


def parse_labels_csv(data: bytes, source: str = "human screening") -> list[GroundTruthLabel]:
    """Read `paper_id,label` rows (header optional, labels case-insensitive)."""
    text = data.decode("utf-8-sig")
    labels: list[GroundTruthLabel] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        if lineno == 1 and row[0].strip().lower() == "paper_id":
            continue
        if len(row) < 2:
            raise LitscreenError(f"labels CSV line {lineno}: expected paper_id,label")
        name = row[1].strip().upper()
        if name not in _LABEL_ALIASES:
            raise LitscreenError(f"labels CSV line {lineno}: unknown label {row[1]!r}")
        labels.append(GroundTruthLabel(paper_id=row[0].strip(), label=_LABEL_ALIASES[name], source=source))
    return labels


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass
class MetricsReport:
    """Percentages in [0, 100]; None marks an undefined ratio (0/0)."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def rounded(self) -> dict[str, float | None]:
        """Two-decimal display form; internal values keep full precision."""
        return {
            name: (None if value is None else round(value, 2))
            for name, value in (
                ("accuracy", self.accuracy),
                ("precision", self.precision),
                ("recall", self.recall),
                ("f1", self.f1),
            )
        }


def effective_include(verdict: Verdict) -> bool:
    """Binary reading of a verdict: anything but DISCARD keeps the paper.

    AMBIGUOUS and ERROR verdicts count as inclusions, mirroring the
    consensus default of never silently dropping uncertain papers.
    """
    return verdict != Verdict.DISCARD


def confusion(
    predictions: Mapping[str, Verdict],
    truth: Iterable[GroundTruthLabel],
) -> ConfusionMatrix:
    """Tally predictions against labels; papers without a label are ignored."""
    cm = ConfusionMatrix()
    missing = []
    for gt in truth:
        if gt.paper_id not in predictions:
            missing.append(gt.paper_id)
            continue
        included = effective_include(predictions[gt.paper_id])
        if gt.label == Label.INCLUDED:
            if included:
                cm.tp += 1
            else:
                cm.fn += 1
        else:
            if included:
                cm.fp += 1
            else:
                cm.tn += 1
    if missing:
        raise CoverageError([(pid, "*") for pid in missing])
    return cm


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy/precision/recall/F1 as percentages at full precision."""
    total = cm.total()
    if total == 0:
        raise LitscreenError("confusion matrix is empty")
    accuracy = 100.0 * (cm.tp + cm.tn) / total
    precision = None if cm.tp + cm.fp == 0 else 100.0 * cm.tp / (cm.tp + cm.fp)
    recall = None if cm.tp + cm.fn == 0 else 100.0 * cm.tp / (cm.tp + cm.fn)
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricsReport(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


@dataclass
class HistogramSide:
    """Papers bucketed by how many agents got them wrong (1..n agents)."""

    buckets: dict[int, int] = field(default_factory=dict)
    # bucket -> agent -> number of papers in that bucket the agent got wrong
    agent_counts: dict[int, dict[str, int]] = field(default_factory=dict)


@dataclass
class MisjudgmentHistogram:
    false_inclusions: HistogramSide = field(default_factory=HistogramSide)
    false_exclusions: HistogramSide = field(default_factory=HistogramSide)


def misjudgment_histogram(
    per_agent_verdicts: Mapping[str, Mapping[str, Verdict]],
    truth: Iterable[GroundTruthLabel],
) -> MisjudgmentHistogram:
    """Group mislabeled papers by the number of agents voting wrong.

    The inclusion side counts papers a human discarded that agents kept;
    the exclusion side counts papers a human kept that agents discarded.
    Each bucket also records how often every agent took part in the wrong
    side.
    """
    labels = list(truth)
    agent_ids = _agent_union(per_agent_verdicts)
    missing = [
        (gt.paper_id, agent_id)
        for gt in labels
        for agent_id in agent_ids
        if agent_id not in per_agent_verdicts.get(gt.paper_id, {})
    ]
    if missing:
        raise CoverageError(missing)

    histogram = MisjudgmentHistogram()
    for gt in labels:
        verdicts = per_agent_verdicts[gt.paper_id]
        should_include = gt.label == Label.INCLUDED
        wrong = [a for a in agent_ids if effective_include(verdicts[a]) != should_include]
        if not wrong:
            continue
        side = histogram.false_exclusions if should_include else histogram.false_inclusions
        bucket = len(wrong)
        side.buckets[bucket] = side.buckets.get(bucket, 0) + 1
        per_agent = side.agent_counts.setdefault(bucket, {})
        for agent_id in wrong:
            per_agent[agent_id] = per_agent.get(agent_id, 0) + 1
    return histogram


@dataclass
class AgreementStats:
    agent_ids: list[str]
    # agreement[a][b]: fraction of papers where a and b gave the same verdict
    matrix: dict[str, dict[str, float]]
    mean_agreement: dict[str, float]
    outliers: set[str]


def agreement_stats(
    per_agent_verdicts: Mapping[str, Mapping[str, Verdict]],
) -> AgreementStats:
    """Pairwise raw-agreement fractions plus the least-agreeing agent(s).

    Agreement compares verdicts verbatim (an AMBIGUOUS pair agrees). The
    outlier set holds every agent whose mean pairwise agreement is minimal,
    so ties flag all of them.
    """
    paper_ids = list(per_agent_verdicts.keys())
    if not paper_ids:
        raise LitscreenError("agreement needs at least one paper")
    agent_ids = _agent_union(per_agent_verdicts)
    if len(agent_ids) < 2:
        raise LitscreenError("agreement needs at least two agents")
    missing = [
        (pid, a) for pid in paper_ids for a in agent_ids
        if a not in per_agent_verdicts[pid]
    ]
    if missing:
        raise CoverageError(missing)

    matrix: dict[str, dict[str, float]] = {a: {} for a in agent_ids}
    for a in agent_ids:
        for b in agent_ids:
            if a == b:
                matrix[a][b] = 1.0
            elif b in matrix and a in matrix[b]:
                matrix[a][b] = matrix[b][a]
            else:
                same = sum(
                    1 for pid in paper_ids
                    if per_agent_verdicts[pid][a] == per_agent_verdicts[pid][b]
                )
                matrix[a][b] = same / len(paper_ids)

    mean = {
        a: sum(matrix[a][b] for b in agent_ids if b != a) / (len(agent_ids) - 1)
        for a in agent_ids
    }
    lowest = min(mean.values())
    outliers = {a for a, m in mean.items() if m == lowest}
    return AgreementStats(
        agent_ids=agent_ids,
        matrix=matrix,
        mean_agreement=mean,
        outliers=outliers,
    )


def _agent_union(per_agent_verdicts: Mapping[str, Mapping[str, Verdict]]) -> list[str]:
    agents: list[str] = []
    for verdicts in per_agent_verdicts.values():
        for agent_id in verdicts:
            if agent_id not in agents:
                agents.append(agent_id)
    return agents


@dataclass
class CostTimeEstimate:
    input_tokens: int
    output_tokens: int
    input_price: float  # currency per million input tokens
    output_price: float  # currency per million output tokens
    total_cost: float
    manual_hours: float = 0.0


def estimate_cost(
    input_tokens: int,
    output_tokens: int,
    input_price: float,
    output_price: float,
) -> CostTimeEstimate:
    """Token cost at per-million prices. Pricing is configuration, never baked in."""
    if input_price < 0 or output_price < 0:
        raise ValueError("prices must be non-negative")
    total = (input_tokens * input_price + output_tokens * output_price) / 1_000_000
    return CostTimeEstimate(
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        input_price=input_price,
        output_price=output_price,
        total_cost=total,
    )


@dataclass
class RunCostBreakdown:
    per_agent: dict[str, CostTimeEstimate]
    total_cost: float


def estimate_run_cost(
    per_agent_tokens: Mapping[str, tuple[int, int]],
    pricing: Mapping[str, tuple[float, float]],
) -> RunCostBreakdown:
    """Cost a whole run: one estimate per agent at that agent's price pair."""
    unpriced = [a for a in per_agent_tokens if a not in pricing]
    if unpriced:
        raise LitscreenError(f"no pricing for agents: {', '.join(sorted(unpriced))}")
    per_agent = {
        agent_id: estimate_cost(tokens[0], tokens[1], *pricing[agent_id])
        for agent_id, tokens in per_agent_tokens.items()
    }
    return RunCostBreakdown(
        per_agent=per_agent,
        total_cost=sum(est.total_cost for est in per_agent.values()),
    )


def estimate_manual_effort(paper_count: int, rate_per_minute: float = 2.0) -> float:
    """Hours a human screener needs at the given papers-per-minute rate."""
    if rate_per_minute <= 0:
        raise ValueError("rate must be positive")
    if paper_count < 0:
        raise ValueError("paper count must be non-negative")
    return paper_count / rate_per_minute / 60.0
