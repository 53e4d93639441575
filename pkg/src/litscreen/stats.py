"""Statistics payload assembly shared by the HTTP API and the CLI.

Everything the dashboard charts and the evaluation table need is computed
here once; clients only render it.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from litscreen.agents import AgentDecision
from litscreen.consensus import ConsensusResult
from litscreen.errors import NotFoundError
from litscreen.evaluation import (
    ConfusionMatrix,
    GroundTruthLabel,
    MetricsReport,
    agreement_stats,
    confusion,
    metrics,
    misjudgment_histogram,
)
from litscreen.store import ProjectStore
from litscreen.verdicts import Verdict


def decisions_matrix(decisions: Iterable[AgentDecision]) -> dict[str, dict[str, Verdict]]:
    """paper -> agent -> verdict; later decisions win on duplicates."""
    matrix: dict[str, dict[str, Verdict]] = {}
    for decision in decisions:
        matrix.setdefault(decision.paper_id, {})[decision.agent_id] = decision.verdict
    return matrix


def merged_run_decisions(store: ProjectStore, run_ids: list[str]) -> list[AgentDecision]:
    """Decisions across runs; a later run in the list overrides earlier pairs."""
    merged: dict[tuple[str, str], AgentDecision] = {}
    for run_id in run_ids:
        for decision in store.list_decisions(run_id):
            merged[(decision.paper_id, decision.agent_id)] = decision
    return [merged[key] for key in sorted(merged)]


def verdict_distribution(decisions: Iterable[AgentDecision]) -> dict[str, dict[str, int]]:
    counts: dict[str, dict[str, int]] = {}
    for decision in decisions:
        agent = counts.setdefault(
            decision.agent_id, {v.value: 0 for v in Verdict}
        )
        agent[decision.verdict.value] += 1
    return counts


def _metrics_payload(cm: ConfusionMatrix, report: MetricsReport) -> dict:
    return {"counts": cm.as_dict(), "metrics": report.rounded()}


def _scored_agents(
    matrix: Mapping[str, Mapping[str, Verdict]],
    agent_ids: list[str],
    labels: list[GroundTruthLabel],
) -> dict[str, dict]:
    scored = {}
    labeled = [gt for gt in labels if gt.paper_id in matrix]
    for agent_id in agent_ids:
        predictions = {
            paper_id: verdicts[agent_id]
            for paper_id, verdicts in matrix.items()
            if agent_id in verdicts
        }
        covered = [gt for gt in labeled if gt.paper_id in predictions]
        if not covered:
            continue
        cm = confusion(predictions, covered)
        scored[agent_id] = _metrics_payload(cm, metrics(cm))
    return scored


def _histogram_payload(matrix, labels) -> dict:
    histogram = misjudgment_histogram(matrix, labels)
    def side(s):
        return {
            "buckets": {str(k): v for k, v in sorted(s.buckets.items())},
            "agent_counts": {
                str(k): dict(sorted(v.items())) for k, v in sorted(s.agent_counts.items())
            },
        }
    return {
        "false_inclusions": side(histogram.false_inclusions),
        "false_exclusions": side(histogram.false_exclusions),
    }


def _agreement_payload(matrix) -> dict:
    stats = agreement_stats(matrix)
    return {
        "agents": stats.agent_ids,
        "matrix": {a: {b: stats.matrix[a][b] for b in stats.agent_ids} for a in stats.agent_ids},
        "mean": stats.mean_agreement,
        "outliers": sorted(stats.outliers),
    }


def run_stats(store: ProjectStore, run_id: str) -> dict:
    """Distribution, per-agent scores, histogram, and agreement for one run."""
    run = store.get_run(run_id)
    decisions = store.list_decisions(run_id)
    matrix = decisions_matrix(decisions)
    labels = store.get_labels(run.corpus_id)
    labeled = [gt for gt in labels if gt.paper_id in matrix]
    complete = all(
        set(run.agent_ids) <= set(verdicts) for verdicts in matrix.values()
    )

    payload: dict = {
        "scope": {"type": "run", "id": run_id, "corpus_id": run.corpus_id,
                  "agents": run.agent_ids, "status": run.status.value},
        "distribution": verdict_distribution(decisions),
    }
    if labeled:
        payload["per_agent"] = _scored_agents(matrix, run.agent_ids, labeled)
        if complete and matrix:
            payload["misjudgment"] = _histogram_payload(matrix, labeled)
    if complete and matrix and len(run.agent_ids) >= 2:
        payload["agreement"] = _agreement_payload(matrix)
    return payload


def consensus_stats(store: ProjectStore, application_id: str) -> dict:
    """Stats for a consensus application, including the consensus score itself."""
    meta, results = store.get_consensus(application_id)
    scheme = store.get_scheme(meta["scheme_id"])
    decisions = [
        d for d in merged_run_decisions(store, meta["run_ids"])
        if d.agent_id in scheme.agent_ids
    ]
    matrix = decisions_matrix(decisions)
    labels = store.get_labels(meta["corpus_id"])
    labeled = [gt for gt in labels if gt.paper_id in matrix]

    payload: dict = {
        "scope": {"type": "consensus", "id": application_id,
                  "corpus_id": meta["corpus_id"], "scheme": scheme.to_dict(),
                  "run_ids": meta["run_ids"]},
        "distribution": verdict_distribution(decisions),
        "consensus": {
            "includes": sum(1 for r in results if r.final_verdict == Verdict.INCLUDE),
            "discards": sum(1 for r in results if r.final_verdict == Verdict.DISCARD),
            "flagged": sum(1 for r in results if r.flagged_for_review),
        },
    }
    if labeled:
        payload["per_agent"] = _scored_agents(matrix, scheme.agent_ids, labeled)
        predictions = {r.paper_id: r.final_verdict for r in results}
        covered = [gt for gt in labeled if gt.paper_id in predictions]
        if covered:
            cm = confusion(predictions, covered)
            payload["consensus"]["scored"] = _metrics_payload(cm, metrics(cm))
        if matrix:
            payload["misjudgment"] = _histogram_payload(matrix, labeled)
    if matrix and len(scheme.agent_ids) >= 2:
        payload["agreement"] = _agreement_payload(matrix)
    return payload


def stats_for_scope(store: ProjectStore, scope_id: str) -> dict:
    """Resolve a scope id as a run first, then as a consensus application."""
    try:
        return run_stats(store, scope_id)
    except NotFoundError:
        return consensus_stats(store, scope_id)


def format_metric_block(columns: dict[str, dict]) -> str:
    """Fixed-width evaluation table: counts block above the metric block."""
    names = list(columns)
    width = max([10] + [len(n) + 2 for n in names])
    lines = ["Metric".ljust(8) + "".join(n.rjust(width) for n in names)]
    for row in ("tp", "fp", "tn", "fn"):
        cells = [str(columns[n]["counts"][row]).rjust(width) for n in names]
        lines.append(row.upper().ljust(8) + "".join(cells))
    label = {"accuracy": "Acc.", "precision": "Prec.", "recall": "Rec.", "f1": "F1"}
    for row in ("accuracy", "precision", "recall", "f1"):
        cells = []
        for n in names:
            value = columns[n]["metrics"][row]
            cells.append(("n/a" if value is None else f"{value:.2f}").rjust(width))
        lines.append(label[row].ljust(8) + "".join(cells))
    return "\n".join(lines)
