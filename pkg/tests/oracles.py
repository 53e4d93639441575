"""Brute-force reference implementations for property tests.

These deliberately re-derive results the dumbest possible way (per-paper
loops, pairwise scans) and never call into the package modules they check.
"""

from __future__ import annotations

INCLUDE_VERDICTS = {"INCLUDE", "AMBIGUOUS", "ERROR"}


def effective_include(verdict: str) -> bool:
    return verdict in INCLUDE_VERDICTS


def consensus_any_include(verdicts_by_agent: dict[str, str]) -> str:
    for verdict in verdicts_by_agent.values():
        if effective_include(verdict):
            return "INCLUDE"
    return "DISCARD"


def consensus_threshold(verdicts_by_agent: dict[str, str], k: int) -> str:
    votes = sum(1 for v in verdicts_by_agent.values() if effective_include(v))
    return "INCLUDE" if votes >= k else "DISCARD"


def confusion_counts(predictions: dict[str, str], labels: dict[str, str]) -> dict[str, int]:
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for paper_id, label in labels.items():
        keep = effective_include(predictions[paper_id])
        if label == "INCLUDED":
            counts["tp" if keep else "fn"] += 1
        else:
            counts["fp" if keep else "tn"] += 1
    return counts


def recall_percent(counts: dict[str, int]) -> float | None:
    denom = counts["tp"] + counts["fn"]
    return None if denom == 0 else 100.0 * counts["tp"] / denom


def misjudgment_buckets(
    matrix: dict[str, dict[str, str]], labels: dict[str, str]
) -> tuple[dict[int, int], dict[int, int]]:
    """(false-inclusion buckets, false-exclusion buckets) by wrong-agent count."""
    inclusions: dict[int, int] = {}
    exclusions: dict[int, int] = {}
    for paper_id, label in labels.items():
        should_keep = label == "INCLUDED"
        wrong = sum(
            1 for verdict in matrix[paper_id].values()
            if effective_include(verdict) != should_keep
        )
        if wrong == 0:
            continue
        side = exclusions if should_keep else inclusions
        side[wrong] = side.get(wrong, 0) + 1
    return inclusions, exclusions


def agreement_fraction(matrix: dict[str, dict[str, str]], a: str, b: str) -> float:
    papers = list(matrix)
    same = sum(1 for p in papers if matrix[p][a] == matrix[p][b])
    return same / len(papers)
