"""Deterministic CSV exports (RFC 4180, UTF-8)."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping

from litscreen.agents import AgentDecision
from litscreen.consensus import ConsensusResult
from litscreen.records import Corpus
from litscreen.verdicts import Verdict

CORPUS_HEADER = ["id", "title", "abstract", "authors", "year", "venue", "doi", "source"]


def corpus_csv(corpus: Corpus) -> bytes:
    """Corpus table in ingestion order; authors joined with '; '."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(CORPUS_HEADER)
    for paper in corpus.papers:
        writer.writerow([
            paper.id,
            paper.title,
            paper.abstract,
            "; ".join(paper.authors),
            "" if paper.year is None else paper.year,
            paper.venue or "",
            paper.doi or "",
            paper.source,
        ])
    return buffer.getvalue().encode("utf-8")


def results_csv(
    corpus: Corpus,
    agent_order: list[str],
    decisions: Iterable[AgentDecision],
    consensus: Mapping[str, ConsensusResult] | None = None,
    paper_ids: Iterable[str] | None = None,
) -> bytes:
    """Per-paper verdicts, one agent verdict/justification column pair per agent.

    Rows are sorted by paper id so two exports of the same scope are
    byte-identical. For a plain run export (no consensus) the final_verdict
    column is empty and `flagged` reflects any AMBIGUOUS/ERROR verdict; for
    a consensus export both come from the consensus result.
    """
    by_pair: dict[tuple[str, str], AgentDecision] = {}
    for decision in decisions:
        by_pair[(decision.paper_id, decision.agent_id)] = decision

    if paper_ids is None:
        ids = sorted({paper_id for paper_id, _ in by_pair})
    else:
        ids = sorted(set(paper_ids))
    papers = {p.id: p for p in corpus.papers}

    header = ["paper_id", "title", "doi", "final_verdict", "flagged"]
    for agent_id in agent_order:
        header += [f"agent:{agent_id}:verdict", f"agent:{agent_id}:justification"]

    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(header)
    for paper_id in ids:
        paper = papers.get(paper_id)
        row: list[str] = [
            paper_id,
            paper.title if paper else "",
            (paper.doi or "") if paper else "",
        ]
        agent_verdicts = [by_pair.get((paper_id, agent_id)) for agent_id in agent_order]
        if consensus is not None and paper_id in consensus:
            result = consensus[paper_id]
            row += [result.final_verdict.value, str(result.flagged_for_review).lower()]
        else:
            flagged = any(
                d is not None and d.verdict in (Verdict.AMBIGUOUS, Verdict.ERROR)
                for d in agent_verdicts
            )
            row += ["", str(flagged).lower()]
        for decision in agent_verdicts:
            if decision is None:
                row += ["", ""]
            else:
                row += [decision.verdict.value, decision.justification]
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")
