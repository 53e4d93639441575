"""Consensus voting over per-agent verdicts.

The default scheme discards a paper only when every participating agent
discards it; one include vote keeps the paper. A generalized quorum
(THRESHOLD k) is available for stricter exploration; k=1 is exactly the
default rule. Uncertain verdicts (AMBIGUOUS, ERROR) count as includes by
default so uncertainty never silently drops a paper, and always flag the
result for human review.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from litscreen.errors import CoverageError
from litscreen.evaluation import MetricsReport
from litscreen.verdicts import Verdict

logger = logging.getLogger(__name__)


class SchemeKind(str, Enum):
    ANY_INCLUDE = "ANY_INCLUDE"
    THRESHOLD = "THRESHOLD"


class AmbiguousPolicy(str, Enum):
    COUNT_AS_INCLUDE = "COUNT_AS_INCLUDE"
    COUNT_AS_ABSTAIN = "COUNT_AS_ABSTAIN"


@dataclass
class ConsensusScheme:
    id: str
    agent_ids: list[str]
    kind: SchemeKind = SchemeKind.ANY_INCLUDE
    k: int = 1
    ambiguous_policy: AmbiguousPolicy = AmbiguousPolicy.COUNT_AS_INCLUDE

    def __post_init__(self):
        if not self.agent_ids:
            raise ValueError("scheme needs at least one agent")
        if len(set(self.agent_ids)) != len(self.agent_ids):
            raise ValueError("scheme agent_ids must be unique")
        if self.kind == SchemeKind.ANY_INCLUDE:
            self.k = 1
        elif not 1 <= self.k <= len(self.agent_ids):
            raise ValueError(f"threshold k={self.k} outside 1..{len(self.agent_ids)}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "k": self.k,
            "agent_ids": list(self.agent_ids),
            "ambiguous_policy": self.ambiguous_policy.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConsensusScheme":
        return cls(
            id=data["id"],
            agent_ids=list(data["agent_ids"]),
            kind=SchemeKind(data.get("kind", "ANY_INCLUDE")),
            k=int(data.get("k", 1)),
            ambiguous_policy=AmbiguousPolicy(data.get("ambiguous_policy", "COUNT_AS_INCLUDE")),
        )


@dataclass
class ConsensusResult:
    paper_id: str
    final_verdict: Verdict  # INCLUDE or DISCARD only
    including_agents: set[str] = field(default_factory=set)
    discarding_agents: set[str] = field(default_factory=set)
    flagged_for_review: bool = False


def consensus_vote(
    paper_id: str,
    decisions: Mapping[str, Verdict],
    scheme: ConsensusScheme,
) -> ConsensusResult:
    """Combine one paper's per-agent verdicts under the scheme.

    Every scheme agent must have an entry (ERROR counts as an entry).
    AMBIGUOUS/ERROR verdicts follow the ambiguity policy and flag the
    result for review either way.
    """
    missing = [a for a in scheme.agent_ids if a not in decisions]
    if missing:
        raise CoverageError([(paper_id, a) for a in missing])

    including: set[str] = set()
    discarding: set[str] = set()
    flagged = False
    for agent_id in scheme.agent_ids:
        verdict = decisions[agent_id]
        if verdict == Verdict.INCLUDE:
            including.add(agent_id)
        elif verdict == Verdict.DISCARD:
            discarding.add(agent_id)
        else:
            flagged = True
            if scheme.ambiguous_policy == AmbiguousPolicy.COUNT_AS_INCLUDE:
                including.add(agent_id)

    final = Verdict.INCLUDE if len(including) >= scheme.k else Verdict.DISCARD
    return ConsensusResult(
        paper_id=paper_id,
        final_verdict=final,
        including_agents=including,
        discarding_agents=discarding,
        flagged_for_review=flagged,
    )


def apply_consensus(
    verdicts: Mapping[str, Mapping[str, Verdict]],
    scheme: ConsensusScheme,
    paper_ids: list[str] | None = None,
) -> list[ConsensusResult]:
    """Vote every paper in the matrix (or the given subset), in order.

    Coverage must be complete: each paper needs a verdict from every
    scheme agent, otherwise the error names all missing pairs.
    """
    ids = list(paper_ids) if paper_ids is not None else list(verdicts.keys())
    missing: list[tuple[str, str]] = []
    for paper_id in ids:
        per_agent = verdicts.get(paper_id, {})
        for agent_id in scheme.agent_ids:
            if agent_id not in per_agent:
                missing.append((paper_id, agent_id))
    if missing:
        raise CoverageError(missing)
    return [consensus_vote(pid, verdicts[pid], scheme) for pid in ids]


def select_best_agents(
    per_agent_metrics: Mapping[str, MetricsReport],
    f1_threshold: float,
) -> set[str]:
    """Pick the agents whose F1 (percent) strictly exceeds the threshold.

    Agents with undefined F1 never qualify. An empty selection is returned
    as-is (with a warning) so the caller decides how to proceed.
    """
    selected = {
        agent_id
        for agent_id, report in per_agent_metrics.items()
        if report.f1 is not None and report.f1 > f1_threshold
    }
    if not selected:
        logger.warning("no agent exceeds F1 threshold %.2f%%", f1_threshold)
    return selected
