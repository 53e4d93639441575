"""Classification-run execution: the paper × agent matrix with bounded
concurrency, per-agent rate limits, and incremental persistence.

Every decision is persisted the moment it arrives, so a run interrupted at
any point resumes by skipping already-persisted pairs. A run-level lease
keeps two executors from working the same run at once.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from concurrent.futures import FIRST_EXCEPTION, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Protocol

from litscreen.agents import AgentConfig, AgentDecision, classify_one
from litscreen.errors import ConflictError, LitscreenError
from litscreen.prompting import PromptTemplate, render_prompt
from litscreen.records import Corpus
from litscreen.transport import CompletionTransport


class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    PAUSED = "paused"
    COMPLETE = "complete"
    FAILED = "failed"


@dataclass
class ClassificationRun:
    """One sweep of (selected papers) × (selected agents) under one template version."""

    id: str
    corpus_id: str
    template_id: str
    template_version: int
    agent_ids: list[str]
    paper_scope: list[str] | None = None  # None means the whole corpus
    status: RunStatus = RunStatus.PENDING
    started_at: float | None = None
    finished_at: float | None = None
    error: str | None = None


class RunStore(Protocol):
    """Persistence surface execute_run needs; the project store implements it."""

    def save_run(self, run: ClassificationRun) -> None: ...

    def save_decision(self, decision: AgentDecision) -> None: ...

    def persisted_pairs(self, run_id: str) -> set[tuple[str, str]]: ...

    def acquire_lease(self, run_id: str) -> None: ...

    def release_lease(self, run_id: str) -> None: ...


class RateLimiter:
    """Sliding-window limiter: at most per_minute acquisitions in any 60 s window."""

    def __init__(self, per_minute: int, clock=time.monotonic, sleep=time.sleep):
        self.per_minute = per_minute
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait_s = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait_s, 0.001))


TransportFactory = Callable[[AgentConfig], CompletionTransport]


def _fail(run: ClassificationRun, store: RunStore, reason: str) -> None:
    run.status = RunStatus.FAILED
    run.error = reason
    run.finished_at = time.time()
    store.save_run(run)


def execute_run(
    run: ClassificationRun,
    corpus: Corpus | None,
    template: PromptTemplate | None,
    agents: dict[str, AgentConfig],
    store: RunStore,
    transport_factory: TransportFactory,
    on_decision: Callable[[AgentDecision], None] | None = None,
    stop: threading.Event | None = None,
    clock=time.monotonic,
    sleep=time.sleep,
) -> list[AgentDecision]:
    """Execute (or resume) a run, returning the decisions issued by this call.

    Pairs already persisted are skipped. Each agent gets its own worker
    pool (max_parallel_requests) and rate limiter (requests_per_minute);
    all workers persist through the store, which serializes writes.
    Individual request failures become ERROR decisions and never abort the
    run. Setting `stop` pauses after in-flight requests finish.
    """
    if run.status in (RunStatus.COMPLETE, RunStatus.FAILED):
        raise ConflictError(f"run {run.id} is {run.status.value} and cannot be executed")

    store.acquire_lease(run.id)
    try:
        if corpus is None:
            _fail(run, store, "corpus not found")
            return []
        if template is None:
            _fail(run, store, "template not found")
            return []
        missing_agents = [a for a in run.agent_ids if a not in agents]
        if missing_agents:
            _fail(run, store, f"agents not configured: {', '.join(missing_agents)}")
            return []

        papers = {p.id: p for p in corpus.papers}
        if run.paper_scope is None:
            scope_ids = [p.id for p in corpus.papers]
        else:
            unknown = [pid for pid in run.paper_scope if pid not in papers]
            if unknown:
                _fail(run, store, f"papers not in corpus: {', '.join(unknown[:10])}")
                return []
            scope_ids = list(run.paper_scope)

        done = store.persisted_pairs(run.id)
        todo: dict[str, list[str]] = {agent_id: [] for agent_id in run.agent_ids}
        for agent_id in run.agent_ids:
            for paper_id in scope_ids:
                if (paper_id, agent_id) not in done:
                    todo[agent_id].append(paper_id)

        run.status = RunStatus.RUNNING
        if run.started_at is None:
            run.started_at = time.time()
        run.error = None
        store.save_run(run)

        issued: list[AgentDecision] = []
        issued_lock = threading.Lock()
        stopped = stop or threading.Event()

        def work(agent: AgentConfig, transport: CompletionTransport,
                 limiter: RateLimiter, paper_id: str) -> None:
            if stopped.is_set():
                return
            limiter.acquire()
            prompt = render_prompt(template, papers[paper_id])
            decision = classify_one(
                agent, prompt, transport,
                run_id=run.id, paper_id=paper_id, clock=clock, sleep=sleep,
            )
            store.save_decision(decision)
            with issued_lock:
                issued.append(decision)
            if on_decision is not None:
                on_decision(decision)

        pools: list[ThreadPoolExecutor] = []
        futures: list[Future] = []
        try:
            for agent_id in run.agent_ids:
                agent = agents[agent_id]
                transport = transport_factory(agent)
                limiter = RateLimiter(agent.requests_per_minute, clock=clock, sleep=sleep)
                pool = ThreadPoolExecutor(
                    max_workers=agent.max_parallel_requests,
                    thread_name_prefix=f"agent-{agent_id}",
                )
                pools.append(pool)
                for paper_id in todo[agent_id]:
                    futures.append(pool.submit(work, agent, transport, limiter, paper_id))
            done_futures, _ = wait(futures, return_when=FIRST_EXCEPTION)
            for f in done_futures:
                exc = f.exception()
                if exc is not None:
                    raise exc
        finally:
            stopped.set()
            for pool in pools:
                pool.shutdown(wait=True, cancel_futures=True)

        if stop is not None and stop.is_set() and store.persisted_pairs(run.id) != {
            (p, a) for a in run.agent_ids for p in scope_ids
        }:
            run.status = RunStatus.PAUSED
            store.save_run(run)
            return issued

        run.status = RunStatus.COMPLETE
        run.finished_at = time.time()
        store.save_run(run)
        return issued
    finally:
        store.release_lease(run.id)


@dataclass
class AgentUsage:
    input_tokens: int = 0
    output_tokens: int = 0


@dataclass
class RunUsage:
    total_input_tokens: int = 0
    total_output_tokens: int = 0
    per_agent: dict[str, AgentUsage] = field(default_factory=dict)


def run_usage(decisions: Iterable[AgentDecision]) -> RunUsage:
    """Sum persisted token counts for a run, per agent and overall."""
    usage = RunUsage()
    count = 0
    for decision in decisions:
        count += 1
        usage.total_input_tokens += decision.input_tokens
        usage.total_output_tokens += decision.output_tokens
        agent = usage.per_agent.setdefault(decision.agent_id, AgentUsage())
        agent.input_tokens += decision.input_tokens
        agent.output_tokens += decision.output_tokens
    if count == 0:
        raise LitscreenError("run has no persisted decisions")
    return usage
