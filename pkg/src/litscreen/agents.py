"""Agent configuration, completion parsing, and single-paper classification."""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass
from urllib.parse import urlparse

from litscreen.errors import TransportError
from litscreen.transport import CompletionRequest, CompletionTransport
from litscreen.verdicts import Verdict

MAX_ATTEMPTS = 5
BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0

_INCLUDE_RE = re.compile(r"\bINCLUDE\b")
_DISCARD_RE = re.compile(r"\bDISCARD\b")


@dataclass
class AgentConfig:
    """One registered LLM endpoint.

    api_key_ref names the environment variable holding the secret; the
    secret itself is never stored.
    """

    id: str
    display_name: str
    endpoint_url: str
    model_name: str
    api_key_ref: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024
    max_parallel_requests: int = 4
    requests_per_minute: int = 60

    def __post_init__(self):
        parsed = urlparse(self.endpoint_url)
        if not parsed.scheme:
            raise ValueError(f"agent {self.id!r}: endpoint_url must be absolute, got {self.endpoint_url!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"agent {self.id!r}: temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError(f"agent {self.id!r}: max_output_tokens must be positive")
        if self.max_parallel_requests < 1:
            raise ValueError(f"agent {self.id!r}: max_parallel_requests must be >= 1")
        if self.requests_per_minute < 1:
            raise ValueError(f"agent {self.id!r}: requests_per_minute must be positive")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "api_key_ref": self.api_key_ref,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "max_parallel_requests": self.max_parallel_requests,
            "requests_per_minute": self.requests_per_minute,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        return cls(
            id=data["id"],
            display_name=data.get("display_name", data["id"]),
            endpoint_url=data["endpoint_url"],
            model_name=data.get("model_name", ""),
            api_key_ref=data.get("api_key_ref", ""),
            temperature=float(data.get("temperature", 0.0)),
            max_output_tokens=int(data.get("max_output_tokens", 1024)),
            max_parallel_requests=int(data.get("max_parallel_requests", 4)),
            requests_per_minute=int(data.get("requests_per_minute", 60)),
        )


@dataclass
class AgentDecision:
    """One agent's verdict for one paper within one run."""

    run_id: str
    paper_id: str
    agent_id: str
    verdict: Verdict
    justification: str
    raw_response: str = ""
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: int = 0
    attempt_count: int = 1


def parse_response(raw: str) -> tuple[Verdict, str]:
    """Map a raw completion to a verdict plus justification.

    The verdict tokens INCLUDE and DISCARD are matched case-sensitively as
    standalone words, so "included"/"discarded" inside a justification never
    count. Exactly one token present decides; both or neither is AMBIGUOUS.
    """
    include = _INCLUDE_RE.search(raw)
    discard = _DISCARD_RE.search(raw)
    if (include is None) == (discard is None):
        return Verdict.AMBIGUOUS, raw.strip()
    match = include if include is not None else discard
    verdict = Verdict.INCLUDE if include is not None else Verdict.DISCARD
    without = raw[: match.start()] + raw[match.end():]
    return verdict, without.strip().lstrip(".,;:-").strip()


def estimate_tokens(text: str) -> int:
    """Fallback token estimate when the provider reports no usage."""
    return math.ceil(len(text) / 4)


def classify_one(
    agent: AgentConfig,
    prompt: str,
    transport: CompletionTransport,
    run_id: str = "",
    paper_id: str = "",
    clock=time.monotonic,
    sleep=time.sleep,
) -> AgentDecision:
    """Classify one paper with one agent, retrying transient failures.

    Retries use exponential backoff (1 s base, doubling, at most
    MAX_ATTEMPTS attempts) and honor a server-sent retry-after hint.
    Exhausted or permanent failures yield an ERROR decision carrying the
    failure reason; this function does not raise for transport problems.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    request = CompletionRequest(
        model=agent.model_name,
        prompt=prompt,
        temperature=agent.temperature,
        max_tokens=agent.max_output_tokens,
        paper_id=paper_id,
        agent_id=agent.id,
    )
    started = clock()
    attempt = 0
    failure: TransportError | None = None
    while attempt < MAX_ATTEMPTS:
        attempt += 1
        try:
            result = transport.complete(request)
        except TransportError as exc:
            failure = exc
            if not exc.retryable or attempt >= MAX_ATTEMPTS:
                break
            delay = BACKOFF_BASE_SECONDS * BACKOFF_FACTOR ** (attempt - 1)
            if exc.retry_after is not None:
                delay = exc.retry_after
            sleep(delay)
            continue

        verdict, justification = parse_response(result.text)
        latency_ms = int((clock() - started) * 1000)
        input_tokens = result.prompt_tokens
        if input_tokens is None:
            input_tokens = estimate_tokens(prompt)
        output_tokens = result.completion_tokens
        if output_tokens is None:
            output_tokens = estimate_tokens(result.text)
        return AgentDecision(
            run_id=run_id,
            paper_id=paper_id,
            agent_id=agent.id,
            verdict=verdict,
            justification=justification,
            raw_response=result.text,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            latency_ms=latency_ms,
            attempt_count=attempt,
        )

    return AgentDecision(
        run_id=run_id,
        paper_id=paper_id,
        agent_id=agent.id,
        verdict=Verdict.ERROR,
        justification=str(failure) if failure else "transport failed",
        raw_response="",
        input_tokens=0,
        output_tokens=0,
        latency_ms=int((clock() - started) * 1000),
        attempt_count=attempt,
    )
