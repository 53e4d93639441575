"""Chat-completion transports: the provider-neutral wire contract and a scripted mock.

Wire contract (OpenAI-compatible chat completions):
    POST {model, messages: [{role: "user", content}], temperature, max_tokens}
    ->   {choices: [{message: {content}}], usage: {prompt_tokens, completion_tokens}}
with a bearer token drawn from the environment variable named by the agent
config. Provider families that rename fields get their own adapter behind
the same CompletionTransport protocol.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from litscreen.errors import TransportError


@dataclass
class CompletionRequest:
    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    # Routing context for scripted transports; never sent on the wire.
    paper_id: str = ""
    agent_id: str = ""


@dataclass
class CompletionResult:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


class CompletionTransport(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResult: ...


class HttpCompletionTransport:
    """POSTs the wire contract to one endpoint with bearer auth."""

    def __init__(
        self,
        endpoint_url: str,
        api_key_ref: str = "",
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint_url = endpoint_url
        self.api_key_ref = api_key_ref
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_ref, "") if self.api_key_ref else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, request: CompletionRequest) -> CompletionResult:
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            response = self._client.post(self.endpoint_url, json=body, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise TransportError(f"timeout: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}", retryable=True) from exc

        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(
                f"HTTP {response.status_code}: {response.text[:200]}",
                retryable=True,
                retry_after=_retry_after_seconds(response),
            )
        if response.status_code >= 400:
            raise TransportError(
                f"HTTP {response.status_code}: {response.text[:200]}", retryable=False
            )
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(
                f"malformed provider response: {response.text[:200]}", retryable=False
            ) from exc
        usage = data.get("usage") or {}
        return CompletionResult(
            text=text if isinstance(text, str) else "",
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )


def _retry_after_seconds(response: httpx.Response) -> float | None:
    raw = response.headers.get("retry-after")
    if raw is None:
        return None
    try:
        return max(0.0, float(raw))
    except ValueError:
        return None


@dataclass
class TransportCall:
    """One dispatched request, recorded by the mock for assertions."""

    timestamp: float
    paper_id: str
    agent_id: str
    attempt: int


class MockTransport:
    """Deterministic transport scripted from {paper_id: {agent_id: response}}.

    A scripted response is either the raw completion text or an object:
        {"text": "...",            # final response text
         "fail_times": 2,          # raise retryable errors for the first n attempts
         "retry_after": 0.5,       # hint attached to those errors
         "usage": {"prompt_tokens": 10, "completion_tokens": 3},
         "delay_ms": 50}           # sleep before answering
    An object without "text" fails every attempt.
    """

    def __init__(self, script: dict, clock=time.monotonic, sleep=time.sleep):
        self.script = script
        self.calls: list[TransportCall] = []
        self._attempts: dict[tuple[str, str], int] = {}
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str) -> "MockTransport":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def calls_for_agent(self, agent_id: str) -> list[TransportCall]:
        with self._lock:
            return [c for c in self.calls if c.agent_id == agent_id]

    def complete(self, request: CompletionRequest) -> CompletionResult:
        key = (request.paper_id, request.agent_id)
        with self._lock:
            self._attempts[key] = self._attempts.get(key, 0) + 1
            attempt = self._attempts[key]
            self.calls.append(TransportCall(self._clock(), request.paper_id, request.agent_id, attempt))
            entry = self.script.get(request.paper_id, {}).get(request.agent_id)

        if entry is None:
            raise TransportError(
                f"no scripted response for paper {request.paper_id!r} / agent {request.agent_id!r}",
                retryable=False,
            )
        if isinstance(entry, str):
            return CompletionResult(text=entry)

        delay_ms = entry.get("delay_ms", 0)
        if delay_ms:
            self._sleep(delay_ms / 1000.0)
        fail_times = entry.get("fail_times", 0)
        if "text" not in entry or attempt <= fail_times:
            raise TransportError(
                f"scripted failure (attempt {attempt})",
                retryable=True,
                retry_after=entry.get("retry_after"),
            )
        usage = entry.get("usage") or {}
        return CompletionResult(
            text=entry["text"],
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )
