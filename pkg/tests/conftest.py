import json
import threading
from pathlib import Path

import pytest

from litscreen.agents import AgentConfig
from litscreen.bibtex import parse_bibtex
from litscreen.errors import ConflictError
from litscreen.evaluation import parse_labels_csv
from litscreen.prompting import PromptTemplate
from litscreen.records import Corpus, merge_into_corpus

FIXTURES = Path(__file__).parent / "fixtures"


class FakeClock:
    """Deterministic clock; sleeping advances it."""

    def __init__(self):
        self.now = 0.0
        self._lock = threading.Lock()

    def __call__(self):
        with self._lock:
            return self.now

    def sleep(self, seconds):
        with self._lock:
            self.now += seconds


class FakeRunStore:
    """In-memory RunStore for executor tests."""

    def __init__(self):
        self.runs = {}
        self.decisions = {}
        self.leases = set()
        self._lock = threading.Lock()

    def save_run(self, run):
        with self._lock:
            self.runs[run.id] = run

    def save_decision(self, decision):
        with self._lock:
            self.decisions[(decision.run_id, decision.paper_id, decision.agent_id)] = decision

    def persisted_pairs(self, run_id):
        with self._lock:
            return {(p, a) for (r, p, a) in self.decisions if r == run_id}

    def acquire_lease(self, run_id):
        with self._lock:
            if run_id in self.leases:
                raise ConflictError(f"run {run_id} already has an executor")
            self.leases.add(run_id)

    def release_lease(self, run_id):
        with self._lock:
            self.leases.discard(run_id)

    def run_decisions(self, run_id):
        with self._lock:
            return [d for (r, _p, _a), d in self.decisions.items() if r == run_id]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mixed_bib_bytes() -> bytes:
    return (FIXTURES / "mixed.bib").read_bytes()


@pytest.fixture(scope="session")
def screening_corpus() -> Corpus:
    records, diagnostics = parse_bibtex(
        (FIXTURES / "screening50.bib").read_bytes(), source="screening50.bib"
    )
    assert not diagnostics
    corpus, report = merge_into_corpus(Corpus(), records, source="screening50.bib")
    assert report.added == 50
    return corpus


@pytest.fixture(scope="session")
def screening_labels():
    return parse_labels_csv((FIXTURES / "labels50.csv").read_bytes())


@pytest.fixture(scope="session")
def mock_script() -> dict:
    return json.loads((FIXTURES / "mock_script.json").read_text())


@pytest.fixture(scope="session")
def golden_summary() -> dict:
    return json.loads((FIXTURES / "golden_summary.json").read_text())


@pytest.fixture(scope="session")
def fixture_template() -> PromptTemplate:
    return PromptTemplate.from_dict(
        json.loads((FIXTURES / "fixture_template.json").read_text())
    )


def make_agent(agent_id: str, **overrides) -> AgentConfig:
    defaults = dict(
        id=agent_id,
        display_name=agent_id.title(),
        endpoint_url="mock://script",
        model_name=f"{agent_id}-model",
        api_key_ref="",
        temperature=0.0,
        max_output_tokens=256,
        max_parallel_requests=4,
        requests_per_minute=100_000,
    )
    defaults.update(overrides)
    return AgentConfig(**defaults)


@pytest.fixture()
def mock_agents() -> dict[str, AgentConfig]:
    return {name: make_agent(name) for name in ("alpha", "beta", "gamma")}
