"""HTTP service binding the pipeline together for the dashboard and CLI.

JSON-over-HTTP with plain nouns; a single data directory holds the SQLite
store. Agents whose endpoint URL uses the mock:// scheme are served by the
scripted transport, which keeps demo and test deployments offline.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from litscreen import __version__
from litscreen.agents import AgentConfig
from litscreen.bibtex import parse_bibtex
from litscreen.consensus import (
    AmbiguousPolicy,
    ConsensusScheme,
    SchemeKind,
    apply_consensus,
)
from litscreen.doi import HttpDoiResolver, resolve_doi
from litscreen.errors import (
    ConflictError,
    CoverageError,
    DoiError,
    DoiNotFoundError,
    IngestError,
    InvalidTemplateError,
    LitscreenError,
    NotFoundError,
    TransportError,
)
from litscreen.exports import corpus_csv, results_csv
from litscreen.prompting import PromptTemplate, render_prompt, validate_template
from litscreen.runner import execute_run
from litscreen.stats import decisions_matrix, merged_run_decisions, stats_for_scope
from litscreen.store import ProjectStore
from litscreen.transport import HttpCompletionTransport, MockTransport
from litscreen.evaluation import parse_labels_csv

DEFAULT_LISTEN_ADDR = "127.0.0.1:8722"
DEFAULT_RESOLVER_URL = "https://api.crossref.org/works"


@dataclass
class ServiceConfig:
    data_dir: str = "data"
    listen_addr: str = DEFAULT_LISTEN_ADDR
    resolver_base_url: str = DEFAULT_RESOLVER_URL
    static_dir: str | None = None  # dashboard build output, mounted at /ui

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        config = cls(
            data_dir=os.environ.get("DATA_DIR", "data"),
            listen_addr=os.environ.get("LISTEN_ADDR", DEFAULT_LISTEN_ADDR),
            resolver_base_url=os.environ.get("RESOLVER_BASE_URL", DEFAULT_RESOLVER_URL),
        )
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        return config

    @property
    def db_path(self) -> str:
        return str(Path(self.data_dir) / "litscreen.db")


def transport_for(agent: AgentConfig):
    if agent.endpoint_url.startswith("mock://"):
        return MockTransport.from_file(agent.endpoint_url[len("mock://"):])
    return HttpCompletionTransport(agent.endpoint_url, api_key_ref=agent.api_key_ref)


# ── request bodies ─────────────────────────────────────────────────────


class AspectIn(BaseModel):
    name: str
    example_terms: list[str] = []


class TemplateIn(BaseModel):
    id: str
    topic_title: str
    role_preamble: str | None = None
    aspects: list[AspectIn] = []
    exclusion_rules: list[str] = []
    inclusion_rules: list[str] = []
    output_instruction: str | None = None

    def to_template(self) -> PromptTemplate:
        data = self.model_dump()
        # None means "use the default wording"; from_dict fills absent keys.
        for optional in ("role_preamble", "output_instruction"):
            if data[optional] is None:
                del data[optional]
        return PromptTemplate.from_dict(data)


class AgentIn(BaseModel):
    id: str
    display_name: str | None = None
    endpoint_url: str
    model_name: str = ""
    api_key_ref: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024
    max_parallel_requests: int = 4
    requests_per_minute: int = 60


class RunIn(BaseModel):
    corpus_id: str
    template_id: str
    template_version: int | None = None
    agent_ids: list[str]
    scope: list[str] | None = None


class SchemeIn(BaseModel):
    id: str
    kind: str = "ANY_INCLUDE"
    k: int = 1
    agent_ids: list[str]
    ambiguous_policy: str = "COUNT_AS_INCLUDE"


class ApplyIn(BaseModel):
    run_ids: list[str]


class DoisIn(BaseModel):
    dois: list[str]


class RenderIn(BaseModel):
    corpus_id: str
    paper_id: str
    version: int | None = None


class PreviewIn(BaseModel):
    template: TemplateIn
    corpus_id: str
    paper_id: str


@dataclass
class RunRegistry:
    """Threads executing runs inside this process."""

    threads: dict[str, threading.Thread] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def launch(self, run_id: str, target) -> None:
        with self.lock:
            existing = self.threads.get(run_id)
            if existing is not None and existing.is_alive():
                raise ConflictError(f"run {run_id} is already executing here")
            thread = threading.Thread(target=target, name=f"run-{run_id}", daemon=True)
            self.threads[run_id] = thread
            thread.start()

    def join_all(self, timeout: float = 30.0) -> None:
        with self.lock:
            threads = list(self.threads.values())
        for thread in threads:
            thread.join(timeout)


def create_app(config: ServiceConfig) -> FastAPI:
    Path(config.data_dir).mkdir(parents=True, exist_ok=True)
    store = ProjectStore(config.db_path)
    registry = RunRegistry()
    resolver = HttpDoiResolver(config.resolver_base_url)

    app = FastAPI(title="litscreen", version=__version__)
    app.state.store = store
    app.state.registry = registry
    app.state.config = config

    @app.exception_handler(LitscreenError)
    async def litscreen_error(request: Request, exc: LitscreenError):
        status = 500
        body: dict = {"error": str(exc)}
        if isinstance(exc, NotFoundError) or isinstance(exc, DoiNotFoundError):
            status = 404
        elif isinstance(exc, CoverageError):
            status = 409
            body["missing_pairs"] = exc.missing[:100]
        elif isinstance(exc, ConflictError):
            status = 409
        elif isinstance(exc, InvalidTemplateError):
            status = 422
            body["violations"] = exc.violations
        elif isinstance(exc, (IngestError, DoiError)):
            status = 400
        elif isinstance(exc, TransportError):
            status = 502
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    # ── health ─────────────────────────────────────────────────────────

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    # ── corpora ────────────────────────────────────────────────────────

    @app.get("/corpora")
    def list_corpora():
        return {"corpora": store.list_corpora()}

    @app.post("/corpora/{corpus_id}/bibtex")
    async def upload_bibtex(corpus_id: str, request: Request, source: str = "upload.bib"):
        data = await request.body()
        records, diagnostics = parse_bibtex(data, source=source)
        report = store.merge_records(corpus_id, records, source=source)
        return {
            "report": report.as_dict(),
            "parsed": len(records),
            "diagnostics": [
                {"message": d.message, "line": d.line, "entry_key": d.entry_key}
                for d in diagnostics
            ],
        }

    @app.post("/corpora/{corpus_id}/dois")
    def upload_dois(corpus_id: str, body: DoisIn):
        records = []
        errors = []
        for doi in body.dois:
            try:
                records.append(resolve_doi(doi, resolver))
            except (DoiError, DoiNotFoundError, TransportError) as exc:
                errors.append({"doi": doi, "error": str(exc)})
        report = store.merge_records(corpus_id, records, source="doi-batch")
        return {"report": report.as_dict(), "resolved": len(records), "errors": errors}

    @app.post("/corpora/{corpus_id}/labels")
    async def upload_labels(corpus_id: str, request: Request):
        data = await request.body()
        labels = parse_labels_csv(data)
        count = store.set_labels(corpus_id, labels)
        return {"labeled": count}

    @app.get("/corpora/{corpus_id}/papers")
    def list_papers(corpus_id: str):
        corpus = store.get_corpus(corpus_id)
        return {
            "papers": [
                {
                    "id": p.id, "title": p.title, "abstract": p.abstract,
                    "authors": p.authors, "year": p.year, "venue": p.venue,
                    "doi": p.doi, "source": p.source, "entry_kind": p.entry_kind,
                }
                for p in corpus.papers
            ]
        }

    # ── templates ──────────────────────────────────────────────────────

    @app.get("/templates")
    def list_templates():
        return {"templates": store.list_templates()}

    @app.post("/templates")
    def create_template(body: TemplateIn):
        template = body.to_template()
        violations = validate_template(template)
        if violations:
            raise InvalidTemplateError(violations)
        saved = store.save_template(template)
        return saved.to_dict()

    @app.post("/templates/validate")
    def validate_template_endpoint(body: TemplateIn):
        return {"violations": validate_template(body.to_template())}

    @app.get("/templates/{template_id}")
    def get_template(template_id: str, version: int | None = None):
        return store.get_template(template_id, version).to_dict()

    @app.post("/templates/{template_id}/render")
    def render_template(template_id: str, body: RenderIn):
        template = store.get_template(template_id, body.version)
        corpus = store.get_corpus(body.corpus_id)
        paper = corpus.get(body.paper_id)
        if paper is None:
            raise NotFoundError(f"paper {body.paper_id!r} not in corpus {body.corpus_id!r}")
        return {"text": render_prompt(template, paper), "version": template.version}

    @app.post("/templates/preview")
    def preview_template(body: PreviewIn):
        """Render an unsaved template draft so editors never re-implement rendering."""
        corpus = store.get_corpus(body.corpus_id)
        paper = corpus.get(body.paper_id)
        if paper is None:
            raise NotFoundError(f"paper {body.paper_id!r} not in corpus {body.corpus_id!r}")
        return {"text": render_prompt(body.template.to_template(), paper)}

    # ── agents ─────────────────────────────────────────────────────────

    @app.get("/agents")
    def list_agents():
        return {"agents": [a.to_dict() for a in store.list_agents()]}

    @app.post("/agents")
    def register_agent(body: AgentIn):
        agent = AgentConfig.from_dict(body.model_dump())
        store.save_agent(agent)
        return agent.to_dict()

    # ── runs ───────────────────────────────────────────────────────────

    def _run_view(run_id: str) -> dict:
        run = store.get_run(run_id)
        corpus = store.get_corpus(run.corpus_id)
        scope = run.paper_scope if run.paper_scope is not None else [p.id for p in corpus.papers]
        total = len(scope) * len(run.agent_ids)
        return {
            "id": run.id,
            "corpus_id": run.corpus_id,
            "template_id": run.template_id,
            "template_version": run.template_version,
            "agent_ids": run.agent_ids,
            "scope_size": len(scope),
            "status": run.status.value,
            "progress": {"done": store.count_decisions(run.id), "total": total},
            "started_at": run.started_at,
            "finished_at": run.finished_at,
            "error": run.error,
        }

    def _execute_in_thread(run_id: str) -> None:
        run = store.get_run(run_id)
        corpus = store.get_corpus(run.corpus_id)
        template = store.get_template(run.template_id, run.template_version)
        agents = {a.id: a for a in store.list_agents()}
        try:
            execute_run(run, corpus, template, agents, store, transport_for)
        except LitscreenError:
            pass  # status/error already recorded on the run row

    @app.post("/runs")
    def create_run(body: RunIn):
        corpus = store.get_corpus(body.corpus_id)
        template = store.get_template(body.template_id, body.template_version)
        for agent_id in body.agent_ids:
            store.get_agent(agent_id)
        if body.scope is not None:
            known = {p.id for p in corpus.papers}
            unknown = [p for p in body.scope if p not in known]
            if unknown:
                raise NotFoundError(f"papers not in corpus: {', '.join(unknown[:10])}")
        run = store.create_run(
            body.corpus_id, template.id, template.version, body.agent_ids, body.scope
        )
        registry.launch(run.id, lambda: _execute_in_thread(run.id))
        return _run_view(run.id)

    @app.get("/runs")
    def list_runs():
        return {"runs": [_run_view(r.id) for r in store.list_runs()]}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return _run_view(run_id)

    @app.post("/runs/{run_id}/resume")
    def resume_run(run_id: str):
        store.get_run(run_id)
        registry.launch(run_id, lambda: _execute_in_thread(run_id))
        return _run_view(run_id)

    @app.get("/runs/{run_id}/decisions")
    def run_decisions(run_id: str):
        store.get_run(run_id)
        return {
            "decisions": [
                {
                    "paper_id": d.paper_id, "agent_id": d.agent_id,
                    "verdict": d.verdict.value, "justification": d.justification,
                    "input_tokens": d.input_tokens, "output_tokens": d.output_tokens,
                    "latency_ms": d.latency_ms, "attempt_count": d.attempt_count,
                }
                for d in store.list_decisions(run_id)
            ]
        }

    # ── schemes & consensus ────────────────────────────────────────────

    @app.post("/schemes")
    def create_scheme(body: SchemeIn):
        scheme = ConsensusScheme(
            id=body.id,
            agent_ids=body.agent_ids,
            kind=SchemeKind(body.kind),
            k=body.k,
            ambiguous_policy=AmbiguousPolicy(body.ambiguous_policy),
        )
        store.save_scheme(scheme)
        return scheme.to_dict()

    @app.get("/schemes")
    def list_schemes():
        return {"schemes": [s.to_dict() for s in store.list_schemes()]}

    @app.post("/schemes/{scheme_id}/apply")
    def apply_scheme(scheme_id: str, body: ApplyIn):
        scheme = store.get_scheme(scheme_id)
        runs = [store.get_run(run_id) for run_id in body.run_ids]
        if not runs:
            raise LitscreenError("apply needs at least one run")
        corpus_ids = {r.corpus_id for r in runs}
        if len(corpus_ids) > 1:
            raise ConflictError(f"runs span multiple corpora: {sorted(corpus_ids)}")
        corpus_id = corpus_ids.pop()
        corpus = store.get_corpus(corpus_id)

        scoped: set[str] | None = None
        for run in runs:
            run_scope = set(run.paper_scope) if run.paper_scope is not None \
                else {p.id for p in corpus.papers}
            scoped = run_scope if scoped is None else scoped | run_scope

        decisions = merged_run_decisions(store, body.run_ids)
        matrix = decisions_matrix(d for d in decisions if d.agent_id in scheme.agent_ids)
        results = apply_consensus(matrix, scheme, paper_ids=sorted(scoped or set()))
        app_id = store.save_consensus(scheme_id, corpus_id, body.run_ids, results)
        return {
            "application_id": app_id,
            "results": [
                {
                    "paper_id": r.paper_id,
                    "final_verdict": r.final_verdict.value,
                    "including_agents": sorted(r.including_agents),
                    "discarding_agents": sorted(r.discarding_agents),
                    "flagged_for_review": r.flagged_for_review,
                }
                for r in results
            ],
        }

    @app.get("/results/{application_id}")
    def get_results(application_id: str):
        meta, results = store.get_consensus(application_id)
        return {
            "application": meta,
            "results": [
                {
                    "paper_id": r.paper_id,
                    "final_verdict": r.final_verdict.value,
                    "including_agents": sorted(r.including_agents),
                    "discarding_agents": sorted(r.discarding_agents),
                    "flagged_for_review": r.flagged_for_review,
                }
                for r in results
            ],
        }

    # ── stats & export ─────────────────────────────────────────────────

    @app.get("/stats/{scope_id}")
    def stats(scope_id: str):
        return stats_for_scope(store, scope_id)

    @app.get("/export/{scope_id}.csv")
    def export(scope_id: str):
        payload = export_scope_csv(store, scope_id)
        return Response(
            content=payload,
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": f'attachment; filename="{scope_id}.csv"'},
        )

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def export_scope_csv(store: ProjectStore, scope_id: str) -> bytes:
    """CSV for a corpus, run, or consensus-application scope (checked in that order)."""
    if store.has_corpus(scope_id):
        return corpus_csv(store.get_corpus(scope_id))
    try:
        run = store.get_run(scope_id)
        corpus = store.get_corpus(run.corpus_id)
        scope = run.paper_scope if run.paper_scope is not None else [p.id for p in corpus.papers]
        return results_csv(
            corpus, run.agent_ids, store.list_decisions(scope_id), paper_ids=scope
        )
    except NotFoundError:
        pass
    meta, results = store.get_consensus(scope_id)
    scheme = store.get_scheme(meta["scheme_id"])
    corpus = store.get_corpus(meta["corpus_id"])
    decisions = [
        d for d in merged_run_decisions(store, meta["run_ids"])
        if d.agent_id in scheme.agent_ids
    ]
    return results_csv(
        corpus,
        scheme.agent_ids,
        decisions,
        consensus={r.paper_id: r for r in results},
        paper_ids=[r.paper_id for r in results],
    )


def serve(config: ServiceConfig) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    host, _, port = config.listen_addr.rpartition(":")
    app = create_app(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
