"""SQLite-backed project store: corpora, templates, agents, runs, decisions,
schemes, consensus results, and ground-truth labels in one file.

Writes are serialized through a process-wide lock and committed
individually, so a decision acknowledged to a run executor survives a
process kill. Run leases stop two executors from working the same run;
a lease whose owning process died is stolen on acquire.
"""

from __future__ import annotations

import json
import os
import sqlite3
import threading
import time
import uuid

from litscreen.agents import AgentConfig, AgentDecision
from litscreen.consensus import ConsensusResult, ConsensusScheme
from litscreen.errors import ConflictError, NotFoundError
from litscreen.evaluation import GroundTruthLabel
from litscreen.prompting import PromptTemplate
from litscreen.records import Corpus, IngestionEvent, MergeReport, PaperRecord, merge_into_corpus
from litscreen.runner import ClassificationRun, RunStatus
from litscreen.verdicts import Label, Verdict

_SCHEMA = """
CREATE TABLE IF NOT EXISTS corpora (
    id TEXT PRIMARY KEY,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS papers (
    corpus_id TEXT NOT NULL REFERENCES corpora(id),
    id TEXT NOT NULL,
    title TEXT NOT NULL,
    abstract TEXT NOT NULL DEFAULT '',
    authors TEXT NOT NULL DEFAULT '[]',
    year INTEGER,
    venue TEXT,
    doi TEXT,
    source TEXT NOT NULL DEFAULT '',
    entry_kind TEXT NOT NULL DEFAULT 'other',
    position INTEGER NOT NULL,
    PRIMARY KEY (corpus_id, id)
);
CREATE TABLE IF NOT EXISTS provenance (
    corpus_id TEXT NOT NULL REFERENCES corpora(id),
    seq INTEGER NOT NULL,
    source TEXT NOT NULL,
    timestamp REAL NOT NULL,
    added INTEGER NOT NULL,
    duplicates_removed INTEGER NOT NULL,
    non_papers_excluded INTEGER NOT NULL,
    PRIMARY KEY (corpus_id, seq)
);
CREATE TABLE IF NOT EXISTS templates (
    id TEXT NOT NULL,
    version INTEGER NOT NULL,
    doc TEXT NOT NULL,
    created_at REAL NOT NULL,
    PRIMARY KEY (id, version)
);
CREATE TABLE IF NOT EXISTS agents (
    id TEXT PRIMARY KEY,
    doc TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS runs (
    id TEXT PRIMARY KEY,
    corpus_id TEXT NOT NULL REFERENCES corpora(id),
    template_id TEXT NOT NULL,
    template_version INTEGER NOT NULL,
    agent_ids TEXT NOT NULL,
    paper_scope TEXT,
    status TEXT NOT NULL,
    started_at REAL,
    finished_at REAL,
    error TEXT
);
CREATE TABLE IF NOT EXISTS decisions (
    run_id TEXT NOT NULL REFERENCES runs(id),
    paper_id TEXT NOT NULL,
    agent_id TEXT NOT NULL,
    verdict TEXT NOT NULL,
    justification TEXT NOT NULL DEFAULT '',
    raw_response TEXT NOT NULL DEFAULT '',
    input_tokens INTEGER NOT NULL DEFAULT 0,
    output_tokens INTEGER NOT NULL DEFAULT 0,
    latency_ms INTEGER NOT NULL DEFAULT 0,
    attempt_count INTEGER NOT NULL DEFAULT 1,
    PRIMARY KEY (run_id, paper_id, agent_id)
);
CREATE TABLE IF NOT EXISTS schemes (
    id TEXT PRIMARY KEY,
    doc TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS consensus_applications (
    id TEXT PRIMARY KEY,
    scheme_id TEXT NOT NULL REFERENCES schemes(id),
    corpus_id TEXT NOT NULL REFERENCES corpora(id),
    run_ids TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS consensus_results (
    application_id TEXT NOT NULL REFERENCES consensus_applications(id),
    paper_id TEXT NOT NULL,
    final_verdict TEXT NOT NULL,
    including_agents TEXT NOT NULL,
    discarding_agents TEXT NOT NULL,
    flagged INTEGER NOT NULL,
    PRIMARY KEY (application_id, paper_id)
);
CREATE TABLE IF NOT EXISTS labels (
    corpus_id TEXT NOT NULL REFERENCES corpora(id),
    paper_id TEXT NOT NULL,
    label TEXT NOT NULL,
    source TEXT NOT NULL DEFAULT 'human screening',
    PRIMARY KEY (corpus_id, paper_id)
);
CREATE TABLE IF NOT EXISTS leases (
    run_id TEXT PRIMARY KEY,
    pid INTEGER NOT NULL,
    acquired_at REAL NOT NULL
);
"""

LEASE_TTL_SECONDS = 300.0


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except OSError:
        return False
    return True


class ProjectStore:
    """All durable state behind one SQLite file."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=FULL")
            self._conn.execute("PRAGMA foreign_keys=ON")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # ── corpora ────────────────────────────────────────────────────────

    def ensure_corpus(self, corpus_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO corpora (id, created_at) VALUES (?, ?)",
                (corpus_id, time.time()),
            )
            self._conn.commit()

    def list_corpora(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                """SELECT c.id, c.created_at, COUNT(p.id) AS papers
                   FROM corpora c LEFT JOIN papers p ON p.corpus_id = c.id
                   GROUP BY c.id ORDER BY c.id"""
            ).fetchall()
        return [dict(r) for r in rows]

    def has_corpus(self, corpus_id: str) -> bool:
        with self._lock:
            row = self._conn.execute("SELECT 1 FROM corpora WHERE id = ?", (corpus_id,)).fetchone()
        return row is not None

    def get_corpus(self, corpus_id: str) -> Corpus:
        with self._lock:
            if not self.has_corpus(corpus_id):
                raise NotFoundError(f"corpus {corpus_id!r} not found")
            paper_rows = self._conn.execute(
                "SELECT * FROM papers WHERE corpus_id = ? ORDER BY position", (corpus_id,)
            ).fetchall()
            prov_rows = self._conn.execute(
                "SELECT * FROM provenance WHERE corpus_id = ? ORDER BY seq", (corpus_id,)
            ).fetchall()
        papers = [
            PaperRecord(
                id=r["id"],
                title=r["title"],
                abstract=r["abstract"],
                authors=json.loads(r["authors"]),
                year=r["year"],
                venue=r["venue"],
                doi=r["doi"],
                source=r["source"],
                entry_kind=r["entry_kind"],
            )
            for r in paper_rows
        ]
        provenance = [
            IngestionEvent(
                source=r["source"],
                timestamp=r["timestamp"],
                added=r["added"],
                duplicates_removed=r["duplicates_removed"],
                non_papers_excluded=r["non_papers_excluded"],
            )
            for r in prov_rows
        ]
        return Corpus(papers=papers, provenance=provenance)

    def merge_records(self, corpus_id: str, records: list[PaperRecord], source: str) -> MergeReport:
        """Dedup + merge records into the stored corpus, transactionally."""
        with self._lock:
            self.ensure_corpus(corpus_id)
            corpus = self.get_corpus(corpus_id)
            before = {p.id for p in corpus.papers}
            merged, report = merge_into_corpus(corpus, records, source=source)
            position = len(before)
            for paper in merged.papers:
                if paper.id in before:
                    continue
                self._conn.execute(
                    """INSERT INTO papers (corpus_id, id, title, abstract, authors, year,
                                           venue, doi, source, entry_kind, position)
                       VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                    (
                        corpus_id, paper.id, paper.title, paper.abstract,
                        json.dumps(paper.authors), paper.year, paper.venue, paper.doi,
                        paper.source, paper.entry_kind, position,
                    ),
                )
                position += 1
            event = merged.provenance[-1]
            seq = self._conn.execute(
                "SELECT COALESCE(MAX(seq), 0) + 1 FROM provenance WHERE corpus_id = ?",
                (corpus_id,),
            ).fetchone()[0]
            self._conn.execute(
                """INSERT INTO provenance (corpus_id, seq, source, timestamp, added,
                                           duplicates_removed, non_papers_excluded)
                   VALUES (?, ?, ?, ?, ?, ?, ?)""",
                (
                    corpus_id, seq, event.source, event.timestamp,
                    event.added, event.duplicates_removed, event.non_papers_excluded,
                ),
            )
            self._conn.commit()
        return report

    # ── templates ──────────────────────────────────────────────────────

    def save_template(self, template: PromptTemplate) -> PromptTemplate:
        """Persist as the next version of the template id; never edits in place."""
        with self._lock:
            row = self._conn.execute(
                "SELECT COALESCE(MAX(version), 0) FROM templates WHERE id = ?",
                (template.id,),
            ).fetchone()
            template.version = row[0] + 1
            self._conn.execute(
                "INSERT INTO templates (id, version, doc, created_at) VALUES (?, ?, ?, ?)",
                (template.id, template.version, json.dumps(template.to_dict()), time.time()),
            )
            self._conn.commit()
        return template

    def get_template(self, template_id: str, version: int | None = None) -> PromptTemplate:
        with self._lock:
            if version is None:
                row = self._conn.execute(
                    "SELECT doc FROM templates WHERE id = ? ORDER BY version DESC LIMIT 1",
                    (template_id,),
                ).fetchone()
            else:
                row = self._conn.execute(
                    "SELECT doc FROM templates WHERE id = ? AND version = ?",
                    (template_id, version),
                ).fetchone()
        if row is None:
            raise NotFoundError(f"template {template_id!r} (version {version}) not found")
        return PromptTemplate.from_dict(json.loads(row["doc"]))

    def list_templates(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, MAX(version) AS latest_version FROM templates GROUP BY id ORDER BY id"
            ).fetchall()
        return [dict(r) for r in rows]

    # ── agents ─────────────────────────────────────────────────────────

    def save_agent(self, agent: AgentConfig) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO agents (id, doc) VALUES (?, ?)",
                (agent.id, json.dumps(agent.to_dict())),
            )
            self._conn.commit()

    def get_agent(self, agent_id: str) -> AgentConfig:
        with self._lock:
            row = self._conn.execute("SELECT doc FROM agents WHERE id = ?", (agent_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"agent {agent_id!r} not found")
        return AgentConfig.from_dict(json.loads(row["doc"]))

    def list_agents(self) -> list[AgentConfig]:
        with self._lock:
            rows = self._conn.execute("SELECT doc FROM agents ORDER BY id").fetchall()
        return [AgentConfig.from_dict(json.loads(r["doc"])) for r in rows]

    # ── runs ───────────────────────────────────────────────────────────

    def create_run(
        self,
        corpus_id: str,
        template_id: str,
        template_version: int,
        agent_ids: list[str],
        paper_scope: list[str] | None = None,
        run_id: str | None = None,
    ) -> ClassificationRun:
        run = ClassificationRun(
            id=run_id or uuid.uuid4().hex[:12],
            corpus_id=corpus_id,
            template_id=template_id,
            template_version=template_version,
            agent_ids=list(agent_ids),
            paper_scope=list(paper_scope) if paper_scope is not None else None,
        )
        with self._lock:
            self._conn.execute(
                """INSERT INTO runs (id, corpus_id, template_id, template_version, agent_ids,
                                     paper_scope, status, started_at, finished_at, error)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                self._run_row(run),
            )
            self._conn.commit()
        return run

    @staticmethod
    def _run_row(run: ClassificationRun) -> tuple:
        return (
            run.id, run.corpus_id, run.template_id, run.template_version,
            json.dumps(run.agent_ids),
            None if run.paper_scope is None else json.dumps(run.paper_scope),
            run.status.value, run.started_at, run.finished_at, run.error,
        )

    def save_run(self, run: ClassificationRun) -> None:
        with self._lock:
            self._conn.execute(
                """INSERT OR REPLACE INTO runs (id, corpus_id, template_id, template_version,
                                                agent_ids, paper_scope, status, started_at,
                                                finished_at, error)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                self._run_row(run),
            )
            self._conn.commit()

    def get_run(self, run_id: str) -> ClassificationRun:
        with self._lock:
            row = self._conn.execute("SELECT * FROM runs WHERE id = ?", (run_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"run {run_id!r} not found")
        return ClassificationRun(
            id=row["id"],
            corpus_id=row["corpus_id"],
            template_id=row["template_id"],
            template_version=row["template_version"],
            agent_ids=json.loads(row["agent_ids"]),
            paper_scope=None if row["paper_scope"] is None else json.loads(row["paper_scope"]),
            status=RunStatus(row["status"]),
            started_at=row["started_at"],
            finished_at=row["finished_at"],
            error=row["error"],
        )

    def list_runs(self) -> list[ClassificationRun]:
        with self._lock:
            rows = self._conn.execute("SELECT id FROM runs ORDER BY rowid").fetchall()
        return [self.get_run(r["id"]) for r in rows]

    # ── decisions ──────────────────────────────────────────────────────

    def save_decision(self, decision: AgentDecision) -> None:
        with self._lock:
            self._conn.execute(
                """INSERT OR REPLACE INTO decisions
                   (run_id, paper_id, agent_id, verdict, justification, raw_response,
                    input_tokens, output_tokens, latency_ms, attempt_count)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                (
                    decision.run_id, decision.paper_id, decision.agent_id,
                    decision.verdict.value, decision.justification, decision.raw_response,
                    decision.input_tokens, decision.output_tokens,
                    decision.latency_ms, decision.attempt_count,
                ),
            )
            self._conn.commit()

    def persisted_pairs(self, run_id: str) -> set[tuple[str, str]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT paper_id, agent_id FROM decisions WHERE run_id = ?", (run_id,)
            ).fetchall()
        return {(r["paper_id"], r["agent_id"]) for r in rows}

    def list_decisions(self, run_id: str) -> list[AgentDecision]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM decisions WHERE run_id = ? ORDER BY paper_id, agent_id",
                (run_id,),
            ).fetchall()
        return [
            AgentDecision(
                run_id=r["run_id"],
                paper_id=r["paper_id"],
                agent_id=r["agent_id"],
                verdict=Verdict(r["verdict"]),
                justification=r["justification"],
                raw_response=r["raw_response"],
                input_tokens=r["input_tokens"],
                output_tokens=r["output_tokens"],
                latency_ms=r["latency_ms"],
                attempt_count=r["attempt_count"],
            )
            for r in rows
        ]

    def count_decisions(self, run_id: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) FROM decisions WHERE run_id = ?", (run_id,)
            ).fetchone()
        return row[0]

    # ── leases ─────────────────────────────────────────────────────────

    def acquire_lease(self, run_id: str) -> None:
        with self._lock:
            row = self._conn.execute(
                "SELECT pid, acquired_at FROM leases WHERE run_id = ?", (run_id,)
            ).fetchone()
            now = time.time()
            if row is not None:
                held_by_live_owner = (
                    row["pid"] != os.getpid()
                    and _pid_alive(row["pid"])
                    and now - row["acquired_at"] < LEASE_TTL_SECONDS
                )
                if row["pid"] == os.getpid() or held_by_live_owner:
                    raise ConflictError(f"run {run_id} already has an executor (pid {row['pid']})")
                self._conn.execute("DELETE FROM leases WHERE run_id = ?", (run_id,))
            self._conn.execute(
                "INSERT INTO leases (run_id, pid, acquired_at) VALUES (?, ?, ?)",
                (run_id, os.getpid(), now),
            )
            self._conn.commit()

    def release_lease(self, run_id: str) -> None:
        with self._lock:
            self._conn.execute("DELETE FROM leases WHERE run_id = ?", (run_id,))
            self._conn.commit()

    # ── schemes & consensus ────────────────────────────────────────────

    def save_scheme(self, scheme: ConsensusScheme) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO schemes (id, doc) VALUES (?, ?)",
                (scheme.id, json.dumps(scheme.to_dict())),
            )
            self._conn.commit()

    def get_scheme(self, scheme_id: str) -> ConsensusScheme:
        with self._lock:
            row = self._conn.execute("SELECT doc FROM schemes WHERE id = ?", (scheme_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"scheme {scheme_id!r} not found")
        return ConsensusScheme.from_dict(json.loads(row["doc"]))

    def list_schemes(self) -> list[ConsensusScheme]:
        with self._lock:
            rows = self._conn.execute("SELECT doc FROM schemes ORDER BY id").fetchall()
        return [ConsensusScheme.from_dict(json.loads(r["doc"])) for r in rows]

    def save_consensus(
        self,
        scheme_id: str,
        corpus_id: str,
        run_ids: list[str],
        results: list[ConsensusResult],
        application_id: str | None = None,
    ) -> str:
        app_id = application_id or uuid.uuid4().hex[:12]
        with self._lock:
            self._conn.execute(
                """INSERT INTO consensus_applications (id, scheme_id, corpus_id, run_ids, created_at)
                   VALUES (?, ?, ?, ?, ?)""",
                (app_id, scheme_id, corpus_id, json.dumps(run_ids), time.time()),
            )
            for result in results:
                self._conn.execute(
                    """INSERT INTO consensus_results
                       (application_id, paper_id, final_verdict, including_agents,
                        discarding_agents, flagged)
                       VALUES (?, ?, ?, ?, ?, ?)""",
                    (
                        app_id, result.paper_id, result.final_verdict.value,
                        json.dumps(sorted(result.including_agents)),
                        json.dumps(sorted(result.discarding_agents)),
                        int(result.flagged_for_review),
                    ),
                )
            self._conn.commit()
        return app_id

    def get_consensus(self, application_id: str) -> tuple[dict, list[ConsensusResult]]:
        with self._lock:
            app = self._conn.execute(
                "SELECT * FROM consensus_applications WHERE id = ?", (application_id,)
            ).fetchone()
            if app is None:
                raise NotFoundError(f"consensus application {application_id!r} not found")
            rows = self._conn.execute(
                "SELECT * FROM consensus_results WHERE application_id = ? ORDER BY paper_id",
                (application_id,),
            ).fetchall()
        meta = {
            "id": app["id"],
            "scheme_id": app["scheme_id"],
            "corpus_id": app["corpus_id"],
            "run_ids": json.loads(app["run_ids"]),
            "created_at": app["created_at"],
        }
        results = [
            ConsensusResult(
                paper_id=r["paper_id"],
                final_verdict=Verdict(r["final_verdict"]),
                including_agents=set(json.loads(r["including_agents"])),
                discarding_agents=set(json.loads(r["discarding_agents"])),
                flagged_for_review=bool(r["flagged"]),
            )
            for r in rows
        ]
        return meta, results

    def list_consensus_applications(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, scheme_id, corpus_id, run_ids, created_at FROM consensus_applications "
                "ORDER BY created_at"
            ).fetchall()
        return [
            {
                "id": r["id"],
                "scheme_id": r["scheme_id"],
                "corpus_id": r["corpus_id"],
                "run_ids": json.loads(r["run_ids"]),
                "created_at": r["created_at"],
            }
            for r in rows
        ]

    # ── ground truth ───────────────────────────────────────────────────

    def set_labels(self, corpus_id: str, labels: list[GroundTruthLabel]) -> int:
        with self._lock:
            if not self.has_corpus(corpus_id):
                raise NotFoundError(f"corpus {corpus_id!r} not found")
            for gt in labels:
                self._conn.execute(
                    "INSERT OR REPLACE INTO labels (corpus_id, paper_id, label, source) "
                    "VALUES (?, ?, ?, ?)",
                    (corpus_id, gt.paper_id, gt.label.value, gt.source),
                )
            self._conn.commit()
        return len(labels)

    def get_labels(self, corpus_id: str) -> list[GroundTruthLabel]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT paper_id, label, source FROM labels WHERE corpus_id = ? ORDER BY paper_id",
                (corpus_id,),
            ).fetchall()
        return [
            GroundTruthLabel(paper_id=r["paper_id"], label=Label(r["label"]), source=r["source"])
            for r in rows
        ]
