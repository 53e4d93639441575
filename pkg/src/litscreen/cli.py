"""Command-line client: ingest corpora, execute runs, build consensus,
evaluate against ground truth, export CSVs, and serve the HTTP API."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

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
from litscreen.errors import LitscreenError
from litscreen.evaluation import parse_labels_csv
from litscreen.prompting import PromptTemplate, validate_template
from litscreen.runner import execute_run
from litscreen.service import (
    DEFAULT_RESOLVER_URL,
    ServiceConfig,
    export_scope_csv,
    transport_for,
)
from litscreen.stats import (
    consensus_stats,
    decisions_matrix,
    format_metric_block,
    merged_run_decisions,
    run_stats,
    stats_for_scope,
)
from litscreen.store import ProjectStore
from litscreen.verdicts import Verdict


def _die(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


def _open_store(data_dir: str) -> ProjectStore:
    Path(data_dir).mkdir(parents=True, exist_ok=True)
    return ProjectStore(ServiceConfig(data_dir=data_dir).db_path)


@click.group()
@click.version_option(version=__version__, prog_name="litscreen")
@click.option("--data-dir", envvar="DATA_DIR", default="data", show_default=True,
              help="Directory holding the project store.")
@click.pass_context
def main(ctx, data_dir):
    """Screen literature corpora with multiple LLM agents and consensus voting."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir


@main.command()
@click.option("--corpus", "corpus_id", default="main", show_default=True)
@click.option("--bib", "bib_files", multiple=True, type=click.Path(exists=True, path_type=Path),
              help="BibTeX file(s) to ingest.")
@click.option("--dois", "dois_file", type=click.Path(exists=True, path_type=Path),
              help="File with one DOI per line, resolved via the metadata resolver.")
@click.option("--resolver-url", envvar="RESOLVER_BASE_URL", default=DEFAULT_RESOLVER_URL,
              show_default=True)
@click.option("--labels", "labels_file", type=click.Path(exists=True, path_type=Path),
              help="Ground-truth CSV (paper_id,label).")
@click.pass_context
def ingest(ctx, corpus_id, bib_files, dois_file, resolver_url, labels_file):
    """Ingest BibTeX files and/or DOI lists into a corpus."""
    if not bib_files and not dois_file and not labels_file:
        _die("nothing to ingest: pass --bib, --dois, or --labels")
    store = _open_store(ctx.obj["data_dir"])
    try:
        for path in bib_files:
            records, diagnostics = parse_bibtex(path.read_bytes(), source=path.name)
            report = store.merge_records(corpus_id, records, source=path.name)
            click.echo(json.dumps({
                "file": path.name,
                "parsed": len(records),
                "diagnostics": [str(d) for d in diagnostics],
                **report.as_dict(),
            }))
        if dois_file:
            resolver = HttpDoiResolver(resolver_url)
            records, errors = [], []
            for line in dois_file.read_text().splitlines():
                doi = line.strip()
                if not doi:
                    continue
                try:
                    records.append(resolve_doi(doi, resolver))
                except LitscreenError as exc:
                    errors.append({"doi": doi, "error": str(exc)})
            report = store.merge_records(corpus_id, records, source=dois_file.name)
            click.echo(json.dumps({
                "file": dois_file.name, "resolved": len(records),
                "errors": errors, **report.as_dict(),
            }))
        if labels_file:
            count = store.set_labels(corpus_id, parse_labels_csv(labels_file.read_bytes()))
            click.echo(json.dumps({"labeled": count}))
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


def _register_agents(store, agents_file: Path | None, agent_ids: str | None) -> list[str]:
    if agents_file:
        configs = [AgentConfig.from_dict(d) for d in json.loads(agents_file.read_text())]
        for config in configs:
            store.save_agent(config)
        return [c.id for c in configs]
    if agent_ids:
        return [a.strip() for a in agent_ids.split(",") if a.strip()]
    raise LitscreenError("no agents given: pass --agents or --agents-file")


@main.command()
@click.option("--corpus", "corpus_id", default="main", show_default=True)
@click.option("--template-file", type=click.Path(exists=True, path_type=Path),
              help="Template JSON; saved as a new version before the run.")
@click.option("--template-id", help="Use an already-saved template.")
@click.option("--template-version", type=int, default=None)
@click.option("--agents", "agent_ids", help="Comma-separated registered agent ids.")
@click.option("--agents-file", type=click.Path(exists=True, path_type=Path),
              help="JSON list of agent configs; registered before the run.")
@click.option("--scope-file", type=click.Path(exists=True, path_type=Path),
              help="Paper-id subset, one id per line (default: whole corpus).")
@click.option("--run-id", default=None, help="Resume or name a run explicitly.")
@click.pass_context
def run(ctx, corpus_id, template_file, template_id, template_version,
        agent_ids, agents_file, scope_file, run_id):
    """Execute (or resume) a classification run and print its evaluation."""
    store = _open_store(ctx.obj["data_dir"])
    try:
        if template_file:
            template = PromptTemplate.from_dict(json.loads(template_file.read_text()))
            violations = validate_template(template)
            if violations:
                raise LitscreenError("invalid template: " + "; ".join(violations))
            template = store.save_template(template)
        elif template_id:
            template = store.get_template(template_id, template_version)
        else:
            raise LitscreenError("pass --template-file or --template-id")

        ids = _register_agents(store, agents_file, agent_ids)
        agents = {a: store.get_agent(a) for a in ids}
        scope = None
        if scope_file:
            scope = [l.strip() for l in scope_file.read_text().splitlines() if l.strip()]

        if run_id:
            try:
                run_record = store.get_run(run_id)
            except LitscreenError:
                run_record = store.create_run(corpus_id, template.id, template.version,
                                              ids, scope, run_id=run_id)
        else:
            run_record = store.create_run(corpus_id, template.id, template.version, ids, scope)
        corpus = store.get_corpus(run_record.corpus_id)

        done_count = {"n": store.count_decisions(run_record.id)}
        total = len(scope if scope is not None else corpus.papers) * len(ids)

        def on_decision(decision):
            done_count["n"] += 1
            click.echo(f"\r{done_count['n']}/{total} decisions", nl=False, err=True)

        execute_run(run_record, corpus, store.get_template(template.id, template.version),
                    agents, store, transport_for, on_decision=on_decision)
        click.echo("", err=True)
        click.echo(json.dumps({"run_id": run_record.id, "status": run_record.status.value,
                               "decisions": store.count_decisions(run_record.id)}))
        _print_run_table(store, run_record.id)
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


def _print_run_table(store, run_id: str) -> None:
    payload = run_stats(store, run_id)
    if "per_agent" in payload and payload["per_agent"]:
        click.echo(format_metric_block(payload["per_agent"]))
    else:
        click.echo(json.dumps({"distribution": payload["distribution"]}))


@main.command()
@click.option("--runs", "run_ids", required=True, help="Comma-separated run ids.")
@click.option("--agents", "agent_ids", default=None,
              help="Participating agents (default: all agents of the runs).")
@click.option("--kind", type=click.Choice(["any_include", "threshold"]), default="any_include",
              show_default=True)
@click.option("--k", type=int, default=1, show_default=True, help="Quorum for threshold voting.")
@click.option("--policy", type=click.Choice(["include", "abstain"]), default="include",
              show_default=True, help="How AMBIGUOUS/ERROR verdicts are counted.")
@click.option("--scheme-id", default=None)
@click.pass_context
def consensus(ctx, run_ids, agent_ids, kind, k, policy, scheme_id):
    """Combine run verdicts under a consensus scheme and persist the results."""
    store = _open_store(ctx.obj["data_dir"])
    try:
        ids = [r.strip() for r in run_ids.split(",") if r.strip()]
        runs = [store.get_run(r) for r in ids]
        corpus_ids = {r.corpus_id for r in runs}
        if len(corpus_ids) != 1:
            raise LitscreenError(f"runs span multiple corpora: {sorted(corpus_ids)}")
        if agent_ids:
            participants = [a.strip() for a in agent_ids.split(",") if a.strip()]
        else:
            participants = sorted({a for r in runs for a in r.agent_ids})
        scheme = ConsensusScheme(
            id=scheme_id or f"scheme-{'-'.join(ids)}",
            agent_ids=participants,
            kind=SchemeKind.ANY_INCLUDE if kind == "any_include" else SchemeKind.THRESHOLD,
            k=k,
            ambiguous_policy=(AmbiguousPolicy.COUNT_AS_INCLUDE if policy == "include"
                              else AmbiguousPolicy.COUNT_AS_ABSTAIN),
        )
        store.save_scheme(scheme)
        corpus = store.get_corpus(corpus_ids.pop())
        scoped: set[str] = set()
        for r in runs:
            scoped |= set(r.paper_scope) if r.paper_scope is not None \
                else {p.id for p in corpus.papers}
        decisions = merged_run_decisions(store, ids)
        matrix = decisions_matrix(d for d in decisions if d.agent_id in scheme.agent_ids)
        results = apply_consensus(matrix, scheme, paper_ids=sorted(scoped))
        app_id = store.save_consensus(scheme.id, runs[0].corpus_id, ids, results)
        includes = sum(1 for r in results if r.final_verdict == Verdict.INCLUDE)
        flagged = sum(1 for r in results if r.flagged_for_review)
        click.echo(json.dumps({
            "application_id": app_id, "scheme_id": scheme.id,
            "papers": len(results), "includes": includes,
            "discards": len(results) - includes, "flagged": flagged,
        }))
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


@main.command()
@click.option("--run", "run_id", default=None, help="Run id to evaluate.")
@click.option("--consensus", "application_id", default=None,
              help="Consensus application id to evaluate.")
@click.option("--truth", "truth_file", type=click.Path(exists=True, path_type=Path),
              help="Ground-truth CSV loaded into the scope's corpus first.")
@click.pass_context
def evaluate(ctx, run_id, application_id, truth_file):
    """Print the counts/metrics table for a run or consensus scope."""
    if not run_id and not application_id:
        _die("pass --run or --consensus")
    store = _open_store(ctx.obj["data_dir"])
    try:
        if truth_file:
            corpus_id = (store.get_run(run_id).corpus_id if run_id
                         else store.get_consensus(application_id)[0]["corpus_id"])
            store.set_labels(corpus_id, parse_labels_csv(truth_file.read_bytes()))
        if run_id:
            payload = run_stats(store, run_id)
            columns = dict(payload.get("per_agent", {}))
        else:
            payload = consensus_stats(store, application_id)
            columns = dict(payload.get("per_agent", {}))
            scored = payload.get("consensus", {}).get("scored")
            if scored:
                columns["consensus"] = scored
        if not columns:
            raise LitscreenError("no ground-truth labels cover this scope; pass --truth")
        click.echo(format_metric_block(columns))
        if "agreement" in payload:
            click.echo("outliers: " + ", ".join(payload["agreement"]["outliers"]))
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


@main.command()
@click.option("--scope", "scope_id", required=True,
              help="Corpus, run, or consensus-application id.")
@click.option("--out", "out_file", required=True, type=click.Path(path_type=Path))
@click.pass_context
def export(ctx, scope_id, out_file):
    """Write the CSV export of a scope to a file."""
    store = _open_store(ctx.obj["data_dir"])
    try:
        out_file.write_bytes(export_scope_csv(store, scope_id))
        click.echo(json.dumps({"scope": scope_id, "file": str(out_file)}))
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


@main.command()
@click.option("--listen", envvar="LISTEN_ADDR", default="127.0.0.1:8722", show_default=True)
@click.option("--resolver-url", envvar="RESOLVER_BASE_URL", default=DEFAULT_RESOLVER_URL,
              show_default=True)
@click.option("--static-dir", default=None,
              help="Dashboard build directory served at /ui.")
@click.pass_context
def serve(ctx, listen, resolver_url, static_dir):
    """Run the HTTP service."""
    from litscreen.service import serve as run_service

    config = ServiceConfig(
        data_dir=ctx.obj["data_dir"],
        listen_addr=listen,
        resolver_base_url=resolver_url,
        static_dir=static_dir,
    )
    run_service(config)


@main.command()
@click.option("--scope", "scope_id", required=True)
@click.pass_context
def stats(ctx, scope_id):
    """Print the JSON stats payload for a run or consensus scope."""
    store = _open_store(ctx.obj["data_dir"])
    try:
        click.echo(json.dumps(stats_for_scope(store, scope_id), indent=2, sort_keys=True))
    except LitscreenError as exc:
        _die(str(exc))
    finally:
        store.close()


if __name__ == "__main__":
    main()
