import json
import time

import pytest
from fastapi.testclient import TestClient

from litscreen import __version__
from litscreen.service import ServiceConfig, create_app

from conftest import FIXTURES


@pytest.fixture()
def client(tmp_path):
    config = ServiceConfig(data_dir=str(tmp_path / "data"))
    app = create_app(config)
    with TestClient(app) as c:
        yield c
    app.state.registry.join_all()
    app.state.store.close()


def _register_mock_agents(client, agent_ids=("alpha", "beta", "gamma")):
    script = str(FIXTURES / "mock_script.json")
    for agent_id in agent_ids:
        response = client.post("/agents", json={
            "id": agent_id,
            "endpoint_url": f"mock://{script}",
            "model_name": f"{agent_id}-model",
            "max_parallel_requests": 8,
            "requests_per_minute": 100000,
        })
        assert response.status_code == 200, response.text
    return list(agent_ids)


def _upload_fixture_corpus(client, corpus_id="c1"):
    data = (FIXTURES / "screening50.bib").read_bytes()
    response = client.post(f"/corpora/{corpus_id}/bibtex?source=screening50.bib", content=data)
    assert response.status_code == 200, response.text
    return response.json()


def _create_fixture_template(client):
    template = json.loads((FIXTURES / "fixture_template.json").read_text())
    template.pop("version", None)
    response = client.post("/templates", json=template)
    assert response.status_code == 200, response.text
    return response.json()


def _wait_for_run(client, run_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        view = client.get(f"/runs/{run_id}").json()
        if view["status"] in ("complete", "failed"):
            return view
        time.sleep(0.05)
    raise AssertionError(f"run {run_id} did not finish: {view}")


class TestHealthAndIngest:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body == {"status": "ok", "version": __version__}

    def test_bibtex_upload_merge_report(self, client):
        data = (FIXTURES / "mixed.bib").read_bytes()
        response = client.post("/corpora/c1/bibtex?source=mixed.bib", content=data)
        body = response.json()
        assert body["report"] == {
            "added": 7, "duplicates_removed": 2, "non_papers_excluded": 1,
        }
        assert body["parsed"] == 10
        assert len(body["diagnostics"]) == 2

    def test_reupload_is_idempotent(self, client):
        data = (FIXTURES / "mixed.bib").read_bytes()
        client.post("/corpora/c1/bibtex", content=data)
        body = client.post("/corpora/c1/bibtex", content=data).json()
        assert body["report"]["added"] == 0

    def test_binary_upload_rejected(self, client):
        response = client.post("/corpora/c1/bibtex", content=b"\x00\x01\x02")
        assert response.status_code == 400

    def test_papers_listing(self, client):
        _upload_fixture_corpus(client)
        papers = client.get("/corpora/c1/papers").json()["papers"]
        assert len(papers) == 50
        assert papers[0]["id"] == "p001"

    def test_unknown_corpus_404(self, client):
        assert client.get("/corpora/nope/papers").status_code == 404

    def test_labels_upload(self, client):
        _upload_fixture_corpus(client)
        data = (FIXTURES / "labels50.csv").read_bytes()
        body = client.post("/corpora/c1/labels", content=data).json()
        assert body == {"labeled": 50}


class TestDoiIngest:
    def test_dois_resolved_via_stub_resolver(self, client, monkeypatch):
        from litscreen import service as service_module

        meta = {
            "title": ["Resolved Paper"],
            "abstract": "Text.",
            "author": [{"given": "A", "family": "B"}],
            "issued": {"date-parts": [[2020]]},
            "container-title": ["Venue"],
        }

        # The app holds an HttpDoiResolver; stub its fetch.
        def fake_fetch(self, doi):
            if doi == "10.1111/test.1":
                return meta
            from litscreen.errors import DoiNotFoundError
            raise DoiNotFoundError(doi)

        monkeypatch.setattr(service_module.HttpDoiResolver, "fetch", fake_fetch)
        body = client.post("/corpora/c1/dois", json={
            "dois": ["10.1111/test.1", "10.9999/unknown", "not-a-doi"],
        }).json()
        assert body["report"]["added"] == 1
        assert body["resolved"] == 1
        assert len(body["errors"]) == 2


class TestTemplates:
    def test_create_assigns_version(self, client):
        first = _create_fixture_template(client)
        second = _create_fixture_template(client)
        assert (first["version"], second["version"]) == (1, 2)

    def test_invalid_template_lists_violations(self, client):
        response = client.post("/templates", json={"id": "t", "topic_title": ""})
        assert response.status_code == 422
        assert any("topic_title" in v for v in response.json()["violations"])

    def test_validate_endpoint(self, client):
        response = client.post("/templates/validate", json={"id": "t", "topic_title": "x"})
        assert response.json() == {"violations": []}

    def test_server_side_render(self, client):
        _upload_fixture_corpus(client)
        _create_fixture_template(client)
        response = client.post("/templates/immersive-networks/render", json={
            "corpus_id": "c1", "paper_id": "p001",
        })
        golden = (FIXTURES / "golden_render.txt").read_text(encoding="utf-8")
        assert response.json()["text"] == golden

    def test_unsaved_draft_preview(self, client):
        _upload_fixture_corpus(client)
        template = json.loads((FIXTURES / "fixture_template.json").read_text())
        template.pop("version", None)
        response = client.post("/templates/preview", json={
            "template": template, "corpus_id": "c1", "paper_id": "p001",
        })
        golden = (FIXTURES / "golden_render.txt").read_text(encoding="utf-8")
        assert response.json()["text"] == golden

    def test_invalid_draft_preview_lists_violations(self, client):
        _upload_fixture_corpus(client)
        response = client.post("/templates/preview", json={
            "template": {"id": "t", "topic_title": ""},
            "corpus_id": "c1", "paper_id": "p001",
        })
        assert response.status_code == 422
        assert any("topic_title" in v for v in response.json()["violations"])


class TestFullPipeline:
    def _pipeline(self, client):
        _upload_fixture_corpus(client)
        client.post("/corpora/c1/labels", content=(FIXTURES / "labels50.csv").read_bytes())
        _create_fixture_template(client)
        agents = _register_mock_agents(client)
        run = client.post("/runs", json={
            "corpus_id": "c1", "template_id": "immersive-networks", "agent_ids": agents,
        }).json()
        view = _wait_for_run(client, run["id"])
        return run["id"], view

    def test_run_completes_with_full_matrix(self, client):
        run_id, view = self._pipeline(client)
        assert view["status"] == "complete"
        assert view["progress"] == {"done": 150, "total": 150}
        decisions = client.get(f"/runs/{run_id}/decisions").json()["decisions"]
        assert len(decisions) == 150

    def test_metrics_match_library_goldens(self, client, golden_summary):
        run_id, _ = self._pipeline(client)
        scheme = client.post("/schemes", json={
            "id": "s1", "agent_ids": golden_summary["agents"],
        }).json()
        applied = client.post("/schemes/s1/apply", json={"run_ids": [run_id]}).json()
        app_id = applied["application_id"]
        includes = [r["paper_id"] for r in applied["results"]
                    if r["final_verdict"] == "INCLUDE"]
        assert sorted(includes) == golden_summary["consensus_includes"]

        stats = client.get(f"/stats/{app_id}").json()
        assert stats["consensus"]["scored"]["counts"] == golden_summary["consensus_confusion"]
        for agent_id, expected in golden_summary["per_agent_confusion"].items():
            assert stats["per_agent"][agent_id]["counts"] == expected
        assert stats["agreement"]["outliers"] == golden_summary["agreement"]["outliers"]
        golden_fi = golden_summary["histogram"]["false_inclusions"]["buckets"]
        assert stats["misjudgment"]["false_inclusions"]["buckets"] == golden_fi

    def test_export_matches_golden_file(self, client, golden_summary):
        run_id, _ = self._pipeline(client)
        client.post("/schemes", json={"id": "s1", "agent_ids": golden_summary["agents"]})
        applied = client.post("/schemes/s1/apply", json={"run_ids": [run_id]}).json()
        app_id = applied["application_id"]
        response = client.get(f"/export/{app_id}.csv")
        assert response.status_code == 200
        golden = (FIXTURES / "golden_export.csv").read_bytes()
        assert response.content == golden
        again = client.get(f"/export/{app_id}.csv")
        assert again.content == response.content

    def test_corpus_export_header(self, client):
        _upload_fixture_corpus(client)
        response = client.get("/export/c1.csv")
        assert response.content.startswith(b"id,title,abstract,authors,year,venue,doi,source\r\n")

    def test_run_stats_distribution(self, client, golden_summary):
        run_id, _ = self._pipeline(client)
        stats = client.get(f"/stats/{run_id}").json()
        distribution = stats["distribution"]
        for agent_id in golden_summary["agents"]:
            assert sum(distribution[agent_id].values()) == 50

    def test_incomplete_coverage_conflict(self, client, golden_summary):
        _upload_fixture_corpus(client)
        _create_fixture_template(client)
        agents = _register_mock_agents(client)
        run = client.post("/runs", json={
            "corpus_id": "c1", "template_id": "immersive-networks",
            "agent_ids": agents[:1], "scope": ["p001", "p002"],
        }).json()
        _wait_for_run(client, run["id"])
        client.post("/schemes", json={"id": "s2", "agent_ids": agents})
        response = client.post("/schemes/s2/apply", json={"run_ids": [run["id"]]})
        assert response.status_code == 409
        assert "missing_pairs" in response.json()

    def test_scheme_without_outlier_shrinks_false_positives(self, client, golden_summary):
        run_id, _ = self._pipeline(client)
        client.post("/schemes", json={"id": "all", "agent_ids": golden_summary["agents"]})
        client.post("/schemes", json={"id": "best", "agent_ids": ["alpha", "beta"]})
        all_id = client.post("/schemes/all/apply", json={"run_ids": [run_id]}).json()["application_id"]
        best_id = client.post("/schemes/best/apply", json={"run_ids": [run_id]}).json()["application_id"]
        fp_all = client.get(f"/stats/{all_id}").json()["consensus"]["scored"]["counts"]["fp"]
        fp_best = client.get(f"/stats/{best_id}").json()["consensus"]["scored"]["counts"]["fp"]
        assert fp_best < fp_all

    def test_unknown_export_scope_404(self, client):
        assert client.get("/export/ghost.csv").status_code == 404
