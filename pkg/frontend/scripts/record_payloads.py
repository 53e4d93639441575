#!/usr/bin/env python3
"""Record real API payloads for the dashboard's snapshot tests.

Boots the backend in-process against the mock fixtures, runs the full
pipeline, and saves the JSON bodies the dashboard consumes. Run from the
repository root; outputs land in frontend/tests/fixtures/recorded/.
"""

import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from litscreen.service import ServiceConfig, create_app

ROOT = Path(__file__).resolve().parents[2]
FIXTURES = ROOT / "tests" / "fixtures"
OUT = ROOT / "frontend" / "tests" / "fixtures" / "recorded"

AGENTS = ["alpha", "beta", "gamma"]


def save(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("recorded", name)


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(ServiceConfig(data_dir=tmp))
        client = TestClient(app)

        save("health.json", client.get("/health").json())

        bib = (FIXTURES / "screening50.bib").read_bytes()
        client.post("/corpora/c1/bibtex?source=screening50.bib", content=bib)
        client.post("/corpora/c1/labels", content=(FIXTURES / "labels50.csv").read_bytes())
        save("papers.json", client.get("/corpora/c1/papers").json())

        template = json.loads((FIXTURES / "fixture_template.json").read_text())
        template.pop("version", None)
        client.post("/templates", json=template)
        save("template.json", client.get("/templates/immersive-networks").json())
        save("preview.json", client.post("/templates/preview", json={
            "template": template, "corpus_id": "c1", "paper_id": "p001",
        }).json())

        script = str(FIXTURES / "mock_script.json")
        for agent_id in AGENTS:
            client.post("/agents", json={
                "id": agent_id,
                "display_name": agent_id.title(),
                "endpoint_url": f"mock://{script}",
                "model_name": f"{agent_id}-model",
                "max_parallel_requests": 8,
                "requests_per_minute": 100000,
            })
        save("agents.json", client.get("/agents").json())

        run = client.post("/runs", json={
            "corpus_id": "c1", "template_id": "immersive-networks", "agent_ids": AGENTS,
        }).json()
        run_id = run["id"]
        for _ in range(300):
            view = client.get(f"/runs/{run_id}").json()
            if view["status"] in ("complete", "failed"):
                break
            time.sleep(0.05)
        if view["status"] != "complete":
            sys.exit(f"run did not complete: {view}")
        save("run.json", view)
        save("decisions.json", client.get(f"/runs/{run_id}/decisions").json())

        client.post("/schemes", json={"id": "all", "agent_ids": AGENTS})
        apply_all = client.post("/schemes/all/apply", json={"run_ids": [run_id]}).json()
        save("apply_all.json", apply_all)
        save("stats_all.json", client.get(f"/stats/{apply_all['application_id']}").json())

        # The same scheme with the outlier toggled out: what the dashboard
        # fetches after deselecting gamma in the consensus panel.
        client.post("/schemes", json={"id": "best", "agent_ids": ["alpha", "beta"]})
        apply_best = client.post("/schemes/best/apply", json={"run_ids": [run_id]}).json()
        save("apply_best.json", apply_best)
        save("stats_best.json", client.get(f"/stats/{apply_best['application_id']}").json())


if __name__ == "__main__":
    main()
