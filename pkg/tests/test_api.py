import time

import pytest
from fastapi.testclient import TestClient

from econpilot.api import create_app


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(output_root=str(tmp_path / "runs")))


@pytest.fixture()
def run_body(demo_paths):
    def build(**overrides):
        body = {
            "dataset_path": str(demo_paths["csv"]),
            "meta_path": str(demo_paths["meta"]),
            "backend_spec": "scripted:" + str(demo_paths["fixtures"]
                                              / "happy_path.json"),
            "interactive": True,
        }
        body.update(overrides)
        return body
    return build


def start_run(client, run_body, **overrides):
    resp = client.post("/runs", json=run_body(**overrides))
    assert resp.status_code == 201, resp.text
    return resp.json()["run_id"]


def poll(client, run_id, stage, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        snapshot = client.get(f"/runs/{run_id}").json()
        if snapshot["stage"] == stage:
            return snapshot
        time.sleep(0.01)
    raise AssertionError(f"run never reached {stage}; "
                         f"last stage {snapshot['stage']}")


def test_create_run_returns_summary(client, run_body):
    resp = client.post("/runs", json=run_body())
    assert resp.status_code == 201
    summary = resp.json()
    assert set(summary) == {"run_id", "stage", "question_round",
                            "revision_iteration", "latest_overall_score",
                            "total_cost_micro", "created_at"}
    assert summary["question_round"] == 1
    assert summary["latest_overall_score"] is None
    listed = client.get("/runs").json()
    assert [s["run_id"] for s in listed] == [summary["run_id"]]


def test_cors_headers_allow_browser_clients(client, run_body):
    resp = client.get("/runs", headers={"Origin": "http://localhost:5173"})
    assert resp.headers.get("access-control-allow-origin") == "*"


def test_create_run_config_errors(client, run_body):
    resp = client.post("/runs", json={})
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_config"

    resp = client.post("/runs", json=run_body(generation_mode="Telepathic"))
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_config"

    resp = client.post("/runs", json=run_body(backend_spec="warp"))
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_config"

    resp = client.post("/runs", json=run_body(interactive=False))
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid_config"

    resp = client.post("/runs", json=["not", "an", "object"])
    assert resp.status_code == 400
    assert resp.json()["code"] == "malformed_body"


def test_unknown_run_is_404(client):
    for path in ("/runs/zzz", "/runs/zzz/questions", "/runs/zzz/reviews",
                 "/runs/zzz/events", "/runs/zzz/cost", "/runs/zzz/drafts/1"):
        resp = client.get(path)
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_run"
    resp = client.post("/runs/zzz/gates/question",
                       json={"action": "Select", "question_id": "r1q01"})
    assert resp.status_code == 404
    assert resp.json()["code"] == "unknown_run"


def test_full_run_over_http(client, run_body):
    run_id = start_run(client, run_body)
    poll(client, run_id, "AwaitingQuestionGate")

    questions = client.get(f"/runs/{run_id}/questions").json()
    assert questions["selected_question"] is None
    assert [r["round"] for r in questions["rounds"]] == [1]
    candidates = questions["rounds"][0]["candidates"]
    assert len(candidates) == 8
    flags = [c["report"]["feasible"] for c in candidates]
    assert flags.count(False) == 1

    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Publish"})
    assert (resp.status_code, resp.json()["code"]) == (400,
                                                       "invalid_decision")
    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Select"})
    assert (resp.status_code, resp.json()["code"]) == (400,
                                                       "invalid_decision")
    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Select", "question_id": "r9q99"})
    assert (resp.status_code, resp.json()["code"]) == (400,
                                                       "unknown_candidate")
    resp = client.post(f"/runs/{run_id}/gates/question", json=[1, 2])
    assert (resp.status_code, resp.json()["code"]) == (400, "malformed_body")
    resp = client.post(f"/runs/{run_id}/gates/publication",
                       json={"action": "Approve"})
    assert (resp.status_code, resp.json()["code"]) == (409, "gate_state")

    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Select", "question_id": "r1q01",
                             "decided_by": "analyst"})
    assert resp.status_code == 200
    assert resp.json() == {"run_id": run_id, "stage": "Collecting"}

    poll(client, run_id, "AwaitingPublicationGate")

    reviews = client.get(f"/runs/{run_id}/reviews").json()
    assert [r["overall"] for r in reviews] == pytest.approx([4.82, 5.9, 6.3])

    draft = client.get(f"/runs/{run_id}/drafts/3")
    assert draft.status_code == 200
    assert draft.headers["content-type"].startswith("text/markdown")
    assert draft.text.startswith("# Schooling and Household Income")
    missing = client.get(f"/runs/{run_id}/drafts/9")
    assert (missing.status_code, missing.json()["code"]) == (404,
                                                             "not_found")

    assert client.get(f"/runs/{run_id}/cost").json()["total_micro"] == 138705
    events = client.get(f"/runs/{run_id}/events").json()
    assert events[-1]["kind"] == "GateOpened"
    assert events[-1]["payload"]["gate"] == "PublicationApproval"

    # conflicting re-decision of the settled question gate
    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Select", "question_id": "r1q02"})
    assert (resp.status_code, resp.json()["code"]) == (409, "gate_state")

    resp = client.post(f"/runs/{run_id}/gates/publication",
                       json={"action": "Approve", "decided_by": "analyst"})
    assert resp.json() == {"run_id": run_id, "stage": "Completed"}
    summary = poll(client, run_id, "Completed")
    assert summary["reviews"][-1]["verdict"] == "Accept"

    listed = client.get("/runs").json()
    assert listed[0]["stage"] == "Completed"
    assert listed[0]["latest_overall_score"] == pytest.approx(6.3)
    assert listed[0]["total_cost_micro"] == 138705


def test_regenerate_and_reject_over_http(client, run_body):
    run_id = start_run(client, run_body)
    poll(client, run_id, "AwaitingQuestionGate")

    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Regenerate"})
    assert (resp.status_code, resp.json()["code"]) == (400,
                                                       "invalid_decision")
    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Regenerate",
                             "constraint_text": "savings outcomes only"})
    assert resp.json() == {"run_id": run_id, "stage": "Questioning"}

    snapshot = poll(client, run_id, "AwaitingQuestionGate")
    assert snapshot["question_round"] == 2
    rounds = client.get(f"/runs/{run_id}/questions").json()["rounds"]
    assert [r["round"] for r in rounds] == [1, 2]
    assert all(c["question"]["question_id"].startswith("r2q")
               for c in rounds[1]["candidates"])

    chosen = next(c["question"]["question_id"]
                  for c in rounds[1]["candidates"] if c["report"]["feasible"])
    resp = client.post(f"/runs/{run_id}/gates/question",
                       json={"action": "Select", "question_id": chosen})
    assert resp.json()["stage"] == "Collecting"

    poll(client, run_id, "AwaitingPublicationGate")
    resp = client.post(f"/runs/{run_id}/gates/publication",
                       json={"action": "Reject",
                             "reason_text": "hold for another cycle"})
    assert resp.json() == {"run_id": run_id, "stage": "Rejected"}
    snapshot = poll(client, run_id, "Rejected")
    assert snapshot["selected_question"] == chosen


def test_gets_are_side_effect_free(client, run_body, tmp_path):
    run_id = start_run(client, run_body)
    poll(client, run_id, "AwaitingQuestionGate")
    # the gate-opened event is the last write before the executor blocks
    deadline = time.monotonic() + 15.0
    while time.monotonic() < deadline:
        events = client.get(f"/runs/{run_id}/events").json()
        if events and events[-1]["kind"] == "GateOpened":
            break
        time.sleep(0.01)
    run_dir = tmp_path / "runs" / run_id

    def fingerprint():
        return {str(p.relative_to(run_dir)): p.read_bytes()
                for p in run_dir.rglob("*") if p.is_file()}

    before = fingerprint()
    client.get(f"/runs/{run_id}")
    client.get(f"/runs/{run_id}/questions")
    client.get(f"/runs/{run_id}/reviews")
    client.get(f"/runs/{run_id}/events")
    client.get(f"/runs/{run_id}/cost")
    client.get(f"/runs/{run_id}/drafts/1")
    client.get("/runs")
    assert fingerprint() == before
