"""HTTP surface for run lifecycle, artifacts, and the two human gates.

All mutation happens through POST endpoints; GETs serve the run's latest
persisted snapshot, so a reader never observes a torn state. Errors are
uniform ``{"code", "message"}`` JSON bodies.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .llm import PriceTable, make_backend
from .model import GateAction, GateDecision, GateKind, IntegrityError, utcnow
from .orchestrator import (
    GateStateError,
    HeadlessPolicy,
    RunConfig,
    Runner,
    UnknownCandidateError,
)
from .questions import GenerationMode


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _summary(snapshot: dict[str, Any]) -> dict[str, Any]:
    reviews = snapshot.get("reviews") or []
    return {
        "run_id": snapshot["run_id"],
        "stage": snapshot["stage"],
        "question_round": snapshot["question_round"],
        "revision_iteration": snapshot["revision_iteration"],
        "latest_overall_score": reviews[-1]["overall"] if reviews else None,
        "total_cost_micro": snapshot["cost"]["total_micro"],
        "created_at": snapshot["created_at"],
    }


_MODE_ALIASES = {
    "DatasetAware": GenerationMode.DATASET_AWARE,
    "Unconstrained": GenerationMode.UNCONSTRAINED,
    "aware": GenerationMode.DATASET_AWARE,
    "unconstrained": GenerationMode.UNCONSTRAINED,
}


def _config_from_body(body: dict[str, Any], output_root: str) -> RunConfig:
    if not isinstance(body, dict):
        raise ApiError(400, "malformed_body", "request body must be an object")
    if "dataset_path" not in body:
        raise ApiError(400, "invalid_config", "dataset_path is required")
    policy = None
    if body.get("policy"):
        p = body["policy"]
        policy = HeadlessPolicy(kind=p.get("kind", ""),
                                question_id=p.get("question_id"))
    mode_raw = body.get("generation_mode", "DatasetAware")
    if mode_raw not in _MODE_ALIASES:
        raise ApiError(400, "invalid_config",
                       f"unknown generation_mode {mode_raw!r}")
    try:
        config = RunConfig(
            dataset_path=body["dataset_path"],
            meta_path=body.get("meta_path"),
            domain=body.get("domain", "general economics"),
            n_questions=int(body.get("n_questions", 8)),
            interactive=bool(body.get("interactive", True)),
            policy=policy,
            generation_mode=_MODE_ALIASES[mode_raw],
            backend_spec=body.get("backend_spec", "live"),
            accept_threshold=float(body.get("accept_threshold", 6.0)),
            max_revision_iterations=int(
                body.get("max_revision_iterations", 4)),
            output_root=output_root,
            constraints=body.get("constraints"),
        )
        config.validate()
    except (TypeError, ValueError) as exc:
        raise ApiError(400, "invalid_config", str(exc)) from exc
    return config


def _decision_from_body(gate: GateKind, body: dict[str, Any]) -> GateDecision:
    if not isinstance(body, dict):
        raise ApiError(400, "malformed_body", "request body must be an object")
    try:
        action = GateAction(body.get("action", ""))
    except ValueError:
        raise ApiError(400, "invalid_decision",
                       f"unknown action {body.get('action')!r}")
    decision = GateDecision(
        gate=gate,
        action=action,
        decided_by=body.get("decided_by", "api"),
        decided_at=utcnow(),
        question_id=body.get("question_id"),
        constraint_text=body.get("constraint_text"),
        reason_text=body.get("reason_text"),
    )
    try:
        decision.validate()
    except IntegrityError as exc:
        raise ApiError(400, "invalid_decision", str(exc)) from exc
    return decision


def create_app(output_root: str = "runs",
               prices: Optional[PriceTable] = None) -> FastAPI:
    app = FastAPI(title="econpilot gateway")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    runs: dict[str, Runner] = {}

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code,
                                     "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request,
                                exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"code": "malformed_body",
                                     "message": str(exc)})

    def _runner(run_id: str) -> Runner:
        runner = runs.get(run_id)
        if runner is None:
            raise ApiError(404, "unknown_run", f"no run with id {run_id!r}")
        return runner

    @app.post("/runs", status_code=201)
    def create_run(body: dict[str, Any]) -> dict[str, Any]:
        config = _config_from_body(body, output_root)
        try:
            backend = make_backend(config.backend_spec)
        except (ValueError, OSError) as exc:
            raise ApiError(400, "invalid_config", str(exc)) from exc
        runner = Runner(config, backend=backend, prices=prices)
        runs[runner.state.run_id] = runner
        runner.start()
        return _summary(runner.snapshot())

    @app.get("/runs")
    def list_runs() -> list[dict[str, Any]]:
        return [_summary(r.snapshot()) for r in runs.values()]

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        return _runner(run_id).snapshot()

    @app.get("/runs/{run_id}/questions")
    def get_questions(run_id: str) -> dict[str, Any]:
        snapshot = _runner(run_id).snapshot()
        return {
            "run_id": run_id,
            "selected_question": snapshot["selected_question"],
            "rounds": [
                {"round": i, "candidates": rnd}
                for i, rnd in enumerate(snapshot["candidates"], start=1)
            ],
        }

    @app.get("/runs/{run_id}/drafts/{version}")
    def get_draft(run_id: str, version: int) -> PlainTextResponse:
        snapshot = _runner(run_id).snapshot()
        for d in snapshot["drafts"]:
            if d["version"] == version:
                return PlainTextResponse(d["body"],
                                         media_type="text/markdown")
        raise ApiError(404, "not_found",
                       f"run {run_id} has no draft v{version}")

    @app.get("/runs/{run_id}/reviews")
    def get_reviews(run_id: str) -> list[dict[str, Any]]:
        return _runner(run_id).snapshot()["reviews"]

    @app.get("/runs/{run_id}/events")
    def get_events(run_id: str) -> list[dict[str, Any]]:
        return _runner(run_id).snapshot()["events"]

    @app.get("/runs/{run_id}/cost")
    def get_cost(run_id: str) -> dict[str, Any]:
        return _runner(run_id).snapshot()["cost"]

    def _decide(run_id: str, gate: GateKind,
                body: dict[str, Any]) -> dict[str, Any]:
        runner = _runner(run_id)
        decision = _decision_from_body(gate, body)
        try:
            stage = runner.decide_gate(decision)
        except UnknownCandidateError as exc:
            raise ApiError(400, "unknown_candidate", str(exc)) from exc
        except GateStateError as exc:
            raise ApiError(409, "gate_state", str(exc)) from exc
        return {"run_id": run_id, "stage": stage.value}

    @app.post("/runs/{run_id}/gates/question")
    def decide_question_gate(run_id: str,
                             body: dict[str, Any]) -> dict[str, Any]:
        return _decide(run_id, GateKind.QUESTION_SELECTION, body)

    @app.post("/runs/{run_id}/gates/publication")
    def decide_publication_gate(run_id: str,
                                body: dict[str, Any]) -> dict[str, Any]:
        return _decide(run_id, GateKind.PUBLICATION_APPROVAL, body)

    return app


def serve(bind: str = "127.0.0.1:8723", output_root: str = "runs") -> None:
    """Blocking single-process server for desk use."""
    import uvicorn

    host, _, port_text = bind.partition(":")
    port = int(port_text) if port_text else 8723
    uvicorn.run(create_app(output_root), host=host or "127.0.0.1", port=port,
                log_level="warning")
