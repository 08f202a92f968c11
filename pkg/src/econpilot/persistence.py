"""Run-directory persistence: a human-inspectable audit trail.

Layout (names are load-bearing):
    state.json                   full serialized run state
    events.log                   line-delimited JSON, one event per line
    drafts/draft_v{n}.md         manuscript versions
    reviews/review_v{n}.json     review reports
    questions/round_{r}.json     every candidate from every round
    analysis/table_{k}.csv       coefficient tables
    analysis/figure_{k}.csv      event-study figure data
    analysis/sample_report.json  sample-construction report

Serialization is canonical (fixed key order, exact float round-trip), so
persist → load → persist yields byte-identical files and re-persisting an
unchanged state rewrites nothing.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from .dataset import DatasetAudit
from .estimation import AnalysisResult, emit_outputs
from .manuscript import Draft
from .model import (
    CostLedger,
    IntegrityError,
    RunEvent,
    RunState,
    Stage,
    isoformat,
    parse_instant,
    replay_stage,
)
from .prep import ConstructionReport
from .profiling import DataProfile
from .questions import FeasibilityReport, ResearchQuestion
from .review import ReviewReport

SCHEMA_VERSION = 1


class PersistenceError(Exception):
    """I/O failure; carries the offending path in the message."""


class LoadError(Exception):
    """Run directory is missing or corrupt."""


def state_to_dict(state: RunState) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": state.run_id,
        "stage": state.stage.value,
        "question_round": state.question_round,
        "revision_iteration": state.revision_iteration,
        "created_at": (isoformat(state.created_at)
                       if state.created_at else None),
        "audit": state.audit.to_dict() if state.audit else None,
        "profile": state.profile.to_dict() if state.profile else None,
        "candidates": [
            [{"question": q.to_dict(), "report": r.to_dict()}
             for q, r in rnd]
            for rnd in state.candidates
        ],
        "selected_question": state.selected_question,
        "sample_report": (state.sample_report.to_dict()
                          if state.sample_report else None),
        "analyses": [a.to_dict() for a in state.analyses],
        "drafts": [d.to_dict() for d in state.drafts],
        "reviews": [r.to_dict() for r in state.reviews],
        "cost": state.cost.to_dict(),
        "events": [e.to_dict() for e in state.events],
    }


def state_from_dict(d: dict[str, Any]) -> RunState:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise LoadError(f"unsupported schema version "
                        f"{d.get('schema_version')!r}")
    state = RunState(
        run_id=d["run_id"],
        stage=Stage(d["stage"]),
        question_round=d["question_round"],
        revision_iteration=d["revision_iteration"],
        audit=DatasetAudit.from_dict(d["audit"]) if d.get("audit") else None,
        profile=(DataProfile.from_dict(d["profile"])
                 if d.get("profile") else None),
        candidates=[
            [(ResearchQuestion.from_dict(c["question"]),
              FeasibilityReport.from_dict(c["report"]))
             for c in rnd]
            for rnd in d.get("candidates", [])
        ],
        selected_question=d.get("selected_question"),
        sample_report=(ConstructionReport.from_dict(d["sample_report"])
                       if d.get("sample_report") else None),
        analyses=[AnalysisResult.from_dict(a) for a in d.get("analyses", [])],
        drafts=[Draft.from_dict(x) for x in d.get("drafts", [])],
        reviews=[ReviewReport.from_dict(r) for r in d.get("reviews", [])],
        cost=CostLedger.from_dict(d["cost"]),
        events=[RunEvent.from_dict(e) for e in d.get("events", [])],
        created_at=(parse_instant(d["created_at"])
                    if d.get("created_at") else None),
    )
    return state


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _write_if_changed(path: Path, content: str) -> None:
    data = content.encode("utf-8")
    try:
        if path.exists() and path.read_bytes() == data:
            return
        path.write_bytes(data)
    except OSError as exc:
        raise PersistenceError(f"failed writing {path}: {exc}") from exc


def run_directory(root: Union[str, Path], run_id: str) -> Path:
    return Path(root) / run_id


def persist_run(state: RunState, root: Union[str, Path]) -> Path:
    """Write the full audit trail for ``state`` under ``root``.

    The state is validated first: persisting a structurally invalid state is
    an IntegrityError, not a silent artifact.
    """
    state.validate()
    run_dir = run_directory(root, state.run_id)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PersistenceError(f"failed creating {run_dir}: {exc}") from exc

    _write_if_changed(run_dir / "state.json", _dump_json(state_to_dict(state)))
    _write_if_changed(
        run_dir / "events.log",
        "".join(json.dumps(e.to_dict(), ensure_ascii=False) + "\n"
                for e in state.events))

    if state.drafts:
        (run_dir / "drafts").mkdir(exist_ok=True)
        for d in state.drafts:
            _write_if_changed(run_dir / "drafts" / f"draft_v{d.version}.md",
                              d.body)
    if state.reviews:
        (run_dir / "reviews").mkdir(exist_ok=True)
        for r in state.reviews:
            _write_if_changed(
                run_dir / "reviews" / f"review_v{r.draft_version}.json",
                _dump_json(r.to_dict()))
    if state.candidates:
        (run_dir / "questions").mkdir(exist_ok=True)
        for i, rnd in enumerate(state.candidates, start=1):
            payload = {
                "round": i,
                "candidates": [{"question": q.to_dict(),
                                "report": rep.to_dict()}
                               for q, rep in rnd],
            }
            _write_if_changed(run_dir / "questions" / f"round_{i}.json",
                              _dump_json(payload))
    if state.analyses or state.sample_report:
        (run_dir / "analysis").mkdir(exist_ok=True)
    if state.sample_report:
        _write_if_changed(run_dir / "analysis" / "sample_report.json",
                          _dump_json(state.sample_report.to_dict()))
    if state.analyses:
        emit_outputs(state.analyses, run_dir / "analysis")
    return run_dir


def load_run(run_dir: Union[str, Path]) -> RunState:
    """Reconstruct a run from its directory and recheck every invariant."""
    run_dir = Path(run_dir)
    state_path = run_dir / "state.json"
    try:
        raw = state_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read {state_path}: {exc}") from exc
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LoadError(f"corrupt state.json: {exc}") from exc
    try:
        state = state_from_dict(payload)
    except (KeyError, ValueError, TypeError) as exc:
        raise LoadError(f"state.json is structurally invalid: {exc}") from exc

    log_path = run_dir / "events.log"
    if log_path.exists():
        logged = []
        try:
            lines = log_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise LoadError(f"cannot read {log_path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            try:
                logged.append(RunEvent.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise LoadError(
                    f"events.log line {lineno} is corrupt: {exc}") from exc
        if [e.to_dict() for e in logged] != [e.to_dict() for e in state.events]:
            raise LoadError("events.log does not match the events in "
                            "state.json (truncated or edited log)")
        if replay_stage(logged) is not state.stage:
            raise IntegrityError(
                "replaying events.log does not reach the persisted stage")
    state.validate()
    return state
