"""Drives a run through the stage machine: audit, profile, question, gate,
collect, analyze, write, critique, review, revise, gate, done.

One executor thread owns each run's state.  Gate decisions arrive from
other threads through a queue and are acknowledged only after the stage
transition is applied and persisted, so a caller that got an acknowledgment
will see the new stage on its next read.  Every pipeline-level failure
(estimation, prep, generation, gateway) converts into a graceful halt that
preserves all artifacts produced so far.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from . import manuscript as manuscript_mod
from . import planning as planning_mod
from . import review as review_mod
from .dataset import (
    AuditError,
    CsvParseError,
    DatasetAudit,
    SchemaError,
    Table,
    load_dataset,
)
from .estimation import AnalysisResult, EstimationError, SpecificationError, estimate
from .llm import Backend, Gateway, GatewayError, PriceTable, make_backend
from .manuscript import DraftingError
from .model import (
    EventKind,
    GateAction,
    GateDecision,
    GateKind,
    RunState,
    Stage,
    new_run_id,
    utcnow,
)
from .persistence import PersistenceError, persist_run, state_to_dict
from .planning import PlanValidationError
from .prep import PrepError, SampleSpec, build_analytic_table
from .profiling import DataProfile, ProfilingError, profile as profile_dataset
from .questions import (
    GenerationError,
    GenerationMode,
    feasibility_stats,
    generate_questions,
    rank,
    screen,
)
from .review import RequestKind, should_continue

# OSError covers unreadable dataset or fixture files surfacing mid-run
HALTING_ERRORS = (
    CsvParseError, SchemaError, AuditError, ProfilingError,
    GenerationError, PrepError, EstimationError, SpecificationError,
    PlanValidationError, DraftingError, review_mod.ReviewError,
    GatewayError, PersistenceError, OSError,
)

GATE_ACK_TIMEOUT = 60.0


class GateStateError(Exception):
    """Decision does not match the run's current gate state."""


class UnknownCandidateError(Exception):
    """Select names a question id that no round generated."""


@dataclass
class HeadlessPolicy:
    kind: str  # SelectTopRanked | SelectById
    question_id: Optional[str] = None

    def validate(self) -> None:
        if self.kind not in ("SelectTopRanked", "SelectById"):
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind == "SelectById" and not self.question_id:
            raise ValueError("SelectById requires a question_id")


@dataclass
class RunConfig:
    dataset_path: str
    meta_path: Optional[str] = None
    domain: str = "general economics"
    n_questions: int = 8
    interactive: bool = False
    policy: Optional[HeadlessPolicy] = None
    generation_mode: GenerationMode = GenerationMode.DATASET_AWARE
    backend_spec: str = "live"
    accept_threshold: float = review_mod.ACCEPT_THRESHOLD
    max_revision_iterations: int = review_mod.MAX_ITERATIONS
    output_root: str = "runs"
    run_id: Optional[str] = None
    constraints: Optional[str] = None

    def validate(self) -> None:
        if self.n_questions < 1:
            raise ValueError("n_questions must be positive")
        if self.max_revision_iterations < 1:
            raise ValueError("max_revision_iterations must be positive")
        if not self.interactive:
            if self.policy is None:
                raise ValueError("headless mode requires a selection policy")
            self.policy.validate()

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset_path": self.dataset_path,
            "meta_path": self.meta_path,
            "domain": self.domain,
            "n_questions": self.n_questions,
            "interactive": self.interactive,
            "policy": ({"kind": self.policy.kind,
                        "question_id": self.policy.question_id}
                       if self.policy else None),
            "generation_mode": self.generation_mode.value,
            "backend_spec": self.backend_spec,
            "accept_threshold": self.accept_threshold,
            "max_revision_iterations": self.max_revision_iterations,
            "output_root": self.output_root,
            "run_id": self.run_id,
            "constraints": self.constraints,
        }


class _Reply:
    def __init__(self) -> None:
        self.done = threading.Event()
        self.stage: Optional[Stage] = None
        self.error: Optional[Exception] = None

    def ok(self, stage: Stage) -> None:
        self.stage = stage
        self.done.set()

    def fail(self, error: Exception) -> None:
        self.error = error
        self.done.set()


def _decision_essence(decision: GateDecision) -> tuple:
    return (decision.gate.value, decision.action.value, decision.question_id,
            decision.constraint_text, decision.reason_text)


class Runner:
    """Executor for a single run.

    ``execute()`` runs the whole pipeline on the calling thread (gates are
    auto-resolved in headless mode, or block awaiting ``decide_gate`` from
    another thread in interactive mode).  ``start()`` spawns the executor
    thread for API-driven runs.
    """

    def __init__(self, config: RunConfig,
                 backend: Optional[Backend] = None,
                 prices: Optional[PriceTable] = None) -> None:
        config.validate()
        self.config = config
        run_id = config.run_id or new_run_id()
        self.state = RunState(run_id=run_id, created_at=utcnow())
        resolved = backend or make_backend(config.backend_spec)
        self.gateway = Gateway(resolved, prices).bind(self.state)
        self.run_dir = Path(config.output_root) / run_id
        self._decisions: "queue.Queue[tuple[GateDecision, _Reply]]" = queue.Queue()
        self._acks: dict[tuple[str, int], tuple[tuple, Stage]] = {}
        self._acks_lock = threading.Lock()
        self._snapshot_lock = threading.Lock()
        self._snapshot: dict[str, Any] = state_to_dict(self.state)
        self._table: Optional[Table] = None
        self._analytic: Optional[Table] = None
        self._sample_spec: Optional[SampleSpec] = None
        self._constraints: list[str] = (
            [config.constraints] if config.constraints else [])
        self._latest_results: list[AnalysisResult] = []
        self._thread: Optional[threading.Thread] = None

    # -- public surface ------------------------------------------------

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.execute, daemon=True,
                                  name=f"run-{self.state.run_id}")
        self._thread = thread
        thread.start()
        return thread

    def join(self, timeout: Optional[float] = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def snapshot(self) -> dict[str, Any]:
        """Latest persisted view of the run; always a consistent stage."""
        with self._snapshot_lock:
            return self._snapshot

    def decide_gate(self, decision: GateDecision) -> Stage:
        """Submit a human gate decision; returns the acknowledged new stage.

        Idempotent per (gate, round): replaying an identical decision
        returns the original acknowledgment; a conflicting decision for an
        already-decided gate is a gate-state error.
        """
        decision.validate()
        round_no = self._gate_round(decision.gate)
        key = (decision.gate.value, round_no)
        with self._acks_lock:
            prior = self._acks.get(key)
        if prior is not None:
            essence, stage = prior
            if essence == _decision_essence(decision):
                return stage
            raise GateStateError(
                f"gate {decision.gate.value} round {round_no} already "
                f"decided differently")
        current = Stage(self.snapshot()["stage"])
        expected = (Stage.AWAITING_QUESTION_GATE
                    if decision.gate is GateKind.QUESTION_SELECTION
                    else Stage.AWAITING_PUBLICATION_GATE)
        if current is not expected:
            raise GateStateError(
                f"run is in stage {current.value}, not {expected.value}")
        reply = _Reply()
        self._decisions.put((decision, reply))
        if not reply.done.wait(GATE_ACK_TIMEOUT):
            raise GateStateError("gate decision was not acknowledged")
        if reply.error is not None:
            raise reply.error
        with self._acks_lock:
            self._acks[key] = (_decision_essence(decision), reply.stage)
        return reply.stage

    # -- execution -----------------------------------------------------

    def execute(self) -> RunState:
        state = self.state
        try:
            self._enter(Stage.AUDITING)
            self._do_audit()
            self._enter(Stage.PROFILING)
            self._do_profile()
            self._enter(Stage.QUESTIONING)
            while True:
                self._do_questioning()
                self._enter(Stage.AWAITING_QUESTION_GATE)
                # the gate handler applies the transition itself: Select
                # moves to Collecting, Regenerate back to Questioning
                if self._question_gate() is GateAction.SELECT:
                    break
            self._do_collecting()
            revision_requests: Optional[list] = None
            analyze = True
            while True:
                if analyze:
                    self._enter(Stage.ANALYZING)
                    self._do_analysis(revision_requests)
                self._enter(Stage.WRITING)
                self._do_writing()
                self._enter(Stage.CRITIQUING)
                self._do_critique()
                self._enter(Stage.REVIEWING)
                report = self._do_review()
                decision = should_continue(
                    state.reviews, self.config.max_revision_iterations,
                    self.config.accept_threshold)
                state.record_event("orchestrator", EventKind.ARTIFACT_PRODUCED,
                                   {"loop_decision": str(decision)})
                self._persist()
                if decision.stop:
                    break
                self._enter(Stage.REVISING)
                state.revision_iteration += 1
                revision_requests = report.revision_requests
                analyze = any(r.kind is RequestKind.ROBUSTNESS_CHECK
                              for r in revision_requests)
                self._persist()
            self._enter(Stage.AWAITING_PUBLICATION_GATE)
            self._publication_gate()
        except HALTING_ERRORS as exc:
            self._halt(exc)
        return state

    # -- stage bodies ----------------------------------------------------

    def _enter(self, stage: Stage) -> None:
        self.state.advance(stage)
        self._persist()

    def _persist(self) -> None:
        persist_run(self.state, self.config.output_root)
        with self._snapshot_lock:
            self._snapshot = state_to_dict(self.state)

    def _halt(self, exc: Exception) -> None:
        detail: dict[str, Any] = {"error_type": type(exc).__name__}
        if isinstance(exc, EstimationError):
            detail["kind"] = exc.kind.value
            detail["offending"] = exc.offending
        self.state.halt("orchestrator", str(exc), detail)
        self._persist()

    def _do_audit(self) -> None:
        self._table, audit = load_dataset(self.config.dataset_path,
                                          self.config.meta_path)
        self.state.audit = audit
        self.state.record_event("audit_agent", EventKind.ARTIFACT_PRODUCED,
                                {"artifact": "audit",
                                 "n_rows": audit.n_rows,
                                 "n_cols": audit.n_cols})
        self._persist()

    def _do_profile(self) -> None:
        assert self._table is not None and self.state.audit is not None
        self.state.profile = profile_dataset(self._table, self.state.audit)
        self.state.record_event("profiling_agent", EventKind.ARTIFACT_PRODUCED,
                                {"artifact": "profile"})
        self._persist()

    def _do_questioning(self) -> None:
        state = self.state
        round_no = state.question_round
        questions = generate_questions(
            state.audit, state.profile, self.config.domain, self.gateway,
            n=self.config.n_questions, mode=self.config.generation_mode,
            constraints="\n".join(self._constraints) or None,
            round_no=round_no)
        screened = [(q, screen(q, state.audit, state.profile))
                    for q in questions]
        ranked = rank(screened)
        if len(state.candidates) >= round_no:
            state.candidates[round_no - 1] = ranked
        else:
            state.candidates.append(ranked)
        state.record_event("question_agent", EventKind.ARTIFACT_PRODUCED,
                           {"artifact": f"questions/round_{round_no}.json",
                            "n_candidates": len(ranked),
                            "n_feasible": sum(1 for _, r in ranked
                                              if r.feasible)})
        self._persist()

    # -- gates -----------------------------------------------------------

    def _drain_pending(self) -> None:
        while True:
            try:
                _, reply = self._decisions.get_nowait()
            except queue.Empty:
                return
            reply.fail(GateStateError("gate already decided"))

    def _gate_round(self, gate: GateKind) -> int:
        if gate is GateKind.QUESTION_SELECTION:
            return int(self.snapshot()["question_round"])
        return int(self.snapshot()["revision_iteration"])

    def _open_gate(self, gate: GateKind) -> None:
        self.state.record_event("orchestrator", EventKind.GATE_OPENED, {
            "gate": gate.value,
            "round": (self.state.question_round
                      if gate is GateKind.QUESTION_SELECTION
                      else self.state.revision_iteration),
        })
        self._persist()

    def _record_decision(self, decision: GateDecision) -> None:
        self.state.record_event("human", EventKind.GATE_DECIDED,
                                decision.to_dict())

    def _auto_question_decision(self) -> GateDecision:
        policy = self.config.policy
        assert policy is not None
        if policy.kind == "SelectById":
            question_id = policy.question_id
        else:
            ranked = self.state.candidates[-1]
            feasible = [q for q, r in ranked if r.feasible]
            question_id = (feasible[0] if feasible else ranked[0][0]).question_id
        return GateDecision(gate=GateKind.QUESTION_SELECTION,
                            action=GateAction.SELECT,
                            decided_by=f"policy:{policy.kind}",
                            decided_at=utcnow(), question_id=question_id)

    def _apply_question_decision(self, decision: GateDecision) -> Stage:
        state = self.state
        if decision.action is GateAction.SELECT:
            question = state.find_question(decision.question_id)
            if question is None:
                raise UnknownCandidateError(
                    f"no candidate with id {decision.question_id!r}")
            self._record_decision(decision)
            state.selected_question = decision.question_id
            state.advance(Stage.COLLECTING)
        else:  # Regenerate
            self._record_decision(decision)
            if decision.constraint_text:
                self._constraints.append(decision.constraint_text)
            state.question_round += 1
            state.advance(Stage.QUESTIONING)
        self._persist()
        return state.stage

    def _question_gate(self) -> GateAction:
        self._open_gate(GateKind.QUESTION_SELECTION)
        if not self.config.interactive:
            decision = self._auto_question_decision()
            key = (decision.gate.value, self.state.question_round)
            stage = self._apply_question_decision(decision)
            with self._acks_lock:
                self._acks[key] = (_decision_essence(decision), stage)
            return decision.action
        while True:
            decision, reply = self._decisions.get()
            if decision.gate is not GateKind.QUESTION_SELECTION:
                reply.fail(GateStateError(
                    "run is awaiting the question gate"))
                continue
            round_key = (decision.gate.value, self.state.question_round)
            try:
                stage = self._apply_question_decision(decision)
            except UnknownCandidateError as exc:
                reply.fail(exc)
                continue
            with self._acks_lock:
                self._acks[round_key] = (_decision_essence(decision), stage)
            reply.ok(stage)
            self._drain_pending()
            return decision.action

    def _apply_publication_decision(self, decision: GateDecision) -> Stage:
        state = self.state
        self._record_decision(decision)
        if decision.action is GateAction.APPROVE:
            state.advance(Stage.COMPLETED)
        else:
            state.advance(Stage.REJECTED)
        self._persist()
        return state.stage

    def _publication_gate(self) -> None:
        self._open_gate(GateKind.PUBLICATION_APPROVAL)
        if not self.config.interactive:
            decision = GateDecision(
                gate=GateKind.PUBLICATION_APPROVAL, action=GateAction.APPROVE,
                decided_by=f"policy:{self.config.policy.kind}",
                decided_at=utcnow())
            key = (decision.gate.value, self.state.revision_iteration)
            stage = self._apply_publication_decision(decision)
            with self._acks_lock:
                self._acks[key] = (_decision_essence(decision), stage)
            return
        while True:
            decision, reply = self._decisions.get()
            if decision.gate is not GateKind.PUBLICATION_APPROVAL:
                reply.fail(GateStateError(
                    "run is awaiting the publication gate"))
                continue
            key = (decision.gate.value, self.state.revision_iteration)
            stage = self._apply_publication_decision(decision)
            with self._acks_lock:
                self._acks[key] = (_decision_essence(decision), stage)
            reply.ok(stage)
            self._drain_pending()
            return

    # -- downstream stages ------------------------------------------------

    def _selected_question(self):
        question = self.state.find_question(self.state.selected_question)
        assert question is not None
        return question

    def _build_analytic(self, variables: Sequence[str]) -> Table:
        assert self._table is not None
        spec = SampleSpec(variables=list(variables),
                          listwise_on=list(self._sample_spec.listwise_on)
                          if self._sample_spec else list(variables))
        table, _ = build_analytic_table(self._table, spec, (),
                                        audit=self.state.audit)
        return table

    def _do_collecting(self) -> None:
        state = self.state
        question = self._selected_question()
        named = question.named_variables()
        self._sample_spec = SampleSpec(variables=named, listwise_on=named)
        assert self._table is not None
        self._analytic, report = build_analytic_table(
            self._table, self._sample_spec, (), audit=state.audit)
        state.sample_report = report
        state.record_event("data_agent", EventKind.ARTIFACT_PRODUCED,
                           {"artifact": "analysis/sample_report.json",
                            "rows": report.final_rows})
        self._persist()

    def _do_analysis(self, revision_requests: Optional[list]) -> None:
        state = self.state
        question = self._selected_question()
        analysis_plan = planning_mod.plan(
            question, state.audit, state.profile,
            revision_requests=revision_requests,
            gateway=self.gateway if revision_requests else None)
        needed: list[str] = []
        for spec in analysis_plan.specifications:
            needed.extend([spec.outcome, *spec.regressors])
            if spec.did_fields:
                needed.extend([spec.did_fields.treat_var,
                               spec.did_fields.post_var])
            if spec.event_fields:
                needed.append(spec.event_fields.event_time_var)
        table = self._analytic
        assert table is not None
        missing = [n for n in dict.fromkeys(needed) if not table.has_column(n)]
        if missing:
            question_vars = self._selected_question().named_variables()
            table = self._build_analytic(
                list(dict.fromkeys([*question_vars, *needed])))
            self._analytic = table
        results = []
        for spec in analysis_plan.specifications:
            result = estimate(table, spec)
            result.validate()
            results.append(result)
            for note in result.notes:
                if note.startswith("warning:"):
                    state.record_event("econometrics_agent", EventKind.WARNING,
                                       {"estimation": note})
        state.analyses = results
        self._latest_results = results
        state.record_event("econometrics_agent", EventKind.ARTIFACT_PRODUCED,
                           {"artifact": "analysis",
                            "n_specifications": len(results)})
        self._persist()

    def _do_writing(self) -> None:
        state = self.state
        question = self._selected_question()
        prior = None
        if state.drafts and state.reviews:
            prior = (state.drafts[-1], state.reviews[-1])
        new_draft = manuscript_mod.draft(question, state.profile,
                                         state.analyses, self.gateway,
                                         prior=prior)
        state.drafts.append(new_draft)
        state.record_event("paper_agent", EventKind.ARTIFACT_PRODUCED,
                           {"artifact": f"drafts/draft_v{new_draft.version}.md",
                            "word_count": new_draft.word_count})
        self._persist()

    def _do_critique(self) -> None:
        state = self.state
        current = state.drafts[-1]
        note = review_mod.self_critique(current, state.analyses, self.gateway)
        redrafted = False
        if note is not None and note.is_major():
            question = self._selected_question()
            state.drafts[-1] = manuscript_mod.redraft(
                current, note, question, state.profile, state.analyses,
                self.gateway)
            redrafted = True
        state.record_event("reviewer_agent", EventKind.ARTIFACT_PRODUCED, {
            "artifact": "critique",
            "severity": note.severity if note else None,
            "issues": len(note.issues) if note else 0,
            "redrafted": redrafted,
        })
        self._persist()

    def _do_review(self):
        state = self.state
        budget_exhausted = (len(state.reviews) + 1
                            >= self.config.max_revision_iterations)
        report = review_mod.review(
            state.drafts[-1], state.analyses, self.gateway,
            accept_threshold=self.config.accept_threshold,
            budget_exhausted=budget_exhausted)
        state.reviews.append(report)
        state.record_event(
            "reviewer_agent", EventKind.ARTIFACT_PRODUCED,
            {"artifact": f"reviews/review_v{report.draft_version}.json",
             "overall": report.overall, "verdict": report.verdict})
        self._persist()
        return report


def execute(config: RunConfig, backend: Optional[Backend] = None,
            prices: Optional[PriceTable] = None) -> RunState:
    """Run a config to its terminal state on the calling thread."""
    return Runner(config, backend=backend, prices=prices).execute()


# -- ablation ------------------------------------------------------------


@dataclass
class AblationArm:
    mode: str
    n_questions: int = 0
    n_feasible: int = 0
    share_pct: int = 0
    failures: dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "n_questions": self.n_questions,
            "n_feasible": self.n_feasible,
            "share_pct": self.share_pct,
            "failures": self.failures,
            "error": self.error,
        }


@dataclass
class AblationReport:
    arms: list[AblationArm]

    def to_dict(self) -> dict[str, Any]:
        return {"arms": [a.to_dict() for a in self.arms]}

    def render(self) -> str:
        header = (f"{'mode':<16} {'questions':>9} {'feasible':>9} "
                  f"{'share':>6}  failures (vars/design/method)")
        lines = [header, "-" * len(header)]
        for arm in self.arms:
            if arm.error:
                lines.append(f"{arm.mode:<16} error: {arm.error}")
                continue
            f = arm.failures
            lines.append(
                f"{arm.mode:<16} {arm.n_questions:>9} {arm.n_feasible:>9} "
                f"{arm.share_pct:>5}%  "
                f"{f.get('vars', 0)}/{f.get('design', 0)}/{f.get('method', 0)}")
        return "\n".join(lines)


def _ablation_arm(config: RunConfig, rounds: int) -> AblationArm:
    arm = AblationArm(mode=config.generation_mode.value)
    try:
        table, audit = load_dataset(config.dataset_path, config.meta_path)
        data_profile = profile_dataset(table, audit)
        gateway = Gateway(make_backend(config.backend_spec))
        screened_rounds = []
        for round_no in range(1, rounds + 1):
            questions = generate_questions(
                audit, data_profile, config.domain, gateway,
                n=config.n_questions, mode=config.generation_mode,
                constraints=config.constraints, round_no=round_no)
            screened_rounds.append(
                [(q, screen(q, audit, data_profile)) for q in questions])
        stats = feasibility_stats(screened_rounds)
        arm.n_questions = stats.n_questions
        arm.n_feasible = stats.n_feasible
        arm.share_pct = stats.share_pct
        arm.failures = stats.failures
    except HALTING_ERRORS as exc:
        arm.error = str(exc)
    return arm


def run_ablation(config_aware: RunConfig, config_unconstrained: RunConfig,
                 rounds: int = 1,
                 output_root: Optional[Union[str, Path]] = None) -> AblationReport:
    """Questioning-and-screening-only comparison of the two generation modes.

    A generation failure aborts only its own arm; the report still carries
    the other arm's numbers.
    """
    if config_aware.dataset_path != config_unconstrained.dataset_path:
        raise ValueError("ablation arms must target the same dataset")
    report = AblationReport(arms=[
        _ablation_arm(config_aware, rounds),
        _ablation_arm(config_unconstrained, rounds),
    ])
    if output_root is not None:
        root = Path(output_root)
        root.mkdir(parents=True, exist_ok=True)
        import json as _json
        (root / "ablation.json").write_text(
            _json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        (root / "ablation.txt").write_text(report.render() + "\n",
                                           encoding="utf-8")
    return report
