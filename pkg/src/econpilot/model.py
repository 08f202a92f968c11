"""Shared domain model for a pipeline run.

A run is a single pass through the research workflow: audit the dataset,
profile it, generate and screen candidate questions, pause for the human
question gate, build the analytic sample, estimate, draft, critique, review,
loop through revisions, and pause again for the publication gate.  Everything
the run produces or decides is recorded on one :class:`RunState` object, which
is the unit of persistence and the audit trail.

Money is tracked in integer micro-dollars so ledger sums are exact.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import TYPE_CHECKING, Any, Optional

if TYPE_CHECKING:  # imported for annotations only; avoids runtime cycles
    from .dataset import DatasetAudit
    from .estimation import AnalysisResult
    from .manuscript import Draft
    from .prep import ConstructionReport
    from .profiling import DataProfile
    from .questions import FeasibilityReport, ResearchQuestion
    from .review import ReviewReport

SCHEMA_VERSION = 1


class IntegrityError(Exception):
    """A structural invariant of the run state is violated."""


class Stage(str, Enum):
    CREATED = "Created"
    AUDITING = "Auditing"
    PROFILING = "Profiling"
    QUESTIONING = "Questioning"
    AWAITING_QUESTION_GATE = "AwaitingQuestionGate"
    COLLECTING = "Collecting"
    ANALYZING = "Analyzing"
    WRITING = "Writing"
    CRITIQUING = "Critiquing"
    REVIEWING = "Reviewing"
    AWAITING_PUBLICATION_GATE = "AwaitingPublicationGate"
    REVISING = "Revising"
    COMPLETED = "Completed"
    HALTED = "Halted"
    # Terminal outcome of a publication-gate Reject.  Not part of the main
    # workflow sequence but required so a rejected run is distinguishable
    # from a completed or halted one.
    REJECTED = "Rejected"


TERMINAL_STAGES = frozenset({Stage.COMPLETED, Stage.HALTED, Stage.REJECTED})

# Legal forward transitions.  The two loops are the only back edges:
# AwaitingQuestionGate -> Questioning (regenerate) and
# Reviewing -> Revising -> Analyzing/Writing (revision loop).
STAGE_TRANSITIONS: dict[Stage, frozenset[Stage]] = {
    Stage.CREATED: frozenset({Stage.AUDITING}),
    Stage.AUDITING: frozenset({Stage.PROFILING}),
    Stage.PROFILING: frozenset({Stage.QUESTIONING}),
    Stage.QUESTIONING: frozenset({Stage.AWAITING_QUESTION_GATE}),
    Stage.AWAITING_QUESTION_GATE: frozenset({Stage.COLLECTING, Stage.QUESTIONING}),
    Stage.COLLECTING: frozenset({Stage.ANALYZING}),
    Stage.ANALYZING: frozenset({Stage.WRITING}),
    Stage.WRITING: frozenset({Stage.CRITIQUING}),
    Stage.CRITIQUING: frozenset({Stage.REVIEWING}),
    Stage.REVIEWING: frozenset({Stage.AWAITING_PUBLICATION_GATE, Stage.REVISING}),
    Stage.REVISING: frozenset({Stage.ANALYZING, Stage.WRITING}),
    Stage.AWAITING_PUBLICATION_GATE: frozenset({Stage.COMPLETED, Stage.REJECTED}),
    Stage.COMPLETED: frozenset(),
    Stage.HALTED: frozenset(),
    Stage.REJECTED: frozenset(),
}


def is_legal_transition(src: Stage, dst: Stage) -> bool:
    if dst is Stage.HALTED:
        return src not in TERMINAL_STAGES
    return dst in STAGE_TRANSITIONS.get(src, frozenset())


class EventKind(str, Enum):
    STAGE_ENTERED = "StageEntered"
    ARTIFACT_PRODUCED = "ArtifactProduced"
    GATE_OPENED = "GateOpened"
    GATE_DECIDED = "GateDecided"
    LLM_CALL = "LlmCall"
    ESTIMATION_ERROR = "EstimationError"
    HALT = "Halt"
    # Non-fatal anomalies (dropped malformed items, skipped critiques, SE
    # fallbacks).  Not in the original event vocabulary but several
    # operations need a non-fatal channel.
    WARNING = "Warning"


@dataclass
class RunEvent:
    """Append-only log record: who did what, when, with structured detail."""

    timestamp: datetime
    actor: str
    kind: EventKind
    payload: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": isoformat(self.timestamp),
            "actor": self.actor,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunEvent":
        return cls(
            timestamp=parse_instant(d["timestamp"]),
            actor=d["actor"],
            kind=EventKind(d["kind"]),
            payload=d.get("payload", {}),
        )


class GateKind(str, Enum):
    QUESTION_SELECTION = "QuestionSelection"
    PUBLICATION_APPROVAL = "PublicationApproval"


class GateAction(str, Enum):
    SELECT = "Select"
    REGENERATE = "Regenerate"
    APPROVE = "Approve"
    REJECT = "Reject"


_GATE_ACTIONS = {
    GateKind.QUESTION_SELECTION: {GateAction.SELECT, GateAction.REGENERATE},
    GateKind.PUBLICATION_APPROVAL: {GateAction.APPROVE, GateAction.REJECT},
}


@dataclass
class GateDecision:
    """A human (or policy) decision at one of the two pause points."""

    gate: GateKind
    action: GateAction
    decided_by: str
    decided_at: datetime
    question_id: Optional[str] = None      # Select
    constraint_text: Optional[str] = None  # Regenerate
    reason_text: Optional[str] = None      # Reject

    def validate(self) -> None:
        if self.action not in _GATE_ACTIONS[self.gate]:
            raise IntegrityError(
                f"action {self.action.value} is not valid for gate {self.gate.value}"
            )
        if self.action is GateAction.SELECT and not self.question_id:
            raise IntegrityError("Select decision requires a question_id")
        if self.action is GateAction.REGENERATE and not self.constraint_text:
            raise IntegrityError("Regenerate decision requires constraint_text")
        if self.action is GateAction.REJECT and not self.reason_text:
            raise IntegrityError("Reject decision requires reason_text")

    def to_dict(self) -> dict[str, Any]:
        return {
            "gate": self.gate.value,
            "action": self.action.value,
            "decided_by": self.decided_by,
            "decided_at": isoformat(self.decided_at),
            "question_id": self.question_id,
            "constraint_text": self.constraint_text,
            "reason_text": self.reason_text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GateDecision":
        return cls(
            gate=GateKind(d["gate"]),
            action=GateAction(d["action"]),
            decided_by=d["decided_by"],
            decided_at=parse_instant(d["decided_at"]),
            question_id=d.get("question_id"),
            constraint_text=d.get("constraint_text"),
            reason_text=d.get("reason_text"),
        )


@dataclass
class CostEntry:
    """One metered LLM call, priced in integer micro-dollars per token."""

    agent: str
    input_tokens: int
    output_tokens: int
    input_price_micro: int
    output_price_micro: int
    cost_micro: int

    def expected_cost(self) -> int:
        return (
            self.input_tokens * self.input_price_micro
            + self.output_tokens * self.output_price_micro
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "agent": self.agent,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "input_price_micro": self.input_price_micro,
            "output_price_micro": self.output_price_micro,
            "cost_micro": self.cost_micro,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CostEntry":
        return cls(**{k: d[k] for k in (
            "agent", "input_tokens", "output_tokens",
            "input_price_micro", "output_price_micro", "cost_micro",
        )})


@dataclass
class CostLedger:
    entries: list[CostEntry] = field(default_factory=list)
    total_micro: int = 0

    def add(self, agent: str, input_tokens: int, output_tokens: int,
            input_price_micro: int, output_price_micro: int) -> CostEntry:
        entry = CostEntry(
            agent=agent,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            input_price_micro=input_price_micro,
            output_price_micro=output_price_micro,
            cost_micro=input_tokens * input_price_micro
            + output_tokens * output_price_micro,
        )
        self.entries.append(entry)
        self.total_micro += entry.cost_micro
        return entry

    def validate(self) -> None:
        for e in self.entries:
            if e.cost_micro != e.expected_cost():
                raise IntegrityError(
                    f"ledger entry for {e.agent}: stored cost {e.cost_micro} != "
                    f"{e.expected_cost()} from token counts"
                )
        if self.total_micro != sum(e.cost_micro for e in self.entries):
            raise IntegrityError("ledger total does not equal the sum of entry costs")

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "total_micro": self.total_micro,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CostLedger":
        return cls(
            entries=[CostEntry.from_dict(e) for e in d.get("entries", [])],
            total_micro=d.get("total_micro", 0),
        )


@dataclass
class RunState:
    """Everything one pipeline run knows about itself.

    Owned by exactly one executor at a time; gates and the API read
    persisted snapshots.  ``candidates`` keeps every generation round even
    after one question is selected, so discarded hypotheses stay on record.
    """

    run_id: str
    stage: Stage = Stage.CREATED
    question_round: int = 1
    revision_iteration: int = 0
    audit: Optional["DatasetAudit"] = None
    profile: Optional["DataProfile"] = None
    # One inner list per generation round, in round order.
    candidates: list[list[tuple["ResearchQuestion", "FeasibilityReport"]]] = field(
        default_factory=list
    )
    selected_question: Optional[str] = None
    sample_report: Optional["ConstructionReport"] = None
    analyses: list["AnalysisResult"] = field(default_factory=list)
    drafts: list["Draft"] = field(default_factory=list)
    reviews: list["ReviewReport"] = field(default_factory=list)
    cost: CostLedger = field(default_factory=CostLedger)
    events: list[RunEvent] = field(default_factory=list)
    created_at: Optional[datetime] = None

    def __post_init__(self) -> None:
        if self.created_at is None:
            self.created_at = utcnow()

    # -- event log ---------------------------------------------------------

    def _next_instant(self) -> datetime:
        now = utcnow()
        if self.events:
            floor = self.events[-1].timestamp + timedelta(microseconds=1)
            if now < floor:
                now = floor
        return now

    def record_event(self, actor: str, kind: EventKind,
                     payload: Optional[dict[str, Any]] = None) -> RunEvent:
        event = RunEvent(self._next_instant(), actor, kind, payload or {})
        self.events.append(event)
        return event

    def advance(self, dst: Stage, actor: str = "orchestrator") -> None:
        if not is_legal_transition(self.stage, dst):
            raise IntegrityError(
                f"illegal stage transition {self.stage.value} -> {dst.value}"
            )
        self.stage = dst
        self.record_event(actor, EventKind.STAGE_ENTERED, {"stage": dst.value})

    def halt(self, actor: str, reason: str,
             detail: Optional[dict[str, Any]] = None) -> None:
        """Terminal graceful halt: a Halt event, then no further transitions."""
        if self.stage in TERMINAL_STAGES:
            raise IntegrityError(f"cannot halt a run in stage {self.stage.value}")
        payload = {"reason": reason}
        if detail:
            payload.update(detail)
        self.record_event(actor, EventKind.HALT, payload)
        self.stage = Stage.HALTED

    # -- queries -----------------------------------------------------------

    def all_candidates(self) -> list[tuple["ResearchQuestion", "FeasibilityReport"]]:
        return [pair for rnd in self.candidates for pair in rnd]

    def current_round_candidates(
        self,
    ) -> list[tuple["ResearchQuestion", "FeasibilityReport"]]:
        return self.candidates[-1] if self.candidates else []

    def find_question(self, question_id: str) -> Optional["ResearchQuestion"]:
        for question, _ in self.all_candidates():
            if question.question_id == question_id:
                return question
        return None

    def latest_draft(self) -> Optional["Draft"]:
        return self.drafts[-1] if self.drafts else None

    def latest_overall_score(self) -> Optional[float]:
        return self.reviews[-1].overall if self.reviews else None

    # -- invariants ----------------------------------------------------------

    def validate(self) -> None:
        """Raise IntegrityError naming the first violated invariant."""
        if self.question_round < 1:
            raise IntegrityError("question_round must be >= 1")
        if self.revision_iteration < 0:
            raise IntegrityError("revision_iteration must be >= 0")
        versions = [d.version for d in self.drafts]
        if versions != list(range(1, len(versions) + 1)):
            raise IntegrityError(
                f"drafts must have gapless versions starting at 1, got {versions}"
            )
        if len(self.reviews) > len(self.drafts):
            raise IntegrityError("more reviews than drafts")
        for k, review in enumerate(self.reviews):
            if review.draft_version != k + 1:
                raise IntegrityError(
                    f"reviews[{k}] refers to draft version {review.draft_version}, "
                    f"expected {k + 1}"
                )
        if self.selected_question is not None:
            if self.find_question(self.selected_question) is None:
                raise IntegrityError(
                    f"selected_question {self.selected_question!r} is not a "
                    "recorded candidate"
                )
        self.cost.validate()
        last = None
        for event in self.events:
            if last is not None and event.timestamp <= last:
                raise IntegrityError("events are not monotonically timestamped")
            last = event.timestamp
        halt_seen = False
        for event in self.events:
            if halt_seen and event.kind is EventKind.STAGE_ENTERED:
                raise IntegrityError("stage transition recorded after a Halt event")
            if event.kind is EventKind.HALT:
                halt_seen = True
        if halt_seen != (self.stage is Stage.HALTED):
            raise IntegrityError("Halt event and Halted stage must coincide")
        replayed = replay_stage(self.events)
        if replayed is not self.stage:
            raise IntegrityError(
                f"event replay yields stage {replayed.value}, "
                f"state says {self.stage.value}"
            )


def replay_stage(events: list[RunEvent], initial: Stage = Stage.CREATED) -> Stage:
    """Fold the event log down to the stage it implies."""
    stage = initial
    for event in events:
        if event.kind is EventKind.STAGE_ENTERED:
            stage = Stage(event.payload["stage"])
        elif event.kind is EventKind.HALT:
            stage = Stage.HALTED
    return stage


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def isoformat(instant: datetime) -> str:
    """Fixed-width UTC ISO form so serialization is byte-stable."""
    return instant.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def parse_instant(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(
        tzinfo=timezone.utc
    )
