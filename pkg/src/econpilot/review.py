"""Draft evaluation: pre-review self-critique, the five-dimension rubric
review, and the stopping rule for the revision loop.

The overall score is always recomputed locally from the dimension scores;
a model that reports its own mean is never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence, TYPE_CHECKING

from . import prompts
from .llm import (
    Gateway,
    LlmParseError,
    LlmRequest,
    REVIEW_DIMENSIONS,
    RoleTag,
    parse_structured,
)
from .model import EventKind

if TYPE_CHECKING:
    from .estimation import AnalysisResult
    from .manuscript import Draft

ACCEPT_THRESHOLD = 6.0
MAX_ITERATIONS = 4
NO_IMPROVEMENT_MARGIN = 0.5
SCORE_MIN, SCORE_MAX = 1.0, 10.0


class ReviewError(Exception):
    """Review output unusable after the single allowed re-prompt."""


class RequestKind(str, Enum):
    ROBUSTNESS_CHECK = "RobustnessCheck"
    IDENTIFICATION_DISCUSSION = "IdentificationDiscussion"
    VARIABLE_DESCRIPTION = "VariableDescription"
    EXPOSITION = "Exposition"
    OTHER = "Other"


@dataclass
class RevisionRequest:
    kind: RequestKind
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RevisionRequest":
        return cls(RequestKind(d["kind"]), d["text"])


@dataclass
class ReviewReport:
    draft_version: int
    scores: dict[str, float]
    overall: float
    revision_requests: list[RevisionRequest] = field(default_factory=list)
    verdict: str = "Revise"  # Accept | Revise

    @property
    def overall_display(self) -> float:
        """Score as reported in summaries: one decimal place."""
        return round(self.overall, 1)

    def validate(self) -> None:
        if set(self.scores) != set(REVIEW_DIMENSIONS):
            raise ValueError(f"scores must cover exactly {REVIEW_DIMENSIONS}")
        for name, value in self.scores.items():
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise ValueError(f"score {name}={value} outside "
                                 f"[{SCORE_MIN}, {SCORE_MAX}]")
        mean = sum(self.scores.values()) / len(self.scores)
        if abs(self.overall - mean) > 1e-12:
            raise ValueError("overall is not the mean of dimension scores")
        if self.verdict not in ("Accept", "Revise"):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "draft_version": self.draft_version,
            "scores": {k: self.scores[k] for k in REVIEW_DIMENSIONS},
            "overall": self.overall,
            "revision_requests": [r.to_dict() for r in self.revision_requests],
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ReviewReport":
        return cls(
            draft_version=d["draft_version"],
            scores={k: float(v) for k, v in d["scores"].items()},
            overall=d["overall"],
            revision_requests=[RevisionRequest.from_dict(r)
                               for r in d.get("revision_requests", [])],
            verdict=d.get("verdict", "Revise"),
        )


@dataclass
class CritiqueNote:
    draft_version: int
    issues: list[str]
    severity: str  # Minor | Major

    def is_major(self) -> bool:
        return self.severity == "Major"

    def to_dict(self) -> dict[str, Any]:
        return {"draft_version": self.draft_version, "issues": self.issues,
                "severity": self.severity}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CritiqueNote":
        return cls(d["draft_version"], list(d["issues"]), d["severity"])


def _results_digest(results: Sequence["AnalysisResult"]) -> str:
    from .manuscript import render_results_markdown
    return render_results_markdown(results)


def self_critique(draft: "Draft", results: Sequence["AnalysisResult"],
                  gateway: Gateway) -> Optional[CritiqueNote]:
    """One critique pass before formal review.

    Parse failures are non-fatal: a warning event is recorded and review
    proceeds without a critique.
    """
    request = LlmRequest(
        role_tag=RoleTag.CRITIQUE,
        system_text=prompts.CRITIQUE_SYSTEM,
        user_text=prompts.critique_prompt(draft.body, draft.version),
    )
    response = gateway.complete(request)
    try:
        parsed = parse_structured(response.text, "critique")
    except LlmParseError as exc:
        if gateway.state is not None:
            gateway.state.record_event(
                "reviewer_agent", EventKind.WARNING,
                {"critique_skipped": str(exc)})
        return None
    return CritiqueNote(
        draft_version=draft.version,
        issues=[str(i) for i in parsed["issues"]],
        severity=parsed["severity"],
    )


def _parse_scores(parsed: dict[str, Any]) -> Optional[dict[str, float]]:
    scores = {}
    for name in REVIEW_DIMENSIONS:
        value = float(parsed["scores"][name])
        if not SCORE_MIN <= value <= SCORE_MAX:
            return None
        scores[name] = value
    return scores


def review(draft: "Draft", results: Sequence["AnalysisResult"],
           gateway: Gateway, accept_threshold: float = ACCEPT_THRESHOLD,
           budget_exhausted: bool = False) -> ReviewReport:
    """Score a draft on the five-dimension rubric.

    An out-of-range or unparseable response earns exactly one corrective
    re-prompt; a second failure is a ReviewError (the run halts gracefully).
    Verdict is Accept when the locally computed overall reaches the
    threshold, or when the revision budget is spent (nothing left to revise).
    """
    user_text = prompts.review_prompt(draft.body, draft.version,
                                      _results_digest(results))
    request = LlmRequest(role_tag=RoleTag.REVIEW,
                         system_text=prompts.REVIEW_SYSTEM,
                         user_text=user_text)
    scores = None
    requests_raw: list[dict[str, Any]] = []
    last_problem = ""
    for attempt in range(2):
        response = gateway.complete(request)
        try:
            parsed = parse_structured(response.text, "review")
        except LlmParseError as exc:
            last_problem = str(exc)
        else:
            scores = _parse_scores(parsed)
            if scores is not None:
                requests_raw = parsed.get("revision_requests", [])
                break
            last_problem = (f"scores outside [{SCORE_MIN:g}, {SCORE_MAX:g}]: "
                            f"{parsed['scores']}")
        request = LlmRequest(
            role_tag=RoleTag.REVIEW,
            system_text=prompts.REVIEW_SYSTEM,
            user_text=(f"{user_text}\n\nYour previous response was invalid "
                       f"({last_problem}). Reply again with every score an "
                       f"integer or decimal between 1 and 10."),
        )
    if scores is None:
        raise ReviewError(f"review unusable after re-prompt: {last_problem}")
    overall = sum(scores.values()) / len(scores)
    verdict = ("Accept" if overall >= accept_threshold or budget_exhausted
               else "Revise")
    report = ReviewReport(
        draft_version=draft.version,
        scores=scores,
        overall=overall,
        revision_requests=[
            RevisionRequest(RequestKind(r["kind"]), str(r["text"]))
            for r in requests_raw],
        verdict=verdict,
    )
    report.validate()
    return report


class StopReason(str, Enum):
    ACCEPTED = "Accepted"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    NO_IMPROVEMENT = "NoImprovement"


@dataclass
class LoopDecision:
    stop: bool
    reason: Optional[StopReason] = None

    def __str__(self) -> str:
        return f"Stop({self.reason.value})" if self.stop else "Continue"


def should_continue(reports: Sequence[ReviewReport],
                    max_iterations: int = MAX_ITERATIONS,
                    accept_threshold: float = ACCEPT_THRESHOLD) -> LoopDecision:
    """Revision-loop stopping rule, checked in priority order:
    threshold acceptance, then budget, then the no-improvement breaker."""
    if not reports:
        raise ValueError("should_continue requires at least one report")
    latest = reports[-1]
    if latest.overall >= accept_threshold:
        return LoopDecision(True, StopReason.ACCEPTED)
    if len(reports) >= max_iterations:
        return LoopDecision(True, StopReason.BUDGET_EXHAUSTED)
    if (len(reports) >= 2
            and latest.overall <= reports[-2].overall - NO_IMPROVEMENT_MARGIN):
        return LoopDecision(True, StopReason.NO_IMPROVEMENT)
    return LoopDecision(False)
