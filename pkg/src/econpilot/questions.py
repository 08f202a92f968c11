"""Candidate research questions: generation, feasibility screening, ranking.

Screening is mechanical and pure: a question is feasible iff (1) every
variable it names exists in the dataset inventory, (2) its empirical design
fits the data structure, and (3) its method is one the estimation stage
supports.  Infeasible candidates are kept and flagged, never dropped; the
human gate sees everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

from . import prompts
from .dataset import DatasetAudit, VariableKind
from .llm import Gateway, LlmParseError, LlmRequest, RoleTag, parse_structured
from .model import EventKind
from .profiling import DataProfile

SUPPORTED_DESIGNS = ("OLS", "FixedEffects", "DiD", "EventStudy")


class GenerationMode(str, Enum):
    DATASET_AWARE = "DatasetAware"
    UNCONSTRAINED = "Unconstrained"


class GenerationError(Exception):
    """No parseable question came back; the gate can only regenerate."""


@dataclass
class ResearchQuestion:
    question_id: str
    text: str
    outcome_var: str
    treatment_vars: list[str]
    control_vars: list[str] = field(default_factory=list)
    design: str = "OLS"
    domain_tag: str = ""
    rationale: str = ""

    def named_variables(self) -> list[str]:
        """All variables the question references, deduplicated in order."""
        seen: dict[str, None] = {}
        for name in [self.outcome_var, *self.treatment_vars, *self.control_vars]:
            seen.setdefault(name)
        return list(seen)

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "text": self.text,
            "outcome_var": self.outcome_var,
            "treatment_vars": self.treatment_vars,
            "control_vars": self.control_vars,
            "design": self.design,
            "domain_tag": self.domain_tag,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ResearchQuestion":
        return cls(
            question_id=d["question_id"],
            text=d["text"],
            outcome_var=d["outcome_var"],
            treatment_vars=list(d["treatment_vars"]),
            control_vars=list(d.get("control_vars", [])),
            design=d.get("design", "OLS"),
            domain_tag=d.get("domain_tag", ""),
            rationale=d.get("rationale", ""),
        )


@dataclass
class FeasibilityReport:
    question_id: str
    vars_exist: bool
    missing_vars: list[str]
    design_compatible: bool
    design_reason: str
    method_supported: bool
    method_reason: str
    feasible: bool
    tractability_score: float

    def first_failure(self) -> Optional[str]:
        """Failure cause under the first-failing-criterion rule:
        variables, then design, then method."""
        if not self.vars_exist:
            return "vars"
        if not self.design_compatible:
            return "design"
        if not self.method_supported:
            return "method"
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "vars_exist": self.vars_exist,
            "missing_vars": self.missing_vars,
            "design_compatible": self.design_compatible,
            "design_reason": self.design_reason,
            "method_supported": self.method_supported,
            "method_reason": self.method_reason,
            "feasible": self.feasible,
            "tractability_score": self.tractability_score,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FeasibilityReport":
        return cls(
            question_id=d["question_id"],
            vars_exist=d["vars_exist"],
            missing_vars=list(d.get("missing_vars", [])),
            design_compatible=d["design_compatible"],
            design_reason=d.get("design_reason", ""),
            method_supported=d["method_supported"],
            method_reason=d.get("method_reason", ""),
            feasible=d["feasible"],
            tractability_score=d["tractability_score"],
        )


def _question_from_item(item: Any, question_id: str) -> ResearchQuestion:
    if not isinstance(item, dict):
        raise ValueError("question item is not an object")
    text = item.get("text")
    outcome = item.get("outcome_var")
    treatments = item.get("treatment_vars")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("missing question text")
    if not isinstance(outcome, str) or not outcome.strip():
        raise ValueError("missing outcome_var")
    if (not isinstance(treatments, list) or not treatments
            or not all(isinstance(t, str) and t for t in treatments)):
        raise ValueError("treatment_vars must be a nonempty list of names")
    controls = item.get("control_vars", [])
    if not isinstance(controls, list):
        raise ValueError("control_vars must be a list")
    return ResearchQuestion(
        question_id=question_id,
        text=text.strip(),
        outcome_var=outcome.strip(),
        treatment_vars=[t.strip() for t in treatments],
        control_vars=[str(c).strip() for c in controls],
        design=str(item.get("design", "OLS")),
        domain_tag=str(item.get("domain_tag", "")),
        rationale=str(item.get("rationale", "")),
    )


def build_generation_prompt(audit: DatasetAudit, profile: DataProfile,
                            domain: str, n: int, mode: GenerationMode,
                            constraints: Optional[str] = None) -> str:
    if mode is GenerationMode.DATASET_AWARE:
        return prompts.question_prompt_dataset_aware(
            audit, profile, domain, n, constraints)
    return prompts.question_prompt_unconstrained(
        audit.dataset_id, domain, n, constraints)


def generate_questions(audit: DatasetAudit, profile: DataProfile, domain: str,
                       gateway: Gateway, n: int = 8,
                       mode: GenerationMode = GenerationMode.DATASET_AWARE,
                       constraints: Optional[str] = None,
                       round_no: int = 1) -> list[ResearchQuestion]:
    """One generation round: prompt the model, parse up to ``n`` questions.

    Malformed items are dropped with a warning event rather than failing the
    round; zero parseable items is a GenerationError.
    """
    user_text = build_generation_prompt(audit, profile, domain, n, mode,
                                        constraints)
    request = LlmRequest(
        role_tag=RoleTag.QUESTION_GEN,
        system_text=prompts.QUESTION_SYSTEM,
        user_text=user_text,
    )
    response = gateway.complete(request)
    try:
        parsed = parse_structured(response.text, "questions")
    except LlmParseError as exc:
        raise GenerationError(f"no parseable question list: {exc}") from exc
    questions: list[ResearchQuestion] = []
    for item in parsed["questions"][:n]:
        question_id = f"r{round_no}q{len(questions) + 1:02d}"
        try:
            questions.append(_question_from_item(item, question_id))
        except ValueError as exc:
            if gateway.state is not None:
                gateway.state.record_event(
                    "question_agent", EventKind.WARNING,
                    {"dropped_item": str(exc)})
    if not questions:
        raise GenerationError("generation round produced zero usable questions")
    return questions


def _check_design(question: ResearchQuestion,
                  audit: DatasetAudit) -> tuple[bool, str]:
    design = question.design
    panel = audit.panel_structure
    if design == "OLS":
        return True, "cross-sectional OLS fits any structure"
    if design == "FixedEffects":
        if panel is None or len(panel.waves) < 2:
            return False, "fixed effects require a panel with at least 2 waves"
        return True, f"panel with {len(panel.waves)} waves"
    if design == "EventStudy":
        if panel is None or len(panel.waves) < 3:
            return False, "event study requires a panel with at least 3 waves"
        return True, f"panel with {len(panel.waves)} waves"
    if design == "DiD":
        if len(question.treatment_vars) < 2:
            return False, ("difference-in-differences needs a treatment "
                           "indicator and a post indicator")
        treat, post = question.treatment_vars[0], question.treatment_vars[1]
        treat_info = audit.variable(treat)
        post_info = audit.variable(post)
        if treat_info is None or treat_info.dtype is not VariableKind.BINARY:
            return False, f"treatment indicator {treat!r} is not a binary variable"
        if post_info is None or post_info.dtype not in (
                VariableKind.BINARY, VariableKind.TIME_INDEX):
            return False, f"post indicator {post!r} is not binary or a time index"
        return True, "binary treatment and post indicators present"
    # Unknown designs have no structural requirements to check; they fail
    # the supported-method criterion instead.
    return True, f"no structural requirements checked for design {design!r}"


def screen(question: ResearchQuestion, audit: DatasetAudit,
           profile: DataProfile) -> FeasibilityReport:
    """Three-criterion feasibility check.  Always returns a report."""
    inventory = audit.variable_names()
    missing = [v for v in question.named_variables() if v not in inventory]
    vars_exist = not missing
    design_compatible, design_reason = _check_design(question, audit)
    method_supported = question.design in SUPPORTED_DESIGNS
    method_reason = (
        f"{question.design} is a supported estimator" if method_supported
        else f"{question.design!r} is not among the supported estimators "
             f"{list(SUPPORTED_DESIGNS)}"
    )
    score = 1.0
    for name in question.named_variables():
        rate = profile.missing_rate(name)
        if rate is None or name not in inventory:
            score = 0.0
            break
        score *= 1.0 - rate
    return FeasibilityReport(
        question_id=question.question_id,
        vars_exist=vars_exist,
        missing_vars=missing,
        design_compatible=design_compatible,
        design_reason=design_reason,
        method_supported=method_supported,
        method_reason=method_reason,
        feasible=vars_exist and design_compatible and method_supported,
        tractability_score=min(1.0, max(0.0, score)),
    )


Candidate = tuple[ResearchQuestion, FeasibilityReport]


def rank(candidates: Sequence[Candidate]) -> list[Candidate]:
    """Feasible first, by tractability descending (ties by id ascending);
    infeasible after, in their original order.  Membership never changes."""
    if not candidates:
        raise ValueError("rank requires a nonempty candidate list")
    feasible = [c for c in candidates if c[1].feasible]
    infeasible = [c for c in candidates if not c[1].feasible]
    feasible.sort(key=lambda c: (-c[1].tractability_score, c[0].question_id))
    return feasible + infeasible


@dataclass
class FeasibilityStats:
    n_questions: int
    n_feasible: int
    share: float
    failures: dict[str, int]

    @property
    def share_pct(self) -> int:
        return int(round(100.0 * self.share))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_questions": self.n_questions,
            "n_feasible": self.n_feasible,
            "share": self.share,
            "share_pct": self.share_pct,
            "failures": self.failures,
        }


def feasibility_stats(rounds: Sequence[Sequence[Candidate]]) -> FeasibilityStats:
    """Aggregate screening outcomes across generation rounds.

    Each infeasible question is attributed to its first failing criterion,
    in the order: variables missing, design incompatible, method unsupported.
    """
    if not rounds:
        raise ValueError("feasibility_stats requires at least one round")
    failures = {"vars": 0, "design": 0, "method": 0}
    n_questions = 0
    n_feasible = 0
    for rnd in rounds:
        for _, report in rnd:
            n_questions += 1
            if report.feasible:
                n_feasible += 1
            else:
                cause = report.first_failure()
                assert cause is not None
                failures[cause] += 1
    return FeasibilityStats(
        n_questions=n_questions,
        n_feasible=n_feasible,
        share=n_feasible / n_questions if n_questions else 0.0,
        failures=failures,
    )
