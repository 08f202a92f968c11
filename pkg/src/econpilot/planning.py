"""Turns a selected question (plus reviewer revision requests) into an
ordered estimation plan.

The baseline specification is a mechanical mapping from the question's
design.  Robustness-check requests extend the plan: either through fixed
rules (event-study upgrade, added controls, dropped controls) or, when a
backend is available, by consulting the model under the revision-plan role.
Whatever the source, every emitted specification is validated mechanically;
nothing the model proposes is trusted unchecked.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from . import prompts
from .dataset import DatasetAudit
from .estimation import DidFields, EventFields, SeType, Specification, SpecificationError
from .llm import Gateway, LlmParseError, LlmRequest, RoleTag, parse_structured
from .profiling import DataProfile
from .questions import ResearchQuestion
from .review import RequestKind, RevisionRequest

DEFAULT_LEADS = 2
DEFAULT_LAGS = 2

_BACKTICKED = re.compile(r"`([^`]+)`")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class PlanValidationError(Exception):
    """The assembled plan violates specification invariants."""


@dataclass
class AnalysisPlan:
    specifications: list[Specification]
    primary_index: int = 0

    def validate(self, audit: Optional[DatasetAudit] = None) -> None:
        if not self.specifications:
            raise PlanValidationError("plan needs at least one specification")
        if not 0 <= self.primary_index < len(self.specifications):
            raise PlanValidationError(
                f"primary_index {self.primary_index} out of range")
        for spec in self.specifications:
            try:
                spec.validate()
            except SpecificationError as exc:
                raise PlanValidationError(str(exc)) from exc
            if audit is not None:
                _check_spec_variables(spec, audit)

    @property
    def primary(self) -> Specification:
        return self.specifications[self.primary_index]

    def to_dict(self) -> dict[str, Any]:
        return {"specifications": [s.to_dict() for s in self.specifications],
                "primary_index": self.primary_index}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AnalysisPlan":
        return cls([Specification.from_dict(s) for s in d["specifications"]],
                   d.get("primary_index", 0))


def _check_spec_variables(spec: Specification, audit: DatasetAudit) -> None:
    names = [spec.outcome, *spec.regressors]
    if spec.cluster_var:
        names.append(spec.cluster_var)
    if spec.did_fields:
        names.extend([spec.did_fields.treat_var, spec.did_fields.post_var])
    if spec.event_fields:
        names.append(spec.event_fields.event_time_var)
    inventory = audit.variable_names()
    unknown = sorted({n for n in names if n not in inventory})
    if unknown:
        raise PlanValidationError(
            f"specification references unknown variables: {unknown}")


def _panel_fields(audit: DatasetAudit) -> tuple[Optional[str], Optional[str]]:
    panel = audit.panel_structure
    if panel is None:
        return None, None
    return panel.entity_var, panel.time_var


def baseline_specification(question: ResearchQuestion,
                           audit: DatasetAudit) -> Specification:
    """Default design mapping: panel designs cluster by entity, the
    cross-sectional design uses HC1."""
    entity, time = _panel_fields(audit)
    design = question.design
    if design == "OLS":
        return Specification(
            design="OLS", outcome=question.outcome_var,
            regressors=[*question.treatment_vars, *question.control_vars],
            se_type=SeType.HC1, entity_var=entity, time_var=time,
            label="baseline")
    if design == "FixedEffects":
        return Specification(
            design="FixedEffects", outcome=question.outcome_var,
            regressors=[*question.treatment_vars, *question.control_vars],
            fixed_effects=["Entity", "Time"],
            se_type=SeType.CLUSTER_ROBUST, cluster_var=entity,
            entity_var=entity, time_var=time, label="baseline")
    if design == "DiD":
        if len(question.treatment_vars) < 2:
            raise PlanValidationError(
                "DiD question must name treatment and post indicators")
        return Specification(
            design="DiD", outcome=question.outcome_var,
            regressors=list(question.control_vars),
            did_fields=DidFields(question.treatment_vars[0],
                                 question.treatment_vars[1]),
            se_type=(SeType.CLUSTER_ROBUST if entity else SeType.HC1),
            cluster_var=entity, entity_var=entity, time_var=time,
            label="baseline")
    if design == "EventStudy":
        return Specification(
            design="EventStudy", outcome=question.outcome_var,
            regressors=list(question.control_vars),
            fixed_effects=["Entity", "Time"],
            event_fields=EventFields(question.treatment_vars[0],
                                     DEFAULT_LEADS, DEFAULT_LAGS),
            se_type=SeType.CLUSTER_ROBUST, cluster_var=entity,
            entity_var=entity, time_var=time, label="baseline")
    raise PlanValidationError(f"unknown design {design!r}")


def _find_event_time_var(request_text: str, audit: DatasetAudit,
                         question: ResearchQuestion) -> str:
    """Locate the event-time variable a request refers to: an explicitly
    mentioned inventory variable, else one literally named event_time."""
    inventory = audit.variable_names()
    skip = {question.outcome_var, *question.treatment_vars}
    for token in _WORD.findall(request_text):
        if token in inventory and token not in skip:
            return token
    if "event_time" in inventory:
        return "event_time"
    raise PlanValidationError(
        "event-study request names no event-time variable and the dataset "
        "has none called 'event_time'")


def _mechanical_additions(request: RevisionRequest, baseline: Specification,
                          question: ResearchQuestion,
                          audit: DatasetAudit) -> list[Specification]:
    text = request.text.lower()
    entity, time = _panel_fields(audit)
    inventory = audit.variable_names()

    backticked = _BACKTICKED.findall(request.text)
    unknown = sorted({t for t in backticked if t not in inventory})
    if unknown:
        raise PlanValidationError(
            f"revision request references unknown variables: {unknown}")

    if "event study" in text or "event-study" in text:
        if audit.panel_structure is None or len(audit.panel_structure.waves) < 3:
            raise PlanValidationError(
                "event study requested on data without a 3-wave panel")
        event_var = _find_event_time_var(request.text, audit, question)
        return [Specification(
            design="EventStudy", outcome=baseline.outcome,
            regressors=list(baseline.regressors)
            if baseline.design != "EventStudy" else [],
            fixed_effects=["Entity", "Time"],
            event_fields=EventFields(event_var, DEFAULT_LEADS, DEFAULT_LAGS),
            se_type=SeType.CLUSTER_ROBUST, cluster_var=entity,
            entity_var=entity, time_var=time,
            label="robustness: event study")]

    mentioned = [t for t in _WORD.findall(request.text)
                 if t in inventory
                 and t not in {baseline.outcome, *baseline.regressors}]
    if mentioned:
        extended = Specification.from_dict(baseline.to_dict())
        extended.regressors = [*baseline.regressors, *dict.fromkeys(mentioned)]
        extended.label = f"robustness: add {', '.join(dict.fromkeys(mentioned))}"
        return [extended]

    controls = [r for r in baseline.regressors
                if r not in question.treatment_vars]
    if controls:
        trimmed = Specification.from_dict(baseline.to_dict())
        trimmed.regressors = [r for r in baseline.regressors
                              if r in question.treatment_vars]
        trimmed.label = "robustness: no controls"
        return [trimmed]

    alternative = Specification.from_dict(baseline.to_dict())
    alternative.se_type = (SeType.HC1
                           if baseline.se_type is SeType.CLUSTER_ROBUST
                           else SeType.CLASSICAL)
    if alternative.se_type is not SeType.CLUSTER_ROBUST:
        alternative.cluster_var = None
    alternative.label = f"robustness: {alternative.se_type.value} SEs"
    return [alternative]


def _spec_from_model_item(item: Any, audit: DatasetAudit,
                          baseline: Specification) -> Specification:
    if not isinstance(item, dict):
        raise PlanValidationError("plan item is not an object")
    merged = {
        "design": item.get("design", baseline.design),
        "outcome": item.get("outcome", baseline.outcome),
        "regressors": item.get("regressors", list(baseline.regressors)),
        "fixed_effects": item.get("fixed_effects",
                                  list(baseline.fixed_effects)),
        "cluster_var": item.get("cluster_var", baseline.cluster_var),
        "did_fields": item.get(
            "did_fields",
            baseline.did_fields.to_dict() if baseline.did_fields else None),
        "event_fields": item.get("event_fields"),
        "se_type": item.get("se_type", baseline.se_type.value),
        "entity_var": baseline.entity_var,
        "time_var": baseline.time_var,
        "label": item.get("label", "robustness (model-proposed)"),
    }
    try:
        spec = Specification.from_dict(merged)
        spec.validate()
    except (KeyError, ValueError, TypeError, SpecificationError) as exc:
        raise PlanValidationError(f"model-proposed specification is "
                                  f"invalid: {exc}") from exc
    _check_spec_variables(spec, audit)
    return spec


def plan(question: ResearchQuestion, audit: DatasetAudit,
         profile: DataProfile,
         revision_requests: Optional[Sequence[RevisionRequest]] = None,
         gateway: Optional[Gateway] = None) -> AnalysisPlan:
    """Assemble the estimation plan for this round of analysis.

    Only RobustnessCheck requests change the plan; prose-level requests
    (exposition, variable descriptions) are the drafting stage's concern.
    """
    baseline = baseline_specification(question, audit)
    specifications = [baseline]
    robustness = [r for r in (revision_requests or [])
                  if r.kind is RequestKind.ROBUSTNESS_CHECK]
    if robustness and gateway is not None:
        request = LlmRequest(
            role_tag=RoleTag.REVISION_PLAN,
            system_text=prompts.REVISION_PLAN_SYSTEM,
            user_text=prompts.revision_plan_prompt(
                [r.text for r in robustness],
                prompts._inventory_block(audit, profile),
                f"{baseline.design} of {baseline.outcome} on "
                f"{', '.join(baseline.regressors) or '(design terms only)'}"),
        )
        response = gateway.complete(request)
        try:
            parsed = parse_structured(response.text, "revision_plan")
        except LlmParseError as exc:
            raise PlanValidationError(
                f"revision plan unparseable: {exc}") from exc
        for item in parsed["additional_specifications"]:
            specifications.append(
                _spec_from_model_item(item, audit, baseline))
    else:
        for request_item in robustness:
            specifications.extend(
                _mechanical_additions(request_item, baseline, question, audit))
    result = AnalysisPlan(specifications=specifications, primary_index=0)
    result.validate(audit)
    return result
