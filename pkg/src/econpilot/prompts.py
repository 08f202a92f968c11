"""Prompt templates for every model-facing agent.

These are tunable configuration, not contract: the contract is that each
prompt instructs the model to emit exactly one JSON object (or, for drafts,
a markdown manuscript) and that the dataset-aware variant embeds the audit
while the unconstrained variant sees only the dataset name and domain.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .dataset import DatasetAudit
from .profiling import DataProfile

QUESTION_SYSTEM = (
    "You are an empirical economics ideation assistant. Propose candidate "
    "hypotheses that are one-sentence causal or descriptive claims testable "
    "with regression methods. Reply with exactly one JSON object of the form "
    '{"questions": [{"text": str, "outcome_var": str, "treatment_vars": '
    '[str], "control_vars": [str], "design": "OLS"|"FixedEffects"|"DiD"|'
    '"EventStudy", "domain_tag": str, "rationale": str}]} and nothing else.'
)

DRAFT_SYSTEM = (
    "You are an academic writing assistant for empirical economics. Write a "
    "complete markdown manuscript with these level-1 or level-2 headings: "
    "Abstract, Introduction, Methodology (or Empirical Strategy), Results, "
    "Discussion. Quote numbers only from the estimate tables you are given. "
    "Reply with the manuscript markdown only."
)

CRITIQUE_SYSTEM = (
    "You are a pre-submission checker. Read the manuscript and list concrete "
    "defects. Reply with exactly one JSON object: "
    '{"severity": "Minor"|"Major", "issues": [str]}.'
)

REVIEW_SYSTEM = (
    "You are a journal referee for empirical economics. Score the manuscript "
    "1-10 on each dimension and request revisions. Reply with exactly one "
    'JSON object: {"scores": {"novelty": int, "identification": int, '
    '"data_quality": int, "clarity": int, "policy_relevance": int}, '
    '"revision_requests": [{"kind": "RobustnessCheck"|'
    '"IdentificationDiscussion"|"VariableDescription"|"Exposition"|"Other", '
    '"text": str}]}.'
)

REVISION_PLAN_SYSTEM = (
    "You translate reviewer requests into additional regression "
    "specifications. Reply with exactly one JSON object: "
    '{"additional_specifications": [{"design": str, "outcome": str, '
    '"regressors": [str], "fixed_effects": [str], "cluster_var": str|null, '
    '"event_fields": {"event_time_var": str, "leads": int, "lags": int, '
    '"omitted_period": int}|null}]}. Use only variables from the inventory.'
)


def _inventory_block(audit: DatasetAudit, profile: DataProfile) -> str:
    lines = [f"Dataset {audit.dataset_id}: {audit.n_rows} rows, "
             f"{audit.n_cols} variables."]
    if audit.panel_structure:
        p = audit.panel_structure
        lines.append(
            f"Panel structure: entity={p.entity_var}, wave={p.time_var}, "
            f"{p.n_entities} entities, waves {p.waves}."
        )
    lines.append("Variable inventory (name: kind, missing share):")
    for v in audit.variables:
        rate = profile.missing_rate(v.name)
        miss = f", {rate:.0%} missing" if rate else ""
        label = f" -- {v.label}" if v.label else ""
        lines.append(f"  {v.name}: {v.dtype.value}{miss}{label}")
    if profile.notes:
        lines.append("Diagnostics:")
        lines.extend(f"  {n}" for n in profile.notes)
    if profile.endogeneity_flags:
        lines.append("Endogeneity risks:")
        lines.extend(f"  {f.var_a} ~ {f.var_b}: {f.reason}"
                     for f in profile.endogeneity_flags)
    return "\n".join(lines)


def question_prompt_dataset_aware(audit: DatasetAudit, profile: DataProfile,
                                  domain: str, n: int,
                                  constraints: Optional[str] = None) -> str:
    parts = [
        f"Generate {n} candidate research questions in the domain: {domain}.",
        "Every variable you name must come from the inventory below, and the "
        "design must fit the data structure.",
        _inventory_block(audit, profile),
    ]
    if constraints:
        parts.append(f"Additional constraints from the investigator: "
                     f"{constraints}")
    return "\n\n".join(parts)


def question_prompt_unconstrained(dataset_name: str, domain: str, n: int,
                                  constraints: Optional[str] = None) -> str:
    # Deliberately no inventory: the model sees only a name and a domain.
    parts = [
        f"Generate {n} candidate research questions in the domain: {domain}.",
        f"The dataset available is called: {dataset_name}. Assume it contains "
        "whatever variables such a dataset would typically contain, and name "
        "them yourself.",
    ]
    if constraints:
        parts.append(f"Additional constraints from the investigator: "
                     f"{constraints}")
    return "\n\n".join(parts)


def draft_prompt(question_text: str, dataset_summary: str,
                 result_tables: str, prior_body: Optional[str] = None,
                 revision_requests: Optional[Sequence[str]] = None,
                 version: int = 1) -> str:
    parts = [
        f"Research question: {question_text}",
        f"Data: {dataset_summary}",
        "Estimates (quote numbers from these tables only):\n" + result_tables,
    ]
    if prior_body is not None:
        parts.append(f"This is a revision; the next version is draft v{version}.")
        parts.append("Reviewer requests to address:\n"
                     + "\n".join(f"- {r}" for r in (revision_requests or [])))
        parts.append("Prior draft:\n" + prior_body)
    else:
        parts.append(f"Write draft v{version} from scratch.")
    return "\n\n".join(parts)


def critique_prompt(body: str, version: int) -> str:
    return f"Manuscript draft v{version} follows.\n\n{body}"


def review_prompt(body: str, version: int, result_tables: str) -> str:
    return (f"Review manuscript draft v{version}.\n\n"
            f"Estimates available to the authors:\n{result_tables}\n\n"
            f"Manuscript:\n{body}")


def revision_plan_prompt(requests: Sequence[str], inventory: str,
                         baseline_description: str) -> str:
    return (
        "Reviewer requests:\n" + "\n".join(f"- {r}" for r in requests)
        + f"\n\nBaseline specification: {baseline_description}"
        + f"\n\nVariable inventory:\n{inventory}"
    )
