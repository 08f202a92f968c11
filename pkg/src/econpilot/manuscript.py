"""Versioned markdown manuscripts generated from estimation results.

Two guards run on every generated body: the required-headings check (one
corrective re-prompt, then a hard error) and the unsupported-numeral scan,
which flags any decimal literal in the prose that does not round-match a
value in the supplied results.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, TYPE_CHECKING

from . import prompts
from .estimation import AnalysisResult
from .llm import Gateway, LlmRequest, RoleTag
from .model import EventKind
from .profiling import DataProfile

if TYPE_CHECKING:
    from .questions import ResearchQuestion
    from .review import CritiqueNote, ReviewReport

# Each entry is the set of alternative headings satisfying one requirement.
REQUIRED_HEADINGS: tuple[tuple[str, ...], ...] = (
    ("Abstract",),
    ("Introduction",),
    ("Methodology", "Empirical Strategy"),
    ("Results",),
    ("Discussion",),
)

_FENCED_BLOCK = re.compile(r"^```.*?^```[ \t]*$", re.MULTILINE | re.DOTALL)
_HEADING_LINE = re.compile(r"^#{1,6}\s+(.*)$", re.MULTILINE)
_DECIMAL_LITERAL = re.compile(r"(?<![\w.\-])-?\d+\.\d+(?![\w.])")


class DraftingError(Exception):
    """Generated body unusable after the single allowed re-prompt."""


@dataclass
class Draft:
    version: int
    body: str
    word_count: int
    sections: list[tuple[str, bool]]
    based_on: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.version < 1:
            raise ValueError("draft versions start at 1")
        if self.word_count != word_count(self.body):
            raise ValueError("stored word_count does not match body")
        missing = [h for h, present in self.sections if not present]
        if missing:
            raise ValueError(f"missing required sections: {missing}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "body": self.body,
            "word_count": self.word_count,
            "sections": [[h, p] for h, p in self.sections],
            "based_on": self.based_on,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Draft":
        return cls(
            version=d["version"],
            body=d["body"],
            word_count=d["word_count"],
            sections=[(h, p) for h, p in d["sections"]],
            based_on=list(d.get("based_on", [])),
            notes=list(d.get("notes", [])),
        )


def word_count(body: str) -> int:
    """Whitespace-delimited tokens, with fenced code blocks stripped first."""
    return len(_FENCED_BLOCK.sub(" ", body).split())


def section_presence(body: str) -> list[tuple[str, bool]]:
    """For each required heading group, whether any alternative appears as a
    markdown heading.  The reported name is the matched alternative (or the
    group's first name when absent)."""
    headings = [m.group(1).strip().lower() for m in _HEADING_LINE.finditer(body)]
    out = []
    for group in REQUIRED_HEADINGS:
        matched = None
        for alternative in group:
            want = alternative.lower()
            if any(h == want or h.startswith(want + " ") or
                   h.startswith(want + ":") for h in headings):
                matched = alternative
                break
        out.append((matched or group[0], matched is not None))
    return out


def missing_headings(body: str) -> list[str]:
    return [name for name, present in section_presence(body) if not present]


def render_results_markdown(results: Sequence[AnalysisResult]) -> str:
    """Markdown coefficient tables at fixed decimal precision.

    Fixed decimals make every printed number a rounding of a result value,
    so quoting from these tables never trips the numeral scan.
    """
    blocks = []
    for k, result in enumerate(results, start=1):
        label = result.spec.label or result.spec.design
        lines = [
            f"Table {k}: {label} (outcome {result.spec.outcome}, "
            f"n={result.n_obs})",
            "| term | estimate | se | t | p |",
            "| --- | --- | --- | --- | --- |",
        ]
        for c in result.coefficients:
            t_txt = "" if c.t_stat is None else f"{c.t_stat:.2f}"
            lines.append(f"| {c.name} | {c.estimate:.4f} | "
                         f"{c.std_error:.4f} | {t_txt} | {c.p_value:.4f} |")
        lines.append(f"R-squared: {result.r_squared:.3f}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def _supported_values(results: Sequence[AnalysisResult]) -> list[float]:
    values: list[float] = []
    for r in results:
        values.extend([float(r.n_obs), float(r.r_squared)])
        if r.n_entities is not None:
            values.append(float(r.n_entities))
        for c in r.coefficients:
            values.extend([c.estimate, c.std_error, c.p_value,
                           c.ci_low, c.ci_high])
            if c.t_stat is not None:
                values.append(c.t_stat)
    return values


def scan_unsupported_numerals(body: str,
                              results: Sequence[AnalysisResult]) -> list[str]:
    """Decimal literals in prose that match no result value at the printed
    precision.  Comparison happens after stripping fenced code blocks."""
    prose = _FENCED_BLOCK.sub(" ", body)
    values = _supported_values(results)
    flagged: list[str] = []
    for literal in dict.fromkeys(_DECIMAL_LITERAL.findall(prose)):
        decimals = len(literal.split(".")[1])
        if not any(f"{v:.{decimals}f}" == literal for v in values):
            flagged.append(f"unsupported numeral {literal}")
    return flagged


def _dataset_summary(profile: DataProfile) -> str:
    return (f"dataset {profile.dataset_id}: "
            f"{len(profile.variable_profiles)} profiled variables")


def _generate_body(gateway: Gateway, user_text: str) -> str:
    """One generation plus at most one corrective re-prompt on headings."""
    request = LlmRequest(role_tag=RoleTag.DRAFT_GEN,
                         system_text=prompts.DRAFT_SYSTEM,
                         user_text=user_text)
    body = gateway.complete(request).text
    if not body.strip():
        raise DraftingError("model returned an empty manuscript body")
    missing = missing_headings(body)
    if missing:
        retry = LlmRequest(
            role_tag=RoleTag.DRAFT_GEN,
            system_text=prompts.DRAFT_SYSTEM,
            user_text=(f"{user_text}\n\nYour previous draft was missing the "
                       f"required section headings {missing}. Produce the "
                       f"full manuscript again with every required heading."),
        )
        body = gateway.complete(retry).text
        if not body.strip():
            raise DraftingError("model returned an empty manuscript body")
        missing = missing_headings(body)
        if missing:
            raise DraftingError(
                f"manuscript still missing required headings after "
                f"re-prompt: {missing}")
    return body


def _package(body: str, version: int,
             results: Sequence[AnalysisResult],
             gateway: Gateway) -> Draft:
    warnings = scan_unsupported_numerals(body, results)
    if warnings and gateway.state is not None:
        for w in warnings:
            gateway.state.record_event("paper_agent", EventKind.WARNING,
                                       {"numeral_guard": w})
    return Draft(
        version=version,
        body=body,
        word_count=word_count(body),
        sections=section_presence(body),
        based_on=[f"table_{k}" for k in range(1, len(results) + 1)],
        notes=warnings,
    )


def draft(question: "ResearchQuestion", profile: DataProfile,
          results: Sequence[AnalysisResult], gateway: Gateway,
          prior: Optional[tuple[Draft, "ReviewReport"]] = None) -> Draft:
    """Produce draft v1, or v(n+1) when revising under a review report."""
    if not results:
        raise ValueError("drafting requires at least one analysis result")
    tables = render_results_markdown(results)
    if prior is None:
        version = 1
        user_text = prompts.draft_prompt(
            question.text, _dataset_summary(profile), tables, version=1)
    else:
        prior_draft, prior_review = prior
        version = prior_draft.version + 1
        user_text = prompts.draft_prompt(
            question.text, _dataset_summary(profile), tables,
            prior_body=prior_draft.body,
            revision_requests=[r.text for r in prior_review.revision_requests],
            version=version)
    body = _generate_body(gateway, user_text)
    return _package(body, version, results, gateway)


def redraft(current: Draft, critique: "CritiqueNote",
            question: "ResearchQuestion", profile: DataProfile,
            results: Sequence[AnalysisResult], gateway: Gateway) -> Draft:
    """In-place rewrite after a Major self-critique: same version number."""
    user_text = prompts.draft_prompt(
        question.text, _dataset_summary(profile),
        render_results_markdown(results),
        prior_body=current.body,
        revision_requests=critique.issues,
        version=current.version)
    body = _generate_body(gateway, user_text)
    return _package(body, current.version, results, gateway)
