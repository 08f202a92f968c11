import pytest

from econpilot.estimation import SeType, Specification, estimate_ols
from econpilot.llm import Gateway, ScriptFixture, ScriptedBackend
from econpilot.manuscript import (
    Draft,
    DraftingError,
    draft,
    missing_headings,
    redraft,
    render_results_markdown,
    scan_unsupported_numerals,
    section_presence,
    word_count,
)
from econpilot.model import EventKind, RunState
from econpilot.questions import ResearchQuestion
from econpilot.review import CritiqueNote, RequestKind, ReviewReport, RevisionRequest

from conftest import make_table

GOOD_BODY = """# Schooling and household income

## Abstract

Each additional year of schooling is associated with higher income.

## Introduction

We study household income in a four-wave panel.

## Empirical Strategy

Ordinary least squares with an intercept; see Table 1.

## Results

The coefficient on schooling is positive across all columns of Table 1.

## Discussion

The association is stable but not causal.
"""

BAD_BODY = """# Untitled

## Abstract

Short.

## Introduction

Also short.
"""


@pytest.fixture()
def toy_results():
    t = make_table({"x": [1.0, 2.0, 3.0, 1.5, 0.5, 2.5],
                    "y": [2.1, 4.0, 5.8, 3.2, 1.1, 4.9]})
    spec = Specification(design="OLS", outcome="y", regressors=["x"],
                         se_type=SeType.HC1)
    return [estimate_ols(t, spec)]


def toy_question():
    return ResearchQuestion(question_id="q1", text="Does x raise y?",
                            outcome_var="y", treatment_vars=["x"])


def draft_gateway(*texts, state=None):
    entries = [{"role": "DraftGen", "text": t} for t in texts]
    gw = Gateway(ScriptedBackend(ScriptFixture.from_dicts(entries)))
    return gw.bind(state) if state is not None else gw


def test_word_count_strips_fenced_blocks():
    body = "one two three\n```python\nignored = tokens * 99\n```\nfour"
    assert word_count(body) == 4


def test_section_presence_and_alternatives():
    assert missing_headings(GOOD_BODY) == []
    got = dict(section_presence(GOOD_BODY))
    assert got["Empirical Strategy"] is True
    methodology = GOOD_BODY.replace("## Empirical Strategy", "## Methodology")
    assert missing_headings(methodology) == []
    assert missing_headings(BAD_BODY) == ["Methodology", "Results",
                                          "Discussion"]


def test_section_match_allows_suffix_and_case():
    body = "\n".join(f"## {h}" for h in
                     ["ABSTRACT", "introduction", "Methodology: panel",
                      "Results and robustness", "discussion"])
    assert missing_headings(body) == []


def test_rendered_tables_never_trip_the_scan(toy_results):
    tables = render_results_markdown(toy_results)
    assert "Table 1" in tables
    assert scan_unsupported_numerals(tables, toy_results) == []


def test_scan_flags_fabricated_decimals(toy_results):
    est = toy_results[0].coefficient("x").estimate
    body = (f"The slope is {est:.3f} across 6 households, "
            "but surely not 9.999 either.")
    flagged = scan_unsupported_numerals(body, toy_results)
    assert flagged == ["unsupported numeral 9.999"]


def test_scan_ignores_integers_and_fences(toy_results):
    body = ("We observe 1280 households over 4 waves.\n"
            "```\nraw output 3.14159\n```\n")
    assert scan_unsupported_numerals(body, toy_results) == []


def test_scan_matches_at_printed_precision(toy_results):
    r2 = toy_results[0].r_squared
    ok = f"R-squared is {r2:.2f} here."
    assert scan_unsupported_numerals(ok, toy_results) == []
    off = f"R-squared is {r2 + 0.02:.2f} here."
    assert scan_unsupported_numerals(off, toy_results) == [
        f"unsupported numeral {r2 + 0.02:.2f}"]


def test_scan_accepts_negative_supported_values(toy_results):
    ci_low = toy_results[0].coefficient("x").ci_low
    body = f"The lower bound is {ci_low:.3f} overall."
    assert scan_unsupported_numerals(body, toy_results) == []


def test_draft_v1(toy_results, demo_profile):
    state = RunState(run_id="d1")
    gw = draft_gateway(GOOD_BODY, state=state)
    d = draft(toy_question(), demo_profile, toy_results, gw)
    assert d.version == 1
    assert d.body == GOOD_BODY
    assert d.word_count == word_count(GOOD_BODY)
    assert all(present for _, present in d.sections)
    assert d.notes == []
    d.validate()


def test_draft_retries_once_on_missing_headings(toy_results, demo_profile):
    gw = draft_gateway(BAD_BODY, GOOD_BODY)
    d = draft(toy_question(), demo_profile, toy_results, gw)
    assert d.body == GOOD_BODY


def test_draft_fails_after_two_bad_bodies(toy_results, demo_profile):
    gw = draft_gateway(BAD_BODY, BAD_BODY)
    with pytest.raises(DraftingError):
        draft(toy_question(), demo_profile, toy_results, gw)


def test_draft_empty_body_is_error(toy_results, demo_profile):
    gw = draft_gateway("   \n")
    with pytest.raises(DraftingError):
        draft(toy_question(), demo_profile, toy_results, gw)


def test_draft_requires_results(demo_profile):
    with pytest.raises(ValueError):
        draft(toy_question(), demo_profile, [], draft_gateway(GOOD_BODY))


def test_revision_increments_version(toy_results, demo_profile):
    gw = draft_gateway(GOOD_BODY, GOOD_BODY + "\nRevised.\n")
    v1 = draft(toy_question(), demo_profile, toy_results, gw)
    review = ReviewReport(
        draft_version=1,
        scores={"novelty": 5, "identification": 5, "data_quality": 5,
                "clarity": 5, "policy_relevance": 5},
        overall=5.0,
        revision_requests=[RevisionRequest(RequestKind.EXPOSITION,
                                           "tighten the abstract")],
    )
    v2 = draft(toy_question(), demo_profile, toy_results, gw,
               prior=(v1, review))
    assert v2.version == 2
    assert v2.body.endswith("Revised.\n")


def test_numeral_warnings_recorded_as_events(toy_results, demo_profile):
    state = RunState(run_id="d2")
    tainted = GOOD_BODY + "\nA fabricated effect of 42.42424 appears here.\n"
    gw = draft_gateway(tainted, state=state)
    d = draft(toy_question(), demo_profile, toy_results, gw)
    assert d.notes == ["unsupported numeral 42.42424"]
    warnings = [e for e in state.events if e.kind is EventKind.WARNING]
    assert any("42.42424" in str(e.payload) for e in warnings)


def test_redraft_keeps_version(toy_results, demo_profile):
    gw = draft_gateway(GOOD_BODY, GOOD_BODY + "\nToned down.\n")
    v1 = draft(toy_question(), demo_profile, toy_results, gw)
    critique = CritiqueNote(draft_version=1,
                            issues=["overclaims causality"],
                            severity="Major")
    replacement = redraft(v1, critique, toy_question(), demo_profile,
                          toy_results, gw)
    assert replacement.version == 1
    assert replacement.body != v1.body


def test_draft_validate_catches_corruption():
    d = Draft(version=1, body=GOOD_BODY, word_count=word_count(GOOD_BODY),
              sections=section_presence(GOOD_BODY))
    d.validate()
    with pytest.raises(ValueError):
        Draft(version=0, body=GOOD_BODY, word_count=word_count(GOOD_BODY),
              sections=section_presence(GOOD_BODY)).validate()
    with pytest.raises(ValueError):
        Draft(version=1, body=GOOD_BODY, word_count=3,
              sections=section_presence(GOOD_BODY)).validate()
    with pytest.raises(ValueError):
        Draft(version=1, body=BAD_BODY, word_count=word_count(BAD_BODY),
              sections=section_presence(BAD_BODY)).validate()


def test_draft_round_trip():
    d = Draft(version=2, body=GOOD_BODY, word_count=word_count(GOOD_BODY),
              sections=section_presence(GOOD_BODY), based_on=["table_1"],
              notes=["unsupported numeral 9.9"])
    assert Draft.from_dict(d.to_dict()).to_dict() == d.to_dict()
