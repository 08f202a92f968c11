import json

import pytest

from econpilot.dataset import audit_dataset
from econpilot.llm import Gateway, ScriptFixture, ScriptedBackend
from econpilot.model import EventKind, RunState
from econpilot.questions import (
    FeasibilityReport,
    GenerationError,
    GenerationMode,
    ResearchQuestion,
    feasibility_stats,
    generate_questions,
    rank,
    screen,
)

from _screener_corpus import build_corpus
from conftest import make_table


def question(qid="q1", outcome="log_income", treats=("educ_years",),
             controls=(), design="OLS"):
    return ResearchQuestion(
        question_id=qid, text="t", outcome_var=outcome,
        treatment_vars=list(treats), control_vars=list(controls),
        design=design,
    )


def gateway_returning(text, state=None):
    backend = ScriptedBackend(ScriptFixture.from_dicts(
        [{"role": "QuestionGen", "text": text}]))
    gw = Gateway(backend)
    return gw.bind(state) if state is not None else gw


def test_named_variables_deduplicates_in_order():
    q = question(outcome="y", treats=("x", "y"), controls=("z", "x"))
    assert q.named_variables() == ["y", "x", "z"]


def test_generation_parses_and_assigns_round_ids(demo_audit, demo_profile):
    payload = {"questions": [
        {"text": "a", "outcome_var": "log_income",
         "treatment_vars": ["educ_years"], "design": "OLS"},
        {"text": "b", "outcome_var": "savings_rate",
         "treatment_vars": ["treat", "post"], "design": "DiD"},
    ]}
    gw = gateway_returning("preamble " + json.dumps(payload))
    out = generate_questions(demo_audit, demo_profile, "development",
                             gw, n=8, round_no=2)
    assert [q.question_id for q in out] == ["r2q01", "r2q02"]
    assert out[1].design == "DiD"


def test_generation_caps_at_n(demo_audit, demo_profile):
    items = [{"text": f"q{i}", "outcome_var": "log_income",
              "treatment_vars": ["treat"]} for i in range(10)]
    gw = gateway_returning(json.dumps({"questions": items}))
    out = generate_questions(demo_audit, demo_profile, "dev", gw, n=4)
    assert len(out) == 4


def test_generation_drops_malformed_with_warning(demo_audit, demo_profile):
    payload = {"questions": [
        {"text": "ok", "outcome_var": "log_income",
         "treatment_vars": ["treat"]},
        {"text": "no outcome", "treatment_vars": ["treat"]},
        "not even an object",
    ]}
    state = RunState(run_id="qgen")
    gw = gateway_returning(json.dumps(payload), state=state)
    out = generate_questions(demo_audit, demo_profile, "dev", gw, n=8)
    assert len(out) == 1
    warnings = [e for e in state.events if e.kind is EventKind.WARNING]
    assert len(warnings) == 2


def test_generation_zero_usable_raises(demo_audit, demo_profile):
    gw = gateway_returning(json.dumps({"questions": [{"text": "no vars"}]}))
    with pytest.raises(GenerationError):
        generate_questions(demo_audit, demo_profile, "dev", gw)


def test_generation_unparseable_raises(demo_audit, demo_profile):
    gw = gateway_returning("I could not think of anything today.")
    with pytest.raises(GenerationError):
        generate_questions(demo_audit, demo_profile, "dev", gw)


def test_generation_unconstrained_prompt_omits_inventory(demo_audit,
                                                         demo_profile):
    from econpilot.questions import build_generation_prompt
    aware = build_generation_prompt(demo_audit, demo_profile, "dev", 8,
                                    GenerationMode.DATASET_AWARE)
    blind = build_generation_prompt(demo_audit, demo_profile, "dev", 8,
                                    GenerationMode.UNCONSTRAINED)
    assert "savings_rate" in aware
    assert "savings_rate" not in blind


def test_screener_corpus_matches_hand_labels(demo_audit, demo_profile):
    for q, feasible, cause in build_corpus():
        report = screen(q, demo_audit, demo_profile)
        assert report.feasible == feasible, q.question_id
        assert report.first_failure() == cause, q.question_id


def test_screen_reports_missing_names(demo_audit, demo_profile):
    q = question(outcome="wage_income", treats=("educ_years",),
                 controls=("caste_group",))
    report = screen(q, demo_audit, demo_profile)
    assert report.missing_vars == ["wage_income", "caste_group"]
    assert report.tractability_score == 0.0


def test_screen_fixed_effects_needs_panel(demo_profile):
    t = make_table({"y": [1.0, 2.0, 3.0], "x": [0, 1, 0]})
    flat_audit = audit_dataset(t, "flat")
    from econpilot.profiling import profile
    flat_profile = profile(t, flat_audit)
    q = question(outcome="y", treats=("x",), design="FixedEffects")
    report = screen(q, flat_audit, flat_profile)
    assert not report.design_compatible
    assert report.first_failure() == "design"
    es = screen(question(outcome="y", treats=("x",), design="EventStudy"),
                flat_audit, flat_profile)
    assert not es.design_compatible


def test_screen_unknown_method_fails_method_not_design(demo_audit,
                                                       demo_profile):
    for design in ("IV", "RDD", "SyntheticControl"):
        q = question(design=design)
        report = screen(q, demo_audit, demo_profile)
        assert report.design_compatible
        assert not report.method_supported
        assert report.first_failure() == "method"


def test_tractability_is_completeness_product(demo_audit, demo_profile):
    q = question(outcome="savings_rate", treats=("remittances",))
    report = screen(q, demo_audit, demo_profile)
    expected = ((1 - demo_profile.missing_rate("savings_rate"))
                * (1 - demo_profile.missing_rate("remittances")))
    assert report.tractability_score == pytest.approx(expected)


def fake_report(qid, feasible=True, score=1.0):
    return FeasibilityReport(
        question_id=qid, vars_exist=feasible, missing_vars=[],
        design_compatible=True, design_reason="", method_supported=True,
        method_reason="", feasible=feasible, tractability_score=score,
    )


def test_rank_orders_feasible_first_then_original():
    cands = [
        (question("a"), fake_report("a", feasible=False)),
        (question("b"), fake_report("b", score=0.5)),
        (question("c"), fake_report("c", score=0.9)),
        (question("d"), fake_report("d", feasible=False)),
        (question("e"), fake_report("e", score=0.9)),
    ]
    ordered = rank(cands)
    assert [c[0].question_id for c in ordered] == ["c", "e", "b", "a", "d"]
    assert sorted(c[0].question_id for c in ordered) == list("abcde")


def test_rank_rejects_empty():
    with pytest.raises(ValueError):
        rank([])


def test_feasibility_stats_over_corpus(demo_audit, demo_profile):
    rnd = [(q, screen(q, demo_audit, demo_profile))
           for q, _, _ in build_corpus()]
    stats = feasibility_stats([rnd])
    assert stats.n_questions == 30
    assert stats.n_feasible == 10
    assert stats.failures == {"vars": 10, "design": 10, "method": 0}
    assert stats.share_pct == 33


def test_feasibility_stats_requires_rounds():
    with pytest.raises(ValueError):
        feasibility_stats([])


def test_question_round_trip():
    q = question(controls=("urban",), design="DiD")
    assert ResearchQuestion.from_dict(q.to_dict()) == q
    r = fake_report("q1", score=0.25)
    assert FeasibilityReport.from_dict(r.to_dict()) == r
