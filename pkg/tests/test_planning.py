import json

import pytest

from econpilot.estimation import SeType
from econpilot.llm import Gateway, ScriptFixture, ScriptedBackend
from econpilot.planning import (
    AnalysisPlan,
    PlanValidationError,
    baseline_specification,
    plan,
)
from econpilot.questions import ResearchQuestion
from econpilot.review import RequestKind, RevisionRequest


def question(design="OLS", outcome="log_income", treats=("educ_years",),
             controls=("urban", "hh_size")):
    return ResearchQuestion(
        question_id="q1", text="t", outcome_var=outcome,
        treatment_vars=list(treats), control_vars=list(controls),
        design=design,
    )


def robustness(text):
    return RevisionRequest(kind=RequestKind.ROBUSTNESS_CHECK, text=text)


def plan_gateway(payload):
    backend = ScriptedBackend(ScriptFixture.from_dicts(
        [{"role": "RevisionPlan", "text": json.dumps(payload)}]))
    return Gateway(backend)


def test_baseline_ols(demo_audit):
    spec = baseline_specification(question(), demo_audit)
    assert spec.design == "OLS"
    assert spec.regressors == ["educ_years", "urban", "hh_size"]
    assert spec.se_type is SeType.HC1
    assert spec.entity_var == "hh_id" and spec.time_var == "wave"


def test_baseline_fixed_effects_clusters_on_entity(demo_audit):
    spec = baseline_specification(question(design="FixedEffects"),
                                  demo_audit)
    assert spec.fixed_effects == ["Entity", "Time"]
    assert spec.se_type is SeType.CLUSTER_ROBUST
    assert spec.cluster_var == "hh_id"


def test_baseline_did_maps_indicators(demo_audit):
    q = question(design="DiD", outcome="savings_rate",
                 treats=("treat", "post"), controls=("urban",))
    spec = baseline_specification(q, demo_audit)
    assert spec.did_fields.treat_var == "treat"
    assert spec.did_fields.post_var == "post"
    assert spec.regressors == ["urban"]
    with pytest.raises(PlanValidationError):
        baseline_specification(
            question(design="DiD", treats=("treat",)), demo_audit)


def test_baseline_event_study_window(demo_audit):
    q = question(design="EventStudy", treats=("event_time",), controls=())
    spec = baseline_specification(q, demo_audit)
    assert spec.event_fields.event_time_var == "event_time"
    assert spec.event_fields.leads == 2 and spec.event_fields.lags == 2
    assert spec.fixed_effects == ["Entity", "Time"]


def test_plan_without_revisions_is_single_baseline(demo_audit, demo_profile):
    result = plan(question(), demo_audit, demo_profile)
    assert len(result.specifications) == 1
    assert result.primary.label == "baseline"


def test_plan_ignores_prose_requests(demo_audit, demo_profile):
    requests = [RevisionRequest(kind=RequestKind.EXPOSITION,
                                text="tighten the abstract"),
                RevisionRequest(kind=RequestKind.VARIABLE_DESCRIPTION,
                                text="describe savings_rate")]
    result = plan(question(), demo_audit, demo_profile,
                  revision_requests=requests)
    assert len(result.specifications) == 1


def test_mechanical_event_study_upgrade(demo_audit, demo_profile):
    q = question(design="FixedEffects", outcome="log_income",
                 treats=("treat",), controls=())
    result = plan(q, demo_audit, demo_profile,
                  revision_requests=[robustness(
                      "please add an event-study specification")])
    assert len(result.specifications) == 2
    added = result.specifications[1]
    assert added.design == "EventStudy"
    assert added.event_fields.event_time_var == "event_time"


def test_mechanical_added_control(demo_audit, demo_profile):
    result = plan(question(controls=("urban",)), demo_audit, demo_profile,
                  revision_requests=[robustness(
                      "control for household size using hh_size")])
    added = result.specifications[1]
    assert added.regressors == ["educ_years", "urban", "hh_size"]
    assert added.label.startswith("robustness")


def test_mechanical_drop_controls_fallback(demo_audit, demo_profile):
    result = plan(question(), demo_audit, demo_profile,
                  revision_requests=[robustness(
                      "try a leaner specification")])
    added = result.specifications[1]
    assert added.regressors == ["educ_years"]
    assert added.label == "robustness: no controls"


def test_request_with_unknown_backticked_variable(demo_audit, demo_profile):
    with pytest.raises(PlanValidationError):
        plan(question(), demo_audit, demo_profile,
             revision_requests=[robustness("control for `caste_group`")])


def test_model_proposed_specifications(demo_audit, demo_profile):
    payload = {"additional_specifications": [
        {"regressors": ["educ_years", "urban", "hh_size", "female_head"],
         "label": "robustness: add female_head"},
    ]}
    result = plan(question(), demo_audit, demo_profile,
                  revision_requests=[robustness("add `female_head`")],
                  gateway=plan_gateway(payload))
    assert len(result.specifications) == 2
    added = result.specifications[1]
    assert "female_head" in added.regressors
    assert added.design == "OLS"  # inherits the baseline design


def test_model_proposed_unknown_variable_rejected(demo_audit, demo_profile):
    payload = {"additional_specifications": [
        {"regressors": ["educ_years", "not_a_column"]},
    ]}
    with pytest.raises(PlanValidationError):
        plan(question(), demo_audit, demo_profile,
             revision_requests=[robustness("add a control")],
             gateway=plan_gateway(payload))


def test_model_proposed_invalid_design_rejected(demo_audit, demo_profile):
    payload = {"additional_specifications": [
        {"design": "DiD", "did_fields": None},
    ]}
    with pytest.raises(PlanValidationError):
        plan(question(), demo_audit, demo_profile,
             revision_requests=[robustness("switch design")],
             gateway=plan_gateway(payload))


def test_plan_validation_invariants(demo_audit):
    with pytest.raises(PlanValidationError):
        AnalysisPlan(specifications=[]).validate()
    spec = baseline_specification(question(), demo_audit)
    with pytest.raises(PlanValidationError):
        AnalysisPlan(specifications=[spec], primary_index=3).validate()
    ghost = baseline_specification(
        question(outcome="log_income", treats=("educ_years",),
                 controls=()), demo_audit)
    ghost.regressors = ["not_here"]
    with pytest.raises(PlanValidationError):
        AnalysisPlan(specifications=[ghost]).validate(demo_audit)


def test_plan_round_trip(demo_audit, demo_profile):
    result = plan(question(design="DiD", treats=("treat", "post"),
                           controls=("urban",)),
                  demo_audit, demo_profile)
    again = AnalysisPlan.from_dict(result.to_dict())
    assert again.to_dict() == result.to_dict()
