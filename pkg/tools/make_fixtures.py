"""Regenerates the scripted-backend fixtures in fixtures/.

happy_path.json   full pipeline on the demo panel: 8 candidates (7 feasible),
                  three review rounds crossing the accept threshold at v3,
                  one major critique forcing a redraft, one robustness
                  revision. A second question round is included for
                  regenerate-then-select sessions.
halting.json      top-ranked candidate is a fixed-effects question on a
                  time-invariant regressor, so estimation fails and the run
                  halts before any draft exists.
ablation_aware.json / ablation_unconstrained.json
                  single large generation rounds sized 79 and 82 with
                  labeled feasibility mix (69 and 34 feasible).
"""

from __future__ import annotations

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"


def q(text, outcome, treatments, controls=(), design="OLS", domain="labor",
      rationale=""):
    return {
        "text": text,
        "outcome_var": outcome,
        "treatment_vars": list(treatments),
        "control_vars": list(controls),
        "design": design,
        "domain_tag": domain,
        "rationale": rationale,
    }


def question_payload(items):
    body = json.dumps({"questions": items}, indent=2)
    return ("Candidate research questions grounded in the variable "
            "inventory follow.\n\n```json\n" + body + "\n```\n")


ROUND_1 = [
    q("Does the schooling of the household head raise per-capita income?",
      "log_income", ["educ_years"], ["hh_size", "urban"],
      rationale="schooling and income are complete, well-spread columns"),
    q("Does household size depress per-capita income within households?",
      "log_income", ["hh_size"], ["urban"], design="FixedEffects",
      rationale="household size varies across waves"),
    q("Did the program rollout raise household savings rates?",
      "savings_rate", ["treat", "post"], design="DiD", domain="development",
      rationale="binary rollout group and a wave-3 adoption point"),
    q("How does income evolve around program adoption?",
      "log_income", ["event_time"], design="EventStudy", domain="development",
      rationale="adoption timing gives event time for treated households"),
    q("Do remittances improve the health of the household head?",
      "health_score", ["remittances"], ["educ_years"], domain="health",
      rationale="remittances have moderate missingness but good spread"),
    q("Does firm size increase household income?",
      "log_income", ["firm_size"], domain="labor",
      rationale="firm linkage would capture employer scale effects"),
    q("Is urban residence associated with higher savings?",
      "savings_rate", ["urban"], ["female_head"],
      rationale="urban indicator is complete"),
    q("Does moving to a city improve the head's health?",
      "health_score", ["urban"], ["hh_size"], design="FixedEffects",
      domain="health", rationale="urban status changes for some households"),
]

ROUND_2 = [
    q("Does head schooling raise per-capita income conditional on "
      "demographics?", "log_income", ["educ_years"],
      ["hh_size", "urban", "female_head"], domain="education"),
    q("Does head schooling predict better self-reported health?",
      "health_score", ["educ_years"], ["urban"], domain="education"),
    q("Do more educated heads save a larger share of income?",
      "savings_rate", ["educ_years"], ["hh_size"], domain="education"),
    q("Does schooling raise income within households over time?",
      "log_income", ["educ_years"], design="FixedEffects",
      domain="education"),
    q("Is the schooling premium different in urban areas?",
      "log_income", ["educ_years"], ["urban"], domain="education"),
    q("Does schooling of the head offset the income cost of larger "
      "households?", "log_income", ["educ_years"], ["hh_size"],
      domain="education"),
    q("Did the program raise savings for households with educated heads?",
      "savings_rate", ["treat", "post"], ["educ_years"], design="DiD",
      domain="education"),
    q("Does education correlate with remittance receipts?",
      "remittances", ["educ_years"], ["urban"], domain="education"),
]


DRAFT_V1 = """# Schooling and Household Income in a Four-Wave Panel

## Abstract
We ask whether the schooling of the household head predicts per-capita
income in a panel of 320 households observed over four survey waves. The
baseline estimates show a positive association between years of schooling
and log income, conditional on household size and urban residence. The full
estimates appear in Table 1.

## Introduction
Human capital is a central determinant of household welfare. This draft
asks a narrow question: do households headed by more educated individuals
earn higher per-capita income? The panel tracks 320 households across four
waves and records schooling, demographic composition, and residence.

## Empirical Strategy
The baseline specification regresses log per-capita income on years of
schooling of the head, controlling for household size and urban residence.
Standard errors are heteroskedasticity-robust. Table 1 reports coefficient
estimates with standard errors and confidence intervals.

## Results
The schooling coefficient in Table 1 is positive and precisely estimated.
Household size enters negatively and urban residence positively. The sample
covers every household-wave observation with complete records on the
analysis variables.

## Discussion
The pattern is consistent with returns to schooling, though the design does
not isolate exogenous variation in schooling, so the estimate is read as
descriptive rather than causal.
"""

DRAFT_V1_REVISED = """# Schooling and Household Income in a Four-Wave Panel

## Abstract
We ask whether the schooling of the household head predicts per-capita
income in a panel of 320 households observed over four survey waves. The
estimates show a positive conditional association, reported in Table 1; we
make no causal claim.

## Introduction
Human capital is a central determinant of household welfare. This draft
asks a narrow question: do households headed by more educated individuals
earn higher per-capita income? The panel tracks 320 households across four
waves and records schooling, demographic composition, and residence.

## Empirical Strategy
The baseline specification regresses log per-capita income on years of
schooling of the head, controlling for household size and urban residence.
Standard errors are heteroskedasticity-robust. Table 1 reports coefficient
estimates with standard errors and confidence intervals.

## Results
Table 1 answers the question directly: the schooling coefficient is
positive and precisely estimated, so more educated heads preside over
higher per-capita income even after conditioning on household size and
urban residence. Household size enters negatively and urban residence
positively, both in line with the descriptive statistics.

## Discussion
The association survives the demographic controls but the design does not
isolate exogenous variation in schooling. We therefore read Table 1 as a
conditional correlation and flag identification as the main open issue.
"""

DRAFT_V2 = """# Schooling and Household Income in a Four-Wave Panel

## Abstract
We ask whether the schooling of the household head predicts per-capita
income in a panel of 320 households observed over four survey waves. The
baseline estimates in Table 1 show a positive conditional association, and
the robustness estimates in Table 2 show the coefficient is stable when
female headship is added as a control.

## Introduction
Human capital is a central determinant of household welfare. This draft
asks whether households headed by more educated individuals earn higher
per-capita income. The panel tracks 320 households across four waves and
records schooling, demographic composition, headship, and residence.

## Empirical Strategy
The baseline specification regresses log per-capita income on years of
schooling of the head, controlling for household size and urban residence,
with heteroskedasticity-robust standard errors (Table 1). Following the
reviewer's request, Table 2 re-estimates the baseline adding an indicator
for female headship of the household. The analytic sample keeps every
household-wave observation with complete records on the analysis
variables; no rows are lost to missing data in these columns.

## Results
Table 1 answers the question directly: the schooling coefficient is
positive and precisely estimated. Table 2 shows the coefficient is nearly
unchanged when female headship enters the regression, so the association
is not an artifact of headship composition. Household size enters
negatively and urban residence positively in both tables.

## Discussion
The association is robust to the headship control but the design still
does not isolate exogenous variation in schooling. We read the estimates
as conditional correlations and discuss identification as future work.
"""

DRAFT_V3 = """# Schooling and Household Income in a Four-Wave Panel

## Abstract
We ask whether the schooling of the household head predicts per-capita
income in a panel of 320 households observed over four survey waves. The
baseline estimates in Table 1 show a positive conditional association, and
Table 2 shows the coefficient is stable when female headship is added as a
control. The magnitude is economically meaningful relative to the spread
of log income in the sample.

## Introduction
Human capital is a central determinant of household welfare. This draft
asks whether households headed by more educated individuals earn higher
per-capita income. The panel tracks 320 households across four waves and
records schooling, demographic composition, headship, and residence.

## Empirical Strategy
The baseline specification regresses log per-capita income on years of
schooling of the head, controlling for household size and urban residence,
with heteroskedasticity-robust standard errors (Table 1). Table 2
re-estimates the baseline adding an indicator for female headship. The
analytic sample keeps every household-wave observation with complete
records on the analysis variables.

## Results
Table 1 answers the question directly: the schooling coefficient is
positive and precisely estimated, and each additional year of schooling
maps into a proportional income gain large enough to matter over a
schooling career. Table 2 shows the coefficient is nearly unchanged when
female headship enters, so the association is not an artifact of headship
composition. Household size enters negatively and urban residence
positively in both tables, consistent with crowding and urban wage premia.

## Discussion
For policy, the stable conditional association suggests that programs
raising completed schooling plausibly shift household income, though the
design does not isolate exogenous variation and the estimate should not be
used for cost-benefit arithmetic. Identification through policy variation
in school access is the natural next step.
"""


def review_payload(scores, requests):
    return json.dumps({"scores": scores, "revision_requests": requests},
                      indent=2)


def critique_payload(severity, issues):
    return json.dumps({"severity": severity, "issues": issues}, indent=2)


def happy_path():
    entries = [
        {"role": "QuestionGen", "text": question_payload(ROUND_1),
         "input_tokens": 1200, "output_tokens": 950},
        {"role": "QuestionGen", "text": question_payload(ROUND_2),
         "input_tokens": 1250, "output_tokens": 960},
        {"role": "DraftGen", "text": DRAFT_V1,
         "input_tokens": 2100, "output_tokens": 780},
        {"role": "Critique",
         "text": critique_payload("Major", [
             "Results section does not connect the estimates back to the "
             "research question",
             "Abstract implies a causal reading the design cannot support",
         ]),
         "input_tokens": 900, "output_tokens": 140},
        {"role": "DraftGen", "text": DRAFT_V1_REVISED,
         "input_tokens": 2300, "output_tokens": 800},
        {"role": "Review",
         "text": review_payload(
             {"novelty": 5.2, "identification": 4.1, "data_quality": 5.4,
              "clarity": 4.3, "policy_relevance": 5.1},
             [{"kind": "RobustnessCheck",
               "text": "Re-estimate the baseline controlling for "
                       "`female_head` to rule out headship composition."},
              {"kind": "Exposition",
               "text": "State explicitly how the analytic sample is "
                       "constructed."}]),
         "input_tokens": 1800, "output_tokens": 260},
        {"role": "RevisionPlan",
         "text": json.dumps({"additional_specifications": [
             {"regressors": ["educ_years", "hh_size", "urban",
                             "female_head"],
              "label": "robustness: control for female headship"}]},
             indent=2),
         "input_tokens": 700, "output_tokens": 120},
        {"role": "DraftGen", "text": DRAFT_V2,
         "input_tokens": 2400, "output_tokens": 810},
        {"role": "Critique",
         "text": critique_payload("Minor", [
             "Discussion could speak to magnitudes",
         ]),
         "input_tokens": 950, "output_tokens": 90},
        {"role": "Review",
         "text": review_payload(
             {"novelty": 6.1, "identification": 5.4, "data_quality": 6.3,
              "clarity": 5.5, "policy_relevance": 6.2},
             [{"kind": "Exposition",
               "text": "Tighten the discussion of magnitudes and the "
                       "policy reading of the estimates."}]),
         "input_tokens": 1900, "output_tokens": 240},
        {"role": "DraftGen", "text": DRAFT_V3,
         "input_tokens": 2450, "output_tokens": 820},
        {"role": "Critique",
         "text": critique_payload("Minor", [
             "Minor wording repetition between Results and Discussion",
         ]),
         "input_tokens": 960, "output_tokens": 85},
        {"role": "Review",
         "text": review_payload(
             {"novelty": 6.5, "identification": 6.0, "data_quality": 6.6,
              "clarity": 6.1, "policy_relevance": 6.3},
             []),
         "input_tokens": 1950, "output_tokens": 230},
    ]
    return {"entries": entries}


HALTING_ROUND = [
    q("Does female headship change household income within households "
      "over time?", "log_income", ["female_head"], design="FixedEffects",
      rationale="headship is recorded in every wave"),
    q("Does the schooling of the household head raise per-capita income?",
      "log_income", ["educ_years"], ["urban"],
      rationale="schooling and income are complete columns"),
    q("Did the program rollout raise household savings rates?",
      "savings_rate", ["treat", "post"], design="DiD",
      rationale="binary rollout group with a wave-3 adoption point"),
]


def halting():
    return {"entries": [
        {"role": "QuestionGen", "text": question_payload(HALTING_ROUND),
         "input_tokens": 1100, "output_tokens": 400},
    ]}


OUTCOMES = ["log_income", "savings_rate", "health_score"]
TREATS = ["educ_years", "urban", "hh_size", "female_head", "remittances",
          "treat"]
CONTROL_POOL = [[], ["hh_size"], ["urban"], ["hh_size", "urban"],
                ["educ_years"]]


def _feasible_items(count, rng):
    items = []
    for i in range(count):
        outcome = OUTCOMES[i % 3]
        mode = i % 6
        if mode == 4:
            items.append(q(
                f"Did the program rollout change {outcome}?",
                outcome, ["treat", "post"], design="DiD"))
            continue
        if mode == 5:
            items.append(q(
                f"How does {outcome} evolve around program adoption?",
                outcome, ["event_time"], design="EventStudy"))
            continue
        treat = TREATS[(i * 5 + 1) % 6]
        controls = [c for c in CONTROL_POOL[i % 5]
                    if c != treat and c != outcome]
        design = "OLS" if i % 2 == 0 else "FixedEffects"
        items.append(q(
            f"Does {treat} shift {outcome} in this panel?",
            outcome, [treat], controls, design=design))
    rng.shuffle(items)
    return items


AWARE_MISSING = ["firm_size", "land_area", "pension_income",
                 "migration_status"]
UNCONSTRAINED_MISSING = [
    "firm_productivity", "county_gdp", "caste", "broadband_access",
    "minimum_wage", "province_unemployment", "credit_score",
    "crop_yield", "school_distance", "air_quality_index",
    "hukou_status", "union_membership", "insurance_enrollment",
    "migrant_network_size", "childcare_price", "hospital_beds",
    "social_capital_index", "rainfall_shock", "night_light_intensity",
    "village_road_access",
]


def _missing_var_items(names):
    return [q(f"Does {name} affect household income?",
              "log_income", [name]) for name in names]


def _design_failure_items(count):
    items = []
    for i in range(count):
        outcome = OUTCOMES[i % 3]
        if i % 2 == 0:
            # DiD needs both a treatment and a post indicator
            items.append(q(
                f"Did the program change {outcome} after adoption?",
                outcome, ["treat"], design="DiD"))
        else:
            # first DiD indicator must be binary
            items.append(q(
                f"Did schooling gains change {outcome} after adoption?",
                outcome, ["educ_years", "post"], design="DiD"))
    return items


def _method_failure_items(count):
    unsupported = ["IV", "RDD", "PSM"]
    items = []
    for i in range(count):
        outcome = OUTCOMES[i % 3]
        design = unsupported[i % 3]
        items.append(q(
            f"What is the causal effect of urban residence on {outcome}?",
            outcome, ["urban"], ["hh_size"], design=design))
    return items


def ablation_aware():
    rng = random.Random(7)
    items = (_feasible_items(69, rng) + _missing_var_items(AWARE_MISSING)
             + _design_failure_items(6))
    rng.shuffle(items)
    return {"entries": [
        {"role": "QuestionGen", "text": question_payload(items),
         "input_tokens": 2600, "output_tokens": 5200},
    ]}


def ablation_unconstrained():
    rng = random.Random(11)
    items = (_feasible_items(34, rng)
             + _missing_var_items(UNCONSTRAINED_MISSING)
             + _design_failure_items(17) + _method_failure_items(11))
    rng.shuffle(items)
    return {"entries": [
        {"role": "QuestionGen", "text": question_payload(items),
         "input_tokens": 900, "output_tokens": 5400},
    ]}


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, builder in [
        ("happy_path.json", happy_path),
        ("halting.json", halting),
        ("ablation_aware.json", ablation_aware),
        ("ablation_unconstrained.json", ablation_unconstrained),
    ]:
        path = OUT / name
        path.write_text(json.dumps(builder(), indent=2) + "\n",
                        encoding="utf-8")
        print(f"wrote {path}")
