import json
import time

import pytest

from econpilot.estimation import SeType, Specification, estimate_ols
from econpilot.manuscript import Draft, section_presence, word_count
from econpilot.model import IntegrityError, RunState, Stage
from econpilot.persistence import (
    LoadError,
    load_run,
    persist_run,
    run_directory,
    state_from_dict,
    state_to_dict,
)
from econpilot.prep import ConstructionReport
from econpilot.questions import ResearchQuestion, screen
from econpilot.review import ReviewReport

from conftest import make_table

BODY = "\n".join(f"## {h}\n\nprose\n" for h in
                 ["Abstract", "Introduction", "Methodology", "Results",
                  "Discussion"])


def rich_state(demo_audit, demo_profile, run_id="prun0001"):
    """A run advanced to Reviewing with artifacts at every stage."""
    state = RunState(run_id=run_id)
    state.advance(Stage.AUDITING)
    state.audit = demo_audit
    state.advance(Stage.PROFILING)
    state.profile = demo_profile
    state.advance(Stage.QUESTIONING)
    q = ResearchQuestion(question_id="r1q01", text="t",
                         outcome_var="log_income",
                         treatment_vars=["educ_years"],
                         control_vars=["urban"])
    state.candidates.append([(q, screen(q, demo_audit, demo_profile))])
    state.advance(Stage.AWAITING_QUESTION_GATE)
    state.selected_question = "r1q01"
    state.advance(Stage.COLLECTING)
    report = ConstructionReport(initial_rows=1280)
    report.add("listwise_deletion", "log_income", 1280)
    state.sample_report = report
    state.advance(Stage.ANALYZING)
    t = make_table({"x": [1.0, 2.0, 3.0, 1.5, 0.5, 2.5],
                    "y": [2.1, 4.0, 5.8, 3.2, 1.1, 4.9]})
    spec = Specification(design="OLS", outcome="y", regressors=["x"],
                         se_type=SeType.HC1)
    state.analyses = [estimate_ols(t, spec)]
    state.advance(Stage.WRITING)
    state.drafts = [Draft(version=1, body=BODY,
                          word_count=word_count(BODY),
                          sections=section_presence(BODY))]
    state.advance(Stage.CRITIQUING)
    state.advance(Stage.REVIEWING)
    state.reviews = [ReviewReport(
        draft_version=1,
        scores={"novelty": 5.0, "identification": 5.5, "data_quality": 6.0,
                "clarity": 5.0, "policy_relevance": 5.5},
        overall=5.4)]
    state.cost.add("question_agent", 1200, 300, 3, 15)
    return state


def test_persist_writes_full_layout(tmp_path, demo_audit, demo_profile):
    state = rich_state(demo_audit, demo_profile)
    run_dir = persist_run(state, tmp_path)
    assert run_dir == run_directory(tmp_path, state.run_id)
    assert (run_dir / "state.json").exists()
    assert (run_dir / "events.log").exists()
    assert (run_dir / "drafts" / "draft_v1.md").read_text() == BODY
    assert (run_dir / "reviews" / "review_v1.json").exists()
    round_payload = json.loads(
        (run_dir / "questions" / "round_1.json").read_text())
    assert round_payload["round"] == 1
    assert round_payload["candidates"][0]["question"]["question_id"] == \
        "r1q01"
    assert (run_dir / "analysis" / "sample_report.json").exists()
    assert (run_dir / "analysis" / "table_1.csv").exists()


def test_events_log_is_line_delimited_json(tmp_path, demo_audit,
                                           demo_profile):
    state = rich_state(demo_audit, demo_profile)
    run_dir = persist_run(state, tmp_path)
    lines = (run_dir / "events.log").read_text().splitlines()
    assert len(lines) == len(state.events)
    for line in lines:
        json.loads(line)


def test_load_round_trip(tmp_path, demo_audit, demo_profile):
    state = rich_state(demo_audit, demo_profile)
    run_dir = persist_run(state, tmp_path)
    loaded = load_run(run_dir)
    assert state_to_dict(loaded) == state_to_dict(state)
    assert loaded.stage is Stage.REVIEWING
    assert loaded.latest_overall_score() == pytest.approx(5.4)


def test_persist_load_persist_is_byte_identical(tmp_path, demo_audit,
                                                demo_profile):
    state = rich_state(demo_audit, demo_profile)
    dir_a = persist_run(state, tmp_path / "a")
    loaded = load_run(dir_a)
    dir_b = persist_run(loaded, tmp_path / "b")
    files_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*")
                     if p.is_file())
    files_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*")
                     if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (dir_a / rel).read_bytes() == (dir_b / rel).read_bytes(), rel


def test_repersist_unchanged_state_rewrites_nothing(tmp_path, demo_audit,
                                                    demo_profile):
    state = rich_state(demo_audit, demo_profile)
    run_dir = persist_run(state, tmp_path)
    stamps = {p: p.stat().st_mtime_ns for p in run_dir.rglob("*")
              if p.is_file() and p.suffix != ".csv"}
    time.sleep(0.02)
    persist_run(state, tmp_path)
    for p, stamp in stamps.items():
        assert p.stat().st_mtime_ns == stamp, p


def test_persist_refuses_invalid_state(tmp_path, demo_audit, demo_profile):
    state = rich_state(demo_audit, demo_profile)
    state.stage = Stage.WRITING  # bypasses advance, breaks replay
    with pytest.raises(IntegrityError):
        persist_run(state, tmp_path)
    assert not run_directory(tmp_path, state.run_id).exists()


def test_load_missing_directory(tmp_path):
    with pytest.raises(LoadError):
        load_run(tmp_path / "no_such_run")


def test_load_corrupt_state_json(tmp_path, demo_audit, demo_profile):
    run_dir = persist_run(rich_state(demo_audit, demo_profile), tmp_path)
    state_path = run_dir / "state.json"
    state_path.write_text(state_path.read_text()[:100])
    with pytest.raises(LoadError):
        load_run(run_dir)


def test_load_rejects_unknown_schema_version(tmp_path, demo_audit,
                                             demo_profile):
    run_dir = persist_run(rich_state(demo_audit, demo_profile), tmp_path)
    payload = json.loads((run_dir / "state.json").read_text())
    payload["schema_version"] = 99
    (run_dir / "state.json").write_text(json.dumps(payload))
    with pytest.raises(LoadError):
        load_run(run_dir)


def test_load_detects_truncated_event_log(tmp_path, demo_audit,
                                          demo_profile):
    run_dir = persist_run(rich_state(demo_audit, demo_profile), tmp_path)
    log = run_dir / "events.log"
    lines = log.read_text().splitlines()
    log.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(LoadError):
        load_run(run_dir)


def test_load_detects_corrupt_event_line(tmp_path, demo_audit, demo_profile):
    run_dir = persist_run(rich_state(demo_audit, demo_profile), tmp_path)
    log = run_dir / "events.log"
    lines = log.read_text().splitlines()
    lines[2] = "{not json"
    log.write_text("\n".join(lines) + "\n")
    with pytest.raises(LoadError) as err:
        load_run(run_dir)
    assert "line 3" in str(err.value)


def test_load_detects_stage_replay_mismatch(tmp_path, demo_audit,
                                            demo_profile):
    run_dir = persist_run(rich_state(demo_audit, demo_profile), tmp_path)
    payload = json.loads((run_dir / "state.json").read_text())
    payload["stage"] = "Writing"
    (run_dir / "state.json").write_text(json.dumps(payload))
    with pytest.raises(IntegrityError):
        load_run(run_dir)


def test_state_dict_round_trip_without_files(demo_audit, demo_profile):
    state = rich_state(demo_audit, demo_profile)
    again = state_from_dict(state_to_dict(state))
    assert state_to_dict(again) == state_to_dict(state)
    again.validate()
