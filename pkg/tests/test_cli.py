import re
import subprocess
import sys
from pathlib import Path

import pytest

from econpilot.cli import (
    EXIT_HALTED,
    EXIT_OK,
    EXIT_REJECTED,
    EXIT_USAGE,
    main,
)
from econpilot.persistence import load_run


@pytest.fixture()
def scripted_stdin(monkeypatch):
    def feed(*lines):
        pending = list(lines)

        def fake_input(prompt=""):
            if not pending:
                raise EOFError
            return pending.pop(0)

        monkeypatch.setattr("builtins.input", fake_input)
    return feed


def run_args(demo_paths, out, fixture="happy_path", *extra):
    return ["run",
            "--dataset", str(demo_paths["csv"]),
            "--meta", str(demo_paths["meta"]),
            "--llm", "scripted:" + str(demo_paths["fixtures"]
                                       / f"{fixture}.json"),
            "--out", str(out), *extra]


def artifacts_dir(output):
    match = re.search(r"artifacts: (.+)", output)
    assert match, output
    return Path(match.group(1).strip())


def test_headless_run_exits_zero(demo_paths, tmp_path, capsys):
    rc = main(run_args(demo_paths, tmp_path))
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "Completed" in out
    assert "cost: 138705 micro-dollars (12 calls)" in out


def test_headless_select_id_flag(demo_paths, tmp_path, capsys):
    rc = main(run_args(demo_paths, tmp_path) + ["--select-id", "r1q03"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    state = load_run(artifacts_dir(out))
    assert state.selected_question == "r1q03"


def test_halting_fixture_exits_two(demo_paths, tmp_path, capsys):
    rc = main(run_args(demo_paths, tmp_path, "halting")
              + ["--select-id", "r1q01"])
    out = capsys.readouterr().out
    assert rc == EXIT_HALTED
    assert "Halted" in out


def test_unreadable_dataset_halts(demo_paths, tmp_path, capsys):
    argv = run_args(demo_paths, tmp_path)
    argv[argv.index("--dataset") + 1] = str(tmp_path / "absent.csv")
    rc = main(argv)
    assert rc == EXIT_HALTED


def test_interactive_select_then_approve(demo_paths, tmp_path, capsys,
                                         scripted_stdin):
    scripted_stdin("select r1q01", "approve")
    rc = main(run_args(demo_paths, tmp_path) + ["--mode", "interactive"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "[r1q01]" in out
    assert "INFEASIBLE" in out  # the one infeasible candidate stays visible
    assert "review trajectory:" in out
    assert "v3: overall 6.30 (Accept)" in out
    assert "Completed" in out


def test_interactive_reject_exits_three(demo_paths, tmp_path, capsys,
                                        scripted_stdin):
    scripted_stdin("select r1q01", "reject needs a robustness appendix")
    rc = main(run_args(demo_paths, tmp_path) + ["--mode", "interactive"])
    assert rc == EXIT_REJECTED
    assert "Rejected" in capsys.readouterr().out


def test_interactive_regenerate_renders_second_round(demo_paths, tmp_path,
                                                     capsys, scripted_stdin):
    scripted_stdin("regenerate focus on savings behaviour",
                   "select r2q01", "approve")
    rc = main(run_args(demo_paths, tmp_path) + ["--mode", "interactive"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "round 2:" in out
    assert "[r2q01]" in out


def test_interactive_bad_input_reprompts(demo_paths, tmp_path, capsys,
                                         scripted_stdin):
    scripted_stdin("frobnicate", "select r9q99", "select r1q01", "approve")
    rc = main(run_args(demo_paths, tmp_path) + ["--mode", "interactive"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "unrecognized input" in out
    assert "rejected: no candidate with id 'r9q99'" in out


def test_interactive_stdin_eof_exits_usage(demo_paths, tmp_path, capsys,
                                           scripted_stdin):
    scripted_stdin()
    rc = main(run_args(demo_paths, tmp_path) + ["--mode", "interactive"])
    err = capsys.readouterr().err
    assert rc == EXIT_USAGE
    assert "stdin closed" in err


def test_no_command_prints_usage(capsys):
    assert main([]) == EXIT_USAGE
    assert "usage:" in capsys.readouterr().err


def test_missing_dataset_flag_exits_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == EXIT_USAGE


def test_unknown_command_exits_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["transmogrify"])
    assert exc.value.code == EXIT_USAGE


def test_bad_backend_selector_exits_usage(demo_paths, tmp_path, capsys):
    argv = run_args(demo_paths, tmp_path)
    argv[argv.index("--llm") + 1] = "warp"
    rc = main(argv)
    assert rc == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_profile_renders_inventory(demo_paths, demo_audit, capsys):
    rc = main(["profile", "--dataset", str(demo_paths["csv"]),
               "--meta", str(demo_paths["meta"])])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert f"{demo_audit.n_rows} rows x {demo_audit.n_cols} columns" in out
    assert "panel: entity=hh_id time=wave" in out
    for info in demo_audit.variables:
        assert info.name in out
    assert "note:" in out


def test_profile_missing_file_exits_usage(tmp_path, capsys):
    rc = main(["profile", "--dataset", str(tmp_path / "absent.csv")])
    assert rc == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_ablation_subcommand(demo_paths, tmp_path, capsys):
    rc = main(["ablation",
               "--dataset", str(demo_paths["csv"]),
               "--meta", str(demo_paths["meta"]),
               "--fixture-a", str(demo_paths["fixtures"]
                                  / "ablation_aware.json"),
               "--fixture-b", str(demo_paths["fixtures"]
                                  / "ablation_unconstrained.json"),
               "--n-questions", "100",
               "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "87%" in out and "41%" in out
    assert (tmp_path / "ablation.json").exists()
    assert (tmp_path / "ablation.txt").exists()


def test_console_entry_point(demo_paths, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "econpilot.cli", "profile",
         "--dataset", str(demo_paths["csv"])],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == EXIT_OK
    assert "rows x" in proc.stdout
