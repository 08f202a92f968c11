"""Command-line entry points: run a pipeline, profile a dataset, compare
generation modes, or serve the HTTP gateway.

Exit codes: 0 completed/approved, 2 halted, 3 rejected, 64 bad usage.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional, Sequence

from .dataset import load_dataset
from .llm import make_backend
from .model import (
    GateAction,
    GateDecision,
    GateKind,
    Stage,
    utcnow,
)
from .orchestrator import (
    GateStateError,
    HeadlessPolicy,
    RunConfig,
    Runner,
    UnknownCandidateError,
    run_ablation,
)
from .profiling import profile as profile_dataset
from .questions import GenerationMode

EXIT_OK = 0
EXIT_HALTED = 2
EXIT_REJECTED = 3
EXIT_USAGE = 64

_GENERATION = {"aware": GenerationMode.DATASET_AWARE,
               "unconstrained": GenerationMode.UNCONSTRAINED}


class _Parser(argparse.ArgumentParser):
    """argparse's default exit code for usage errors is 2; we reserve 2
    for halted runs, so usage problems exit 64 instead."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="econpilot",
                     description="dataset-grounded empirical-paper pipeline")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run_p = sub.add_parser("run", help="execute a full pipeline run")
    run_p.add_argument("--dataset", required=True)
    run_p.add_argument("--meta", default=None)
    run_p.add_argument("--domain", default="general economics")
    run_p.add_argument("--n-questions", type=int, default=8)
    run_p.add_argument("--mode", choices=("interactive", "headless"),
                       default="headless")
    run_p.add_argument("--llm", default="live",
                       help="live or scripted:<fixture.json>")
    run_p.add_argument("--generation", choices=tuple(_GENERATION),
                       default="aware")
    run_p.add_argument("--select-id", default=None,
                       help="headless: pick this question id instead of the "
                            "top-ranked feasible one")
    run_p.add_argument("--out", default="runs")

    prof_p = sub.add_parser("profile", help="audit and profile a dataset")
    prof_p.add_argument("--dataset", required=True)
    prof_p.add_argument("--meta", default=None)

    abl_p = sub.add_parser("ablation",
                           help="compare dataset-aware vs unconstrained "
                                "question generation")
    abl_p.add_argument("--dataset", required=True)
    abl_p.add_argument("--meta", default=None)
    abl_p.add_argument("--fixture-a", required=True,
                       help="scripted fixture for the dataset-aware arm")
    abl_p.add_argument("--fixture-b", required=True,
                       help="scripted fixture for the unconstrained arm")
    abl_p.add_argument("--domain", default="general economics")
    abl_p.add_argument("--n-questions", type=int, default=8)
    abl_p.add_argument("--rounds", type=int, default=1)
    abl_p.add_argument("--out", default="runs")

    serve_p = sub.add_parser("serve", help="serve the HTTP gateway")
    serve_p.add_argument("--bind", default="127.0.0.1:8723")
    serve_p.add_argument("--out", default="runs")
    return parser


# -- interactive terminal gates -------------------------------------------


def _render_candidates(snapshot: dict) -> None:
    rounds = snapshot["candidates"]
    for round_no, rnd in enumerate(rounds, start=1):
        print(f"\nround {round_no}:")
        for entry in rnd:
            q, r = entry["question"], entry["report"]
            flag = "feasible  " if r["feasible"] else "INFEASIBLE"
            print(f"  [{q['question_id']}] {flag} "
                  f"tractability={r['tractability_score']:.2f} "
                  f"design={q['design']}")
            print(f"      {q['text']}")
            if r["missing_vars"]:
                print(f"      missing: {', '.join(r['missing_vars'])}")


def _render_reviews(snapshot: dict) -> None:
    print("\nreview trajectory:")
    for rev in snapshot["reviews"]:
        print(f"  v{rev['draft_version']}: overall {rev['overall']:.2f} "
              f"({rev['verdict']})")
    drafts = snapshot["drafts"]
    if drafts:
        latest = drafts[-1]
        print(f"latest draft v{latest['version']}: "
              f"{latest['word_count']} words")


def _prompt_question_gate(runner: Runner) -> None:
    _render_candidates(runner.snapshot())
    while True:
        line = input("gate> select <id> | regenerate <constraint>: ").strip()
        if line.startswith("select "):
            decision = GateDecision(
                gate=GateKind.QUESTION_SELECTION, action=GateAction.SELECT,
                decided_by="terminal", decided_at=utcnow(),
                question_id=line[len("select "):].strip())
        elif line.startswith("regenerate "):
            decision = GateDecision(
                gate=GateKind.QUESTION_SELECTION,
                action=GateAction.REGENERATE,
                decided_by="terminal", decided_at=utcnow(),
                constraint_text=line[len("regenerate "):].strip())
        else:
            print("unrecognized input")
            continue
        try:
            runner.decide_gate(decision)
            return
        except (GateStateError, UnknownCandidateError) as exc:
            print(f"rejected: {exc}")


def _prompt_publication_gate(runner: Runner) -> None:
    _render_reviews(runner.snapshot())
    while True:
        line = input("gate> approve | reject <reason>: ").strip()
        if line == "approve":
            decision = GateDecision(
                gate=GateKind.PUBLICATION_APPROVAL, action=GateAction.APPROVE,
                decided_by="terminal", decided_at=utcnow())
        elif line.startswith("reject "):
            decision = GateDecision(
                gate=GateKind.PUBLICATION_APPROVAL, action=GateAction.REJECT,
                decided_by="terminal", decided_at=utcnow(),
                reason_text=line[len("reject "):].strip())
        else:
            print("unrecognized input")
            continue
        try:
            runner.decide_gate(decision)
            return
        except GateStateError as exc:
            print(f"rejected: {exc}")


_TERMINAL = {Stage.COMPLETED, Stage.HALTED, Stage.REJECTED}


def _interactive_run(runner: Runner) -> Stage:
    runner.start()
    handled: set[tuple[str, int]] = set()
    while True:
        snapshot = runner.snapshot()
        stage = Stage(snapshot["stage"])
        if stage in _TERMINAL:
            runner.join(5.0)
            return stage
        if stage is Stage.AWAITING_QUESTION_GATE:
            key = ("question", snapshot["question_round"])
            if key not in handled:
                handled.add(key)
                _prompt_question_gate(runner)
        elif stage is Stage.AWAITING_PUBLICATION_GATE:
            key = ("publication", snapshot["revision_iteration"])
            if key not in handled:
                handled.add(key)
                _prompt_publication_gate(runner)
        time.sleep(0.05)


# -- subcommands -----------------------------------------------------------


def _cmd_run(args: argparse.Namespace) -> int:
    interactive = args.mode == "interactive"
    policy = None
    if not interactive:
        policy = (HeadlessPolicy("SelectById", args.select_id)
                  if args.select_id else HeadlessPolicy("SelectTopRanked"))
    try:
        config = RunConfig(
            dataset_path=args.dataset, meta_path=args.meta,
            domain=args.domain, n_questions=args.n_questions,
            interactive=interactive, policy=policy,
            generation_mode=_GENERATION[args.generation],
            backend_spec=args.llm, output_root=args.out)
        runner = Runner(config, backend=make_backend(args.llm))
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"econpilot: error: {exc}\n")
        return EXIT_USAGE

    if interactive:
        try:
            stage = _interactive_run(runner)
        except EOFError:
            sys.stderr.write("econpilot: error: stdin closed while a gate "
                             "was awaiting a decision\n")
            return EXIT_USAGE
    else:
        stage = runner.execute().stage
    state = runner.state
    print(f"\nrun {state.run_id}: {stage.value}")
    print(f"artifacts: {runner.run_dir}")
    print(f"cost: {state.cost.total_micro} micro-dollars "
          f"({len(state.cost.entries)} calls)")
    if stage is Stage.HALTED:
        return EXIT_HALTED
    if stage is Stage.REJECTED:
        return EXIT_REJECTED
    return EXIT_OK


def _cmd_profile(args: argparse.Namespace) -> int:
    try:
        table, audit = load_dataset(args.dataset, args.meta)
        data_profile = profile_dataset(table, audit)
    except Exception as exc:
        sys.stderr.write(f"econpilot: error: {exc}\n")
        return EXIT_USAGE
    print(f"dataset {audit.dataset_id}: {audit.n_rows} rows x "
          f"{audit.n_cols} columns")
    if audit.panel_structure:
        p = audit.panel_structure
        print(f"panel: entity={p.entity_var} time={p.time_var} "
              f"({p.n_entities} entities, {len(p.waves)} waves)")
    print(f"{'variable':<24} {'kind':<12} {'missing':>8} "
          f"{'distinct':>9} {'mean':>12} {'sd':>12}")
    for vp in data_profile.variable_profiles:
        info = audit.variable(vp.name)
        kind = info.dtype.value if info else "?"
        mean = f"{vp.mean:.4g}" if vp.mean is not None else "-"
        sd = f"{vp.sd:.4g}" if vp.sd is not None else "-"
        print(f"{vp.name:<24} {kind:<12} {vp.missing_rate:>7.1%} "
              f"{vp.n_distinct:>9} {mean:>12} {sd:>12}")
    for note in data_profile.notes:
        print(f"note: {note}")
    return EXIT_OK


def _cmd_ablation(args: argparse.Namespace) -> int:
    def arm(fixture: str, mode: GenerationMode) -> RunConfig:
        return RunConfig(
            dataset_path=args.dataset, meta_path=args.meta,
            domain=args.domain, n_questions=args.n_questions,
            interactive=False, policy=HeadlessPolicy("SelectTopRanked"),
            generation_mode=mode, backend_spec=f"scripted:{fixture}",
            output_root=args.out)

    report = run_ablation(arm(args.fixture_a, GenerationMode.DATASET_AWARE),
                          arm(args.fixture_b, GenerationMode.UNCONSTRAINED),
                          rounds=args.rounds, output_root=args.out)
    print(report.render())
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .api import serve

    serve(args.bind, args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handlers = {"run": _cmd_run, "profile": _cmd_profile,
                "ablation": _cmd_ablation, "serve": _cmd_serve}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
