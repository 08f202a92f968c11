"""Dataset-grounded empirical-research pipeline with human decision gates.

The package turns a CSV panel or cross-section into a reviewed manuscript
draft: audit, statistical profile, candidate research questions with
mechanical feasibility screening, a human question gate, analytic-table
construction, econometric estimation, drafting, self-critique, automated
review with a revision loop, and a human publication gate. Every LLM call
is metered and every artifact and decision is persisted to an append-only
audit trail.
"""

from .dataset import (
    AuditError,
    CsvParseError,
    DatasetAudit,
    SchemaError,
    Table,
    audit_dataset,
    load_csv,
    load_dataset,
)
from .estimation import (
    AnalysisResult,
    Coefficient,
    DidFields,
    EstimationError,
    EstimationErrorKind,
    EventFields,
    InferenceError,
    SeType,
    Specification,
    SpecificationError,
    estimate,
    estimate_did,
    estimate_event_study,
    estimate_fe,
    estimate_ols,
)
from .llm import (
    Gateway,
    GatewayError,
    LiveBackend,
    PriceTable,
    ScriptedBackend,
    make_backend,
)
from .model import (
    EventKind,
    GateAction,
    GateDecision,
    GateKind,
    IntegrityError,
    RunEvent,
    RunState,
    Stage,
    replay_stage,
)
from .orchestrator import (
    GateStateError,
    HeadlessPolicy,
    RunConfig,
    Runner,
    UnknownCandidateError,
    execute,
    run_ablation,
)
from .persistence import LoadError, PersistenceError, load_run, persist_run
from .profiling import DataProfile, ProfilingError, profile
from .questions import (
    FeasibilityReport,
    GenerationMode,
    ResearchQuestion,
    feasibility_stats,
    generate_questions,
    rank,
    screen,
)
from .review import ReviewReport, RevisionRequest, review, should_continue

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "AuditError",
    "Coefficient",
    "CsvParseError",
    "DataProfile",
    "DatasetAudit",
    "DidFields",
    "EstimationError",
    "EstimationErrorKind",
    "EventFields",
    "EventKind",
    "FeasibilityReport",
    "GateAction",
    "GateDecision",
    "GateKind",
    "GateStateError",
    "Gateway",
    "GatewayError",
    "GenerationMode",
    "HeadlessPolicy",
    "InferenceError",
    "IntegrityError",
    "LiveBackend",
    "LoadError",
    "PersistenceError",
    "PriceTable",
    "ProfilingError",
    "ResearchQuestion",
    "ReviewReport",
    "RevisionRequest",
    "RunConfig",
    "RunEvent",
    "RunState",
    "Runner",
    "SchemaError",
    "ScriptedBackend",
    "SeType",
    "Specification",
    "SpecificationError",
    "Stage",
    "Table",
    "UnknownCandidateError",
    "audit_dataset",
    "estimate",
    "estimate_did",
    "estimate_event_study",
    "estimate_fe",
    "estimate_ols",
    "execute",
    "feasibility_stats",
    "generate_questions",
    "load_csv",
    "load_dataset",
    "load_run",
    "make_backend",
    "persist_run",
    "profile",
    "rank",
    "replay_stage",
    "review",
    "run_ablation",
    "screen",
    "should_continue",
]
