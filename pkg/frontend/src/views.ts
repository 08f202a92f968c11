import type {
  AnalysisResult,
  Candidate,
  Review,
  RunSnapshot,
} from "./types.js";

/**
 * View models for the two gate screens. These are field copies of server
 * state shaped for rendering. Feasibility verdicts and review scores are
 * taken verbatim from the snapshot, never recomputed client side.
 */

export interface CandidateRow {
  id: string;
  text: string;
  rationale: string;
  design: string;
  outcome: string;
  treatments: string[];
  controls: string[];
  feasible: boolean;
  tractability: number;
  missingVars: string[];
  designReason: string;
  methodReason: string;
}

export interface RoundView {
  round: number;
  rows: CandidateRow[];
}

export interface QuestionGateView {
  runId: string;
  stage: string;
  gateOpen: boolean;
  rounds: RoundView[];
  candidateCount: number;
  infeasibleCount: number;
  selectedId: string | null;
}

function candidateRow(c: Candidate): CandidateRow {
  return {
    id: c.question.question_id,
    text: c.question.text,
    rationale: c.question.rationale,
    design: c.question.design,
    outcome: c.question.outcome_var,
    treatments: c.question.treatment_vars,
    controls: c.question.control_vars,
    feasible: c.report.feasible,
    tractability: c.report.tractability_score,
    missingVars: c.report.missing_vars,
    designReason: c.report.design_reason,
    methodReason: c.report.method_reason,
  };
}

export function questionGateView(snapshot: RunSnapshot): QuestionGateView {
  const rounds = snapshot.candidates.map((rnd, i) => ({
    round: i + 1,
    rows: rnd.map(candidateRow),
  }));
  const rows = rounds.flatMap((r) => r.rows);
  return {
    runId: snapshot.run_id,
    stage: snapshot.stage,
    gateOpen: snapshot.stage === "AwaitingQuestionGate",
    rounds,
    candidateCount: rows.length,
    infeasibleCount: rows.filter((r) => !r.feasible).length,
    selectedId: snapshot.selected_question?.question_id ?? null,
  };
}

export interface TrajectoryPoint {
  version: number;
  overall: number;
  scores: Review["scores"];
  verdict: string;
}

export interface PublicationGateView {
  runId: string;
  stage: string;
  gateOpen: boolean;
  latestDraft: { version: number; wordCount: number } | null;
  draftVersions: number[];
  trajectory: TrajectoryPoint[];
  latestRequests: { kind: string; text: string }[];
}

export function publicationGateView(
  snapshot: RunSnapshot,
): PublicationGateView {
  const drafts = snapshot.drafts;
  const last = drafts.length > 0 ? drafts[drafts.length - 1] : null;
  const lastReview =
    snapshot.reviews.length > 0
      ? snapshot.reviews[snapshot.reviews.length - 1]
      : null;
  return {
    runId: snapshot.run_id,
    stage: snapshot.stage,
    gateOpen: snapshot.stage === "AwaitingPublicationGate",
    latestDraft: last
      ? { version: last.version, wordCount: last.word_count }
      : null,
    draftVersions: drafts.map((d) => d.version),
    trajectory: snapshot.reviews.map((r) => ({
      version: r.draft_version,
      overall: r.overall,
      scores: r.scores,
      verdict: r.verdict,
    })),
    latestRequests: lastReview
      ? lastReview.revision_requests.map((q) => ({
          kind: q.kind,
          text: q.text,
        }))
      : [],
  };
}

export interface ResultsTableRow {
  name: string;
  estimate: number;
  stdError: number;
  pValue: number;
  ciLow: number;
  ciHigh: number;
}

export interface ResultsTable {
  label: string;
  design: string;
  nObs: number;
  rSquared: number;
  rows: ResultsTableRow[];
  /** True when the spec carries event-study fields, so a plot applies. */
  eventStudy: boolean;
}

export function resultsTables(snapshot: RunSnapshot): ResultsTable[] {
  return snapshot.analyses.map(analysisTable);
}

export function analysisTable(a: AnalysisResult): ResultsTable {
  return {
    label: a.spec.label,
    design: a.spec.design,
    nObs: a.n_obs,
    rSquared: a.r_squared,
    rows: a.coefficients.map((c) => ({
      name: c.name,
      estimate: c.estimate,
      stdError: c.std_error,
      pValue: c.p_value,
      ciLow: c.ci_low,
      ciHigh: c.ci_high,
    })),
    eventStudy: a.spec.event_fields != null,
  };
}

/** Coefficient table as CSV text, for the download link on the results view. */
export function tableCsv(table: ResultsTable): string {
  const head = "term,estimate,std_error,p_value,ci_low,ci_high";
  const lines = table.rows.map(
    (r) =>
      `${r.name},${r.estimate},${r.stdError},${r.pValue},${r.ciLow},${r.ciHigh}`,
  );
  return [head, ...lines].join("\n") + "\n";
}
