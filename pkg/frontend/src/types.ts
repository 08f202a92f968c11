/** Wire types for the run gateway. Field names match the JSON the server emits. */

export interface RunSummary {
  run_id: string;
  stage: string;
  question_round: number;
  revision_iteration: number;
  latest_overall_score: number | null;
  total_cost_micro: number;
  created_at: string;
}

export interface ResearchQuestion {
  question_id: string;
  text: string;
  rationale: string;
  outcome_var: string;
  treatment_vars: string[];
  control_vars: string[];
  design: string;
  domain_tag: string;
}

export interface FeasibilityReport {
  question_id: string;
  feasible: boolean;
  vars_exist: boolean;
  missing_vars: string[];
  design_compatible: boolean;
  design_reason: string;
  method_supported: boolean;
  method_reason: string;
  tractability_score: number;
}

export interface Candidate {
  question: ResearchQuestion;
  report: FeasibilityReport;
}

export type ReviewScores = {
  novelty: number;
  identification: number;
  data_quality: number;
  clarity: number;
  policy_relevance: number;
};

export interface RevisionRequest {
  kind: string;
  text: string;
}

export interface Review {
  draft_version: number;
  scores: ReviewScores;
  overall: number;
  verdict: string;
  revision_requests: RevisionRequest[];
}

export interface Draft {
  version: number;
  body: string;
  sections: string[];
  word_count: number;
  based_on: number | null;
  notes: string;
}

export interface Coefficient {
  name: string;
  estimate: number;
  std_error: number;
  t_stat: number;
  p_value: number;
  ci_low: number;
  ci_high: number;
}

export interface AnalysisSpec {
  label: string;
  design: string;
  outcome: string;
  regressors: string[];
  fixed_effects: string[];
  entity_var: string | null;
  time_var: string | null;
  cluster_var: string | null;
  se_type: string;
  did_fields: Record<string, unknown> | null;
  event_fields: Record<string, unknown> | null;
}

export interface AnalysisResult {
  spec: AnalysisSpec;
  coefficients: Coefficient[];
  n_obs: number;
  n_entities: number | null;
  r_squared: number;
  notes: string;
}

export interface CostEntry {
  agent: string;
  input_tokens: number;
  output_tokens: number;
  input_price_micro: number;
  output_price_micro: number;
  cost_micro: number;
}

export interface CostLedger {
  entries: CostEntry[];
  total_micro: number;
}

export interface RunEvent {
  kind: string;
  actor: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

/** Full run snapshot as returned by GET /runs/{id}. */
export interface RunSnapshot {
  schema_version: number;
  run_id: string;
  stage: string;
  created_at: string;
  question_round: number;
  revision_iteration: number;
  audit: Record<string, unknown> | null;
  profile: Record<string, unknown> | null;
  candidates: Candidate[][];
  selected_question: ResearchQuestion | null;
  sample_report: Record<string, unknown> | null;
  analyses: AnalysisResult[];
  drafts: Draft[];
  reviews: Review[];
  events: RunEvent[];
  cost: CostLedger;
}

export type GateAction = "Select" | "Regenerate" | "Approve" | "Reject";

export interface GateDecisionBody {
  action: GateAction;
  question_id?: string;
  constraint_text?: string;
  reason_text?: string;
}

export interface GateAck {
  run_id: string;
  stage: string;
}

export interface QuestionRound {
  round: number;
  candidates: Candidate[];
}

export interface QuestionsPayload {
  run_id: string;
  selected_question: ResearchQuestion | null;
  rounds: QuestionRound[];
}

export interface NewRunBody {
  dataset_path: string;
  meta_path?: string;
  domain?: string;
  n_questions?: number;
  interactive?: boolean;
  generation_mode?: string;
  backend_spec?: string;
  accept_threshold?: number;
  max_revision_iterations?: number;
  constraints?: string[];
}
