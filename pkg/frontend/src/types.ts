// Shapes of the backend API payloads. The dashboard never recomputes
// metrics: every displayed number comes from one of these responses.

export type Verdict = "INCLUDE" | "DISCARD" | "AMBIGUOUS" | "ERROR";

export interface Paper {
  id: string;
  title: string;
  abstract: string;
  authors: string[];
  year: number | null;
  venue: string | null;
  doi: string | null;
  source: string;
  entry_kind: string;
}

export interface Decision {
  paper_id: string;
  agent_id: string;
  verdict: Verdict;
  justification: string;
  input_tokens: number;
  output_tokens: number;
  latency_ms: number;
  attempt_count: number;
}

export interface RunView {
  id: string;
  corpus_id: string;
  template_id: string;
  template_version: number;
  agent_ids: string[];
  scope_size: number;
  status: "pending" | "running" | "paused" | "complete" | "failed";
  progress: { done: number; total: number };
  started_at: number | null;
  finished_at: number | null;
  error: string | null;
}

export interface ConfusionCounts {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface MetricValues {
  accuracy: number | null;
  precision: number | null;
  recall: number | null;
  f1: number | null;
}

export interface ScoredBlock {
  counts: ConfusionCounts;
  metrics: MetricValues;
}

export interface HistogramSide {
  buckets: Record<string, number>;
  agent_counts: Record<string, Record<string, number>>;
}

export interface StatsPayload {
  scope: Record<string, unknown>;
  distribution: Record<string, Record<Verdict, number>>;
  per_agent?: Record<string, ScoredBlock>;
  consensus?: {
    includes: number;
    discards: number;
    flagged: number;
    scored?: ScoredBlock;
  };
  misjudgment?: {
    false_inclusions: HistogramSide;
    false_exclusions: HistogramSide;
  };
  agreement?: {
    agents: string[];
    matrix: Record<string, Record<string, number>>;
    mean: Record<string, number>;
    outliers: string[];
  };
}

export interface ConsensusRow {
  paper_id: string;
  final_verdict: Verdict;
  including_agents: string[];
  discarding_agents: string[];
  flagged_for_review: boolean;
}

export interface ApplyResponse {
  application_id: string;
  results: ConsensusRow[];
}

export interface AgentInfo {
  id: string;
  display_name: string;
  endpoint_url: string;
  model_name: string;
  api_key_ref: string;
  temperature: number;
  max_output_tokens: number;
  max_parallel_requests: number;
  requests_per_minute: number;
}

export interface Aspect {
  name: string;
  example_terms: string[];
}

export interface TemplateDoc {
  id: string;
  topic_title: string;
  role_preamble: string;
  aspects: Aspect[];
  exclusion_rules: string[];
  inclusion_rules: string[];
  output_instruction: string;
  version: number;
}

export type TemplateDraft = Omit<TemplateDoc, "version">;

export type SchemeKind = "ANY_INCLUDE" | "THRESHOLD";
export type AmbiguousPolicy = "COUNT_AS_INCLUDE" | "COUNT_AS_ABSTAIN";

export interface SchemeConfig {
  id: string;
  kind: SchemeKind;
  k: number;
  agent_ids: string[];
  ambiguous_policy: AmbiguousPolicy;
}
