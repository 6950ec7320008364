// Payload shapes served by the /v1 experiment API (see docs/schemas in the repo root).

export interface PolicyInfo {
  name: string;
  label: string;
  description: string;
  uses_rating_model: boolean;
  uses_blocking_model: boolean;
  uses_deferred_acceptance: boolean;
}

export interface Limits {
  max_horizon_min: number;
  max_seeds: number;
  max_policies: number;
  capacity: number;
}

export interface Defaults {
  population: Record<string, unknown> & {
    patience_mean_min: number;
    seeker_online_mean: number;
    counselor_online_mean: number;
    teen_fraction: number;
    gender_weights: Record<string, Record<string, number>>;
  };
  run: {
    policies: string[];
    seeds: number;
    horizon_min: number;
    warmup_min: number;
    recommendation_accept_prob: number;
  };
  calibration_targets: { rating_marginal: number[]; block_rate: number };
  limits: Limits;
}

export interface MetricCell {
  mean: number | null;
  ci95: [number, number] | null;
  n: number;
  per_seed?: (number | null)[];
  display: string;
  rank?: number;
  best?: boolean;
  worst?: boolean;
}

export interface ComparisonRow {
  policy: string;
  metrics: Record<string, MetricCell>;
}

export interface ComparisonPayload {
  spec: Record<string, unknown>;
  metrics: string[];
  rows: ComparisonRow[];
}

export interface SubgroupPayload {
  spec: Record<string, unknown>;
  groups: string[];
  policies: Record<
    string,
    Record<string, { metrics: Record<string, MetricCell>; n_matched_total: number }>
  >;
}

export interface ResultsPayload {
  id: string;
  comparison: ComparisonPayload;
  subgroups: SubgroupPayload;
}

export interface ExperimentStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  progress: { completed: number; total: number; fraction: number };
  submitted_at: number;
  started_at: number | null;
  finished_at: number | null;
  error: string | null;
}

export interface FieldError {
  field: string;
  message: string;
}
