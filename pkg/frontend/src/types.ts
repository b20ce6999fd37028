/** Wire types mirrored from the service JSON API; no client-side recomputation. */

export interface SliceView {
  id: string;
  predicate: string;
  interpretable: boolean;
  num_literals: number;
  size: number;
  effect_size: number;
  metric: number;
  counterpart_metric: number;
  t_stat: number;
  p_value: number;
  alpha_spent: number | null;
  rejected: boolean | null;
  rank?: number;
}

export interface Progress {
  explored: number;
  evaluations: number;
  exhausted: boolean;
}

export type QueryStatus = "complete" | "searching";

export interface SlicesResponse {
  session_id: string;
  k: number;
  min_effect_size: number;
  status: QueryStatus;
  cache_only: boolean;
  slices: SliceView[];
  progress: Progress;
}

export interface ExampleRow {
  index: number;
  label: number;
  score: number;
  loss: number;
  features: Record<string, string>;
}

export interface QueryParams {
  k: number;
  minEffectSize: number;
}
