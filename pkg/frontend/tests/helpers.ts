import { SlicesResponse, SliceView } from "../src/types.js";

export function slice(overrides: Partial<SliceView> = {}): SliceView {
  return {
    id: "s000001",
    predicate: "A=a1",
    interpretable: true,
    num_literals: 1,
    size: 198,
    effect_size: 1.7558,
    metric: 1.7601,
    counterpart_metric: 0.93,
    t_stat: 10.24,
    p_value: 5.7e-15,
    alpha_spent: 0.0476,
    rejected: true,
    rank: 1,
    ...overrides,
  };
}

export function response(
  slices: SliceView[],
  overrides: Partial<SlicesResponse> = {},
): SlicesResponse {
  return {
    session_id: "abc123",
    k: 10,
    min_effect_size: 0.4,
    status: "complete",
    cache_only: true,
    slices,
    progress: { explored: 6, evaluations: 6, exhausted: false },
    ...overrides,
  };
}

export const THREE_SLICES: SliceView[] = [
  slice(),
  slice({
    id: "s000002",
    predicate: "B=b1 ∧ C=c1",
    num_literals: 2,
    size: 64,
    effect_size: 1.738,
    metric: 2.1749,
    p_value: 1.4e-23,
    rank: 2,
  }),
  slice({
    id: "s000003",
    predicate: "C=c1",
    num_literals: 1,
    size: 111,
    effect_size: 0.839,
    metric: 1.92,
    p_value: 4.2e-10,
    rank: 3,
  }),
];
