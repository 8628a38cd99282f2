/** Wire types mirrored from the HTTP API. */

export interface BlockContribution {
  id: number | string;
  contribution: number;
  mass: number;
}

export interface WhatIfResult {
  value: number;
  aggregate: string;
  blocks: BlockContribution[];
  backdoor: string[];
  warnings: string[];
  diagnostics: Record<string, unknown>;
}

export type PlanChoice = { kind: string; const: number | string } | "no change";

export interface PlanResult {
  plan: Record<string, PlanChoice>;
  objective: number;
  stages: { objective: string; value: number; verified?: number }[];
}

export interface DagEdgePayload {
  from: string;
  to: string;
  cross_tuple?: boolean;
  group_by?: string;
}

export interface DagPayload {
  nodes: string[];
  edges: DagEdgePayload[];
}

export interface BlocksPayload {
  blocks: { id: number; tuples: string[] }[];
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}

export type QueryKind = "whatif" | "howto";

/** One completed run; immutable once recorded. */
export interface RunRecord {
  readonly id: number;
  readonly kind: QueryKind;
  readonly text: string;
  readonly startedAt: string;
  readonly result: WhatIfResult | PlanResult;
  pinned: boolean;
}

export function isPlan(result: WhatIfResult | PlanResult): result is PlanResult {
  return "plan" in result;
}
