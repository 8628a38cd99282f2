/** Form-mode drafts and their canonical query text.
 *
 * The form compiles to exactly the text the raw editor would hold, so the
 * two modes are interchangeable; the server's /validate echo is the only
 * authority on whether a draft is runnable.
 */

import type { QueryKind } from "./types.js";

export interface UpdateDraft {
  attr: string;
  kind: "set" | "scale" | "shift";
  value: string; // literal text: number or 'string'
}

export interface ObjectiveDraft {
  sense: "max" | "min";
  agg: "COUNT" | "SUM" | "AVG";
  attr: string; // empty for COUNT(*)
}

export interface QueryDraft {
  kind: QueryKind;
  use: string; // relation name or full USE body
  when: string;
  updates: UpdateDraft[]; // what-if
  outputAgg: "COUNT" | "SUM" | "AVG"; // what-if
  outputAttr: string; // empty for COUNT(*)
  howtoAttrs: string[]; // how-to
  limits: string[]; // how-to, one constraint per entry
  objectives: ObjectiveDraft[]; // how-to
  forPred: string;
}

export function emptyDraft(kind: QueryKind): QueryDraft {
  return {
    kind,
    use: "",
    when: "",
    updates: [{ attr: "", kind: "set", value: "" }],
    outputAgg: "COUNT",
    outputAttr: "",
    howtoAttrs: [],
    limits: [],
    objectives: [{ sense: "max", agg: "AVG", attr: "" }],
    forPred: "",
  };
}

function useClause(use: string): string {
  const body = use.trim();
  return body.toUpperCase().startsWith("USE ") ? body : `USE ${body}`;
}

function updateClause(u: UpdateDraft): string {
  const value = u.value.trim();
  if (u.kind === "set") return `UPDATE(${u.attr}) = ${value}`;
  const op = u.kind === "scale" ? "*" : "+";
  return `UPDATE(${u.attr}) = ${value} ${op} PRE(${u.attr})`;
}

function objectiveClause(o: ObjectiveDraft): string {
  const keyword = o.sense === "max" ? "TOMAXIMIZE" : "TOMINIMIZE";
  const target = o.attr.trim() === "" ? "*" : `POST(${o.attr.trim()})`;
  return `${keyword} ${o.agg}(${target})`;
}

/** Compile a draft to query text; identical for equivalent raw-mode input. */
export function renderQueryText(draft: QueryDraft): string {
  const lines: string[] = [useClause(draft.use)];
  if (draft.when.trim()) lines.push(`WHEN ${draft.when.trim()}`);
  if (draft.kind === "whatif") {
    const updates = draft.updates.filter((u) => u.attr.trim() !== "");
    lines.push(updates.map(updateClause).join(" AND "));
    const target = draft.outputAttr.trim() === "" ? "*" : `POST(${draft.outputAttr.trim()})`;
    lines.push(`OUTPUT ${draft.outputAgg}(${target})`);
  } else {
    lines.push(`HOWTOUPDATE ${draft.howtoAttrs.join(", ")}`);
    const limits = draft.limits.map((l) => l.trim()).filter((l) => l !== "");
    if (limits.length) lines.push(`LIMIT ${limits.join(" AND ")}`);
    for (const objective of draft.objectives) lines.push(objectiveClause(objective));
  }
  if (draft.forPred.trim()) lines.push(`FOR ${draft.forPred.trim()}`);
  return lines.filter((l) => l.trim() !== "").join("\n");
}

const CLAUSE_KEYWORDS = [
  "USE",
  "WHEN",
  "UPDATE",
  "HOWTOUPDATE",
  "LIMIT",
  "TOMAXIMIZE",
  "TOMINIMIZE",
  "OUTPUT",
  "FOR",
] as const;

export type ClauseName = (typeof CLAUSE_KEYWORDS)[number];

/** Clause owning each line of the query text (for inline error placement). */
export function clauseOfLine(text: string, line: number): ClauseName {
  const lines = text.split("\n");
  let current: ClauseName = "USE";
  for (let i = 0; i < Math.min(line, lines.length); i++) {
    const raw = lines[i] ?? "";
    const first = raw.trim().split(/[\s(]/, 1)[0]?.toUpperCase() ?? "";
    if ((CLAUSE_KEYWORDS as readonly string[]).includes(first)) {
      current = first as ClauseName;
    }
  }
  return current;
}

/** Map a structured API error onto the clause whose field should light up. */
export function clauseOfError(
  error: { error: string; detail: string },
  text: string,
): ClauseName {
  const byName: Record<string, ClauseName> = {
    PostInWhen: "WHEN",
    ImmutableUpdateTarget: "UPDATE",
    PathBetweenUpdates: "UPDATE",
    UpdateValueOutsideDomain: "UPDATE",
    EmptyCandidateSet: "LIMIT",
    Infeasible: "LIMIT",
    UnsupportedAggregate: "OUTPUT",
  };
  const named = byName[error.error];
  if (named) return named;
  for (const keyword of ["WHEN", "FOR", "OUTPUT", "LIMIT"] as const) {
    if (error.detail.startsWith(`${keyword}:`) || error.detail.startsWith(`${keyword} `)) {
      return keyword;
    }
  }
  if (error.detail.startsWith("objective")) return "TOMAXIMIZE";
  const location = /line (\d+)/.exec(error.detail);
  if (location) return clauseOfLine(text, parseInt(location[1] ?? "1", 10));
  return "USE";
}
