/** Result panels as HTML strings.
 *
 * Displayed numbers are copied verbatim from API response bodies; the only
 * client-side formatting is decimal truncation for readability.
 */

import type { BlocksPayload, PlanResult, RunRecord, WhatIfResult } from "./types.js";
import { isPlan } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function num(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(6).replace(/0+$/, "").replace(/\.$/, "");
}

export function renderWhatIfResult(result: WhatIfResult): string {
  const rows = result.blocks
    .map(
      (b) =>
        `<tr><td>${escapeHtml(String(b.id))}</td>` +
        `<td class="num">${num(b.contribution)}</td>` +
        `<td class="num">${num(b.mass)}</td></tr>`,
    )
    .join("");
  const warnings = result.warnings.length
    ? `<ul class="warnings">${result.warnings.map((w) => `<li>${escapeHtml(w)}</li>`).join("")}</ul>`
    : "";
  const backdoor = result.backdoor.length
    ? `<p class="backdoor">backdoor set: ${result.backdoor.map(escapeHtml).join(", ")}</p>`
    : `<p class="backdoor">backdoor set: (empty)</p>`;
  return (
    `<div class="result whatif-result">` +
    `<div class="headline-value">${result.aggregate} = <strong>${num(result.value)}</strong></div>` +
    backdoor +
    `<table class="blocks-table"><thead><tr><th>block</th><th>contribution</th><th>mass</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    warnings +
    `</div>`
  );
}

export function renderPlanResult(result: PlanResult): string {
  const rows = Object.entries(result.plan)
    .map(([attr, choice]) => {
      const text =
        choice === "no change"
          ? "no change"
          : choice.kind === "set"
            ? `set to ${choice.const}`
            : `${choice.kind} by ${choice.const}`;
      return `<tr><td>${escapeHtml(attr)}</td><td>${escapeHtml(text)}</td></tr>`;
    })
    .join("");
  const stages = result.stages
    .map((s) => `<li>${escapeHtml(s.objective)}: ${num(s.value)}</li>`)
    .join("");
  return (
    `<div class="result plan-result">` +
    `<div class="headline-value">objective = <strong>${num(result.objective)}</strong></div>` +
    `<table class="plan-table"><thead><tr><th>attribute</th><th>update</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<ol class="stages">${stages}</ol>` +
    `</div>`
  );
}

export function renderResult(result: WhatIfResult | PlanResult): string {
  return isPlan(result) ? renderPlanResult(result) : renderWhatIfResult(result);
}

export function renderBlocksPanel(payload: BlocksPayload): string {
  const rows = payload.blocks
    .map(
      (b) =>
        `<tr><td>${b.id}</td><td>${b.tuples.map(escapeHtml).join(", ")}</td></tr>`,
    )
    .join("");
  return (
    `<table class="blocks-table"><thead><tr><th>block</th><th>tuples</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

/** Pinned runs side by side: one column per run, value/plan rows aligned. */
export function renderComparison(records: RunRecord[]): string {
  if (!records.length) {
    return `<p class="empty">Pin runs to compare them here.</p>`;
  }
  const header = records
    .map((r) => `<th>#${r.id} ${escapeHtml(r.kind)}</th>`)
    .join("");
  const values = records
    .map((r) => {
      const v = isPlan(r.result) ? r.result.objective : r.result.value;
      return `<td class="num">${num(v)}</td>`;
    })
    .join("");
  const attrs = new Set<string>();
  for (const r of records) {
    if (isPlan(r.result)) for (const a of Object.keys(r.result.plan)) attrs.add(a);
  }
  const planRows = [...attrs]
    .sort()
    .map((attr) => {
      const cells = records
        .map((r) => {
          if (!isPlan(r.result)) return "<td>—</td>";
          const choice = r.result.plan[attr];
          if (choice === undefined) return "<td>—</td>";
          const text =
            choice === "no change" ? "no change" : `${choice.kind} ${choice.const}`;
          return `<td>${escapeHtml(text)}</td>`;
        })
        .join("");
      return `<tr><td>${escapeHtml(attr)}</td>${cells}</tr>`;
    })
    .join("");
  const queries = records
    .map((r) => `<td><code>${escapeHtml(r.text)}</code></td>`)
    .join("");
  return (
    `<table class="comparison-table">` +
    `<thead><tr><th></th>${header}</tr></thead><tbody>` +
    `<tr><td>value</td>${values}</tr>` +
    planRows +
    `<tr class="query-row"><td>query</td>${queries}</tr>` +
    `</tbody></table>`
  );
}
