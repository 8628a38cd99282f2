/** DOM wiring for the workbench page. */

import { ApiClient, ConnectionError } from "./api.js";
import { renderDagSvg } from "./dag.js";
import { emptyDraft, renderQueryText, type ClauseName, type QueryDraft } from "./querytext.js";
import { renderBlocksPanel, renderComparison, renderResult } from "./results.js";
import { RunStore } from "./store.js";
import type { DagPayload, RunRecord } from "./types.js";
import { isPlan } from "./types.js";
import { detectKind, Workbench, type WorkbenchView } from "./workbench.js";

const api = new ApiClient("");
const store = new RunStore(window.localStorage);

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

const editor = el<HTMLTextAreaElement>("editor");
const runButton = el<HTMLButtonElement>("run");
const validateButton = el<HTMLButtonElement>("validate");
const validationBox = el<HTMLDivElement>("validation");
const banner = el<HTMLDivElement>("banner");
const resultPanel = el<HTMLDivElement>("result");
const historyPanel = el<HTMLDivElement>("history");
const comparisonPanel = el<HTMLDivElement>("comparison");
const dagPanel = el<HTMLDivElement>("dag-panel");
const blocksPanel = el<HTMLDivElement>("blocks-panel");

let dagPayload: DagPayload = { nodes: [], edges: [] };
let lastHighlights = { updates: [] as string[], backdoor: [] as string[] };

const view: WorkbenchView = {
  setRunEnabled(enabled) {
    runButton.disabled = !enabled;
  },
  setValidation(message, ok) {
    validationBox.textContent = message;
    validationBox.className = ok ? "validation ok" : "validation error";
  },
  showInlineError(clause, message) {
    const box = document.querySelector(`[data-clause="${clause}"]`);
    const target = box ?? validationBox;
    const note = document.createElement("div");
    note.className = "inline-error";
    note.textContent = message;
    target.appendChild(note);
  },
  clearInlineErrors() {
    document.querySelectorAll(".inline-error").forEach((n) => n.remove());
  },
  showConnectionBanner(visible) {
    banner.hidden = !visible;
  },
  showRecord(record) {
    resultPanel.innerHTML = renderResult(record.result);
    lastHighlights = {
      updates: extractUpdateAttrs(record),
      backdoor: isPlan(record.result) ? [] : record.result.backdoor,
    };
    refreshDag();
    refreshHistory();
  },
};

const workbench = new Workbench(api, store, view);

function extractUpdateAttrs(record: RunRecord): string[] {
  const attrs: string[] = [];
  const updateRe = /UPDATE\s*\(\s*([A-Za-z_][A-Za-z_0-9]*)\s*\)/gi;
  for (const match of record.text.matchAll(updateRe)) {
    if (match[1]) attrs.push(match[1]);
  }
  const howtoRe = /HOWTOUPDATE\s+([A-Za-z_][A-Za-z_0-9]*(\s*,\s*[A-Za-z_][A-Za-z_0-9]*)*)/i;
  const howto = howtoRe.exec(record.text);
  if (howto?.[1]) attrs.push(...howto[1].split(",").map((a) => a.trim()));
  return attrs;
}

function refreshDag(): void {
  dagPanel.innerHTML = renderDagSvg(dagPayload, lastHighlights);
}

function refreshHistory(): void {
  historyPanel.innerHTML = "";
  for (const record of store.list()) {
    const item = document.createElement("div");
    item.className = "history-item";
    const value = isPlan(record.result) ? record.result.objective : record.result.value;
    item.innerHTML =
      `<span class="history-id">#${record.id}</span> ` +
      `<span class="history-kind">${record.kind}</span> ` +
      `<span class="history-value">${value}</span> ` +
      `<button data-pin="${record.id}">${record.pinned ? "unpin" : "pin"}</button>`;
    item.querySelector("button")?.addEventListener("click", () => {
      store.togglePin(record.id);
      refreshHistory();
      comparisonPanel.innerHTML = renderComparison(store.pinned());
    });
    item.addEventListener("click", (event) => {
      if ((event.target as HTMLElement).tagName !== "BUTTON") {
        editor.value = record.text;
        workbench.onTextChanged();
        resultPanel.innerHTML = renderResult(record.result);
      }
    });
    historyPanel.appendChild(item);
  }
  comparisonPanel.innerHTML = renderComparison(store.pinned());
}

// form mode --------------------------------------------------------------

const form = el<HTMLDivElement>("form-mode");
const modeToggle = el<HTMLSelectElement>("mode");

function draftFromForm(): QueryDraft {
  const draft = emptyDraft(modeToggle.value === "howto-form" ? "howto" : "whatif");
  draft.use = el<HTMLInputElement>("f-use").value;
  draft.when = el<HTMLInputElement>("f-when").value;
  draft.forPred = el<HTMLInputElement>("f-for").value;
  if (draft.kind === "whatif") {
    draft.updates = [
      {
        attr: el<HTMLInputElement>("f-update-attr").value,
        kind: el<HTMLSelectElement>("f-update-kind").value as "set" | "scale" | "shift",
        value: el<HTMLInputElement>("f-update-value").value,
      },
    ];
    draft.outputAgg = el<HTMLSelectElement>("f-agg").value as "COUNT" | "SUM" | "AVG";
    draft.outputAttr = el<HTMLInputElement>("f-output-attr").value;
  } else {
    draft.howtoAttrs = el<HTMLInputElement>("f-howto-attrs").value
      .split(",")
      .map((a) => a.trim())
      .filter((a) => a !== "");
    draft.limits = el<HTMLInputElement>("f-limits").value
      .split(" AND ")
      .map((l) => l.trim())
      .filter((l) => l !== "");
    draft.objectives = [
      {
        sense: el<HTMLSelectElement>("f-sense").value as "max" | "min",
        agg: el<HTMLSelectElement>("f-obj-agg").value as "COUNT" | "SUM" | "AVG",
        attr: el<HTMLInputElement>("f-obj-attr").value,
      },
    ];
  }
  return draft;
}

function syncFormToEditor(): void {
  editor.value = renderQueryText(draftFromForm());
  workbench.onTextChanged();
}

modeToggle.addEventListener("change", () => {
  const raw = modeToggle.value === "raw";
  form.hidden = raw;
  editor.readOnly = !raw;
  if (!raw) syncFormToEditor();
});
form.addEventListener("input", syncFormToEditor);

// actions ------------------------------------------------------------------

editor.addEventListener("input", () => workbench.onTextChanged());
validateButton.addEventListener("click", () => void workbench.validate(editor.value));
runButton.addEventListener("click", () => void workbench.run(editor.value));
runButton.disabled = true;

async function boot(): Promise<void> {
  try {
    dagPayload = await api.dag();
    refreshDag();
    blocksPanel.innerHTML = renderBlocksPanel(await api.blocks());
    banner.hidden = true;
  } catch (err) {
    if (err instanceof ConnectionError) {
      banner.hidden = false;
    } else {
      throw err;
    }
  }
  refreshHistory();
}

void boot();
