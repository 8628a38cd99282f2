import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import type { ClauseName } from "../src/querytext.js";
import { renderWhatIfResult } from "../src/results.js";
import { RunStore } from "../src/store.js";
import type { RunRecord } from "../src/types.js";
import { Workbench, detectKind, type WorkbenchView } from "../src/workbench.js";
import {
  fakeFetch,
  HEADLINE_RESULT,
  HEADLINE_WHATIF_TEXT,
  TOY_WHATIF_RESULT,
} from "./helpers.js";

class RecordingView implements WorkbenchView {
  runEnabled = false;
  validation = "";
  validationOk = false;
  inlineErrors: { clause: ClauseName; message: string }[] = [];
  bannerVisible = false;
  shown: RunRecord[] = [];

  setRunEnabled(enabled: boolean) {
    this.runEnabled = enabled;
  }
  setValidation(message: string, ok: boolean) {
    this.validation = message;
    this.validationOk = ok;
  }
  showInlineError(clause: ClauseName, message: string) {
    this.inlineErrors.push({ clause, message });
  }
  clearInlineErrors() {
    this.inlineErrors = [];
  }
  showConnectionBanner(visible: boolean) {
    this.bannerVisible = visible;
  }
  showRecord(record: RunRecord) {
    this.shown.push(record);
  }
}

const TOY_TEXT = "USE T\nUPDATE(X) = 1\nOUTPUT COUNT(*)\nFOR POST(Y) = 1";

describe("workbench flow", () => {
  let view: RecordingView;
  let store: RunStore;

  beforeEach(() => {
    view = new RecordingView();
    store = new RunStore();
  });

  function workbenchWith(routes: Parameters<typeof fakeFetch>[0]) {
    const { fetchFn, calls } = fakeFetch(routes);
    const api = new ApiClient("", fetchFn);
    return { wb: new Workbench(api, store, view), calls };
  }

  it("gates running on a successful server validation", async () => {
    const { wb } = workbenchWith({
      "/validate": () => ({ status: 200, payload: { ok: true, kind: "whatif" } }),
      "/query/whatif": () => ({ status: 200, payload: TOY_WHATIF_RESULT }),
    });
    expect(await wb.run(TOY_TEXT)).toBeNull(); // not validated yet
    expect(await wb.validate(TOY_TEXT)).toBe(true);
    expect(view.runEnabled).toBe(true);
    const record = await wb.run(TOY_TEXT);
    expect(record?.result).toEqual(TOY_WHATIF_RESULT);
  });

  it("editing the text revokes the validation", async () => {
    const { wb } = workbenchWith({
      "/validate": () => ({ status: 200, payload: { ok: true, kind: "whatif" } }),
    });
    await wb.validate(TOY_TEXT);
    wb.onTextChanged();
    expect(view.runEnabled).toBe(false);
    expect(await wb.run(TOY_TEXT)).toBeNull();
  });

  it("submits the headline query via the API and renders value plus block table", async () => {
    const { wb, calls } = workbenchWith({
      "/validate": () => ({ status: 200, payload: { ok: true, kind: "whatif" } }),
      "/query/whatif": () => ({ status: 200, payload: HEADLINE_RESULT }),
    });
    await wb.validate(HEADLINE_WHATIF_TEXT);
    const record = await wb.run(HEADLINE_WHATIF_TEXT);
    expect(record).not.toBeNull();
    expect(calls.map((c) => c.path)).toEqual(["/validate", "/query/whatif"]);
    expect(calls[1]?.body).toEqual({ hql: HEADLINE_WHATIF_TEXT });
    // every displayed number originates from the response body
    const html = renderWhatIfResult(record!.result as typeof HEADLINE_RESULT);
    expect(html).toContain("AVG = <strong>0</strong>");
    expect(html).toContain("blocks-table");
    expect(html).toContain("Brand, Quality");
  });

  it("routes how-to texts to the how-to endpoint", async () => {
    const plan = { plan: { X: { kind: "set", const: 1 } }, objective: 0.75, stages: [] };
    const { wb, calls } = workbenchWith({
      "/validate": () => ({ status: 200, payload: { ok: true, kind: "howto" } }),
      "/query/howto": () => ({ status: 200, payload: plan }),
    });
    const text = "USE T\nHOWTOUPDATE X\nTOMAXIMIZE AVG(POST(Y))";
    expect(detectKind(text)).toBe("howto");
    await wb.validate(text);
    await wb.run(text);
    expect(calls[1]?.path).toBe("/query/howto");
  });

  it("renders a 400 validation error inline at the offending clause", async () => {
    const { wb } = workbenchWith({
      "/validate": () => ({
        status: 400,
        payload: { error: "PostInWhen", detail: "WHEN may only reference PRE values: X" },
      }),
    });
    const text = "USE T\nWHEN POST(X) = 1\nUPDATE(X) = 1\nOUTPUT COUNT(*)";
    expect(await wb.validate(text)).toBe(false);
    expect(view.runEnabled).toBe(false);
    expect(view.inlineErrors).toHaveLength(1);
    expect(view.inlineErrors[0]?.clause).toBe("WHEN");
    expect(view.inlineErrors[0]?.message).toContain("PostInWhen");
  });

  it("shows the connection banner when the API is unreachable", async () => {
    const { wb } = workbenchWith({}); // no routes: fetch throws
    expect(await wb.validate(TOY_TEXT)).toBe(false);
    expect(view.bannerVisible).toBe(true);
  });

  it("records runs immutably and pins them for comparison", async () => {
    const { wb } = workbenchWith({
      "/validate": () => ({ status: 200, payload: { ok: true, kind: "whatif" } }),
      "/query/whatif": () => ({ status: 200, payload: TOY_WHATIF_RESULT }),
    });
    await wb.validate(TOY_TEXT);
    const record = await wb.run(TOY_TEXT);
    store.togglePin(record!.id);
    expect(store.pinned()).toHaveLength(1);
    expect(store.latest()?.text).toBe(TOY_TEXT);
  });
});
