/** Controller: validation gating, run submission, inline error placement.
 *
 * Pure of DOM concerns: the page (or a test) supplies a view object and
 * observes state transitions.  Submission is disabled until the server's
 * /validate accepts the current text, and at most one run is in flight.
 */

import { ApiClient, ApiRequestError, ConnectionError } from "./api.js";
import type { ClauseName } from "./querytext.js";
import { clauseOfError } from "./querytext.js";
import { RunStore } from "./store.js";
import type { QueryKind, RunRecord } from "./types.js";

export interface WorkbenchView {
  setRunEnabled(enabled: boolean): void;
  setValidation(message: string, ok: boolean): void;
  showInlineError(clause: ClauseName, message: string): void;
  clearInlineErrors(): void;
  showConnectionBanner(visible: boolean): void;
  showRecord(record: RunRecord): void;
}

export function detectKind(text: string): QueryKind {
  return text.toUpperCase().includes("HOWTOUPDATE") ? "howto" : "whatif";
}

export class Workbench {
  private validatedText: string | null = null;
  private running = false;

  constructor(
    private readonly api: ApiClient,
    private readonly store: RunStore,
    private readonly view: WorkbenchView,
  ) {}

  get isValidated(): boolean {
    return this.validatedText !== null;
  }

  /** Text changed: runs are gated until the server validates again. */
  onTextChanged(): void {
    this.validatedText = null;
    this.view.setRunEnabled(false);
    this.view.clearInlineErrors();
  }

  async validate(text: string): Promise<boolean> {
    this.view.clearInlineErrors();
    try {
      await this.api.validate(text);
    } catch (err) {
      this.validatedText = null;
      this.view.setRunEnabled(false);
      this.reportError(err, text);
      return false;
    }
    this.validatedText = text;
    this.view.showConnectionBanner(false);
    this.view.setValidation("query is valid", true);
    this.view.setRunEnabled(true);
    return true;
  }

  /** Submit the validated draft; record and display the outcome. */
  async run(text: string): Promise<RunRecord | null> {
    if (this.running || this.validatedText !== text) {
      return null;
    }
    this.running = true;
    this.view.setRunEnabled(false);
    try {
      const kind = detectKind(text);
      const result =
        kind === "howto" ? await this.api.howto(text) : await this.api.whatif(text);
      const record = this.store.add(kind, text, result);
      this.view.showConnectionBanner(false);
      this.view.showRecord(record);
      return record;
    } catch (err) {
      this.reportError(err, text);
      return null;
    } finally {
      this.running = false;
      this.view.setRunEnabled(this.validatedText === text);
    }
  }

  private reportError(err: unknown, text: string): void {
    if (err instanceof ConnectionError) {
      this.view.showConnectionBanner(true);
      this.view.setValidation("API unreachable", false);
      return;
    }
    if (err instanceof ApiRequestError) {
      const clause = clauseOfError(err.body, text);
      this.view.showInlineError(clause, `${err.body.error}: ${err.body.detail}`);
      this.view.setValidation(err.body.error, false);
      return;
    }
    throw err;
  }
}
