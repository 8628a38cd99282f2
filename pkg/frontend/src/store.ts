/** Run history with pinning, persisted to browser storage only. */

import type { PlanResult, QueryKind, RunRecord, WhatIfResult } from "./types.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const KEY = "hyper-workbench-runs";

export class RunStore {
  private records: RunRecord[] = [];
  private nextId = 1;

  constructor(private readonly storage?: StorageLike) {
    const raw = storage?.getItem(KEY);
    if (raw) {
      try {
        const parsed = JSON.parse(raw) as { records: RunRecord[]; nextId: number };
        this.records = parsed.records;
        this.nextId = parsed.nextId;
      } catch {
        this.records = [];
      }
    }
  }

  add(kind: QueryKind, text: string, result: WhatIfResult | PlanResult): RunRecord {
    const record: RunRecord = {
      id: this.nextId++,
      kind,
      text,
      startedAt: new Date().toISOString(),
      result,
      pinned: false,
    };
    this.records.unshift(record);
    this.persist();
    return record;
  }

  togglePin(id: number): void {
    const record = this.records.find((r) => r.id === id);
    if (record) {
      record.pinned = !record.pinned;
      this.persist();
    }
  }

  list(): readonly RunRecord[] {
    return this.records;
  }

  pinned(): RunRecord[] {
    return this.records.filter((r) => r.pinned);
  }

  latest(): RunRecord | undefined {
    return this.records[0];
  }

  private persist(): void {
    this.storage?.setItem(KEY, JSON.stringify({ records: this.records, nextId: this.nextId }));
  }
}
