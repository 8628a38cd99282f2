/** Thin client over the engine's HTTP API.
 *
 * Every number the workbench displays originates from one of these calls;
 * nothing is computed client-side.  The fetch function is injectable so the
 * tests can drive the full request path without a server.
 */

import type {
  ApiErrorBody,
  BlocksPayload,
  DagPayload,
  PlanResult,
  WhatIfResult,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
  }
}

export class ConnectionError extends Error {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ConnectionError(`API unreachable: ${String(err)}`);
    }
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  private post<T>(path: string, hql: string): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ hql }),
    });
  }

  validate(hql: string): Promise<{ ok: boolean; kind: string }> {
    return this.post("/validate", hql);
  }

  whatif(hql: string): Promise<WhatIfResult> {
    return this.post("/query/whatif", hql);
  }

  howto(hql: string): Promise<PlanResult> {
    return this.post("/query/howto", hql);
  }

  dag(): Promise<DagPayload> {
    return this.request("/dag");
  }

  blocks(): Promise<BlocksPayload> {
    return this.request("/blocks");
  }

  schema(): Promise<unknown> {
    return this.request("/schema");
  }
}
