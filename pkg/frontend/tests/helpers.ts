import type { WhatIfResult } from "../src/types.js";

export type Route = (body: unknown) => { status: number; payload: unknown };

/** In-memory fetch: the client still exercises its full request path. */
export function fakeFetch(routes: Record<string, Route>) {
  const calls: { path: string; body: unknown }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const route = routes[path];
    if (!route) throw new TypeError(`no route for ${path}`);
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ path, body });
    const { status, payload } = route(body);
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

export const TOY_WHATIF_RESULT: WhatIfResult = {
  value: 3.0,
  aggregate: "COUNT",
  blocks: [
    { id: 0, contribution: 0.75, mass: 0.75 },
    { id: 1, contribution: 0.75, mass: 0.75 },
    { id: 2, contribution: 0.75, mass: 0.75 },
    { id: 3, contribution: 0.75, mass: 0.75 },
  ],
  backdoor: [],
  warnings: [],
  diagnostics: { estimator: "exact" },
};

export const HEADLINE_WHATIF_TEXT = [
  "USE RelevantView AS (",
  "  SELECT T1.PID, T1.Category, T1.Price, T1.Brand,",
  "         AVG(T2.Sentiment) AS Senti, AVG(T2.Rating) AS Rtng",
  "  FROM Product AS T1, Review AS T2",
  "  WHERE T1.PID = T2.PID",
  "  GROUP BY T1.PID, T1.Category, T1.Price, T1.Brand",
  ")",
  "WHEN Brand = 'Asus'",
  "UPDATE(Price) = 1.1 * PRE(Price)",
  "OUTPUT AVG(POST(Rtng))",
  "FOR PRE(Category) = 'Laptop' AND PRE(Brand) = 'Asus' AND POST(Senti) > 0.5",
].join("\n");

export const HEADLINE_RESULT: WhatIfResult = {
  value: 0.0,
  aggregate: "AVG",
  blocks: [{ id: 0, contribution: 0.0, mass: 0.0 }],
  backdoor: ["Brand", "Quality"],
  warnings: ["AVG over zero expected qualified mass; returning 0.0"],
  diagnostics: { estimator: "freq" },
};
