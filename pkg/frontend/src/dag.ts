/** DAG rendering: longest-path layering, then an SVG string.
 *
 * Cross-tuple edges draw dashed.  The update attributes and backdoor set of
 * the most recent run are highlighted through CSS classes on the node
 * groups.
 */

import type { DagPayload } from "./types.js";

export interface DagHighlights {
  updates: string[];
  backdoor: string[];
}

interface Position {
  x: number;
  y: number;
}

const NODE_W = 122;
const NODE_H = 30;
const GAP_X = 56;
const GAP_Y = 54;

/** Layer each node at its longest distance from a root. */
export function layoutDag(payload: DagPayload): Map<string, Position> {
  const depth = new Map<string, number>();
  const incoming = new Map<string, string[]>();
  for (const node of payload.nodes) incoming.set(node, []);
  for (const edge of payload.edges) incoming.get(edge.to)?.push(edge.from);

  const resolve = (node: string, trail: Set<string>): number => {
    const known = depth.get(node);
    if (known !== undefined) return known;
    if (trail.has(node)) return 0; // defensive: the server guarantees acyclicity
    trail.add(node);
    const parents = incoming.get(node) ?? [];
    const d = parents.length
      ? 1 + Math.max(...parents.map((p) => resolve(p, trail)))
      : 0;
    depth.set(node, d);
    return d;
  };
  for (const node of payload.nodes) resolve(node, new Set());

  const byLayer = new Map<number, string[]>();
  for (const node of payload.nodes) {
    const d = depth.get(node) ?? 0;
    const layer = byLayer.get(d) ?? [];
    layer.push(node);
    byLayer.set(d, layer);
  }
  const positions = new Map<string, Position>();
  for (const [layer, nodes] of [...byLayer.entries()].sort((a, b) => a[0] - b[0])) {
    nodes.sort();
    nodes.forEach((node, index) => {
      positions.set(node, {
        x: 30 + layer * (NODE_W + GAP_X),
        y: 30 + index * (NODE_H + GAP_Y),
      });
    });
  }
  return positions;
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderDagSvg(payload: DagPayload, highlights?: DagHighlights): string {
  const positions = layoutDag(payload);
  const width =
    Math.max(0, ...[...positions.values()].map((p) => p.x)) + NODE_W + 40;
  const height =
    Math.max(0, ...[...positions.values()].map((p) => p.y)) + NODE_H + 40;

  const bare = (name: string) => name.split(".").pop() ?? name;
  const updateSet = new Set((highlights?.updates ?? []).map(bare));
  const backdoorSet = new Set((highlights?.backdoor ?? []).map(bare));

  const edges = payload.edges
    .map((edge) => {
      const a = positions.get(edge.from);
      const b = positions.get(edge.to);
      if (!a || !b) return "";
      const x1 = a.x + NODE_W;
      const y1 = a.y + NODE_H / 2;
      const x2 = b.x;
      const y2 = b.y + NODE_H / 2;
      const mid = (x1 + x2) / 2;
      const cls = edge.cross_tuple ? "edge cross-tuple" : "edge";
      return (
        `<path class="${cls}" d="M ${x1} ${y1} C ${mid} ${y1}, ${mid} ${y2}, ${x2} ${y2}"` +
        ` marker-end="url(#arrow)"${edge.cross_tuple ? ' stroke-dasharray="6 4"' : ""}/>`
      );
    })
    .join("");

  const nodes = payload.nodes
    .map((node) => {
      const p = positions.get(node);
      if (!p) return "";
      const classes = ["node"];
      if (updateSet.has(bare(node))) classes.push("update-attr");
      if (backdoorSet.has(bare(node))) classes.push("backdoor-attr");
      return (
        `<g class="${classes.join(" ")}" data-node="${escapeXml(node)}">` +
        `<rect x="${p.x}" y="${p.y}" width="${NODE_W}" height="${NODE_H}" rx="6"/>` +
        `<text x="${p.x + NODE_W / 2}" y="${p.y + NODE_H / 2 + 4}" text-anchor="middle">` +
        `${escapeXml(bare(node))}</text></g>`
      );
    })
    .join("");

  return (
    `<svg class="dag" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7"` +
    ` markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z"/></marker></defs>` +
    `${edges}${nodes}</svg>`
  );
}
