"""Attribute-level causal DAGs, their grounding over an instance, backdoor
sets, summary functions for fk-joined attributes, and exact structural models.

Attribute nodes are strings, qualified as ``Relation.Attr`` when a database
is in play or bare for single-table / view-level graphs.  Edges may be
flagged ``cross_tuple`` to relate cells of *different* tuples; an optional
``group_by`` attribute restricts those pairs to tuples sharing a group value.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .datamodel import Database, Tuple
from .errors import (
    CycleDetected,
    DanglingAttribute,
    EmptyJoinGroup,
    InvalidScm,
    UnknownAttribute,
    UnknownRelation,
)


@dataclass(frozen=True)
class DagEdge:
    src: str
    dst: str
    cross_tuple: bool = False
    group_by: str | None = None


@dataclass(frozen=True)
class CausalDag:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        names = set(self.nodes)
        for e in self.edges:
            if e.src not in names or e.dst not in names:
                raise DanglingAttribute(f"edge {e.src} -> {e.dst} references an undeclared node")
        cycle = _find_cycle(self.nodes, [(e.src, e.dst) for e in self.edges])
        if cycle:
            raise CycleDetected(cycle)

    def parents(self, node) -> list:
        return [e.src for e in self.edges if e.dst == node]

    def children(self, node) -> list:
        return [e.dst for e in self.edges if e.src == node]

    def descendants(self, seeds) -> set:
        """Strict descendants of any seed node (seeds excluded unless reachable)."""
        out, stack = set(), list(seeds)
        while stack:
            for c in self.children(stack.pop()):
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def topo_order(self) -> list:
        order, seen = [], set()

        def visit(n):
            if n in seen:
                return
            seen.add(n)
            for p in sorted(self.parents(n)):
                visit(p)
            order.append(n)

        for n in sorted(self.nodes):
            visit(n)
        return order

    def without_outgoing(self, nodes) -> "CausalDag":
        keep = tuple(e for e in self.edges if e.src not in nodes)
        return CausalDag(nodes=self.nodes, edges=keep)


def _find_cycle(nodes, edges) -> list | None:
    children = {n: [] for n in nodes}
    indeg = {n: 0 for n in nodes}
    for s, d in edges:
        children[s].append(d)
        indeg[d] += 1
    queue = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen == len(list(nodes)):
        return None
    # walk parents inside the residual subgraph until a node repeats
    residue = {n for n in nodes if indeg[n] > 0}
    parents = {n: [] for n in nodes}
    for s, d in edges:
        if s in residue and d in residue:
            parents[d].append(s)
    node, trail = next(iter(sorted(residue))), []
    while node not in trail:
        trail.append(node)
        node = sorted(parents[node])[0]
    i = trail.index(node)
    return trail[i:] + [node]


def dag_from_config(config: dict) -> tuple[CausalDag, list]:
    """Read the DAG document: nodes, edges (with cross-tuple flags), summaries."""
    dag = CausalDag(
        nodes=tuple(config["nodes"]),
        edges=tuple(
            DagEdge(
                src=e["from"],
                dst=e["to"],
                cross_tuple=bool(e.get("cross_tuple", False)),
                group_by=e.get("group_by"),
            )
            for e in config.get("edges", [])
        ),
    )
    specs = [
        SummarySpec(
            child=s["child"],
            agg=s["agg"].upper(),
            source=s["source"].split(".")[0],
            attr=s["source"].split(".")[1],
            via=s["via"],
        )
        for s in config.get("summaries", [])
    ]
    return dag, specs


def dag_to_config(dag: CausalDag, specs=()) -> dict:
    return {
        "nodes": list(dag.nodes),
        "edges": [
            {
                "from": e.src,
                "to": e.dst,
                **({"cross_tuple": True} if e.cross_tuple else {}),
                **({"group_by": e.group_by} if e.group_by else {}),
            }
            for e in dag.edges
        ],
        "summaries": [
            {"child": s.child, "agg": s.agg, "source": f"{s.source}.{s.attr}", "via": s.via}
            for s in specs
        ],
    }


def validate_dag_schema(dag: CausalDag, db: Database):
    """Dag nodes must name declared attributes; immutables take no incoming edges."""
    for node in dag.nodes:
        rel, attr = _resolve_node(node, db)
        decl = db.decl(rel).attr(attr)
        if not decl.mutable and dag.parents(node):
            raise DanglingAttribute(f"immutable attribute {node} has incoming edges")


def _resolve_node(node: str, db: Database) -> tuple[str, str]:
    if "." in node:
        rel, attr = node.split(".", 1)
        db.decl(rel).attr(attr)
        return rel, attr
    owners = [r for r in db.schema if node in db.decl(r).attr_names]
    if not owners:
        raise DanglingAttribute(node)
    if len(owners) > 1:
        raise DanglingAttribute(f"ambiguous bare node {node}")
    return owners[0], node


# -- grounding ----------------------------------------------------------------

@dataclass
class GroundCausalGraph:
    """Per-cell instantiation of the attribute DAG over a concrete instance."""

    cells: list  # (relation, key, attr)
    parents: list  # adjacency by cell index
    children: list
    index: dict = field(repr=False)

    def edge_set(self) -> set:
        return {
            (self.cells[i], self.cells[j])
            for i in range(len(self.cells))
            for j in self.children[i]
        }

    @property
    def n_edges(self) -> int:
        return sum(len(c) for c in self.children)


def ground(dag: CausalDag, db: Database) -> GroundCausalGraph:
    """Instantiate one node per (tuple, attribute) cell and replicate edges.

    Same-tuple edges are copied per tuple; edges across relations follow the
    fk join; ``cross_tuple`` edges connect tuples whose anchor rows share the
    declared grouping value (all distinct pairs when no group is declared).
    """
    placement = {node: _resolve_node(node, db) for node in dag.nodes}
    cells, index = [], {}
    for node in dag.nodes:
        rel, attr = placement[node]
        for t in db.tuples(rel):
            cell = (rel, t.key, attr)
            index[cell] = len(cells)
            cells.append(cell)
    parents = [[] for _ in cells]
    children = [[] for _ in cells]

    def add(src_cell, dst_cell):
        i, j = index[src_cell], index[dst_cell]
        children[i].append(j)
        parents[j].append(i)

    for e in dag.edges:
        s_rel, s_attr = placement[e.src]
        d_rel, d_attr = placement[e.dst]
        if not e.cross_tuple:
            if s_rel == d_rel:
                for t in db.tuples(s_rel):
                    add((s_rel, t.key, s_attr), (d_rel, t.key, d_attr))
            else:
                for s_t, d_t in _fk_pairs(db, s_rel, d_rel):
                    add((s_rel, s_t.key, s_attr), (d_rel, d_t.key, d_attr))
        else:
            anchors = _anchor_map(db, s_rel, d_rel)
            group = e.group_by
            src_tuples = db.tuples(s_rel)
            for d_t, anchor in anchors:
                for s_t in src_tuples:
                    if s_t.key == anchor.key:
                        continue
                    if group is not None and s_t.get(group) != anchor.get(group):
                        continue
                    add((s_rel, s_t.key, s_attr), (d_rel, d_t.key, d_attr))

    cycle = _ground_cycle(cells, children)
    if cycle:
        raise CycleDetected(cycle)
    return GroundCausalGraph(cells=cells, parents=parents, children=children, index=index)


def _fk_pairs(db: Database, rel_a: str, rel_b: str):
    """Pairs (tuple of rel_a, tuple of rel_b) joined by the declared fk edge."""
    a_decl, b_decl = db.decl(rel_a), db.decl(rel_b)
    for attr, target in b_decl.fk:
        if target == rel_a:
            by_key = {t.key: t for t in db.tuples(rel_a)}
            for t in db.tuples(rel_b):
                anchor = by_key.get((t.get(attr),))
                if anchor is not None:
                    yield anchor, t
            return
    for attr, target in a_decl.fk:
        if target == rel_b:
            by_key = {t.key: t for t in db.tuples(rel_b)}
            for t in db.tuples(rel_a):
                other = by_key.get((t.get(attr),))
                if other is not None:
                    yield t, other
            return
    raise UnknownRelation(f"no fk edge joins {rel_a} and {rel_b}")


def _anchor_map(db: Database, src_rel: str, dst_rel: str):
    """Each destination tuple with its anchor tuple in the source relation."""
    if src_rel == dst_rel:
        return [(t, t) for t in db.tuples(dst_rel)]
    return [(d, a) for a, d in _fk_pairs(db, src_rel, dst_rel)]


def _ground_cycle(cells, children) -> list | None:
    indeg = [0] * len(cells)
    for i, cs in enumerate(children):
        for j in cs:
            indeg[j] += 1
    queue = [i for i, d in enumerate(indeg) if d == 0]
    seen = 0
    while queue:
        i = queue.pop()
        seen += 1
        for j in children[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if seen == len(cells):
        return None
    residue = [i for i, d in enumerate(indeg) if d > 0]
    start = residue[0]
    trail, node = [], start
    parents_in = {i: [j for j in residue if i in children[j]] for i in residue}
    while node not in trail:
        trail.append(node)
        node = parents_in[node][0]
    i = trail.index(node)
    return [cells[k] for k in trail[i:]] + [cells[node]]


# -- backdoor criterion --------------------------------------------------------

def _dconnected(dag: CausalDag, start, given: set) -> set:
    """Nodes d-connected to ``start`` given ``given`` (Bayes-ball reachability)."""
    anc_given = set(given)
    changed = True
    while changed:
        changed = False
        for n in dag.nodes:
            if n not in anc_given and any(c in anc_given for c in dag.children(n)):
                anc_given.add(n)
                changed = True
    visited, frontier = set(), [(start, "up")]
    while frontier:
        state = frontier.pop()
        if state in visited:
            continue
        visited.add(state)
        node, direction = state
        if direction == "up" and node not in given:
            for p in dag.parents(node):
                frontier.append((p, "up"))
            for c in dag.children(node):
                frontier.append((c, "down"))
        elif direction == "down":
            if node not in given:
                for c in dag.children(node):
                    frontier.append((c, "down"))
            if node in anc_given:
                for p in dag.parents(node):
                    frontier.append((p, "up"))
    return {n for n, _ in visited}


def blocks_backdoor_paths(dag: CausalDag, update_attrs, targets, given) -> bool:
    """True when ``given`` blocks every path into any update attribute that
    reaches a target (the confounding paths left after cutting causal edges)."""
    cut = dag.without_outgoing(set(update_attrs))
    given = set(given)
    for b in update_attrs:
        reach = _dconnected(cut, b, given)
        if any(t in reach for t in targets if t != b):
            return False
    return True


def backdoor_set(dag: CausalDag, update_attrs, targets) -> tuple:
    """Deterministic greedy backdoor set for the update attributes vs targets.

    Starts from every non-descendant of the updates and targets, then drops
    candidates one at a time in lexicographic order, keeping a removal only
    when all confounding paths stay blocked.  When even the full
    non-descendant set fails to block (a target upstream of an update), that
    conservative set is returned unchanged.
    """
    update_attrs = [update_attrs] if isinstance(update_attrs, str) else list(update_attrs)
    targets = [targets] if isinstance(targets, str) else list(targets)
    for a in update_attrs + targets:
        if a not in dag.nodes:
            raise UnknownAttribute(a)
    forbidden = set(update_attrs) | set(targets)
    forbidden |= dag.descendants(update_attrs) | dag.descendants(targets)
    candidates = sorted(n for n in dag.nodes if n not in forbidden)
    chosen = set(candidates)
    if not blocks_backdoor_paths(dag, update_attrs, targets, chosen):
        return tuple(candidates)
    for node in candidates:
        trial = chosen - {node}
        if blocks_backdoor_paths(dag, update_attrs, targets, trial):
            chosen = trial
    return tuple(sorted(chosen))


def canonical_dag(columns, update_attrs, targets) -> CausalDag:
    """No-background model: every other attribute points at each update
    attribute and each target."""
    update_attrs = [update_attrs] if isinstance(update_attrs, str) else list(update_attrs)
    targets = [targets] if isinstance(targets, str) else list(targets)
    if isinstance(columns, Database):
        rel = next(iter(columns.schema))
        columns = columns.decl(rel).attr_names
    special = set(update_attrs) | set(targets)
    edges = []
    for col in columns:
        if col in special:
            continue
        for dst in list(update_attrs) + [t for t in targets if t not in update_attrs]:
            edges.append(DagEdge(src=col, dst=dst))
    return CausalDag(nodes=tuple(columns), edges=tuple(edges))


# -- summary functions -----------------------------------------------------------

@dataclass(frozen=True)
class SummarySpec:
    """One aggregated alias: child = AGG(source.attr) joined via the fk attribute."""

    child: str
    agg: str
    source: str
    attr: str
    via: str


def summarize(db: Database, spec: SummarySpec, fact_tuple: Tuple):
    """Apply the aggregator over the fk-joined group of the fact tuple."""
    key_value = fact_tuple.key[0]
    group = [
        t.get(spec.attr) for t in db.tuples(spec.source) if t.get(spec.via) == key_value
    ]
    if not group:
        raise EmptyJoinGroup(f"{fact_tuple.relation}{fact_tuple.key}: no {spec.source} rows")
    if spec.agg == "AVG":
        return sum(group) / len(group)
    if spec.agg == "SUM":
        return sum(group)
    if spec.agg == "COUNT":
        return len(group)
    raise InvalidScm(f"unsupported summary aggregator {spec.agg}")


def augment_with_aggregates(dag: CausalDag, specs) -> CausalDag:
    """Insert one node per aggregated alias between the source attribute and
    its former children."""
    nodes = list(dag.nodes)
    edges = list(dag.edges)
    for spec in specs:
        source = f"{spec.source}.{spec.attr}"
        if source not in nodes:
            if spec.attr in nodes:
                source = spec.attr
            else:
                raise DanglingAttribute(source)
        if spec.child in nodes:
            raise DanglingAttribute(f"aggregate node {spec.child} already declared")
        former = [e for e in edges if e.src == source and not e.cross_tuple]
        edges = [e for e in edges if not (e.src == source and not e.cross_tuple)]
        nodes.append(spec.child)
        edges.append(DagEdge(src=source, dst=spec.child))
        edges.extend(DagEdge(src=spec.child, dst=e.dst) for e in former)
    return CausalDag(nodes=tuple(nodes), edges=tuple(edges))


def project_dag(dag: CausalDag, keep, rename=None) -> CausalDag:
    """Restrict to ``keep`` nodes, contracting directed paths whose interior
    nodes are dropped.  Cross-tuple edges are not projected."""
    keep = list(keep)
    keep_set = set(keep)
    rename = rename or {}
    edges = set()
    plain = [(e.src, e.dst) for e in dag.edges if not e.cross_tuple]
    for u in keep:
        stack = [d for s, d in plain if s == u]
        seen = set()
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            if v in keep_set:
                if v != u:
                    edges.add((u, v))
                continue
            stack.extend(d for s, d in plain if s == v)
    return CausalDag(
        nodes=tuple(rename.get(n, n) for n in keep),
        edges=tuple(
            DagEdge(src=rename.get(s, s), dst=rename.get(d, d)) for s, d in sorted(edges)
        ),
    )


# -- exact structural model --------------------------------------------------------

class Cpt:
    """Conditional probability table of one attribute given its parents.

    ``rows`` maps a tuple of parent values (in ``parents`` order) to a
    value -> probability mapping.
    """

    __slots__ = ("attr", "parents", "rows")

    def __init__(self, attr: str, parents, rows: dict):
        self.attr = attr
        self.parents = tuple(parents)
        self.rows = {tuple(k): dict(v) for k, v in rows.items()}

    def dist(self, parent_values: dict) -> dict:
        key = tuple(parent_values[p] for p in self.parents)
        try:
            return self.rows[key]
        except KeyError:
            raise InvalidScm(f"{self.attr}: no CPT row for parents {key}") from None


@dataclass(frozen=True)
class Scm:
    """Exact structural model: a same-tuple DAG plus one CPT per attribute.

    Homogeneity is structural: a single table per attribute serves every
    tuple.  Exogenous noise is marginalized into the CPT randomness.  DAG
    nodes without a CPT are *context* attributes (observed exogenous values,
    e.g. immutable columns); they must be roots and are never enumerated.
    """

    dag: CausalDag
    cpts: dict
    domains: dict

    def __post_init__(self):
        for attr in self.dag.nodes:
            if attr not in self.cpts:
                if self.dag.parents(attr):
                    raise InvalidScm(f"context attribute {attr} must be a root")
                continue
            cpt = self.cpts[attr]
            if tuple(sorted(cpt.parents)) != tuple(sorted(self.dag.parents(attr))):
                raise InvalidScm(f"{attr}: CPT parents {cpt.parents} disagree with the DAG")
            for key, dist in cpt.rows.items():
                total = sum(dist.values())
                if abs(total - 1.0) > 1e-12:
                    raise InvalidScm(f"{attr}: CPT row {key} sums to {total}")
                for v in dist:
                    if v not in self.domains[attr]:
                        raise InvalidScm(f"{attr}: CPT value {v!r} outside domain")

    @property
    def modeled(self) -> list:
        """Attributes with a CPT, the ones redistributed by interventions."""
        return [a for a in self.dag.nodes if a in self.cpts]

    def prob(self, attr: str, value, parent_values: dict) -> float:
        return self.cpts[attr].dist(parent_values).get(value, 0.0)

    def topo_attrs(self) -> list:
        return self.dag.topo_order()

    def sample_rows(self, n: int, seed: int) -> list:
        if len(self.modeled) != len(self.dag.nodes):
            raise InvalidScm("sampling requires a CPT for every attribute")
        rng = random.Random(seed)
        order = self.topo_attrs()
        rows = []
        for _ in range(n):
            values = {}
            for attr in order:
                dist = self.cpts[attr].dist(values)
                options = sorted(dist.keys(), key=lambda v: str(v))
                weights = [dist[v] for v in options]
                values[attr] = rng.choices(options, weights=weights, k=1)[0]
            rows.append(values)
        return rows


def scm_from_config(config: dict) -> Scm:
    domains = {a: tuple(vs) for a, vs in config["domains"].items()}
    edges = []
    cpts = {}
    for c in config["cpts"]:
        attr, parents = c["attr"], tuple(c.get("parents", ()))
        edges.extend(DagEdge(src=p, dst=attr) for p in parents)
        rows = {}
        for r in c["rows"]:
            key = tuple(r.get("given", ()))
            rows[key] = {_coerce(k, domains[attr]): p for k, p in r["dist"].items()}
        cpts[attr] = Cpt(attr=attr, parents=parents, rows=rows)
    dag = CausalDag(nodes=tuple(domains.keys()), edges=tuple(edges))
    return Scm(dag=dag, cpts=cpts, domains=domains)


def _coerce(raw, domain):
    """JSON object keys are strings; map them back onto the declared domain."""
    if raw in domain:
        return raw
    for v in domain:
        if str(v) == raw:
            return v
        try:
            if isinstance(v, (int, float)) and float(raw) == v:
                return v
        except ValueError:
            pass
    raise InvalidScm(f"CPT value {raw!r} not in domain {domain}")
