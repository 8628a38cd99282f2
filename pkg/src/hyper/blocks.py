"""Block-independent decomposition: partition tuples so that no ground-graph
path crosses block boundaries."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .causal import CausalDag, GroundCausalGraph
from .datamodel import Database


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple  # each block: tuple of (relation, key) refs, sorted
    index: dict  # ref -> block position

    def of(self, ref) -> int:
        return self.index[ref]

    def same_block(self, ref_a, ref_b) -> bool:
        return self.index[ref_a] == self.index[ref_b]

    def to_json(self) -> dict:
        return {
            "blocks": [
                {"id": i, "tuples": [f"{rel}:{'|'.join(map(str, key))}" for rel, key in block]}
                for i, block in enumerate(self.blocks)
            ]
        }


def decompose(g: GroundCausalGraph, db: Database) -> BlockPartition:
    """Connected components of the undirected ground graph, merged to tuple
    granularity.  Linear in cells + edges (BFS over the undirected closure)."""
    n = len(g.cells)
    comp = [-1] * n
    n_comp = 0
    for start in range(n):
        if comp[start] != -1:
            continue
        comp[start] = n_comp
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in g.parents[i] + g.children[i]:
                if comp[j] == -1:
                    comp[j] = n_comp
                    queue.append(j)
        n_comp += 1

    # merge cell components that touch the same tuple
    merge = _UnionFind(n_comp)
    tuple_comp = {}
    for i, (rel, key, _attr) in enumerate(g.cells):
        ref = (rel, key)
        if ref in tuple_comp:
            merge.union(tuple_comp[ref], comp[i])
        else:
            tuple_comp[ref] = comp[i]

    groups = {}
    for t in db.all_tuples():
        ref = t.ref
        root = ("cells", merge.find(tuple_comp[ref])) if ref in tuple_comp else ("lone", ref)
        groups.setdefault(root, []).append(ref)

    blocks = sorted(tuple(sorted(refs)) for refs in groups.values())
    index = {ref: i for i, block in enumerate(blocks) for ref in block}
    return BlockPartition(blocks=tuple(blocks), index=index)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int):
        self.parent[self.find(i)] = self.find(j)


def single_block_partition(db: Database) -> BlockPartition:
    refs = tuple(sorted(t.ref for t in db.all_tuples()))
    return BlockPartition(blocks=(refs,), index={r: 0 for r in refs})


def blocks_consistent_with_view(partition: BlockPartition, view, db: Database, dag: CausalDag) -> bool:
    """Check that tuples share a block exactly when their view rows do.

    Each base tuple corresponds to the view row carrying its fact key (fact
    tuples directly, joined tuples through the fk).  Tuples without a view
    row (skipped empty join groups) are ignored.
    """
    view_partition = _decompose_view(view, dag)
    mapping = _view_correspondence(view, db)
    refs = [ref for ref in mapping if mapping[ref] in view_partition]
    for i, a in enumerate(refs):
        for b in refs[i + 1 :]:
            base_same = partition.same_block(a, b)
            view_same = view_partition[mapping[a]] == view_partition[mapping[b]]
            if base_same != view_same:
                return False
    return True


def _view_correspondence(view, db: Database) -> dict:
    mapping = {}
    row_keys = {r.key for r in view.rows}
    for t in db.tuples(view.fact):
        if t.key in row_keys:
            mapping[t.ref] = t.key
    for spec in view.summary_specs:
        for t in db.tuples(spec.source):
            key = (t.get(spec.via),)
            if key in row_keys:
                mapping[t.ref] = key
    return mapping


def _decompose_view(view, dag: CausalDag) -> dict:
    """Row-level partition of the view under its induced graph: rows connect
    only through cross-tuple edges mapped onto view columns."""
    alias_of = {f"{s.source}.{s.attr}": s.child for s in view.summary_specs}
    alias_of.update({s.attr: s.child for s in view.summary_specs})

    def to_column(node: str) -> str | None:
        if node in alias_of:
            return alias_of[node]
        bare = node.split(".", 1)[1] if "." in node else node
        return bare if bare in view.columns or bare in view.domains else None

    uf = _UnionFind(len(view.rows))
    pos = {row.key: i for i, row in enumerate(view.rows)}
    for e in dag.edges:
        if not e.cross_tuple:
            continue
        if to_column(e.src) is None or to_column(e.dst) is None:
            continue
        for i, a in enumerate(view.rows):
            for b in view.rows[i + 1 :]:
                if e.group_by is None or a.values.get(e.group_by) == b.values.get(e.group_by):
                    uf.union(pos[a.key], pos[b.key])
    return {row.key: uf.find(i) for i, row in enumerate(view.rows)}
