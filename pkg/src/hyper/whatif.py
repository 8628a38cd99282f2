"""What-if evaluation pipeline: USE -> WHEN -> UPDATE -> FOR -> OUTPUT.

The relevant view is materialized first (one row per update-relation tuple,
aggregated aliases computed through the summary functions), the FOR
predicate is normalized into disjoint conjuncts, and every view row
contributes either a deterministic indicator (rows the update cannot touch)
or an adjustment-chain probability.  Per-block sums recombine into COUNT,
SUM and AVG totals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .blocks import BlockPartition, decompose
from .causal import (
    CausalDag,
    SummarySpec,
    augment_with_aggregates,
    backdoor_set,
    canonical_dag,
    ground,
    project_dag,
    summarize,
)
from .datamodel import Database, HypotheticalUpdate, apply_update_directly
from .errors import EmptyJoinGroup, UnsupportedAggregate
from .estimator import ConditionalEstimator, PostUpdateProbQuery, Row, fit
from .hql.ast import And, POST, TRUE, WhatIfQuery, eval_pred, pred_attrs
from .hql.normalize import normalize_for
from .hql.parser import ResolvedUse, resolve_use, validate_whatif


@dataclass
class EvalOptions:
    avg_denominator: str = "expected"  # "expected" | "fixed"
    empty_groups: str = "skip"  # "skip" | "error"
    sample_size: int | None = None
    seed: int = 0
    alpha: float = 0.0


@dataclass
class RelevantView:
    """Single-table view over the update relation: fact attributes plus
    aggregated aliases; rows keyed by the fact key."""

    fact: str
    key_attrs: tuple
    columns: tuple  # query-visible column names
    rows: list  # estimator Rows carrying all fact attrs + aliases
    domains: dict
    summary_specs: tuple
    resolved: ResolvedUse
    skipped_keys: tuple = ()

    def row_map(self) -> dict:
        return {r.key: r for r in self.rows}


@dataclass
class WhatIfResult:
    value: float
    aggregate: str
    blocks: list  # {"id", "contribution", "mass"}
    backdoor: list
    warnings: list
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "aggregate": self.aggregate,
            "blocks": self.blocks,
            "backdoor": self.backdoor,
            "warnings": self.warnings,
            "diagnostics": self.diagnostics,
        }


def build_relevant_view(use, db: Database, empty_groups: str = "skip") -> RelevantView:
    """Materialize the USE view: group by the fact key, aggregate joined attrs.

    Rows carry every fact attribute (the adjustment sums may need columns the
    user did not select); ``columns`` lists the query-visible ones.  Fact rows
    whose join group is empty are skipped or rejected per ``empty_groups``.
    """
    resolved = resolve_use(use, db)
    decl = db.decl(resolved.fact)
    specs = tuple(
        SummarySpec(child=s.alias, agg=s.agg, source=s.table, attr=s.attr, via=resolved.fk_attr)
        for s in resolved.aggregates
    )
    rows, skipped = [], []
    for t in db.tuples(resolved.fact):
        values = dict(t.values)
        try:
            for spec in specs:
                values[spec.child] = summarize(db, spec, t)
        except EmptyJoinGroup:
            if empty_groups == "error":
                raise
            skipped.append(t.key)
            continue
        rows.append(Row(key=t.key, values=values))
    domains = {a.name: a.domain for a in decl.attrs}
    for spec in specs:
        observed = sorted({r.values[spec.child] for r in rows})
        declared = list(db.decl(spec.source).attr(spec.attr).domain)
        domains[spec.child] = tuple(sorted(set(observed) | set(declared), key=lambda v: (str(type(v)), v)))
    columns = tuple(resolved.columns)
    return RelevantView(
        fact=resolved.fact,
        key_attrs=decl.key,
        columns=columns,
        rows=rows,
        domains=domains,
        summary_specs=specs,
        resolved=resolved,
        skipped_keys=tuple(skipped),
    )


def resolve_when(when, view: RelevantView) -> frozenset:
    """Selection S: keys of view rows satisfying the WHEN predicate (all rows
    when absent)."""
    if when is None:
        return frozenset(r.key for r in view.rows)
    return frozenset(r.key for r in view.rows if eval_pred(when, r.values, r.values))


def view_level_dag(dag: CausalDag | None, view: RelevantView, update_attrs, targets) -> CausalDag:
    """Same-row causal structure over the view columns.

    With no background DAG the canonical no-background model is assumed.
    Otherwise the attribute DAG is augmented with the view's aggregate nodes
    and contracted onto the view columns (cross-tuple edges influence the
    block structure only, not the per-row chain).
    """
    keep_columns = list(view.domains.keys())
    if dag is None:
        return canonical_dag(keep_columns, update_attrs, targets)
    augmented = augment_with_aggregates(dag, view.summary_specs)
    keep, rename = [], {}
    for col in keep_columns:
        qualified = f"{view.fact}.{col}"
        if qualified in augmented.nodes:
            keep.append(qualified)
            rename[qualified] = col
        elif col in augmented.nodes:
            keep.append(col)
    return project_dag(augmented, keep, rename)


def _view_blocks(partition: BlockPartition | None, view: RelevantView, dag, db) -> dict:
    """Block id per view row key."""
    if partition is None:
        if dag is None:
            return {r.key: i for i, r in enumerate(view.rows)}
        partition = decompose(ground(dag, db), db)
    return {r.key: partition.of((view.fact, r.key)) for r in view.rows}


def _flatten_pre(conjunct_pre, when) -> tuple:
    parts = conjunct_pre.parts if isinstance(conjunct_pre, And) else (conjunct_pre,)
    factors = tuple(p for p in parts if p != TRUE)
    if when is not None:
        factors += (when,)
    return factors


def eval_whatif(
    q: WhatIfQuery,
    db: Database,
    dag: CausalDag | None = None,
    est: ConditionalEstimator | None = None,
    scm=None,
    options: EvalOptions | None = None,
    partition: BlockPartition | None = None,
) -> WhatIfResult:
    """Expected value of the what-if query under the post-update distribution.

    COUNT adds one adjustment-chain probability per qualified row and
    conjunct; SUM weights the output-attribute values by their joint
    probability with the conjunct; AVG divides the SUM form by the expected
    qualified count (or the fixed row count, per options).
    """
    options = options or EvalOptions()
    agg, y_attr = q.output
    if agg not in ("COUNT", "SUM", "AVG"):
        raise UnsupportedAggregate(agg)
    validate_whatif(q, db, dag)
    view = build_relevant_view(q.use, db, empty_groups=options.empty_groups)
    selection = resolve_when(q.when, view)
    update_attrs = [a for a, _ in q.updates]
    for_targets = pred_attrs(q.for_pred, POST) if q.for_pred is not None else set()
    targets = sorted(for_targets | ({y_attr} if y_attr else set()))
    vdag = view_level_dag(dag, view, update_attrs, targets or update_attrs)
    dnf = normalize_for(q.for_pred, view.domains)
    if est is None:
        est = fit(
            view,
            scm=scm,
            sample_size=options.sample_size,
            seed=options.seed,
            alpha=options.alpha,
        )
    row_block = _view_blocks(partition, view, dag, db)

    chain_queries = []
    for conjunct in dnf.conjuncts:
        post_attrs = sorted(pred_attrs(conjunct.post, POST) | ({y_attr} if y_attr else set()))
        bset = backdoor_set(vdag, update_attrs, post_attrs) if q.updates and post_attrs else ()
        chain_queries.append(
            (
                conjunct,
                PostUpdateProbQuery(
                    post_pattern=conjunct.post,
                    pre_factors=_flatten_pre(conjunct.pre, q.when),
                    updates=tuple(q.updates),
                    backdoor=tuple(bset),
                    selection=selection,
                ),
            )
        )

    # contributions accumulate flat, in row order, and totals come from fsum:
    # the value is bit-identical however the rows are partitioned into blocks
    count_terms: list = []
    sum_terms: list = []
    term_block: list = []
    skipped_terms = 0
    deterministic_rows = 0
    need_sum = agg in ("SUM", "AVG")
    for row in view.rows:
        block = row_block[row.key]
        targeted = bool(q.updates) and row.key in selection
        if not targeted:
            deterministic_rows += 1
        for conjunct, cq in chain_queries:
            if not eval_pred(conjunct.pre, row.values, row.values):
                continue
            if targeted:
                p, ydist, skipped = est.chain_terms(cq, y_attr if need_sum else None)
                skipped_terms += skipped
                count_terms.append(p)
                sum_terms.append(math.fsum(y * pv for y, pv in ydist.items()) if need_sum else 0.0)
            else:
                hit = eval_pred(conjunct.post, row.values, row.values)
                count_terms.append(1.0 if hit else 0.0)
                sum_terms.append(row.values[y_attr] if hit and need_sum else 0.0)
            term_block.append(block)

    total_count = math.fsum(count_terms)
    total_sum = math.fsum(sum_terms)
    block_count: dict = {}
    block_sum: dict = {}
    for block, c, s in zip(term_block, count_terms, sum_terms):
        block_count.setdefault(block, []).append(c)
        block_sum.setdefault(block, []).append(s)
    block_count = {b: math.fsum(v) for b, v in block_count.items() if any(v)}
    block_sum = {b: math.fsum(v) for b, v in block_sum.items() if any(v)}
    warnings = []
    if skipped_terms:
        warnings.append(f"skipped {skipped_terms} zero-support adjustment terms")
    if view.skipped_keys:
        warnings.append(f"skipped {len(view.skipped_keys)} fact rows with empty join groups")

    if agg == "COUNT":
        value = total_count
    elif agg == "SUM":
        value = total_sum
    else:
        denom = total_count if options.avg_denominator == "expected" else float(len(view.rows))
        if denom <= 0.0:
            warnings.append("AVG over zero expected qualified mass; returning 0.0")
            value = 0.0
        else:
            value = total_sum / denom

    blocks_json = _blocks_json(agg, block_count, block_sum)
    backdoor_union = sorted({c for _, cq in chain_queries for c in cq.backdoor})
    diagnostics = {
        "conjuncts": [
            {
                "post_attrs": sorted(pred_attrs(cq.post_pattern, POST)),
                "backdoor": list(cq.backdoor),
            }
            for _, cq in chain_queries
        ],
        "blocks_used": len(blocks_json),
        "deterministic_rows": deterministic_rows,
        "selection_size": len(selection),
        "support_sizes": {
            ",".join(attrs): len(est.support(attrs))
            for attrs in {tuple(update_attrs + list(cq.backdoor)) for _, cq in chain_queries}
            if attrs
        },
        "estimator": est.backing,
    }
    return WhatIfResult(
        value=value,
        aggregate=agg,
        blocks=blocks_json,
        backdoor=backdoor_union,
        warnings=warnings,
        diagnostics=diagnostics,
    )


def _blocks_json(agg, block_count: dict, block_sum: dict) -> list:
    out = []
    for block in sorted(set(block_count) | set(block_sum), key=repr):
        mass = block_count.get(block, 0.0)
        contribution = block_sum.get(block, 0.0) if agg in ("SUM", "AVG") else mass
        out.append({"id": block, "contribution": contribution, "mass": mass})
    return out


def eval_indep_baseline(q: WhatIfQuery, db: Database, options: EvalOptions | None = None) -> float:
    """Dependency-free reading: write the update values, recompute the view,
    and evaluate the query deterministically."""
    options = options or EvalOptions()
    agg, y_attr = q.output
    validate_whatif(q, db)
    view = build_relevant_view(q.use, db, empty_groups=options.empty_groups)
    selection = resolve_when(q.when, view)
    updated = db
    for attr, fn in q.updates:
        updated = apply_update_directly(
            updated,
            HypotheticalUpdate(relation=view.fact, attr=attr, fn=fn, selection=selection),
        )
    post_view = build_relevant_view(q.use, updated, empty_groups=options.empty_groups)
    post_rows = post_view.row_map()
    for_pred = q.for_pred if q.for_pred is not None else TRUE
    qualified = []
    for row in view.rows:
        post = post_rows.get(row.key)
        if post is None:
            continue
        if eval_pred(for_pred, row.values, post.values):
            qualified.append(post.values[y_attr] if y_attr is not None else 1.0)
    if agg == "COUNT":
        return float(len(qualified))
    if agg == "SUM":
        return float(sum(qualified))
    if agg == "AVG":
        if options.avg_denominator == "fixed":
            return sum(qualified) / len(view.rows) if view.rows else 0.0
        return sum(qualified) / len(qualified) if qualified else 0.0
    raise UnsupportedAggregate(agg)
