"""Brute-force ground truth: enumerate post-update possible worlds of small
instances under an exact structural model and take expectations directly.

Worlds are enumerated per independent tuple, Definition-style: every
combination of mutable-attribute values is a candidate world of the tuple;
its probability is the chained table mass when the combination agrees with
the pinned cells (updated cells at their forced values, non-descendants at
observed values) and zero otherwise.  Cross-tuple dependency declarations
are out of the oracle's scope: it refuses them rather than approximate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .causal import Scm
from .datamodel import Database
from .errors import EmptyCandidateSet, EvaluationError, WorldCapExceeded
from .estimator import _update_result
from .hql.ast import TRUE, WhatIfQuery, eval_pred

WORLD_CAP = 10**7


@dataclass(frozen=True)
class WorldDistribution:
    """Support of the post-update distribution: (world, probability) pairs.

    A world maps each tuple ref to a full attribute assignment.  Probabilities
    sum to one; zero-probability worlds are omitted.
    """

    worlds: tuple  # (dict ref -> values, float)

    def total(self) -> float:
        return sum(p for _, p in self.worlds)


def _single_relation(db: Database) -> str:
    names = list(db.schema)
    if len(names) != 1:
        raise EvaluationError("the oracle enumerates single-relation instances")
    return names[0]


def _tuple_worlds(scm: Scm, values: dict, interventions: dict, mutable: list) -> list:
    """All (assignment, probability>0) worlds of one tuple."""
    pinned = dict(values)
    pinned.update(interventions)
    desc = (
        scm.dag.descendants(interventions.keys()) & set(mutable) - set(interventions)
        if interventions
        else set()
    )
    out = []
    for combo in itertools.product(*[scm.domains[a] for a in mutable]):
        world = dict(values)
        world.update(dict(zip(mutable, combo)))
        # agreement outside the redistributed cells
        if any(world[a] != pinned[a] for a in world if a not in desc):
            continue
        prob = 1.0
        for a in desc:
            prob *= scm.prob(a, world[a], world)
            if prob == 0.0:
                break
        if prob > 0.0:
            out.append((world, prob))
    return out


def _per_tuple_worlds(scm: Scm, db_rows, updates, selection) -> list:
    worlds = []
    for key, values in db_rows:
        interventions = {}
        if key in selection:
            for attr, fn in updates:
                interventions[attr] = _update_result(fn, values[attr], scm.domains[attr])
        worlds.append((key, _tuple_worlds(scm, values, interventions, scm.modeled)))
    return worlds


def _check_same_tuple(scm: Scm):
    for e in scm.dag.edges:
        if e.cross_tuple:
            raise EvaluationError("oracle does not enumerate cross-tuple dependencies")


def enumerate_pwd(scm: Scm, db: Database, updates=(), selection=frozenset(), cap: int = WORLD_CAP) -> WorldDistribution:
    """Materialize the full product distribution over tuple worlds."""
    _check_same_tuple(scm)
    rel = _single_relation(db)
    rows = [(t.key, dict(t.values)) for t in db.tuples(rel)]
    per_tuple = _per_tuple_worlds(scm, rows, tuple(updates), frozenset(selection))
    count = math.prod(len(ws) for _, ws in per_tuple) if per_tuple else 0
    if count > cap:
        raise WorldCapExceeded(f"{count} worlds exceed the cap of {cap}")
    worlds = []
    for combo in itertools.product(*[ws for _, ws in per_tuple]):
        assignment = {
            (rel, key): world for (key, _), (world, _) in zip(per_tuple, combo)
        }
        prob = math.prod(p for _, p in combo)
        worlds.append((assignment, prob))
    return WorldDistribution(worlds=tuple(worlds))


def oracle_eval(q: WhatIfQuery, scm: Scm, db: Database, avg_denominator: str = "expected", cap: int = WORLD_CAP) -> float:
    """Expected query value straight from the definition.

    COUNT and SUM are per-tuple linear, so each tuple's worlds are enumerated
    independently and expectations added.  AVG follows the engine's
    denominator policy: expected qualified sum over expected qualified count
    (``expected``) or over the row count (``fixed``).
    """
    from .whatif import build_relevant_view, resolve_when

    _check_same_tuple(scm)
    view = build_relevant_view(q.use, db)
    selection = resolve_when(q.when, view)
    rows = [(r.key, dict(r.values)) for r in view.rows]
    work = len(rows) * math.prod(len(scm.domains[a]) for a in scm.modeled)
    if work > cap:
        raise WorldCapExceeded(f"{work} tuple-world evaluations exceed the cap of {cap}")
    per_tuple = _per_tuple_worlds(scm, rows, q.updates, selection)

    agg, y_attr = q.output
    for_pred = q.for_pred if q.for_pred is not None else TRUE
    exp_count = exp_sum = 0.0
    by_key = dict(rows)
    for key, worlds in per_tuple:
        pre = by_key[key]
        for world, p in worlds:
            if eval_pred(for_pred, pre, world):
                exp_count += p
                if y_attr is not None:
                    exp_sum += p * world[y_attr]
    if agg == "COUNT":
        return exp_count
    if agg == "SUM":
        return exp_sum
    if agg == "AVG":
        denom = exp_count if avg_denominator == "expected" else float(len(rows))
        return exp_sum / denom if denom > 0 else 0.0
    raise EvaluationError(f"unsupported aggregate {agg}")


def oracle_howto(q, scm: Scm, db: Database, options=None, cap: int = WORLD_CAP):
    """Exhaustive baseline: evaluate every candidate update combination.

    Returns ``(plan, value)`` where the plan maps each attribute to an update
    function or None.  Ties break on the lexicographic plan rank (no change
    before candidates, then candidate order).
    """
    from .howto import HowToOptions, enumerate_candidates
    from .hql.ast import WhatIfQuery as WQ

    options = options or HowToOptions()
    grid = enumerate_candidates(q, db, options)
    if all(not c for c in grid.candidates.values()):
        raise EmptyCandidateSet("no permissible updates for any attribute")
    sense, agg, attr = q.objectives[0]
    best = None  # (value, rank, plan)
    choice_lists = [
        [(0, None)] + [(i + 1, fn) for i, fn in enumerate(grid.candidates[a])]
        for a in grid.attrs
    ]
    for combo in itertools.product(*choice_lists):
        rank = tuple(i for i, _ in combo)
        updates = tuple(
            (a, fn) for a, (_, fn) in zip(grid.attrs, combo) if fn is not None
        )
        candidate = WQ(use=q.use, when=q.when, updates=updates, output=(agg, attr), for_pred=q.for_pred)
        value = oracle_eval(candidate, scm, db, cap=cap)
        score = value if sense == "max" else -value
        if best is None or score > best[0] + 1e-12 or (
            abs(score - best[0]) <= 1e-12 and rank < best[1]
        ):
            best = (score, rank, dict(zip(grid.attrs, (fn for _, fn in combo))), value)
    _, _, plan, value = best
    return plan, value
