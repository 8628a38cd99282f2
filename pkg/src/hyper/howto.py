"""How-to answering: enumerate permissible updates, score each candidate with
a what-if evaluation, assemble a 0/1 integer program with at-most-one groups,
and solve it exactly by branch and bound.

The objective is linear in the per-candidate indicator variables: each
coefficient is the candidate's what-if value minus the no-change baseline.
That separable construction is sound when the update attributes do not lie
on a common causal path, which the dialect validator enforces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .causal import CausalDag
from .datamodel import Database
from .errors import EmptyCandidateSet, Infeasible
from .estimator import _update_result
from .hql.ast import HowToQuery, InLimit, L1Limit, RangeLimit, UpdateFn, WhatIfQuery
from .hql.parser import validate_howto
from .whatif import EvalOptions, build_relevant_view, eval_whatif, resolve_when

TOL = 1e-9


@dataclass
class HowToOptions:
    scale_steps: tuple = ()
    shift_steps: tuple = ()


@dataclass
class CandidateGrid:
    attrs: tuple
    candidates: dict  # attr -> list[UpdateFn], every entry valid for all selected rows


@dataclass
class LinearConstraint:
    terms: dict  # (attr, candidate index) -> coefficient
    op: str  # "<=" | ">="
    rhs: float


@dataclass
class IPModel:
    """Binary choice per candidate, at most one choice per attribute."""

    attrs: tuple
    coeffs: dict  # (attr, i) -> objective coefficient
    sizes: dict  # attr -> number of candidates
    sense: str  # "max" | "min"
    constant: float = 0.0
    constraints: list = field(default_factory=list)


@dataclass
class UpdatePlan:
    choices: dict  # attr -> UpdateFn | None
    objective: float
    stages: list = field(default_factory=list)

    def to_json(self) -> dict:
        plan = {}
        for attr, fn in self.choices.items():
            if fn is None:
                plan[attr] = "no change"
            else:
                plan[attr] = {"kind": fn.kind, "const": fn.const}
        return {"plan": plan, "objective": self.objective, "stages": self.stages}


def enumerate_candidates(q: HowToQuery, db: Database, options: HowToOptions | None = None) -> CandidateGrid:
    """Permissible update functions per attribute.

    SET candidates run over the declared domain values inside every range and
    IN-set limit; SCALE and SHIFT candidates come from the configured step
    lists.  A candidate survives only if its result satisfies all limits and
    L1 budgets for every selected row.
    """
    options = options or HowToOptions()
    resolved = validate_howto(q, db)
    view = build_relevant_view(q.use, db)
    selection = resolve_when(q.when, view)
    sel_rows = [r for r in view.rows if r.key in selection]
    decl = db.decl(resolved.fact)

    lows, highs, in_sets, thetas = {}, {}, {}, {}
    for limit in q.limits:
        if isinstance(limit, RangeLimit):
            if limit.low is not None:
                lows[limit.attr] = max(lows.get(limit.attr, limit.low), limit.low)
            if limit.high is not None:
                highs[limit.attr] = min(highs.get(limit.attr, limit.high), limit.high)
        elif isinstance(limit, InLimit):
            prev = in_sets.get(limit.attr)
            values = set(limit.values) if prev is None else prev & set(limit.values)
            in_sets[limit.attr] = values
        elif isinstance(limit, L1Limit):
            thetas[limit.attr] = min(thetas.get(limit.attr, limit.theta), limit.theta)

    def admissible(attr, fn) -> bool:
        domain = decl.attr(attr).domain
        for row in sel_rows:
            result = _update_result(fn, row.values[attr], domain)
            if attr in lows and result < lows[attr]:
                return False
            if attr in highs and result > highs[attr]:
                return False
            if attr in in_sets and result not in in_sets[attr]:
                return False
            if attr in thetas and abs(result - row.values[attr]) > thetas[attr]:
                return False
        return True

    candidates = {}
    for attr in q.howto_attrs:
        domain = decl.attr(attr).domain
        fns = [UpdateFn(kind="set", const=v) for v in domain]
        if decl.attr(attr).numeric:
            fns += [UpdateFn(kind="scale", const=s) for s in options.scale_steps]
            fns += [UpdateFn(kind="shift", const=s) for s in options.shift_steps]
        candidates[attr] = [fn for fn in fns if sel_rows and admissible(attr, fn)]
    if all(not c for c in candidates.values()):
        raise EmptyCandidateSet("no permissible updates for any attribute")
    return CandidateGrid(attrs=tuple(q.howto_attrs), candidates=candidates)


def _candidate_query(q: HowToQuery, updates, objective) -> WhatIfQuery:
    _, agg, attr = objective
    return WhatIfQuery(
        use=q.use, when=q.when, updates=tuple(updates), output=(agg, attr), for_pred=q.for_pred
    )


def score_candidates(
    grid: CandidateGrid,
    q: HowToQuery,
    db: Database,
    dag: CausalDag | None,
    objective,
    est=None,
    scm=None,
    options: EvalOptions | None = None,
) -> tuple[float, dict]:
    """No-change baseline and per-candidate marginal objective contributions."""
    baseline = eval_whatif(
        _candidate_query(q, (), objective), db, dag, est=est, scm=scm, options=options
    ).value
    coeffs = {}
    for attr in grid.attrs:
        for i, fn in enumerate(grid.candidates[attr]):
            value = eval_whatif(
                _candidate_query(q, ((attr, fn),), objective),
                db, dag, est=est, scm=scm, options=options,
            ).value
            coeffs[(attr, i)] = value - baseline
    return baseline, coeffs


def solve_ip(m: IPModel) -> tuple[dict, float]:
    """Exact branch and bound over the choice groups.

    Groups are assigned in attribute order; within a group, "no change" is
    explored first and candidates in listed order, so equal-objective plans
    resolve to the lexicographically least rank vector.  The bound adds each
    remaining group's best admissible coefficient.
    """
    sign = 1.0 if m.sense == "max" else -1.0
    attrs = list(m.attrs)
    best_future = []
    for idx in range(len(attrs) + 1):
        tail = attrs[idx:]
        best_future.append(
            sum(
                max([0.0] + [sign * m.coeffs[(a, i)] for i in range(m.sizes[a])])
                for a in tail
            )
        )

    best: dict = {"choice": None, "score": None}

    def constraint_feasible(partial: dict, depth: int) -> bool:
        # optimistic bound per constraint over unassigned groups
        for c in m.constraints:
            fixed = sum(
                c.terms.get((a, i), 0.0)
                for a, i in partial.items()
                if i is not None
            )
            rest_min = rest_max = 0.0
            for a in attrs[depth:]:
                vals = [c.terms.get((a, i), 0.0) for i in range(m.sizes[a])] + [0.0]
                rest_min += min(vals)
                rest_max += max(vals)
            if c.op == "<=" and fixed + rest_min > c.rhs + TOL:
                return False
            if c.op == ">=" and fixed + rest_max < c.rhs - TOL:
                return False
        return True

    def walk(depth: int, partial: dict, score: float):
        if best["score"] is not None and score + best_future[depth] <= best["score"] + TOL:
            return
        if not constraint_feasible(partial, depth):
            return
        if depth == len(attrs):
            if best["score"] is None or score > best["score"] + TOL:
                best["score"] = score
                best["choice"] = dict(partial)
            return
        attr = attrs[depth]
        for choice in [None] + list(range(m.sizes[attr])):
            partial[attr] = choice
            gain = 0.0 if choice is None else sign * m.coeffs[(attr, choice)]
            walk(depth + 1, partial, score + gain)
        del partial[attr]

    walk(0, {}, 0.0)
    if best["choice"] is None:
        raise Infeasible("no assignment satisfies the constraints")
    objective = m.constant + sign * best["score"]
    return best["choice"], objective


def _build_model(grid: CandidateGrid, sense: str, baseline: float, coeffs: dict) -> IPModel:
    return IPModel(
        attrs=grid.attrs,
        coeffs=coeffs,
        sizes={a: len(grid.candidates[a]) for a in grid.attrs},
        sense=sense,
        constant=baseline,
    )


def _to_plan(grid: CandidateGrid, choice: dict, objective: float) -> UpdatePlan:
    choices = {
        attr: (None if choice[attr] is None else grid.candidates[attr][choice[attr]])
        for attr in grid.attrs
    }
    return UpdatePlan(choices=choices, objective=objective)


def solve_howto(
    q: HowToQuery,
    db: Database,
    dag: CausalDag | None = None,
    est=None,
    scm=None,
    options: EvalOptions | None = None,
    howto_options: HowToOptions | None = None,
) -> UpdatePlan:
    """Single-objective pipeline: enumerate, score, assemble the IP, solve,
    and re-verify the chosen plan with one combined what-if evaluation."""
    grid = enumerate_candidates(q, db, howto_options)
    sense, agg, attr = q.objectives[0]
    baseline, coeffs = score_candidates(grid, q, db, dag, q.objectives[0], est=est, scm=scm, options=options)
    model = _build_model(grid, sense, baseline, coeffs)
    choice, objective = solve_ip(model)
    plan = _to_plan(grid, choice, objective)
    updates = tuple((a, fn) for a, fn in plan.choices.items() if fn is not None)
    verified = eval_whatif(
        _candidate_query(q, updates, q.objectives[0]), db, dag, est=est, scm=scm, options=options
    ).value
    plan.stages.append(
        {"objective": f"{sense} {agg}({attr})", "value": objective, "verified": verified}
    )
    return plan


def solve_lexicographic(
    q: HowToQuery,
    db: Database,
    dag: CausalDag | None = None,
    est=None,
    scm=None,
    options: EvalOptions | None = None,
    howto_options: HowToOptions | None = None,
) -> UpdatePlan:
    """Preference-ordered objectives: each solved stage is carried forward as
    an equality constraint (within tolerance) on later stages."""
    grid = enumerate_candidates(q, db, howto_options)
    constraints: list = []
    plan = None
    stages = []
    for objective in q.objectives:
        sense, agg, attr = objective
        baseline, coeffs = score_candidates(grid, q, db, dag, objective, est=est, scm=scm, options=options)
        model = _build_model(grid, sense, baseline, coeffs)
        model.constraints = list(constraints)
        choice, value = solve_ip(model)
        plan = _to_plan(grid, choice, value)
        stages.append({"objective": f"{sense} {agg}({attr})", "value": value})
        achieved = value - baseline  # in coefficient space
        constraints.append(LinearConstraint(terms=dict(coeffs), op="<=", rhs=achieved + TOL))
        constraints.append(LinearConstraint(terms=dict(coeffs), op=">=", rhs=achieved - TOL))
    plan.stages = stages
    return plan


def solve_cost_mode(
    q: HowToQuery,
    target: tuple,
    db: Database,
    dag: CausalDag | None = None,
    est=None,
    scm=None,
    options: EvalOptions | None = None,
    howto_options: HowToOptions | None = None,
) -> UpdatePlan:
    """Swap roles: minimize the total L1 deviation subject to the aggregate
    meeting ``target`` = (">=" | "<=", threshold)."""
    op, threshold = target
    grid = enumerate_candidates(q, db, howto_options)
    baseline, coeffs = score_candidates(grid, q, db, dag, q.objectives[0], est=est, scm=scm, options=options)

    view = build_relevant_view(q.use, db)
    selection = resolve_when(q.when, view)
    sel_rows = [r for r in view.rows if r.key in selection]
    decl = db.decl(view.fact)
    costs = {}
    for attr in grid.attrs:
        domain = decl.attr(attr).domain
        for i, fn in enumerate(grid.candidates[attr]):
            costs[(attr, i)] = float(
                sum(abs(_update_result(fn, r.values[attr], domain) - r.values[attr]) for r in sel_rows)
            )
    model = IPModel(
        attrs=grid.attrs,
        coeffs=costs,
        sizes={a: len(grid.candidates[a]) for a in grid.attrs},
        sense="min",
        constant=0.0,
        constraints=[LinearConstraint(terms=dict(coeffs), op=op, rhs=threshold - baseline)],
    )
    choice, cost = solve_ip(model)
    plan = _to_plan(grid, choice, cost)
    plan.stages.append({"objective": "min total L1 cost", "value": cost, "threshold": threshold})
    return plan
