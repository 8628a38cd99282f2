"""Conditional probability estimation and post-update probabilities.

An estimator is fitted once over homogeneous rows (a relation or a relevant
view) and answers two kinds of questions:

* plain conditionals ``Pr(target | given)`` -- frequency counts, optionally
  Laplace-smoothed, or exact marginalization of a structural model;
* post-update probabilities of a (pre-condition, post-condition) pair under
  an update, via the adjustment identity: the conditioning side is summed
  over the supported value combinations of the update attributes and a
  backdoor set, weighting outcome terms by the observed frequency of each
  combination.

With the exact structural backing the outcome term of each cell is the
average interventional probability of that cell's rows (non-descendants of
the updated attributes pinned to row values, descendants marginalized
through the tables), which reproduces brute-force world enumeration exactly.
The frequency backing estimates the same term from rows that already carry
the post-update value, as a plain regression-free conditional.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .causal import Scm
from .datamodel import Database
from .errors import EmptySample, InvalidBackdoorSet, InvalidScm, ZeroSupport
from .hql.ast import PRE, eval_pred, pred_attrs


@dataclass(frozen=True)
class Row:
    key: tuple
    values: dict


@dataclass(frozen=True)
class PostUpdateProbQuery:
    """One adjustment-chain evaluation: a disjoint conjunct under an update."""

    post_pattern: object  # post-only predicate
    pre_factors: tuple  # conjunction factors over current values
    updates: tuple  # (attr, UpdateFn)
    backdoor: tuple
    selection: frozenset  # keys targeted by the update


def _update_result(fn, value, domain):
    if fn.kind == "set":
        return fn.const
    ordered = [v for v in domain if isinstance(v, (int, float)) and not isinstance(v, bool)]
    raw = fn.const * value if fn.kind == "scale" else fn.const + value
    return min(ordered, key=lambda d: (abs(d - raw), d))


class ConditionalEstimator:
    """Homogeneous conditional-probability tables with a non-zero-support index."""

    def __init__(self, rows, domains, backing, scm: Scm | None = None, alpha: float = 0.0):
        if not rows:
            raise EmptySample("estimator fitted on zero rows")
        self.rows = list(rows)
        self.domains = dict(domains)
        self.backing = backing
        self.scm = scm
        self.alpha = alpha
        self._support: dict = {}
        self._chain_cache: dict = {}
        self._intervene_cache: dict = {}

    # -- support index --------------------------------------------------------

    def support(self, attrs: tuple) -> dict:
        """Observed value combinations of ``attrs`` with their counts."""
        attrs = tuple(attrs)
        if attrs not in self._support:
            counts: dict = {}
            for r in self.rows:
                combo = tuple(r.values[a] for a in attrs)
                counts[combo] = counts.get(combo, 0) + 1
            self._support[attrs] = counts
        return self._support[attrs]

    # -- plain conditionals -----------------------------------------------------

    def cond_prob(self, target: tuple, given: dict | None = None) -> float:
        """Pr(target attr = value | given assignment)."""
        given = dict(given or {})
        attr, value = target
        if self.backing == "exact":
            p_given, p_both = self._exact_mass(given, target)
            if p_given <= 0.0:
                raise ZeroSupport(given)
            return p_both / p_given
        g_attrs = tuple(sorted(given))
        combo = tuple(given[a] for a in g_attrs)
        denom = self.support(g_attrs).get(combo, 0)
        if denom == 0:
            raise ZeroSupport(given)
        num = sum(
            1
            for r in self.rows
            if r.values[attr] == value and all(r.values[a] == given[a] for a in g_attrs)
        )
        if self.alpha > 0.0:
            k = len(self.domains[attr])
            return (num + self.alpha) / (denom + self.alpha * k)
        return num / denom

    def _exact_mass(self, given: dict, target: tuple) -> tuple[float, float]:
        order = self.scm.topo_attrs()
        if len(self.scm.modeled) != len(order):
            raise InvalidScm(
                "plain conditionals need a CPT for every attribute (no context attributes)"
            )
        p_given = p_both = 0.0
        t_attr, t_value = target

        def rec(i: int, weight: float, assign: dict):
            nonlocal p_given, p_both
            if weight == 0.0:
                return
            if i == len(order):
                if all(assign[a] == v for a, v in given.items()):
                    p_given += weight
                    if assign[t_attr] == t_value:
                        p_both += weight
                return
            attr = order[i]
            for v, p in self.scm.cpts[attr].dist(assign).items():
                assign[attr] = v
                rec(i + 1, weight * p, assign)
            del assign[attr]

        rec(0, 1.0, {})
        return p_given, p_both

    # -- post-update probabilities -------------------------------------------------

    def post_update_prob(self, q: PostUpdateProbQuery, row: Row) -> float:
        """Probability that ``row`` satisfies the post-condition after the update.

        Rows outside the update selection are deterministic: the conjunct
        either holds on current values or it does not.
        """
        if not q.updates or row.key not in q.selection:
            ok = self._pre_ok(q, row) and eval_pred(q.post_pattern, row.values, row.values)
            return 1.0 if ok else 0.0
        if not self._pre_ok(q, row):
            return 0.0
        p, _ydist, _skipped = self.chain_terms(q, y_attr=None)
        return p

    def _pre_ok(self, q: PostUpdateProbQuery, row: Row) -> bool:
        return all(eval_pred(f, row.values, row.values) for f in q.pre_factors)

    def chain_terms(self, q: PostUpdateProbQuery, y_attr: str | None):
        """Adjustment chain over supported (update, backdoor) value combos.

        Returns ``(p, ydist, skipped)``: the conjunct probability, the joint
        distribution with each output value when ``y_attr`` is given, and the
        number of zero-support outcome terms skipped (frequency backing).
        """
        cache_key = (q, y_attr)
        if cache_key in self._chain_cache:
            return self._chain_cache[cache_key]
        self._check_backdoor(q, y_attr)
        population = [r for r in self.rows if r.key in q.selection and self._pre_ok(q, r)]
        if not population:
            raise ZeroSupport({"selection+pre": "no supporting rows"})
        battrs = tuple(a for a, _ in q.updates)
        cells: dict = {}
        for r in population:
            combo = tuple(r.values[a] for a in battrs + q.backdoor)
            cells.setdefault(combo, []).append(r)
        total_p, ydist, skipped = 0.0, {}, 0
        for combo in sorted(cells, key=repr):
            cell_rows = cells[combo]
            weight = len(cell_rows) / len(population)
            betas = {
                attr: _update_result(fn, combo[i], self.domains[attr])
                for i, (attr, fn) in enumerate(q.updates)
            }
            cvals = dict(zip(q.backdoor, combo[len(battrs):]))
            if self.backing == "exact":
                term_p, term_y = self._exact_cell(cell_rows, betas, q.post_pattern, y_attr)
            else:
                term = self._freq_cell(q, betas, cvals, y_attr)
                if term is None:
                    skipped += 1
                    continue
                term_p, term_y = term
            total_p += weight * term_p
            for y, p in term_y.items():
                ydist[y] = ydist.get(y, 0.0) + weight * p
        result = (total_p, ydist, skipped)
        self._chain_cache[cache_key] = result
        return result

    def _check_backdoor(self, q: PostUpdateProbQuery, y_attr):
        if self.scm is None:
            return
        targets = set(pred_attrs(q.post_pattern)) | ({y_attr} if y_attr else set())
        forbidden = self.scm.dag.descendants([a for a, _ in q.updates])
        forbidden |= self.scm.dag.descendants(targets) | targets
        bad = set(q.backdoor) & forbidden
        if bad:
            raise InvalidBackdoorSet(f"backdoor set contains descendants: {sorted(bad)}")

    # exact backing: cell average of interventional probabilities

    def _exact_cell(self, cell_rows, betas: dict, pattern, y_attr):
        p_sum, y_sum = 0.0, {}
        for r in cell_rows:
            p, ydist = self._intervene(r, betas, pattern, y_attr)
            p_sum += p
            for y, v in ydist.items():
                y_sum[y] = y_sum.get(y, 0.0) + v
        n = len(cell_rows)
        return p_sum / n, {y: v / n for y, v in y_sum.items()}

    def _intervene(self, row: Row, betas: dict, pattern, y_attr):
        """Marginal probability of the post-condition for one row: pin every
        non-descendant of the updated attributes, chain the rest."""
        scm = self.scm
        modeled = set(scm.modeled)
        desc = (scm.dag.descendants(betas.keys()) & modeled) - set(betas)
        fixed = {a: row.values[a] for a in scm.dag.nodes if a not in desc and a not in betas}
        fixed.update(betas)
        key = (tuple(sorted((k, fixed[k]) for k in fixed)), pattern, y_attr)
        if key in self._intervene_cache:
            return self._intervene_cache[key]
        order = [a for a in scm.topo_attrs() if a in desc]
        p_total, ydist = 0.0, {}

        def rec(i: int, weight: float, assign: dict):
            nonlocal p_total
            if weight == 0.0:
                return
            if i == len(order):
                if eval_pred(pattern, assign, assign):
                    p_total += weight
                    if y_attr is not None:
                        y = assign[y_attr]
                        ydist[y] = ydist.get(y, 0.0) + weight
                return
            attr = order[i]
            for v, p in scm.cpts[attr].dist(assign).items():
                assign[attr] = v
                rec(i + 1, weight * p, assign)
            del assign[attr]

        rec(0, 1.0, dict(fixed))
        result = (p_total, ydist)
        self._intervene_cache[key] = result
        return result

    # frequency backing: rows already carrying the post-update value

    def _freq_cell(self, q: PostUpdateProbQuery, betas: dict, cvals: dict, y_attr):
        battrs = set(betas)
        factors = [
            f for f in q.pre_factors if not (pred_attrs(f, PRE) & battrs)
        ]
        rows = [
            r
            for r in self.rows
            if all(r.values[a] == v for a, v in betas.items())
            and all(r.values[a] == v for a, v in cvals.items())
            and all(eval_pred(f, r.values, r.values) for f in factors)
        ]
        if not rows:
            return None
        hits = [r for r in rows if eval_pred(q.post_pattern, r.values, r.values)]
        n, k = len(rows), len(hits)
        if self.alpha > 0.0:
            p = (k + self.alpha) / (n + 2 * self.alpha)
        else:
            p = k / n
        ydist = {}
        if y_attr is not None:
            for r in hits:
                y = r.values[y_attr]
                ydist[y] = ydist.get(y, 0.0) + 1.0 / n
        return p, ydist


def fit(
    source,
    scm: Scm | None = None,
    sample_size: int | None = None,
    seed: int = 0,
    alpha: float = 0.0,
) -> ConditionalEstimator:
    """Fit an estimator over a single relation, a relevant view, or raw rows.

    With ``scm`` the backing is exact; otherwise conditionals come from row
    frequencies, over all rows or a seeded sample of ``sample_size``.
    """
    rows, domains = _coerce_source(source)
    if sample_size is not None:
        if sample_size <= 0:
            raise EmptySample(f"sample size {sample_size}")
        if sample_size < len(rows):
            rng = random.Random(seed)
            rows = rng.sample(rows, sample_size)
    backing = "exact" if scm is not None else "freq"
    return ConditionalEstimator(rows=rows, domains=domains, backing=backing, scm=scm, alpha=alpha)


def _coerce_source(source):
    if isinstance(source, Database):
        names = list(source.schema)
        if len(names) != 1:
            raise EmptySample("fit on a multi-relation database requires a relevant view")
        decl = source.decl(names[0])
        rows = [Row(key=t.key, values=dict(t.values)) for t in source.tuples(names[0])]
        domains = {a.name: a.domain for a in decl.attrs}
        return rows, domains
    if hasattr(source, "rows") and hasattr(source, "domains"):
        return list(source.rows), dict(source.domains)
    rows, domains = source
    return list(rows), dict(domains)
