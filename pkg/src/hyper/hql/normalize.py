"""Normalization of FOR predicates into a disjoint disjunction of
(pre-condition AND post-condition) conjuncts.

Three rewrites happen in order: boolean flattening to DNF, expansion of
atoms that couple PRE and POST values of attributes by enumerating the
finite domains, and an inclusion-exclusion pass that makes overlapping
disjuncts mutually exclusive.  Every step preserves logical equivalence,
which the tests verify by exhaustive truth tables over small domains.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..errors import DomainTooLarge
from .ast import (
    And,
    Cmp,
    Const,
    InSet,
    Not,
    Or,
    POST,
    PRE,
    Ref,
    TRUE,
    eval_pred,
    negate_atom,
    pred_refs,
)


@dataclass(frozen=True)
class Conjunct:
    """One disjoint branch, split into a pre-only and a post-only condition."""

    pre: object
    post: object

    def pre_atoms(self) -> tuple:
        return self.pre.parts if isinstance(self.pre, And) else (self.pre,)

    def post_atoms(self) -> tuple:
        return self.post.parts if isinstance(self.post, And) else (self.post,)


@dataclass(frozen=True)
class DisjointDnf:
    conjuncts: tuple

    def as_pred(self):
        branches = [
            And((c.pre, c.post)) if c.pre != TRUE and c.post != TRUE
            else (c.post if c.pre == TRUE else c.pre)
            for c in self.conjuncts
        ]
        if not branches:
            return Or(())
        return branches[0] if len(branches) == 1 else Or(tuple(branches))


def normalize_for(pred, domains, max_atoms: int = 10**6) -> DisjointDnf:
    """Rewrite an arbitrary FOR predicate into disjoint separable conjuncts."""
    if pred is None or pred == TRUE:
        return DisjointDnf(conjuncts=(Conjunct(pre=TRUE, post=TRUE),))
    budget = _Budget(max_atoms)
    disjuncts = _to_dnf(_to_nnf(pred), budget)
    separable = []
    for atoms in disjuncts:
        separable.extend(_expand_mixed(atoms, domains, budget))
    separable = _dedupe(separable)
    if not _any_overlap(separable, domains, budget):
        return DisjointDnf(conjuncts=tuple(_to_conjunct(d) for d in separable))
    cells = _disjointify(separable, domains, budget)
    return DisjointDnf(conjuncts=tuple(_to_conjunct(d) for d in cells))


class _Budget:
    def __init__(self, max_atoms: int):
        self.left = max_atoms

    def spend(self, n: int):
        self.left -= n
        if self.left < 0:
            raise DomainTooLarge("FOR normalization exceeded the configured size cap")


# -- boolean flattening -------------------------------------------------------

def _to_nnf(p):
    if isinstance(p, Not):
        inner = p.part
        if isinstance(inner, Not):
            return _to_nnf(inner.part)
        if isinstance(inner, And):
            return Or(tuple(_to_nnf(Not(q)) for q in inner.parts))
        if isinstance(inner, Or):
            return And(tuple(_to_nnf(Not(q)) for q in inner.parts))
        return negate_atom(inner)
    if isinstance(p, And):
        return And(tuple(_to_nnf(q) for q in p.parts))
    if isinstance(p, Or):
        return Or(tuple(_to_nnf(q) for q in p.parts))
    return p


def _to_dnf(p, budget: _Budget) -> list:
    """NNF predicate -> list of atom lists (disjunction of conjunctions)."""
    if isinstance(p, Or):
        out = []
        for q in p.parts:
            out.extend(_to_dnf(q, budget))
        return out
    if isinstance(p, And):
        branches = [[]]
        for q in p.parts:
            sub = _to_dnf(q, budget)
            branches = [b + s for b in branches for s in sub]
            budget.spend(len(branches))
        return branches
    return [[p]]


# -- PRE/POST coupling expansion ------------------------------------------------

def _phase_split(atom):
    phases = {r.phase for r in pred_refs(atom)}
    if phases <= {PRE}:
        return "pre"
    if phases <= {POST}:
        return "post"
    return "mixed"


def _expand_mixed(atoms: list, domains, budget: _Budget) -> list:
    """Replace atoms that couple PRE and POST by per-value equality pins."""
    plain = [a for a in atoms if _phase_split(a) != "mixed"]
    mixed = [a for a in atoms if _phase_split(a) == "mixed"]
    if not mixed:
        return [atoms]
    slots = sorted(
        {r for a in mixed for r in pred_refs(a)},
        key=lambda r: (r.attr, r.phase),
    )
    for r in slots:
        if r.attr not in domains:
            raise DomainTooLarge(f"no declared domain for {r.attr}; cannot expand")
    combos = itertools.product(*[domains[r.attr] for r in slots])
    out = []
    for combo in combos:
        budget.spend(len(slots))
        pre_row = {r.attr: v for r, v in zip(slots, combo) if r.phase == PRE}
        post_row = {r.attr: v for r, v in zip(slots, combo) if r.phase == POST}
        if all(_try_eval(a, pre_row, post_row) for a in mixed):
            pins = [Cmp("=", r, Const(v)) for r, v in zip(slots, combo)]
            out.append(plain + pins)
    return out


def _try_eval(atom, pre_row, post_row):
    try:
        return eval_pred(atom, pre_row, post_row)
    except TypeError:
        return False


# -- disjointness ----------------------------------------------------------------

def _referenced_domains(disjuncts: list, domains) -> tuple[list, list]:
    pre_attrs, post_attrs = set(), set()
    for atoms in disjuncts:
        for a in atoms:
            for r in pred_refs(a):
                (pre_attrs if r.phase == PRE else post_attrs).add(r.attr)
    for attr in pre_attrs | post_attrs:
        if attr not in domains:
            raise DomainTooLarge(f"no declared domain for {attr}")
    return sorted(pre_attrs), sorted(post_attrs)


def _assignments(disjuncts: list, domains, budget: _Budget):
    pre_attrs, post_attrs = _referenced_domains(disjuncts, domains)
    pre_space = itertools.product(*[domains[a] for a in pre_attrs]) if pre_attrs else [()]
    pre_rows = [dict(zip(pre_attrs, combo)) for combo in pre_space]
    post_space = itertools.product(*[domains[a] for a in post_attrs]) if post_attrs else [()]
    post_rows = [dict(zip(post_attrs, combo)) for combo in post_space]
    budget.spend(len(pre_rows) * len(post_rows))
    return [(p, q) for p in pre_rows for q in post_rows]


def _satisfies(atoms: list, pre_row, post_row) -> bool:
    return all(_try_eval(a, pre_row, post_row) for a in atoms)


def _any_overlap(disjuncts: list, domains, budget: _Budget) -> bool:
    if len(disjuncts) <= 1:
        return False
    rows = _assignments(disjuncts, domains, budget)
    for pre_row, post_row in rows:
        hits = sum(1 for atoms in disjuncts if _satisfies(atoms, pre_row, post_row))
        if hits > 1:
            return True
    return False


MAX_SIGN_PATTERNS = 8


def _disjointify(disjuncts: list, domains, budget: _Budget) -> list:
    """Make overlapping disjuncts mutually exclusive.

    Few disjuncts: inclusion-exclusion sign-pattern cells, with negated
    member conjunctions split into phase-pure branches and empty cells pruned
    by enumerating the referenced domains.  Many disjuncts (where 2^t cells
    would explode): pin the referenced attributes to each satisfying value
    combination instead, which is always disjoint over finite domains.
    """
    if len(disjuncts) <= MAX_SIGN_PATTERNS:
        try:
            return _sign_pattern_cells(disjuncts, domains, _Budget(min(budget.left, 200_000)))
        except DomainTooLarge:
            pass
    return _enumerate_pins(disjuncts, domains, budget)


def _sign_pattern_cells(disjuncts: list, domains, budget: _Budget) -> list:
    rows = _assignments(disjuncts, domains, budget)
    t = len(disjuncts)
    cells = []
    for size in range(1, t + 1):
        for pos in itertools.combinations(range(t), size):
            pos_set = set(pos)
            branches = [list(itertools.chain(*(disjuncts[i] for i in pos)))]
            for j in range(t):
                if j in pos_set:
                    continue
                split = _negation_branches(disjuncts[j])
                branches = [b + s for b in branches for s in split]
                budget.spend(len(branches))
            for atoms in branches:
                if any(_satisfies(atoms, p, q) for p, q in rows):
                    cells.append(atoms)
    return _dedupe(cells)


def _enumerate_pins(disjuncts: list, domains, budget: _Budget) -> list:
    pre_attrs, post_attrs = _referenced_domains(disjuncts, domains)
    out = []
    for pre_row, post_row in _assignments(disjuncts, domains, budget):
        if any(_satisfies(atoms, pre_row, post_row) for atoms in disjuncts):
            pins = [Cmp("=", Ref(a, PRE), Const(pre_row[a])) for a in pre_attrs]
            pins += [Cmp("=", Ref(a, POST), Const(post_row[a])) for a in post_attrs]
            out.append(pins)
    return out


def _negation_branches(atoms: list) -> list:
    """Disjoint branches covering the negation of an atom conjunction."""
    out = []
    for i, a in enumerate(atoms):
        out.append(list(atoms[:i]) + [negate_atom(a)])
    return out


def _dedupe(disjuncts: list) -> list:
    seen, out = set(), []
    for atoms in disjuncts:
        key = frozenset(atoms)
        if key not in seen:
            seen.add(key)
            out.append(atoms)
    return out


def _to_conjunct(atoms: list) -> Conjunct:
    pre = [a for a in atoms if _phase_split(a) == "pre"]
    post = [a for a in atoms if _phase_split(a) == "post"]
    make = lambda parts: parts[0] if len(parts) == 1 else And(tuple(parts))
    return Conjunct(
        pre=make(pre) if pre else TRUE,
        post=make(post) if post else TRUE,
    )
