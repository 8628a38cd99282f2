from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from hyper import normalize_for
from hyper.errors import DomainTooLarge
from hyper.hql.ast import And, Arith, Cmp, Const, InSet, Not, Or, Ref, eval_pred
from hyper.hql.normalize import DisjointDnf


def pre(attr):
    return Ref(attr, "pre")


def post(attr):
    return Ref(attr, "post")


def _exhaustive_check(pred, dnf: DisjointDnf, domains):
    """Truth-table oracle: equivalence and at-most-one-conjunct-fires."""
    attrs = sorted(domains)
    for pre_combo in itertools.product(*[domains[a] for a in attrs]):
        pre_row = dict(zip(attrs, pre_combo))
        for post_combo in itertools.product(*[domains[a] for a in attrs]):
            post_row = dict(zip(attrs, post_combo))
            want = eval_pred(pred, pre_row, post_row)
            fires = [
                c for c in dnf.conjuncts
                if eval_pred(c.pre, pre_row, pre_row) and eval_pred(c.post, post_row, post_row)
            ]
            assert len(fires) <= 1, (pre_row, post_row)
            assert bool(fires) == want, (pre_row, post_row)


def test_coupled_atoms_expand_to_seven_disjoint_conjuncts():
    domains = {"A": (1, 2, 3, 4)}
    p = And((
        Cmp("<", Arith("-", pre("A"), post("A")), Const(2)),
        Cmp(">=", pre("A"), post("A")),
    ))
    dnf = normalize_for(p, domains)
    assert len(dnf.conjuncts) == 7
    pairs = set()
    for c in dnf.conjuncts:
        pre_pin = {a.right.value for a in c.pre_atoms() if isinstance(a, Cmp)}
        post_pin = {a.right.value for a in c.post_atoms() if isinstance(a, Cmp)}
        pairs.add((pre_pin.pop(), post_pin.pop()))
    assert pairs == {(4, 3), (4, 4), (3, 2), (3, 3), (2, 1), (2, 2), (1, 1)}
    _exhaustive_check(p, dnf, domains)


def test_already_disjoint_input_unchanged():
    domains = {"A": (1, 2, 3), "B": (0, 1)}
    p = Or((
        Cmp("=", pre("A"), Const(1)),
        And((Cmp("=", pre("A"), Const(2)), Cmp("=", post("B"), Const(1)))),
    ))
    dnf = normalize_for(p, domains)
    assert len(dnf.conjuncts) == 2
    _exhaustive_check(p, dnf, domains)


def test_overlapping_pair_gives_three_conjuncts():
    domains = {"A": (0, 1), "B": (0, 1)}
    p = Or((Cmp("=", pre("A"), Const(1)), Cmp("=", post("B"), Const(1))))
    dnf = normalize_for(p, domains)
    assert len(dnf.conjuncts) == 3
    _exhaustive_check(p, dnf, domains)


def test_none_means_everything():
    dnf = normalize_for(None, {})
    assert len(dnf.conjuncts) == 1


def test_negation_and_nesting():
    domains = {"A": (0, 1, 2), "B": (0, 1)}
    p = Not(Or((
        Cmp("=", pre("A"), Const(0)),
        And((Cmp(">", post("A"), Const(0)), Cmp("=", pre("B"), Const(1)))),
    )))
    dnf = normalize_for(p, domains)
    _exhaustive_check(p, dnf, domains)


def test_domain_cap_enforced():
    domains = {"A": tuple(range(3000))}
    p = Cmp("<", Arith("-", pre("A"), post("A")), Const(2))
    with pytest.raises(DomainTooLarge):
        normalize_for(p, domains, max_atoms=10_000)


_atoms = st.one_of(
    st.builds(
        lambda attr, phase, op, v: Cmp(op, Ref(attr, phase), Const(v)),
        st.sampled_from(["A", "B", "C"]),
        st.sampled_from(["pre", "post"]),
        st.sampled_from(["=", "!=", "<", "<=", ">", ">="]),
        st.integers(0, 3),
    ),
    st.builds(
        lambda attr, phase, vs, neg: InSet(Ref(attr, phase), tuple(vs), neg),
        st.sampled_from(["A", "B"]),
        st.sampled_from(["pre", "post"]),
        st.lists(st.integers(0, 3), min_size=1, max_size=2, unique=True),
        st.booleans(),
    ),
)
_preds = st.recursive(
    _atoms,
    lambda inner: st.one_of(
        st.builds(lambda ps: And(tuple(ps)), st.lists(inner, min_size=2, max_size=3)),
        st.builds(lambda ps: Or(tuple(ps)), st.lists(inner, min_size=2, max_size=3)),
        st.builds(Not, inner),
    ),
    max_leaves=5,
)


@settings(max_examples=120, deadline=None)
@given(pred=_preds)
def test_normalize_equivalence_property(pred):
    domains = {"A": (0, 1, 2), "B": (0, 1), "C": (0, 1)}
    dnf = normalize_for(pred, domains)
    _exhaustive_check(pred, dnf, domains)


@settings(max_examples=60, deadline=None)
@given(
    disjuncts=st.lists(_atoms, min_size=2, max_size=4),
)
def test_conjunct_count_bound_for_atomic_disjuncts(disjuncts):
    domains = {"A": (0, 1, 2), "B": (0, 1), "C": (0, 1)}
    pred = Or(tuple(disjuncts))
    dnf = normalize_for(pred, domains)
    assert len(dnf.conjuncts) <= 2 ** len(disjuncts) - 1
    _exhaustive_check(pred, dnf, domains)


def test_mixed_atom_inside_disjunction():
    domains = {"A": (0, 1, 2)}
    p = Or((
        Cmp("=", pre("A"), Const(0)),
        Cmp("=", Arith("-", pre("A"), post("A")), Const(1)),
    ))
    dnf = normalize_for(p, domains)
    _exhaustive_check(p, dnf, domains)
