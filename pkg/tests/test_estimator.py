from __future__ import annotations

import pytest

from hyper import PostUpdateProbQuery, UpdateFn, database_from_rows, fit
from hyper.errors import EmptySample, InvalidBackdoorSet, ZeroSupport
from hyper.hql.ast import Cmp, Const, Ref


POST_Y1 = Cmp("=", Ref("Y", "post"), Const(1))
PRE_X0 = Cmp("=", Ref("X", "pre"), Const(0))
ALL_TOY = frozenset({(1,), (2,), (3,), (4,)})


def test_exact_cond_prob_reads_cpt(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    assert est.cond_prob(("Y", 1), {"X": 1}) == pytest.approx(0.75)


def test_exact_cond_prob_marginalizes(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    assert est.cond_prob(("Y", 1)) == pytest.approx(0.5 * 0.25 + 0.5 * 0.75)


def test_freq_cond_prob_counts(toy_db):
    est = fit(toy_db)
    assert est.cond_prob(("Y", 1), {"X": 0}) == pytest.approx(0.5)


def test_zero_support_conditioning(toy_db, toy_scm):
    for est in (fit(toy_db), fit(toy_db, scm=toy_scm)):
        with pytest.raises(ZeroSupport):
            est.cond_prob(("Y", 1), {"X": 2})


def test_empty_sample_rejected(toy_db):
    with pytest.raises(EmptySample):
        fit(toy_db, sample_size=0)


def test_sampled_backing_is_seeded(toy_db):
    a = fit(toy_db, sample_size=2, seed=11)
    b = fit(toy_db, sample_size=2, seed=11)
    assert [r.key for r in a.rows] == [r.key for r in b.rows]


def test_probabilities_sum_to_one_over_domain(toy_db, toy_scm):
    for est in (fit(toy_db), fit(toy_db, scm=toy_scm)):
        total = sum(est.cond_prob(("Y", y), {"X": 1}) for y in (0, 1))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_homogeneity_support_index(toy_db):
    est = fit(toy_db)
    assert est.support(("X",)) == {(0,): 2, (1,): 2}
    assert est.support(("X", "Y")) == {(0, 0): 1, (0, 1): 1, (1, 1): 1, (1, 0): 1}


# -- post-update probabilities -----------------------------------------------------

def _toy_query(pre_factors=(), backdoor=(), selection=ALL_TOY, const=1):
    return PostUpdateProbQuery(
        post_pattern=POST_Y1,
        pre_factors=tuple(pre_factors),
        updates=(("X", UpdateFn("set", const)),),
        backdoor=tuple(backdoor),
        selection=selection,
    )


def test_toy_intervention_collapses_to_cpt(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    q = _toy_query()
    row = est.rows[0]
    assert est.post_update_prob(q, row) == pytest.approx(0.75, abs=1e-12)


def test_confounder_adjustment_hand_value(conf_db, conf_scm):
    est = fit(conf_db, scm=conf_scm)
    q = PostUpdateProbQuery(
        post_pattern=POST_Y1,
        pre_factors=(),
        updates=(("B", UpdateFn("set", 1)),),
        backdoor=("C",),
        selection=frozenset({(1,), (2,)}),
    )
    value = est.post_update_prob(q, est.rows[0])
    assert value == pytest.approx(0.5 * 0.2 + 0.5 * 0.9, abs=1e-12)


def test_untargeted_row_is_an_indicator(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    q = _toy_query(selection=frozenset())
    by_key = {r.key: r for r in est.rows}
    assert est.post_update_prob(q, by_key[(2,)]) == 1.0  # Y currently 1
    assert est.post_update_prob(q, by_key[(1,)]) == 0.0  # Y currently 0


def test_invalid_backdoor_set_rejected(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    q = _toy_query(backdoor=("Y",))
    with pytest.raises(InvalidBackdoorSet):
        est.post_update_prob(q, est.rows[0])


def test_pre_factors_restrict_population(toy_db, toy_scm):
    est = fit(toy_db, scm=toy_scm)
    q = _toy_query(pre_factors=(PRE_X0,))
    by_key = {r.key: r for r in est.rows}
    # rows with X=0 are redistributed to Pr(Y=1 | do X=1) = 0.75
    assert est.post_update_prob(q, by_key[(1,)]) == pytest.approx(0.75, abs=1e-12)
    # rows failing the pre condition contribute nothing
    assert est.post_update_prob(q, by_key[(3,)]) == 0.0


def test_frequency_backing_close_to_exact_on_sampled_rows(conf_scm):
    n = 50_000
    rows = [
        {"id": i + 1, **vals} for i, vals in enumerate(conf_scm.sample_rows(n, seed=123))
    ]
    schema = {
        "relations": [
            {
                "name": "U",
                "key": ["id"],
                "attrs": [
                    {"name": "id", "domain": list(range(1, n + 1))},
                    {"name": "C", "domain": [0, 1]},
                    {"name": "B", "domain": [0, 1]},
                    {"name": "Y", "domain": [0, 1]},
                ],
            }
        ]
    }
    db = database_from_rows(schema, {"U": rows})
    keys = frozenset((i + 1,) for i in range(n))
    q = PostUpdateProbQuery(
        post_pattern=POST_Y1,
        pre_factors=(),
        updates=(("B", UpdateFn("set", 1)),),
        backdoor=("C",),
        selection=keys,
    )
    freq = fit(db)
    exact = fit(db, scm=conf_scm)
    p_freq = freq.post_update_prob(q, freq.rows[0])
    p_exact = exact.post_update_prob(q, exact.rows[0])
    assert abs(p_freq - p_exact) < 0.02
    # and both near the population value of the adjustment formula
    assert abs(p_exact - 0.55) < 0.02
