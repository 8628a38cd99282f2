from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from hyper import (
    HypotheticalUpdate,
    UpdateFn,
    apply_update_directly,
    database_from_rows,
    load_database,
    save_database,
)
from hyper.errors import (
    DuplicateKey,
    ImmutableAttribute,
    NonStarSchema,
    UnknownAttribute,
    ValueOutsideDomain,
)

from conftest import TOY_SCHEMA, TOY_ROWS, data_path


def test_load_amazon_counts(amazon_db):
    assert len(amazon_db.tuples("Product")) == 5
    assert len(amazon_db.tuples("Review")) == 6
    p2 = amazon_db.find("Product", (2,))
    assert p2.get("Price") == 529
    assert p2.get("Brand") == "Asus"


def test_empty_relation_is_fine(tmp_path):
    review = tmp_path / "review.csv"
    review.write_text("PID,ReviewID,Sentiment,Rating\n")
    db = load_database(
        data_path("amazon", "schema.json"),
        {"Product": data_path("amazon", "product.csv"), "Review": str(review)},
    )
    assert db.tuples("Review") == []


def test_value_outside_domain(tmp_path):
    product = tmp_path / "product.csv"
    product.write_text("PID,Category,Price,Brand,Color,Quality\n1,Laptop,1200.5,Vaio,Silver,0.7\n")
    with pytest.raises(ValueOutsideDomain) as err:
        load_database(
            data_path("amazon", "schema.json"),
            {"Product": str(product), "Review": data_path("amazon", "review.csv")},
        )
    assert err.value.attr == "Price"


def test_header_must_match(tmp_path):
    product = tmp_path / "product.csv"
    product.write_text("PID,Category,Brand,Price,Color,Quality\n")
    with pytest.raises(UnknownAttribute):
        load_database(
            data_path("amazon", "schema.json"),
            {"Product": str(product), "Review": data_path("amazon", "review.csv")},
        )


def test_duplicate_key_rejected():
    rows = [{"id": 1, "X": 0, "Y": 0}, {"id": 1, "X": 1, "Y": 1}]
    with pytest.raises(DuplicateKey):
        database_from_rows(TOY_SCHEMA, {"T": rows})


def test_missing_cell_rejected(tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("id,X,Y\n1,,1\n")
    schema = tmp_path / "schema.json"
    import json

    schema.write_text(json.dumps(TOY_SCHEMA))
    with pytest.raises(ValueOutsideDomain):
        load_database(str(schema), {"T": str(t)})


def test_non_star_schema_rejected():
    config = {
        "relations": [
            {"name": "A", "key": ["id"], "attrs": [{"name": "id", "domain": [1]}]},
            {"name": "B", "key": ["id"], "attrs": [{"name": "id", "domain": [1]}]},
        ]
    }
    with pytest.raises(NonStarSchema):
        database_from_rows(config, {"A": [], "B": []})


def test_key_attrs_forced_immutable(toy_db):
    assert not toy_db.decl("T").attr("id").mutable


def test_roundtrip(tmp_path, amazon_db):
    schema_path, csv_paths = save_database(amazon_db, str(tmp_path))
    again = load_database(schema_path, csv_paths)
    assert again == amazon_db


# -- direct updates -----------------------------------------------------------------

def test_scale_update_snaps_to_domain(amazon_db):
    u = HypotheticalUpdate(
        relation="Product", attr="Price", fn=UpdateFn(kind="scale", const=1.1),
        selection=frozenset({(2,)}),
    )
    updated = apply_update_directly(amazon_db, u)
    assert updated.find("Product", (2,)).get("Price") == 582
    # nothing else moved
    for key in [(1,), (3,), (4,), (5,)]:
        assert updated.find("Product", key) == amazon_db.find("Product", key)
    assert updated.tuples("Review") == amazon_db.tuples("Review")


def test_empty_selection_returns_equal_db(amazon_db):
    u = HypotheticalUpdate("Product", "Price", UpdateFn("scale", 2.0), frozenset())
    assert apply_update_directly(amazon_db, u) == amazon_db


def test_identity_update_changes_nothing(toy_db):
    u = HypotheticalUpdate("T", "X", UpdateFn("scale", 1), frozenset({(1,), (2,), (3,), (4,)}))
    assert apply_update_directly(toy_db, u) == toy_db


def test_immutable_attribute_rejected(amazon_db):
    u = HypotheticalUpdate("Product", "Brand", UpdateFn("set", "Asus"), frozenset({(1,)}))
    with pytest.raises(ImmutableAttribute):
        apply_update_directly(amazon_db, u)


def test_constant_update_idempotent(toy_db):
    u = HypotheticalUpdate("T", "X", UpdateFn("set", 1), frozenset({(1,), (3,)}))
    once = apply_update_directly(toy_db, u)
    twice = apply_update_directly(once, u)
    assert once == twice


@settings(max_examples=60, deadline=None)
@given(
    const=st.sampled_from([0, 1]),
    kind=st.sampled_from(["set", "scale", "shift"]),
    keys=st.sets(st.sampled_from([(1,), (2,), (3,), (4,)])),
    attr=st.sampled_from(["X", "Y"]),
)
def test_direct_update_invariants(const, kind, keys, attr):
    db = database_from_rows(TOY_SCHEMA, {"T": TOY_ROWS})
    u = HypotheticalUpdate("T", attr, UpdateFn(kind, const), frozenset(keys))
    updated = apply_update_directly(db, u)
    assert len(updated.tuples("T")) == len(db.tuples("T"))
    for before, after in zip(db.tuples("T"), updated.tuples("T")):
        assert after.get("id") == before.get("id")
        other = "Y" if attr == "X" else "X"
        assert after.get(other) == before.get(other)
        assert after.get(attr) in db.domain("T", attr)
