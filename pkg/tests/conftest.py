from __future__ import annotations

import json
import os

import pytest

from hyper import (
    CausalDag,
    Cpt,
    DagEdge,
    Scm,
    database_from_rows,
    dag_from_config,
    load_database,
)

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_path(*parts) -> str:
    return os.path.join(DATA, *parts)


# -- toy fixture: T(id, X, Y), X -> Y --------------------------------------------

TOY_SCHEMA = {
    "relations": [
        {
            "name": "T",
            "key": ["id"],
            "attrs": [
                {"name": "id", "domain": [1, 2, 3, 4], "mutable": False},
                {"name": "X", "domain": [0, 1]},
                {"name": "Y", "domain": [0, 1]},
            ],
        }
    ]
}

TOY_ROWS = [
    {"id": 1, "X": 0, "Y": 0},
    {"id": 2, "X": 0, "Y": 1},
    {"id": 3, "X": 1, "Y": 1},
    {"id": 4, "X": 1, "Y": 0},
]


@pytest.fixture
def toy_db():
    return database_from_rows(TOY_SCHEMA, {"T": TOY_ROWS})


@pytest.fixture
def toy_dag():
    return CausalDag(nodes=("T.X", "T.Y"), edges=(DagEdge(src="T.X", dst="T.Y"),))


def make_toy_scm() -> Scm:
    dag = CausalDag(nodes=("X", "Y"), edges=(DagEdge(src="X", dst="Y"),))
    cpts = {
        "X": Cpt("X", (), {(): {0: 0.5, 1: 0.5}}),
        "Y": Cpt("Y", ("X",), {(0,): {0: 0.75, 1: 0.25}, (1,): {0: 0.25, 1: 0.75}}),
    }
    return Scm(dag=dag, cpts=cpts, domains={"X": (0, 1), "Y": (0, 1)})


@pytest.fixture
def toy_scm():
    return make_toy_scm()


# -- confounder fixture: C -> B, C -> Y, B -> Y -----------------------------------

CONF_SCHEMA = {
    "relations": [
        {
            "name": "U",
            "key": ["id"],
            "attrs": [
                {"name": "id", "domain": [1, 2, 3, 4]},
                {"name": "C", "domain": [0, 1]},
                {"name": "B", "domain": [0, 1]},
                {"name": "Y", "domain": [0, 1]},
            ],
        }
    ]
}


def make_confounder_scm() -> Scm:
    dag = CausalDag(
        nodes=("C", "B", "Y"),
        edges=(DagEdge("C", "B"), DagEdge("C", "Y"), DagEdge("B", "Y")),
    )
    cpts = {
        "C": Cpt("C", (), {(): {0: 0.5, 1: 0.5}}),
        "B": Cpt("B", ("C",), {(0,): {0: 0.6, 1: 0.4}, (1,): {0: 0.4, 1: 0.6}}),
        "Y": Cpt(
            "Y",
            ("C", "B"),
            {
                (0, 0): {0: 0.7, 1: 0.3},
                (0, 1): {0: 0.8, 1: 0.2},
                (1, 0): {0: 0.5, 1: 0.5},
                (1, 1): {0: 0.1, 1: 0.9},
            },
        ),
    }
    return Scm(dag=dag, cpts=cpts, domains={"C": (0, 1), "B": (0, 1), "Y": (0, 1)})


@pytest.fixture
def conf_scm():
    return make_confounder_scm()


@pytest.fixture
def conf_db():
    # one row per C value keeps the empirical confounder distribution at 1/2 each
    rows = [
        {"id": 1, "C": 0, "B": 0, "Y": 0},
        {"id": 2, "C": 1, "B": 0, "Y": 1},
    ]
    return database_from_rows(CONF_SCHEMA, {"U": rows})


# -- amazon fixture ----------------------------------------------------------------

@pytest.fixture(scope="session")
def amazon_db():
    return load_database(
        data_path("amazon", "schema.json"),
        {
            "Product": data_path("amazon", "product.csv"),
            "Review": data_path("amazon", "review.csv"),
        },
    )


@pytest.fixture(scope="session")
def amazon_dag():
    with open(data_path("amazon", "dag.json")) as fh:
        dag, _ = dag_from_config(json.load(fh))
    return dag


@pytest.fixture
def headline_whatif_text():
    with open(data_path("queries", "headline_whatif.hql")) as fh:
        return fh.read()


@pytest.fixture
def headline_howto_text():
    with open(data_path("queries", "headline_howto.hql")) as fh:
        return fh.read()
