"""One immutable session per process: database, causal model, estimator and
evaluation settings loaded from a JSON config.  CLI and HTTP both run queries
through this module so their result bodies are identical."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .blocks import decompose
from .causal import CausalDag, Scm, dag_from_config, ground, scm_from_config, validate_dag_schema
from .datamodel import Database, load_database
from .errors import HyperError
from .hql.parser import parse_howto, parse_whatif, validate_howto, validate_whatif
from .howto import solve_howto, solve_lexicographic
from .oracle import oracle_eval
from .whatif import EvalOptions, eval_whatif


@dataclass
class SessionConfig:
    schema: str
    data: dict
    dag: str | None = None  # path or "canonical"
    scm: str | None = None
    estimator: dict | None = None
    options: dict | None = None
    seed: int = 0

    @classmethod
    def load(cls, path: str) -> "SessionConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return p if os.path.isabs(p) else os.path.join(base, p)

        dag = raw.get("dag")
        return cls(
            schema=resolve(raw["schema"]),
            data={rel: resolve(p) for rel, p in raw["data"].items()},
            dag=dag if dag in (None, "canonical") else resolve(dag),
            scm=resolve(raw["scm"]) if raw.get("scm") else None,
            estimator=raw.get("estimator"),
            options=raw.get("options"),
            seed=int(raw.get("seed", 0)),
        )


@dataclass
class Session:
    db: Database
    dag: CausalDag | None
    summaries: list
    scm: Scm | None
    options: EvalOptions
    seed: int
    world_cap: int = 10**7

    @classmethod
    def open(cls, config: SessionConfig) -> "Session":
        db = load_database(config.schema, config.data)
        dag, summaries = None, []
        if config.dag and config.dag != "canonical":
            with open(config.dag, encoding="utf-8") as fh:
                dag, summaries = dag_from_config(json.load(fh))
            validate_dag_schema(dag, db)
        scm = None
        if config.scm:
            with open(config.scm, encoding="utf-8") as fh:
                scm = scm_from_config(json.load(fh))
        est = config.estimator or {}
        opts = config.options or {}
        backing = est.get("backing", "exact" if scm else "freq")
        options = EvalOptions(
            avg_denominator=opts.get("avg_denominator", "expected"),
            empty_groups=opts.get("empty_groups", "skip"),
            sample_size=est.get("sample"),
            seed=int(est.get("seed", config.seed)),
            alpha=float(est.get("alpha", 0.0)),
        )
        if backing != "exact":
            scm = None
        return cls(
            db=db, dag=dag, summaries=summaries, scm=scm, options=options,
            seed=config.seed, world_cap=int(opts.get("world_cap", 10**7)),
        )

    # -- query execution -------------------------------------------------------

    def run_whatif(self, text: str) -> dict:
        q = parse_whatif(text)
        validate_whatif(q, self.db, self.dag)
        result = eval_whatif(q, self.db, self.dag, scm=self.scm, options=self.options)
        return result.to_json()

    def run_howto(self, text: str) -> dict:
        q = parse_howto(text)
        validate_howto(q, self.db, self.dag)
        solver = solve_lexicographic if len(q.objectives) > 1 else solve_howto
        plan = solver(q, self.db, self.dag, scm=self.scm, options=self.options)
        return plan.to_json()

    def run_oracle(self, text: str) -> dict:
        if self.scm is None:
            raise HyperError("the oracle needs an exact structural model in the session config")
        q = parse_whatif(text)
        validate_whatif(q, self.db, self.dag)
        value = oracle_eval(
            q, self.scm, self.db,
            avg_denominator=self.options.avg_denominator, cap=self.world_cap,
        )
        return {"value": value, "aggregate": q.output[0]}

    def run_check(self, text: str) -> dict:
        if _looks_howto(text):
            q = parse_howto(text)
            validate_howto(q, self.db, self.dag)
        else:
            q = parse_whatif(text)
            validate_whatif(q, self.db, self.dag)
        return {"ok": True, "kind": "howto" if _looks_howto(text) else "whatif"}

    def run_blocks(self) -> dict:
        if self.dag is None:
            return {"blocks": [{"id": i, "tuples": [f"{t.relation}:{'|'.join(map(str, t.key))}"]}
                               for i, t in enumerate(self.db.all_tuples())]}
        partition = decompose(ground(self.dag, self.db), self.db)
        return partition.to_json()

    def dag_json(self) -> dict:
        if self.dag is None:
            return {"nodes": [], "edges": [], "summaries": []}
        return {
            "nodes": list(self.dag.nodes),
            "edges": [
                {
                    "from": e.src,
                    "to": e.dst,
                    "cross_tuple": e.cross_tuple,
                    **({"group_by": e.group_by} if e.group_by else {}),
                }
                for e in self.dag.edges
            ],
            "summaries": [
                {"child": s.child, "agg": s.agg, "source": f"{s.source}.{s.attr}", "via": s.via}
                for s in self.summaries
            ],
        }


def _looks_howto(text: str) -> bool:
    return "HOWTOUPDATE" in text.upper()


def dumps(payload: dict) -> str:
    """Canonical JSON used by both the CLI and the HTTP API."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
