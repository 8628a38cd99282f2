"""Star-schema relational instances.

A database is declared by a JSON schema config and loaded from RFC-4180 CSV
files, one per relation.  All attribute domains are finite ordered value
lists; continuous attributes must be pre-binned into explicit values.
Instances are immutable after load: every mutation constructs a new
``Database``.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

from .errors import (
    DuplicateKey,
    ImmutableAttribute,
    NonStarSchema,
    SchemaError,
    UnknownAttribute,
    UnknownRelation,
    UpdateValueOutsideDomain,
    ValueOutsideDomain,
)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass(frozen=True)
class AttrDecl:
    """Declaration of one attribute: name, finite ordered domain, mutability."""

    name: str
    domain: tuple
    mutable: bool = True
    in_key: bool = False

    def __post_init__(self):
        if not self.domain:
            raise SchemaError(f"attribute {self.name}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise SchemaError(f"attribute {self.name}: duplicate domain values")
        if self.in_key and self.mutable:
            # key attributes are identity and must never move
            object.__setattr__(self, "mutable", False)

    @property
    def numeric(self) -> bool:
        return all(_is_number(v) for v in self.domain)

    def contains(self, value) -> bool:
        return value in self.domain

    def snap(self, value):
        """Nearest domain value to ``value``; ties resolve to the lower bin."""
        if not self.numeric:
            raise UpdateValueOutsideDomain(f"{self.name}: cannot snap onto a non-numeric domain")
        return min(self.domain, key=lambda d: (abs(d - value), d))


@dataclass(frozen=True)
class RelationDecl:
    name: str
    attrs: tuple[AttrDecl, ...]
    key: tuple[str, ...]
    fk: tuple[tuple[str, str], ...] = ()  # (attribute, target relation)

    def __post_init__(self):
        names = [a.name for a in self.attrs]
        if len(set(names)) != len(names):
            raise SchemaError(f"relation {self.name}: duplicate attribute names")
        for k in self.key:
            if k not in names:
                raise UnknownAttribute(f"relation {self.name}: key attribute {k} not declared")

    def attr(self, name: str) -> AttrDecl:
        for a in self.attrs:
            if a.name == name:
                return a
        raise UnknownAttribute(f"{self.name}.{name}")

    @property
    def attr_names(self) -> list[str]:
        return [a.name for a in self.attrs]


@dataclass(frozen=True)
class Tuple:
    """One row: identified by its key values, carrying all attribute values."""

    relation: str
    key: tuple
    values: dict

    def get(self, attr: str):
        try:
            return self.values[attr]
        except KeyError:
            raise UnknownAttribute(f"{self.relation}.{attr}") from None

    @property
    def ref(self) -> tuple[str, tuple]:
        return (self.relation, self.key)


@dataclass(frozen=True)
class HypotheticalUpdate:
    """Set attribute ``attr`` of relation ``relation`` to ``fn(old)`` on the keys in ``selection``."""

    relation: str
    attr: str
    fn: object  # UpdateFn; anything with .apply(value, decl)
    selection: frozenset


@dataclass(frozen=True)
class Database:
    schema: dict  # relation name -> RelationDecl
    relations: dict  # relation name -> list[Tuple]

    def decl(self, relation: str) -> RelationDecl:
        try:
            return self.schema[relation]
        except KeyError:
            raise UnknownRelation(relation) from None

    def tuples(self, relation: str) -> list:
        self.decl(relation)
        return self.relations[relation]

    def domain(self, relation: str, attr: str) -> tuple:
        return self.decl(relation).attr(attr).domain

    def find(self, relation: str, key: tuple) -> Tuple:
        for t in self.tuples(relation):
            if t.key == key:
                return t
        raise KeyError((relation, key))

    def all_tuples(self):
        for rel in self.schema:
            yield from self.relations[rel]

    def with_relation(self, relation: str, tuples: list) -> "Database":
        rels = dict(self.relations)
        rels[relation] = list(tuples)
        return Database(schema=self.schema, relations=rels)


# -- schema config -----------------------------------------------------------

def schema_from_config(config: dict) -> dict:
    """Build the RelationDecl map from the declarative schema document."""
    decls = {}
    for r in config["relations"]:
        key = tuple(r["key"])
        attrs = tuple(
            AttrDecl(
                name=a["name"],
                domain=tuple(a["domain"]),
                mutable=bool(a.get("mutable", True)) and a["name"] not in key,
                in_key=a["name"] in key,
            )
            for a in r["attrs"]
        )
        fk = tuple((e["attr"], e["target"]) for e in r.get("fk", []))
        decls[r["name"]] = RelationDecl(name=r["name"], attrs=attrs, key=key, fk=fk)
    _check_fk_edges(decls)
    _check_star(decls)
    return decls


def schema_to_config(schema: dict) -> dict:
    return {
        "relations": [
            {
                "name": d.name,
                "key": list(d.key),
                "attrs": [
                    {"name": a.name, "domain": list(a.domain), "mutable": a.mutable}
                    for a in d.attrs
                ],
                "fk": [{"attr": attr, "target": target} for attr, target in d.fk],
            }
            for d in schema.values()
        ]
    }


def _check_fk_edges(decls: dict):
    for d in decls.values():
        for attr, target in d.fk:
            d.attr(attr)
            if target not in decls:
                raise UnknownRelation(f"fk target {target} of {d.name} not declared")
            if len(decls[target].key) != 1:
                raise NonStarSchema(f"fk target {target} must have a single-attribute key")


def _check_star(decls: dict):
    """The undirected fk graph must be a star: one hub relation on every edge."""
    if len(decls) == 1:
        return
    edges = set()
    for d in decls.values():
        for _, target in d.fk:
            if target == d.name:
                raise NonStarSchema(f"self fk edge on {d.name}")
            edges.add(frozenset((d.name, target)))
    if not edges:
        raise NonStarSchema("multiple relations without fk edges")
    hubs = set.intersection(*[set(e) for e in edges])
    if not hubs:
        raise NonStarSchema("fk graph is not a star")
    touched = set().union(*[set(e) for e in edges])
    if touched != set(decls):
        raise NonStarSchema(f"relations not joined into the star: {sorted(set(decls) - touched)}")


# -- loading -----------------------------------------------------------------

def _parse_cell(raw: str, decl: AttrDecl, relation: str, rownum: int):
    if raw == "":
        raise ValueOutsideDomain(relation, rownum, decl.name, raw)
    if decl.numeric:
        try:
            value = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                raise ValueOutsideDomain(relation, rownum, decl.name, raw) from None
    else:
        value = raw
    if not decl.contains(value):
        raise ValueOutsideDomain(relation, rownum, decl.name, value)
    return value


def load_database(schema_config, csv_paths: dict) -> Database:
    """Load and validate a database.

    ``schema_config`` is the config document (dict) or a path to its JSON
    file; ``csv_paths`` maps each declared relation to a CSV file whose
    header row must equal the declared attribute names, in order.
    """
    if isinstance(schema_config, (str, os.PathLike)):
        with open(schema_config, encoding="utf-8") as fh:
            schema_config = json.load(fh)
    schema = schema_from_config(schema_config)

    relations = {}
    for name, decl in schema.items():
        if name not in csv_paths:
            raise UnknownRelation(f"no CSV provided for relation {name}")
        relations[name] = _load_relation(decl, csv_paths[name])
    return Database(schema=schema, relations=relations)


def _load_relation(decl: RelationDecl, path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{decl.name}: CSV has no header row") from None
        if header != decl.attr_names:
            raise UnknownAttribute(
                f"{decl.name}: CSV header {header} does not match declared attributes {decl.attr_names}"
            )
        tuples, seen = [], set()
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(decl.attrs):
                raise ValueOutsideDomain(decl.name, rownum, "<row>", row)
            values = {
                a.name: _parse_cell(raw, a, decl.name, rownum)
                for a, raw in zip(decl.attrs, row)
            }
            key = tuple(values[k] for k in decl.key)
            if key in seen:
                raise DuplicateKey(f"{decl.name}: duplicate key {key}")
            seen.add(key)
            tuples.append(Tuple(relation=decl.name, key=key, values=values))
    return tuples


def database_from_rows(schema_config: dict, rows: dict) -> Database:
    """Build a database directly from in-memory rows (tests, synthetic data)."""
    schema = schema_from_config(schema_config)
    relations = {}
    for name, decl in schema.items():
        tuples, seen = [], set()
        for rownum, values in enumerate(rows.get(name, []), start=1):
            for a in decl.attrs:
                if a.name not in values:
                    raise UnknownAttribute(f"{name}.{a.name} missing in row {rownum}")
                if not a.contains(values[a.name]):
                    raise ValueOutsideDomain(name, rownum, a.name, values[a.name])
            key = tuple(values[k] for k in decl.key)
            if key in seen:
                raise DuplicateKey(f"{name}: duplicate key {key}")
            seen.add(key)
            tuples.append(Tuple(relation=name, key=key, values=dict(values)))
        relations[name] = tuples
    return Database(schema=schema, relations=relations)


def save_database(db: Database, directory) -> tuple[str, dict]:
    """Write schema.json plus one CSV per relation; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    schema_path = os.path.join(directory, "schema.json")
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_config(db.schema), fh, indent=2)
    csv_paths = {}
    for name, decl in db.schema.items():
        path = os.path.join(directory, f"{name.lower()}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(decl.attr_names)
            for t in db.relations[name]:
                writer.writerow([_render_cell(t.values[a]) for a in decl.attr_names])
        csv_paths[name] = path
    return schema_path, csv_paths


def _render_cell(value) -> str:
    if _is_number(value):
        return repr(value)
    return str(value)


# -- direct (dependency-free) updates ----------------------------------------

def apply_update_directly(db: Database, u: HypotheticalUpdate) -> Database:
    """Write ``fn(B[t])`` into the selected tuples and change nothing else.

    This is the dependency-free reading of an update: no other attribute
    moves.  The probabilistic engine treats the same update as an
    intervention instead.
    """
    decl = db.decl(u.relation)
    attr = decl.attr(u.attr)
    if not attr.mutable:
        raise ImmutableAttribute(f"{u.relation}.{u.attr}")
    out = []
    for t in db.tuples(u.relation):
        if t.key in u.selection:
            new_value = u.fn.apply(t.values[u.attr], attr)
            if not attr.contains(new_value):
                raise UpdateValueOutsideDomain(f"{u.relation}.{u.attr}: {new_value!r}")
            values = dict(t.values)
            values[u.attr] = new_value
            out.append(Tuple(relation=t.relation, key=t.key, values=values))
        else:
            out.append(t)
    return db.with_relation(u.relation, out)
