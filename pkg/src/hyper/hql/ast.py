"""AST for the hypothetical query dialect.

Predicates mention attribute values before the update (``PRE(A)``, the
default) or after it (``POST(A)``).  All nodes are frozen dataclasses so
parsed queries compare structurally, which the render round-trip tests rely
on.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidUpdateFunction, UnsupportedAggregate

PRE = "pre"
POST = "post"

AGGREGATES = ("COUNT", "SUM", "AVG")


# -- expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class Ref:
    attr: str
    phase: str = PRE


@dataclass(frozen=True)
class Arith:
    op: str  # "+" or "-"
    left: object
    right: object


# -- atoms and boolean structure ------------------------------------------------

@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class InSet:
    expr: object
    values: tuple
    negated: bool = False


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Not:
    part: object


TRUE = And(())


def conj(parts) -> object:
    parts = tuple(p for p in parts if p != TRUE)
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, And) else (p,))
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts) -> object:
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, Or) else (p,))
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


# -- evaluation ------------------------------------------------------------------

def eval_expr(e, pre, post):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Ref):
        row = pre if e.phase == PRE else post
        return row[e.attr]
    if isinstance(e, Arith):
        l = eval_expr(e.left, pre, post)
        r = eval_expr(e.right, pre, post)
        return l + r if e.op == "+" else l - r
    raise TypeError(f"not an expression: {e!r}")


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_pred(p, pre, post) -> bool:
    """Evaluate a predicate against a pre-update row and a post-update row."""
    if isinstance(p, And):
        return all(eval_pred(q, pre, post) for q in p.parts)
    if isinstance(p, Or):
        return any(eval_pred(q, pre, post) for q in p.parts)
    if isinstance(p, Not):
        return not eval_pred(p.part, pre, post)
    if isinstance(p, Cmp):
        return _CMP[p.op](eval_expr(p.left, pre, post), eval_expr(p.right, pre, post))
    if isinstance(p, InSet):
        hit = eval_expr(p.expr, pre, post) in p.values
        return hit != p.negated
    raise TypeError(f"not a predicate: {p!r}")


def expr_refs(e) -> frozenset:
    if isinstance(e, Ref):
        return frozenset((e,))
    if isinstance(e, Arith):
        return expr_refs(e.left) | expr_refs(e.right)
    return frozenset()


def pred_refs(p) -> frozenset:
    if isinstance(p, (And, Or)):
        out = frozenset()
        for q in p.parts:
            out |= pred_refs(q)
        return out
    if isinstance(p, Not):
        return pred_refs(p.part)
    if isinstance(p, Cmp):
        return expr_refs(p.left) | expr_refs(p.right)
    if isinstance(p, InSet):
        return expr_refs(p.expr)
    raise TypeError(f"not a predicate: {p!r}")


def pred_attrs(p, phase: str | None = None) -> set:
    return {r.attr for r in pred_refs(p) if phase is None or r.phase == phase}


_FLIP = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def negate_atom(a):
    """Negation of an atom is again an atom (comparison flip / IN flip)."""
    if isinstance(a, Cmp):
        return Cmp(_FLIP[a.op], a.left, a.right)
    if isinstance(a, InSet):
        return InSet(a.expr, a.values, not a.negated)
    raise TypeError(f"not an atom: {a!r}")


# -- update functions -------------------------------------------------------------

@dataclass(frozen=True)
class UpdateFn:
    """SET to a constant, SCALE by a constant, or SHIFT by a constant."""

    kind: str  # "set" | "scale" | "shift"
    const: object

    def apply(self, value, decl):
        if self.kind == "set":
            return self.const
        if not decl.numeric:
            raise InvalidUpdateFunction(
                f"{decl.name}: {self.kind.upper()} requires a numeric domain"
            )
        raw = self.const * value if self.kind == "scale" else self.const + value
        return decl.snap(raw)

    def render(self, attr: str) -> str:
        if self.kind == "set":
            return _lit(self.const)
        op = "*" if self.kind == "scale" else "+"
        return f"{_lit(self.const)} {op} PRE({attr})"


# -- queries -----------------------------------------------------------------------

@dataclass(frozen=True)
class BareUse:
    relation: str


@dataclass(frozen=True)
class AggSel:
    alias: str
    agg: str
    table: str | None
    attr: str


@dataclass(frozen=True)
class ViewUse:
    name: str
    select: tuple  # (table-alias or None, attr)
    aggregates: tuple  # AggSel
    tables: tuple  # (relation, alias)
    join: tuple  # ((alias, attr), (alias, attr))
    group_by: tuple  # (table-alias or None, attr)


@dataclass(frozen=True)
class WhatIfQuery:
    use: object
    when: object | None
    updates: tuple  # (attr, UpdateFn)
    output: tuple  # (agg, attr or None for COUNT(*))
    for_pred: object | None

    def __post_init__(self):
        if self.output[0] not in AGGREGATES:
            raise UnsupportedAggregate(self.output[0])


@dataclass(frozen=True)
class RangeLimit:
    attr: str
    low: object | None
    high: object | None


@dataclass(frozen=True)
class InLimit:
    attr: str
    values: tuple


@dataclass(frozen=True)
class L1Limit:
    attr: str
    theta: float


@dataclass(frozen=True)
class HowToQuery:
    use: object
    when: object | None
    howto_attrs: tuple
    limits: tuple  # RangeLimit | InLimit | L1Limit
    objectives: tuple  # (sense "max"|"min", agg, attr), lexicographic order
    for_pred: object | None

    def __post_init__(self):
        for _, agg, _ in self.objectives:
            if agg not in AGGREGATES:
                raise UnsupportedAggregate(agg)


# -- rendering ---------------------------------------------------------------------

def _lit(v) -> str:
    if isinstance(v, str):
        return "'" + v + "'"
    if isinstance(v, bool):
        return str(v)
    return repr(v)


def render_expr(e) -> str:
    if isinstance(e, Const):
        return _lit(e.value)
    if isinstance(e, Ref):
        return f"{e.phase.upper()}({e.attr})"
    if isinstance(e, Arith):
        return f"{render_expr(e.left)} {e.op} {render_expr(e.right)}"
    raise TypeError(repr(e))


def render_pred(p, top: bool = True) -> str:
    if isinstance(p, And):
        if not p.parts:
            return "TRUE"
        body = " AND ".join(render_pred(q, top=False) for q in p.parts)
        return body if top else f"({body})"
    if isinstance(p, Or):
        body = " OR ".join(render_pred(q, top=False) for q in p.parts)
        return body if top else f"({body})"
    if isinstance(p, Not):
        return f"NOT {render_pred(p.part, top=False)}"
    if isinstance(p, Cmp):
        return f"{render_expr(p.left)} {p.op} {render_expr(p.right)}"
    if isinstance(p, InSet):
        op = "NOT IN" if p.negated else "IN"
        return f"{render_expr(p.expr)} {op} ({', '.join(_lit(v) for v in p.values)})"
    raise TypeError(repr(p))


def _render_use(u) -> str:
    if isinstance(u, BareUse):
        return f"USE {u.relation}"
    cols = [f"{t}.{a}" if t else a for t, a in u.select]
    cols += [f"{s.agg}({s.table + '.' if s.table else ''}{s.attr}) AS {s.alias}" for s in u.aggregates]
    tables = ", ".join(f"{rel} AS {alias}" for rel, alias in u.tables)
    joins = " AND ".join(f"{l[0]}.{l[1]} = {r[0]}.{r[1]}" for l, r in u.join)
    group = ", ".join(f"{t}.{a}" if t else a for t, a in u.group_by)
    return (
        f"USE {u.name} AS (SELECT {', '.join(cols)} FROM {tables}"
        f" WHERE {joins} GROUP BY {group})"
    )


def render_whatif(q: WhatIfQuery) -> str:
    parts = [_render_use(q.use)]
    if q.when is not None:
        parts.append(f"WHEN {render_pred(q.when)}")
    if q.updates:
        parts.append(" AND ".join(f"UPDATE({a}) = {fn.render(a)}" for a, fn in q.updates))
    agg, attr = q.output
    target = "*" if attr is None else f"POST({attr})"
    parts.append(f"OUTPUT {agg}({target})")
    if q.for_pred is not None:
        parts.append(f"FOR {render_pred(q.for_pred)}")
    return "\n".join(parts)


def _render_limit(l) -> str:
    if isinstance(l, RangeLimit):
        if l.low is not None and l.high is not None:
            return f"{_lit(l.low)} <= POST({l.attr}) <= {_lit(l.high)}"
        if l.low is not None:
            return f"{_lit(l.low)} <= POST({l.attr})"
        return f"POST({l.attr}) <= {_lit(l.high)}"
    if isinstance(l, InLimit):
        return f"POST({l.attr}) IN ({', '.join(_lit(v) for v in l.values)})"
    if isinstance(l, L1Limit):
        return f"L1(PRE({l.attr}), POST({l.attr})) <= {_lit(l.theta)}"
    raise TypeError(repr(l))


def render_howto(q: HowToQuery) -> str:
    parts = [_render_use(q.use)]
    if q.when is not None:
        parts.append(f"WHEN {render_pred(q.when)}")
    parts.append("HOWTOUPDATE " + ", ".join(q.howto_attrs))
    if q.limits:
        parts.append("LIMIT " + " AND ".join(_render_limit(l) for l in q.limits))
    for sense, agg, attr in q.objectives:
        kw = "TOMAXIMIZE" if sense == "max" else "TOMINIMIZE"
        target = "*" if attr is None else f"POST({attr})"
        parts.append(f"{kw} {agg}({target})")
    if q.for_pred is not None:
        parts.append(f"FOR {render_pred(q.for_pred)}")
    return "\n".join(parts)
