"""Recursive-descent parser for the what-if / how-to dialect.

Grammar (keywords case-insensitive, clause order fixed):

    whatif  := use when? update (AND update)* output for?
    howto   := use when? HOWTOUPDATE ident ("," ident)* limit? objective+ for?

    use     := USE ident
             | USE ident AS "(" SELECT sel ("," sel)* FROM tbl ("," tbl)*
               WHERE eq (AND eq)* GROUP BY col ("," col)* ")"
    when    := WHEN pred
    update  := UPDATE "(" ident ")" "=" (literal | number ("*"|"+") PRE "(" ident ")")
    output  := OUTPUT agg "(" ("*" | POST "(" ident ")") ")"
    limit   := LIMIT latom (AND latom)*
    latom   := number "<=" POST "(" ident ")" ("<=" number)?
             | POST "(" ident ")" ("<=" | ">=") number
             | POST "(" ident ")" IN "(" literal ("," literal)* ")"
             | L1 "(" PRE "(" ident ")" "," POST "(" ident ")" ")" "<=" number
    objective := (TOMAXIMIZE | TOMINIMIZE) agg "(" POST "(" ident ")" ")"
    for     := FOR pred

    pred    := opred ; opred := apred (OR apred)* ; apred := npred (AND npred)*
    npred   := NOT npred | "(" pred ")" | atom
    atom    := expr cmp expr (cmp expr)?      -- chains desugar to conjunctions
             | expr (NOT)? IN "(" literal ("," literal)* ")"
    expr    := term (("+"|"-") term)*
    term    := (PRE|POST) "(" ident ")" | ident | literal

Bare attribute references inside predicates default to PRE values.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import (
    ImmutableUpdateTarget,
    PathBetweenUpdates,
    PostInWhen,
    QuerySyntaxError,
    UnknownAttribute,
    UnknownRelation,
    UpdateValueOutsideDomain,
    ValidationError,
)
from .ast import (
    AGGREGATES,
    AggSel,
    And,
    Arith,
    BareUse,
    Cmp,
    Const,
    HowToQuery,
    InLimit,
    InSet,
    L1Limit,
    Not,
    Or,
    POST,
    PRE,
    RangeLimit,
    Ref,
    UpdateFn,
    ViewUse,
    WhatIfQuery,
    conj,
    pred_refs,
)

_KEYWORDS = {
    "USE", "AS", "SELECT", "FROM", "WHERE", "GROUP", "BY", "WHEN", "UPDATE",
    "OUTPUT", "FOR", "PRE", "POST", "AND", "OR", "NOT", "IN", "HOWTOUPDATE",
    "LIMIT", "TOMAXIMIZE", "TOMINIMIZE", "L1", "COUNT", "SUM", "AVG",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d+|\.\d+|\d+)
  | (?P<string>'[^']*')
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|!=|<>|[=<>(),.*+-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # KW, IDENT, NUMBER, STRING, OP, EOF
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        start_line, start_col = line, col
        lexeme = m.group(0)
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        if m.lastgroup == "number":
            num = float(lexeme) if "." in lexeme else int(lexeme)
            tokens.append(Token("NUMBER", num, start_line, start_col))
        elif m.lastgroup == "string":
            tokens.append(Token("STRING", lexeme[1:-1], start_line, start_col))
        elif m.lastgroup == "ident":
            upper = lexeme.upper()
            if upper in _KEYWORDS:
                tokens.append(Token("KW", upper, start_line, start_col))
            else:
                tokens.append(Token("IDENT", lexeme, start_line, start_col))
        else:
            op = "!=" if lexeme == "<>" else lexeme
            tokens.append(Token("OP", op, start_line, start_col))
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    # token plumbing

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.cur
        raise QuerySyntaxError(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def at_kw(self, *kws) -> bool:
        return self.cur.kind == "KW" and self.cur.value in kws

    def expect_kw(self, kw: str) -> Token:
        if not self.at_kw(kw):
            self.error(f"expected {kw}")
        return self.advance()

    def at_op(self, *ops) -> bool:
        return self.cur.kind == "OP" and self.cur.value in ops

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            self.error(f"expected '{op}'")
        return self.advance()

    def expect_ident(self) -> str:
        if self.cur.kind != "IDENT":
            self.error("expected identifier")
        return self.advance().value

    def expect_eof(self):
        if self.cur.kind != "EOF":
            self.error("unexpected trailing input")

    # shared clauses

    def parse_use(self):
        self.expect_kw("USE")
        name = self.expect_ident()
        if not self.at_kw("AS"):
            return BareUse(relation=name)
        self.advance()
        self.expect_op("(")
        self.expect_kw("SELECT")
        select, aggregates = [], []
        while True:
            if self.at_kw(*AGGREGATES):
                agg = self.advance().value
                self.expect_op("(")
                table, attr = self._qualified()
                self.expect_op(")")
                self.expect_kw("AS")
                alias = self.expect_ident()
                aggregates.append(AggSel(alias=alias, agg=agg, table=table, attr=attr))
            else:
                select.append(self._qualified())
            if not self.at_op(","):
                break
            self.advance()
        self.expect_kw("FROM")
        tables = []
        while True:
            rel = self.expect_ident()
            alias = rel
            if self.at_kw("AS"):
                self.advance()
                alias = self.expect_ident()
            tables.append((rel, alias))
            if not self.at_op(","):
                break
            self.advance()
        self.expect_kw("WHERE")
        join = []
        while True:
            left = self._qualified(require_table=True)
            self.expect_op("=")
            right = self._qualified(require_table=True)
            join.append((left, right))
            if not self.at_kw("AND"):
                break
            self.advance()
        self.expect_kw("GROUP")
        self.expect_kw("BY")
        group_by = [self._qualified()]
        while self.at_op(","):
            self.advance()
            group_by.append(self._qualified())
        self.expect_op(")")
        return ViewUse(
            name=name,
            select=tuple(select),
            aggregates=tuple(aggregates),
            tables=tuple(tables),
            join=tuple(join),
            group_by=tuple(group_by),
        )

    def _qualified(self, require_table: bool = False):
        first = self.expect_ident()
        if self.at_op("."):
            self.advance()
            return (first, self.expect_ident())
        if require_table:
            self.error("expected table-qualified attribute")
        return (None, first)

    def parse_when(self):
        if not self.at_kw("WHEN"):
            return None
        self.advance()
        return self.parse_pred()

    def parse_for(self):
        if not self.at_kw("FOR"):
            return None
        self.advance()
        return self.parse_pred()

    # predicates

    def parse_pred(self):
        parts = [self._and_pred()]
        while self.at_kw("OR"):
            self.advance()
            parts.append(self._and_pred())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and_pred(self):
        parts = [self._not_pred()]
        while self.at_kw("AND"):
            self.advance()
            parts.append(self._not_pred())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _not_pred(self):
        if self.at_kw("NOT"):
            self.advance()
            return Not(self._not_pred())
        if self.at_op("("):
            self.advance()
            inner = self.parse_pred()
            self.expect_op(")")
            return inner
        return self._atom()

    def _atom(self):
        left = self._expr()
        if self.at_kw("NOT") or self.at_kw("IN"):
            negated = False
            if self.at_kw("NOT"):
                self.advance()
                negated = True
            self.expect_kw("IN")
            values = self._literal_list()
            return InSet(expr=left, values=values, negated=negated)
        ops, exprs = [], [left]
        while self.at_op("=", "!=", "<", "<=", ">", ">="):
            ops.append(self.advance().value)
            exprs.append(self._expr())
        if not ops:
            self.error("expected comparison or IN")
        atoms = [Cmp(op, l, r) for op, l, r in zip(ops, exprs, exprs[1:])]
        return atoms[0] if len(atoms) == 1 else And(tuple(atoms))

    def _literal_list(self) -> tuple:
        self.expect_op("(")
        values = [self._literal()]
        while self.at_op(","):
            self.advance()
            values.append(self._literal())
        self.expect_op(")")
        return tuple(values)

    def _literal(self):
        if self.at_op("-"):
            self.advance()
            if self.cur.kind != "NUMBER":
                self.error("expected number after '-'")
            return -self.advance().value
        if self.cur.kind in ("NUMBER", "STRING"):
            return self.advance().value
        self.error("expected literal")

    def _expr(self):
        node = self._term()
        while self.at_op("+", "-"):
            op = self.advance().value
            node = Arith(op=op, left=node, right=self._term())
        return node

    def _term(self):
        if self.at_kw("PRE", "POST"):
            phase = PRE if self.advance().value == "PRE" else POST
            self.expect_op("(")
            attr = self.expect_ident()
            self.expect_op(")")
            return Ref(attr=attr, phase=phase)
        if self.cur.kind == "IDENT":
            return Ref(attr=self.advance().value, phase=PRE)
        return Const(self._literal())

    # what-if specific

    def parse_updates(self) -> tuple:
        updates = [self._one_update()]
        while self.at_kw("AND"):
            self.advance()
            updates.append(self._one_update())
        return tuple(updates)

    def _one_update(self):
        self.expect_kw("UPDATE")
        self.expect_op("(")
        attr = self.expect_ident()
        self.expect_op(")")
        self.expect_op("=")
        if self.cur.kind == "STRING":
            return (attr, UpdateFn(kind="set", const=self.advance().value))
        const_tok = self.cur
        const = self._literal()
        if self.at_op("*", "+"):
            kind = "scale" if self.advance().value == "*" else "shift"
            self.expect_kw("PRE")
            self.expect_op("(")
            ref_attr = self.expect_ident()
            self.expect_op(")")
            if ref_attr != attr:
                self.error(f"update of {attr} may only reference PRE({attr})", const_tok)
            return (attr, UpdateFn(kind=kind, const=const))
        return (attr, UpdateFn(kind="set", const=const))

    def parse_output(self) -> tuple:
        self.expect_kw("OUTPUT")
        if not self.at_kw(*AGGREGATES):
            self.error("expected aggregate (COUNT, SUM or AVG)")
        agg = self.advance().value
        self.expect_op("(")
        if self.at_op("*"):
            self.advance()
            attr = None
        else:
            self.expect_kw("POST")
            self.expect_op("(")
            attr = self.expect_ident()
            self.expect_op(")")
        self.expect_op(")")
        return (agg, attr)

    # how-to specific

    def parse_howto_attrs(self) -> tuple:
        self.expect_kw("HOWTOUPDATE")
        attrs = [self.expect_ident()]
        while self.at_op(","):
            self.advance()
            attrs.append(self.expect_ident())
        return tuple(attrs)

    def parse_limits(self) -> tuple:
        if not self.at_kw("LIMIT"):
            return ()
        self.advance()
        limits = [self._limit_atom()]
        while self.at_kw("AND"):
            self.advance()
            limits.append(self._limit_atom())
        return tuple(limits)

    def _post_ref_attr(self) -> str:
        self.expect_kw("POST")
        self.expect_op("(")
        attr = self.expect_ident()
        self.expect_op(")")
        return attr

    def _limit_atom(self):
        if self.at_kw("L1"):
            tok = self.advance()
            self.expect_op("(")
            self.expect_kw("PRE")
            self.expect_op("(")
            pre_attr = self.expect_ident()
            self.expect_op(")")
            self.expect_op(",")
            post_attr = self._post_ref_attr()
            if pre_attr != post_attr:
                self.error("L1 must pair PRE and POST of the same attribute", tok)
            self.expect_op(")")
            self.expect_op("<=")
            theta_tok = self.cur
            theta = self._literal()
            if not isinstance(theta, (int, float)) or theta < 0:
                self.error("L1 budget must be a non-negative number", theta_tok)
            return L1Limit(attr=pre_attr, theta=theta)
        if self.cur.kind == "NUMBER" or self.at_op("-"):
            low = self._literal()
            self.expect_op("<=")
            attr = self._post_ref_attr()
            high = None
            if self.at_op("<="):
                self.advance()
                high = self._literal()
            return RangeLimit(attr=attr, low=low, high=high)
        if self.at_kw("POST"):
            attr = self._post_ref_attr()
            if self.at_kw("IN"):
                self.advance()
                return InLimit(attr=attr, values=self._literal_list())
            if self.at_op("<="):
                self.advance()
                return RangeLimit(attr=attr, low=None, high=self._literal())
            if self.at_op(">="):
                self.advance()
                return RangeLimit(attr=attr, low=self._literal(), high=None)
            self.error("expected IN, <= or >= in LIMIT")
        self.error("expected LIMIT constraint")

    def parse_objectives(self) -> tuple:
        objectives = []
        while self.at_kw("TOMAXIMIZE", "TOMINIMIZE"):
            sense = "max" if self.advance().value == "TOMAXIMIZE" else "min"
            if not self.at_kw(*AGGREGATES):
                self.error("expected aggregate (COUNT, SUM or AVG)")
            agg = self.advance().value
            self.expect_op("(")
            if self.at_op("*"):
                self.advance()
                attr = None
            else:
                attr = self._post_ref_attr()
            self.expect_op(")")
            objectives.append((sense, agg, attr))
        if not objectives:
            self.error("expected TOMAXIMIZE or TOMINIMIZE")
        return tuple(objectives)


def parse_whatif(text: str) -> WhatIfQuery:
    p = _Parser(text)
    use = p.parse_use()
    when = p.parse_when()
    if not p.at_kw("UPDATE"):
        p.error("expected UPDATE")
    updates = p.parse_updates()
    output = p.parse_output()
    for_pred = p.parse_for()
    p.expect_eof()
    return WhatIfQuery(use=use, when=when, updates=updates, output=output, for_pred=for_pred)


def parse_howto(text: str) -> HowToQuery:
    p = _Parser(text)
    use = p.parse_use()
    when = p.parse_when()
    if not p.at_kw("HOWTOUPDATE"):
        p.error("expected HOWTOUPDATE")
    attrs = p.parse_howto_attrs()
    limits = p.parse_limits()
    objectives = p.parse_objectives()
    for_pred = p.parse_for()
    p.expect_eof()
    return HowToQuery(
        use=use, when=when, howto_attrs=attrs, limits=limits,
        objectives=objectives, for_pred=for_pred,
    )


# -- binding and validation ----------------------------------------------------

@dataclass(frozen=True)
class ResolvedUse:
    """USE clause resolved against a schema: the fact relation plus view columns."""

    fact: str
    dimension: str | None
    fk_attr: str | None  # dimension attribute joining to the fact key
    selected: tuple  # fact attribute names listed in SELECT (all of them for bare USE)
    aggregates: tuple  # AggSel with table resolved to the dimension relation name
    columns: tuple  # selected fact attrs + aliases, the query-visible names


def resolve_use(use, db) -> ResolvedUse:
    if isinstance(use, BareUse):
        decl = db.decl(use.relation)
        names = tuple(decl.attr_names)
        return ResolvedUse(
            fact=use.relation, dimension=None, fk_attr=None,
            selected=names, aggregates=(), columns=names,
        )
    alias_to_rel = {}
    for rel, alias in use.tables:
        db.decl(rel)
        if alias in alias_to_rel:
            raise ValidationError(f"duplicate table alias {alias}")
        alias_to_rel[alias] = rel
    if len(use.tables) > 2:
        raise ValidationError("USE views join at most two relations")

    def rel_of(table, attr):
        if table is not None:
            if table not in alias_to_rel:
                raise UnknownRelation(table)
            rel = alias_to_rel[table]
            db.decl(rel).attr(attr)
            return rel
        owners = [r for r in alias_to_rel.values() if attr in db.decl(r).attr_names]
        if not owners:
            raise UnknownAttribute(attr)
        if len(set(owners)) > 1:
            raise ValidationError(f"ambiguous attribute {attr}")
        return owners[0]

    group = {(rel_of(t, a), a) for t, a in use.group_by}
    group_rels = {r for r, _ in group}
    if len(group_rels) != 1:
        raise ValidationError("GROUP BY must use attributes of one relation")
    fact = group_rels.pop()
    fact_decl = db.decl(fact)
    if not set(fact_decl.key) <= {a for _, a in group}:
        raise ValidationError(f"GROUP BY must include the key of {fact}")

    selected = []
    for t, a in use.select:
        rel = rel_of(t, a)
        if rel != fact:
            raise ValidationError(f"plain column {a} must come from {fact}; aggregate it instead")
        selected.append(a)

    aggregates = []
    for s in use.aggregates:
        rel = rel_of(s.table, s.attr)
        if rel == fact:
            raise ValidationError(f"aggregate {s.alias} must come from a joined relation")
        aggregates.append(AggSel(alias=s.alias, agg=s.agg, table=rel, attr=s.attr))

    dimension, fk_attr = None, None
    if len(alias_to_rel) == 2:
        dimension = next(r for r in alias_to_rel.values() if r != fact)
        dim_decl = db.decl(dimension)
        if len(fact_decl.key) != 1:
            raise ValidationError(f"view fact relation {fact} must have a single-attribute key")
        for (lt, la), (rt, ra) in use.join:
            lrel, rrel = alias_to_rel.get(lt), alias_to_rel.get(rt)
            if lrel is None or rrel is None:
                raise UnknownRelation(str(lt if lrel is None else rt))
            pair = {(lrel, la), (rrel, ra)}
            if {p[0] for p in pair} != {fact, dimension}:
                raise ValidationError("join must connect the fact and the joined relation")
            fact_attr = next(a for r, a in pair if r == fact)
            dim_attr = next(a for r, a in pair if r == dimension)
            if fact_attr != fact_decl.key[0]:
                raise ValidationError(f"join must use the key of {fact}")
            if (dim_attr, fact) not in dim_decl.fk:
                raise ValidationError(
                    f"join on {dimension}.{dim_attr} does not follow a declared fk edge"
                )
            fk_attr = dim_attr
        if fk_attr is None:
            raise ValidationError("view join condition missing")

    names = list(selected) + [s.alias for s in aggregates]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate view column names")
    return ResolvedUse(
        fact=fact, dimension=dimension, fk_attr=fk_attr,
        selected=tuple(selected), aggregates=tuple(aggregates), columns=tuple(names),
    )


def _check_refs(pred, resolved: ResolvedUse, clause: str, db, allow_post: bool):
    fact_decl = db.decl(resolved.fact)
    known = set(resolved.columns) | set(fact_decl.attr_names)
    for ref in pred_refs(pred):
        if ref.attr not in known:
            raise UnknownAttribute(f"{clause}: {ref.attr}")
        if ref.phase == POST and not allow_post:
            raise PostInWhen(f"{clause} may only reference PRE values: {ref.attr}")


def validate_whatif(q: WhatIfQuery, db, dag=None) -> ResolvedUse:
    """Check a parsed what-if query against the schema (and DAG, when given)."""
    resolved = resolve_use(q.use, db)
    fact_decl = db.decl(resolved.fact)
    if q.when is not None:
        _check_refs(q.when, resolved, "WHEN", db, allow_post=False)
    seen = set()
    for attr, fn in q.updates:
        if attr in seen:
            raise ValidationError(f"duplicate UPDATE target {attr}")
        seen.add(attr)
        decl = fact_decl.attr(attr)  # update attribute must live in the fact relation
        if not decl.mutable:
            raise ImmutableUpdateTarget(f"{resolved.fact}.{attr}")
        if fn.kind == "set" and not decl.contains(fn.const):
            raise UpdateValueOutsideDomain(f"{attr}: {fn.const!r}")
        if fn.kind in ("scale", "shift") and not decl.numeric:
            raise UpdateValueOutsideDomain(f"{attr}: {fn.kind.upper()} needs a numeric domain")
    if dag is not None and len(q.updates) > 1:
        _check_update_paths(dag, [a for a, _ in q.updates], resolved)
    agg, out_attr = q.output
    if out_attr is not None and out_attr not in resolved.columns:
        raise UnknownAttribute(f"OUTPUT: {out_attr}")
    if agg in ("SUM", "AVG") and out_attr is None:
        raise ValidationError(f"{agg} requires an output attribute")
    if q.for_pred is not None:
        _check_refs(q.for_pred, resolved, "FOR", db, allow_post=True)
    return resolved


def validate_howto(q: HowToQuery, db, dag=None) -> ResolvedUse:
    resolved = resolve_use(q.use, db)
    fact_decl = db.decl(resolved.fact)
    if q.when is not None:
        _check_refs(q.when, resolved, "WHEN", db, allow_post=False)
    for attr in q.howto_attrs:
        decl = fact_decl.attr(attr)
        if not decl.mutable:
            raise ImmutableUpdateTarget(f"{resolved.fact}.{attr}")
    if dag is not None and len(q.howto_attrs) > 1:
        _check_update_paths(dag, list(q.howto_attrs), resolved)
    for limit in q.limits:
        if limit.attr not in q.howto_attrs:
            raise ValidationError(f"LIMIT on {limit.attr}, which is not a HOWTOUPDATE attribute")
        decl = fact_decl.attr(limit.attr)
        if isinstance(limit, InLimit):
            for v in limit.values:
                if not decl.contains(v):
                    raise UpdateValueOutsideDomain(f"{limit.attr}: {v!r}")
        if isinstance(limit, (RangeLimit, L1Limit)) and not decl.numeric:
            raise ValidationError(f"numeric LIMIT on non-numeric attribute {limit.attr}")
    for _, agg, attr in q.objectives:
        if attr is None:
            if agg != "COUNT":
                raise ValidationError(f"{agg} requires an objective attribute")
        elif attr not in resolved.columns:
            raise UnknownAttribute(f"objective: {attr}")
    if q.for_pred is not None:
        _check_refs(q.for_pred, resolved, "FOR", db, allow_post=True)
    return resolved


def _check_update_paths(dag, attrs: list, resolved: ResolvedUse):
    """Reject update-attribute pairs connected by a directed causal path."""
    names = {}
    for a in attrs:
        qualified = f"{resolved.fact}.{a}"
        names[a] = qualified if qualified in dag.nodes else a
    for i, a in enumerate(attrs):
        for b in attrs[i + 1 :]:
            na, nb = names[a], names[b]
            if na not in dag.nodes or nb not in dag.nodes:
                continue
            if nb in dag.descendants({na}) or na in dag.descendants({nb}):
                raise PathBetweenUpdates(f"causal path between {a} and {b}")
