from .ast import (
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
    RangeLimit,
    Ref,
    TRUE,
    UpdateFn,
    ViewUse,
    WhatIfQuery,
    eval_pred,
    pred_attrs,
    render_howto,
    render_pred,
    render_whatif,
)
from .parser import parse_howto, parse_whatif, validate_howto, validate_whatif
from .normalize import Conjunct, DisjointDnf, normalize_for

__all__ = [
    "AggSel", "And", "Arith", "BareUse", "Cmp", "Const", "HowToQuery", "InLimit",
    "InSet", "L1Limit", "Not", "Or", "RangeLimit", "Ref", "TRUE", "UpdateFn",
    "ViewUse", "WhatIfQuery", "eval_pred", "pred_attrs", "render_howto",
    "render_pred", "render_whatif", "parse_howto", "parse_whatif",
    "validate_howto", "validate_whatif", "Conjunct", "DisjointDnf", "normalize_for",
]
