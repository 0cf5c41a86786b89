"""Symbolic ranges: the abstract domain attached to each left-value.

A range is either empty or a pair [lo; hi] of symbolic bounds.  The
empty range is a distinguished element, not just any pair with hi < lo:
construction normalizes pairs whose emptiness is decidable, and the
three-valued inclusion test falls back to witness valuations to refute
an inclusion when it cannot be proven.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .spec_ast import (
    ArrayType,
    CmpOp,
    CType,
    IntType,
    PtrType,
    StructType,
    strip_const,
)
from .symbolic import (
    NEG_INF,
    POS_INF,
    Cmp,
    EvalError,
    SConst,
    SExpr,
    compare,
    is_inf,
    probe_valuations,
    proven_le,
    render_sexpr,
    smax,
    smin,
    ssub,
)


class Tri(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SymRange:
    """Empty, or the set of integers between two symbolic bounds."""

    lo: Optional[SExpr] = None
    hi: Optional[SExpr] = None

    def __post_init__(self):
        if (self.lo is None) != (self.hi is None):
            raise ValueError("both bounds or neither")

    @property
    def is_empty(self) -> bool:
        return self.lo is None

    def render(self) -> str:
        if self.is_empty:
            return "∅"
        return f"[{render_sexpr(self.lo)}; {render_sexpr(self.hi)}]"


EMPTY = SymRange()
FULL = SymRange(NEG_INF, POS_INF)


def interval(lo: SExpr, hi: SExpr) -> SymRange:
    """Build a range, collapsing decidable emptiness to EMPTY."""
    if lo == POS_INF or hi == NEG_INF:
        return EMPTY
    if not is_inf(lo) and not is_inf(hi):
        # empty iff hi < lo, i.e. hi <= lo - 1
        if proven_le(hi, ssub(lo, SConst(1))):
            return EMPTY
    return SymRange(lo, hi)


def singleton(e: SExpr) -> SymRange:
    return SymRange(e, e)


def join(r1: SymRange, r2: SymRange) -> SymRange:
    if r1.is_empty:
        return r2
    if r2.is_empty:
        return r1
    return SymRange(smin(r1.lo, r2.lo), smax(r1.hi, r2.hi))


def meet(r1: SymRange, r2: SymRange) -> SymRange:
    if r1.is_empty or r2.is_empty:
        return EMPTY
    return interval(smax(r1.lo, r2.lo), smin(r1.hi, r2.hi))


def leq(r1: SymRange, r2: SymRange) -> Tri:
    """Three-valued inclusion r1 <= r2 over all valuations."""
    if r1.is_empty:
        return Tri.TRUE
    if not r2.is_empty:
        lo_ok = compare(r2.lo, r1.lo) in (Cmp.LE, Cmp.EQ)
        hi_ok = compare(r1.hi, r2.hi) in (Cmp.LE, Cmp.EQ)
        if lo_ok and hi_ok:
            return Tri.TRUE
    # Try to refute: find a valuation where r1 holds an element outside r2.
    probes = [r1.lo, r1.hi]
    if not r2.is_empty:
        probes += [r2.lo, r2.hi]
    for val in probe_valuations(probes):
        try:
            lo1 = val.eval(r1.lo)
            hi1 = val.eval(r1.hi)
            if lo1 > hi1:
                continue  # r1 empty under this valuation
            if r2.is_empty:
                return Tri.FALSE
            if lo1 < val.eval(r2.lo) or hi1 > val.eval(r2.hi):
                return Tri.FALSE
        except EvalError:
            continue
    return Tri.UNKNOWN


def ival(op: CmpOp, t: SExpr) -> SymRange:
    """The range of values an lvalue may take given `lvalue op t`."""
    if op is CmpOp.EQ:
        return SymRange(t, t)
    if op is CmpOp.LE:
        return SymRange(NEG_INF, t)
    if op is CmpOp.GE:
        return SymRange(t, POS_INF)
    raise ValueError(f"no interval form for {op}")


def neutral(t: CType) -> SymRange:
    """Initial range for a left-value of the given type."""
    t = strip_const(t)
    if isinstance(t, IntType):
        return FULL
    if isinstance(t, (PtrType, ArrayType)):
        return EMPTY
    assert isinstance(t, StructType)
    raise ValueError("aggregate left-values carry no range")
