"""Symbolic integer expressions and their partial order.

Range bounds are symbolic expressions over the values of left-values,
with two infinities allowed only at the top level.  A valuation maps
each variable to an integer and fixes a dereference coefficient k >= 2
with V(*E) = k * V(E); expressions are compared by quantifying over all
valuations, which keeps the order sound but only partially decidable.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .normalize import c_div, c_mod
from .spec_ast import ArithOp, LValue, render_lvalue


class EvalError(Exception):
    """A symbolic expression has no value under the given valuation."""


class SExpr:
    __slots__ = ()


@dataclass(frozen=True)
class SConst(SExpr):
    value: int


@dataclass(frozen=True)
class SInf(SExpr):
    sign: int  # +1 or -1


POS_INF = SInf(1)
NEG_INF = SInf(-1)


@dataclass(frozen=True)
class SVar(SExpr):
    lvalue: LValue


@dataclass(frozen=True)
class SStar(SExpr):
    inner: SExpr


@dataclass(frozen=True)
class SBin(SExpr):
    op: ArithOp
    left: SExpr
    right: SExpr


@dataclass(frozen=True)
class SMin(SExpr):
    left: SExpr
    right: SExpr


@dataclass(frozen=True)
class SMax(SExpr):
    left: SExpr
    right: SExpr


def is_inf(e: SExpr) -> bool:
    return isinstance(e, SInf)


def render_sexpr(e: SExpr, prec: int = 0) -> str:
    if isinstance(e, SConst):
        return str(e.value)
    if isinstance(e, SInf):
        return "+inf" if e.sign > 0 else "-inf"
    if isinstance(e, SVar):
        return render_lvalue(e.lvalue)
    if isinstance(e, SStar):
        return f"*({render_sexpr(e.inner)})"
    if isinstance(e, SMin):
        return f"min({render_sexpr(e.left)}, {render_sexpr(e.right)})"
    if isinstance(e, SMax):
        return f"max({render_sexpr(e.left)}, {render_sexpr(e.right)})"
    assert isinstance(e, SBin)
    op_prec = {ArithOp.ADD: 1, ArithOp.SUB: 1}.get(e.op, 2)
    left = render_sexpr(e.left, op_prec)
    right = render_sexpr(e.right, op_prec + 1)
    s = f"{left} {e.op} {right}"
    return f"({s})" if op_prec < prec else s


# -- smart constructors ------------------------------------------------
#
# Arithmetic constructors require finite operands: infinities live only
# at the top of range bounds, where min/max absorb them.


def _finite(e: SExpr, what: str) -> SExpr:
    if isinstance(e, SInf):
        raise EvalError(f"infinite operand of {what}")
    return e


def sadd(a: SExpr, b: SExpr) -> SExpr:
    _finite(a, "+"), _finite(b, "+")
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(a.value + b.value)
    if isinstance(a, SConst) and a.value == 0:
        return b
    if isinstance(b, SConst) and b.value == 0:
        return a
    return SBin(ArithOp.ADD, a, b)


def ssub(a: SExpr, b: SExpr) -> SExpr:
    _finite(a, "-"), _finite(b, "-")
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(a.value - b.value)
    if isinstance(b, SConst) and b.value == 0:
        return a
    if a == b:
        return SConst(0)
    return SBin(ArithOp.SUB, a, b)


def smul(a: SExpr, b: SExpr) -> SExpr:
    _finite(a, "*"), _finite(b, "*")
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(a.value * b.value)
    for c, other in ((a, b), (b, a)):
        if isinstance(c, SConst):
            if c.value == 0:
                return SConst(0)
            if c.value == 1:
                return other
    return SBin(ArithOp.MUL, a, b)


def sdiv(a: SExpr, b: SExpr) -> SExpr:
    _finite(a, "/"), _finite(b, "/")
    if isinstance(b, SConst) and b.value == 0:
        raise EvalError("division by zero")
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(c_div(a.value, b.value))
    if isinstance(b, SConst) and b.value == 1:
        return a
    return SBin(ArithOp.DIV, a, b)


def smod(a: SExpr, b: SExpr) -> SExpr:
    _finite(a, "%"), _finite(b, "%")
    if isinstance(b, SConst) and b.value == 0:
        raise EvalError("modulo by zero")
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(c_mod(a.value, b.value))
    return SBin(ArithOp.MOD, a, b)


def _ordered(a: SExpr, b: SExpr) -> tuple[SExpr, SExpr]:
    return (a, b) if render_sexpr(a) <= render_sexpr(b) else (b, a)


def smin(a: SExpr, b: SExpr) -> SExpr:
    if a == b:
        return a
    if a == NEG_INF or b == POS_INF:
        return a
    if b == NEG_INF or a == POS_INF:
        return b
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(min(a.value, b.value))
    c = compare(a, b)
    if c is Cmp.EQ:
        return _ordered(a, b)[0]
    if c is Cmp.LE:
        return a
    if c is Cmp.GE:
        return b
    return SMin(*_ordered(a, b))


def smax(a: SExpr, b: SExpr) -> SExpr:
    if a == b:
        return a
    if a == POS_INF or b == NEG_INF:
        return a
    if b == POS_INF or a == NEG_INF:
        return b
    if isinstance(a, SConst) and isinstance(b, SConst):
        return SConst(max(a.value, b.value))
    c = compare(a, b)
    if c is Cmp.EQ:
        return _ordered(a, b)[0]
    if c is Cmp.GE:
        return a
    if c is Cmp.LE:
        return b
    return SMax(*_ordered(a, b))


SBIN_MAKE = {
    ArithOp.ADD: sadd,
    ArithOp.SUB: ssub,
    ArithOp.MUL: smul,
    ArithOp.DIV: sdiv,
    ArithOp.MOD: smod,
}


# -- valuations --------------------------------------------------------


@dataclass
class Valuation:
    """Assignment of integers to atoms plus a dereference coefficient."""

    assign: dict[SExpr, int]
    k: int = 2

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("dereference coefficient must be at least 2")

    def eval(self, e: SExpr) -> Union[int, float]:
        if isinstance(e, SConst):
            return e.value
        if isinstance(e, SInf):
            return float("inf") * e.sign
        if isinstance(e, SVar):
            return self.assign.get(e, 0)
        if isinstance(e, SStar):
            return self.k * self.eval(e.inner)
        if isinstance(e, SMin):
            return min(self.eval(e.left), self.eval(e.right))
        if isinstance(e, SMax):
            return max(self.eval(e.left), self.eval(e.right))
        assert isinstance(e, SBin)
        if e in self.assign:  # opaque atoms may be assigned directly
            return self.assign[e]
        l = self.eval(e.left)
        r = self.eval(e.right)
        if isinstance(l, float) or isinstance(r, float):
            raise EvalError("arithmetic on an infinite bound")
        if e.op is ArithOp.ADD:
            return l + r
        if e.op is ArithOp.SUB:
            return l - r
        if e.op is ArithOp.MUL:
            return l * r
        if r == 0:
            raise EvalError("division by zero under valuation")
        return c_div(l, r) if e.op is ArithOp.DIV else c_mod(l, r)


def atoms_of(e: SExpr) -> list[SExpr]:
    """Variables and opaque subexpressions, first occurrence first."""
    out: list[SExpr] = []
    seen: set[SExpr] = set()

    def walk(x: SExpr) -> None:
        if isinstance(x, (SConst, SInf)):
            return
        if isinstance(x, SVar):
            if x not in seen:
                seen.add(x)
                out.append(x)
            return
        if isinstance(x, SStar):
            walk(x.inner)
            return
        if isinstance(x, SBin) and x.op in (ArithOp.DIV, ArithOp.MOD):
            if x not in seen:
                seen.add(x)
                out.append(x)
            return
        walk(x.left)
        walk(x.right)

    walk(e)
    return out


_PROBE_VALUES = (0, 1, -1, 2, 5, -3, 17, -40, 1000)


def probe_valuations(exprs: list[SExpr], limit: int = 96) -> Iterator[Valuation]:
    """Deterministic stream of valuations covering the given expressions.

    Used to find witnesses refuting a candidate range inclusion; any
    witness is conclusive, so the stream only needs diversity, not
    completeness.
    """
    atoms: list[SExpr] = []
    seen: set[SExpr] = set()
    for e in exprs:
        for a in atoms_of(e):
            if a not in seen:
                seen.add(a)
                atoms.append(a)
    n = len(_PROBE_VALUES)
    count = 0
    for k in (2, 3):
        for shift in range(n):
            if count >= limit:
                return
            assign = {
                a: _PROBE_VALUES[(shift + 2 * i) % n] for i, a in enumerate(atoms)
            }
            count += 1
            yield Valuation(assign, k)
    if not atoms:
        return
    for combo in itertools.islice(
        itertools.product(_PROBE_VALUES, repeat=min(len(atoms), 3)),
        max(0, limit - count),
    ):
        assign = {a: combo[i % len(combo)] for i, a in enumerate(atoms)}
        yield Valuation(assign, 2)


# -- the partial order -------------------------------------------------


class Cmp(enum.Enum):
    LE = "le"
    GE = "ge"
    EQ = "eq"
    UNKNOWN = "unknown"
    INCOMPARABLE = "incomparable"


# Monomial: (power of the dereference coefficient, sorted atom tuple).
_Mono = tuple[int, tuple]


def _mono_key(a: SExpr) -> str:
    return render_sexpr(a)


def _poly_mul(p: dict[_Mono, int], q: dict[_Mono, int]) -> dict[_Mono, int]:
    out: dict[_Mono, int] = {}
    for (kp, ap), cp in p.items():
        for (kq, aq), cq in q.items():
            mono = (kp + kq, tuple(sorted(ap + aq, key=_mono_key)))
            out[mono] = out.get(mono, 0) + cp * cq
            if out[mono] == 0:
                del out[mono]
    return out


def _spoly(e: SExpr) -> Optional[dict[_Mono, int]]:
    """Polynomial view over atoms and the coefficient k; None when a
    min/max survived lifting (possible under a product of unknown sign)."""
    if isinstance(e, SConst):
        return {(0, ()): e.value} if e.value else {}
    if isinstance(e, SVar):
        return {(0, (e,)): 1}
    if isinstance(e, SStar):
        inner = _spoly(e.inner)
        if inner is None:
            return None
        return {(k + 1, a): c for (k, a), c in inner.items()}
    if isinstance(e, SBin):
        if e.op in (ArithOp.DIV, ArithOp.MOD):
            return {(0, (e,)): 1}
        l = _spoly(e.left)
        r = _spoly(e.right)
        if l is None or r is None:
            return None
        if e.op is ArithOp.MUL:
            return _poly_mul(l, r)
        sign = 1 if e.op is ArithOp.ADD else -1
        out = dict(l)
        for m, c in r.items():
            out[m] = out.get(m, 0) + sign * c
            if out[m] == 0:
                del out[m]
        return out
    return None  # SMin/SMax handled before the leaf case; SInf too


def _lift_minmax(e: SExpr) -> SExpr:
    """Distribute +, - and multiplication by constants over min/max so
    that all min/max nodes end up above arithmetic."""
    if isinstance(e, (SConst, SInf, SVar)):
        return e
    if isinstance(e, SStar):
        inner = _lift_minmax(e.inner)
        if isinstance(inner, (SMin, SMax)):
            # k > 0, so * distributes monotonically over min/max
            node = type(inner)
            return node(_lift_minmax(SStar(inner.left)), _lift_minmax(SStar(inner.right)))
        return SStar(inner)
    if isinstance(e, (SMin, SMax)):
        node = SMin if isinstance(e, SMin) else SMax
        return node(_lift_minmax(e.left), _lift_minmax(e.right))
    assert isinstance(e, SBin)
    l = _lift_minmax(e.left)
    r = _lift_minmax(e.right)
    if e.op in (ArithOp.DIV, ArithOp.MOD):
        return SBin(e.op, l, r)

    def comb(a: SExpr, b: SExpr) -> SExpr:
        # a op b with min/max pulled out of either side
        if isinstance(a, (SMin, SMax)):
            node = type(a)
            if e.op is ArithOp.MUL:
                if not isinstance(b, SConst):
                    return SBin(e.op, a, b)  # sign unknown: keep opaque
                if b.value == 0:
                    return SConst(0)
                if b.value < 0:
                    node = SMin if node is SMax else SMax
            return node(comb(a.left, b), comb(a.right, b))
        if isinstance(b, (SMin, SMax)):
            node = type(b)
            if e.op is ArithOp.SUB:
                node = SMin if node is SMax else SMax
            if e.op is ArithOp.MUL:
                if isinstance(a, SConst) and a.value < 0:
                    node = SMin if node is SMax else SMax
                if isinstance(a, SConst) and a.value == 0:
                    return SConst(0)
                if not isinstance(a, SConst):
                    return SBin(e.op, a, b)  # sign unknown: keep opaque
            return node(comb(a, b.left), comb(a, b.right))
        return SBin(e.op, a, b)

    return comb(l, r)


def _le_leaf(a: SExpr, b: SExpr) -> bool:
    pa = _spoly(a)
    pb = _spoly(b)
    if pa is None or pb is None:
        return False
    diff = dict(pb)
    for m, c in pa.items():
        diff[m] = diff.get(m, 0) - c
        if diff[m] == 0:
            del diff[m]
    const = diff.pop((0, ()), 0)
    # Monomials over atoms range over all of Z, so any of them makes the
    # difference sign unknown.  Pure powers of k are bounded below via
    # k >= 2, so nonnegative coefficients keep the minimum at k == 2.
    kpoly: dict[int, int] = {}
    for (kp, atoms), c in diff.items():
        if atoms:
            return False
        kpoly[kp] = c
    if any(c < 0 for c in kpoly.values()):
        return False
    floor = const + sum(c * (2**kp) for kp, c in kpoly.items())
    return floor >= 0


def _le(a: SExpr, b: SExpr) -> bool:
    """Proven: V(a) <= V(b) for every valuation V."""
    if a == b or a == NEG_INF or b == POS_INF:
        return True
    if isinstance(a, SInf):  # a == +inf
        return b == POS_INF
    if isinstance(b, SInf):  # b == -inf
        return a == NEG_INF
    if isinstance(a, SMax):
        return _le(a.left, b) and _le(a.right, b)
    if isinstance(a, SMin):
        return _le(a.left, b) or _le(a.right, b)
    if isinstance(b, SMin):
        return _le(a, b.left) and _le(a, b.right)
    if isinstance(b, SMax):
        return _le(a, b.left) or _le(a, b.right)
    return _le_leaf(a, b)


def proven_le(a: SExpr, b: SExpr) -> bool:
    if not isinstance(a, SInf):
        a = _lift_minmax(a)
    if not isinstance(b, SInf):
        b = _lift_minmax(b)
    return _le(a, b)


def compare(e1: SExpr, e2: SExpr) -> Cmp:
    """Three-plus-two-valued comparison of symbolic expressions.

    LE/GE/EQ are proven over all valuations; UNKNOWN means neither
    direction could be proven.  INCOMPARABLE is reserved for callers
    that can refute both directions; compare itself never proves strict
    incomparability and reports UNKNOWN instead.
    """
    le = proven_le(e1, e2)
    ge = proven_le(e2, e1)
    if le and ge:
        return Cmp.EQ
    if le:
        return Cmp.LE
    if ge:
        return Cmp.GE
    return Cmp.UNKNOWN
