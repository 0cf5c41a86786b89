"""Constraint state threaded through the inference rules.

Sigma maps each left-value to a state constraint: a symbolic range, a
set of residual runtime checks, the definedness kinds that were
requested for it, and its C type.  The dependency graph records which
left-values must be initialized before which; it rejects cycles at
insertion so emission order always exists.  Both structures are
functional: updates return new values, leaving the old ones intact for
derivation replay.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .ranges import SymRange
from .spec_ast import (
    ArithOp,
    CType,
    DefKind,
    DerefLV,
    FieldLV,
    LitCmp,
    LValue,
    MemLoc,
    MemRange,
    MemoryValue,
    SpecError,
    TBin,
    TConst,
    Term,
    TMax,
    TMem,
    TMin,
    VarLV,
    render_ctype,
    render_literal,
    render_lvalue,
)
from .symbolic import (
    SBIN_MAKE,
    SBin,
    SConst,
    SExpr,
    SStar,
    SVar,
    sadd,
    smax,
    smin,
)

# -- terms to symbolic expressions --------------------------------------
#
# Reading a variable or a struct field is an opaque atom keyed by the
# whole access path; reading through a dereference is modeled by the
# star constructor, whose valuation scales by the dereference
# coefficient.


def sym_read(lv: LValue) -> SExpr:
    if isinstance(lv, (VarLV, FieldLV)):
        return SVar(lv)
    assert isinstance(lv, DerefLV)
    return SStar(sym_mem(lv.mem))


def sym_mem(m: MemoryValue) -> SExpr:
    """Symbolic pointer value of a (singleton-displacement) memory value."""
    if isinstance(m, MemLoc):
        return sym_read(m.lvalue)
    assert isinstance(m, MemRange)
    if m.lo != m.hi:
        raise ValueError("no single symbolic value for a displacement range")
    return sadd(sym_mem(m.base), sym_term(m.lo))


def sym_term(t: Term) -> SExpr:
    if isinstance(t, TConst):
        return SConst(t.value)
    if isinstance(t, TMem):
        return sym_mem(t.mem)
    if isinstance(t, TMin):
        return smin(sym_term(t.left), sym_term(t.right))
    if isinstance(t, TMax):
        return smax(sym_term(t.left), sym_term(t.right))
    assert isinstance(t, TBin)
    return SBIN_MAKE[t.op](sym_term(t.left), sym_term(t.right))


def alias_of(r: SymRange) -> Optional[tuple[LValue, SExpr]]:
    """Detect a pointer singleton [L' + off; L' + off].

    Returns the aliased left-value and symbolic offset, or None when the
    range is not a structurally invertible singleton.
    """
    if r.is_empty or r.lo != r.hi:
        return None
    e = r.lo
    if isinstance(e, SVar):
        return e.lvalue, SConst(0)
    if isinstance(e, SBin) and e.op is ArithOp.ADD and isinstance(e.left, SVar):
        return e.left.lvalue, e.right
    return None


def tbase(m: MemoryValue) -> LValue:
    """Left-value under a normalized single displacement."""
    if isinstance(m, MemLoc):
        return m.lvalue
    assert isinstance(m, MemRange) and isinstance(m.base, MemLoc)
    return m.base.lvalue


def toffset(m: MemoryValue) -> Term:
    if isinstance(m, MemLoc):
        return TConst(0)
    assert isinstance(m, MemRange)
    if m.lo != m.hi:
        raise ValueError("offset of a displacement range")
    return m.lo


# -- per-lvalue constraint ----------------------------------------------


@dataclass(frozen=True)
class StateConstraint:
    range: SymRange
    checks: tuple[LitCmp, ...]
    kinds: frozenset[DefKind]
    ctype: CType

    def with_range(self, r: SymRange) -> "StateConstraint":
        return replace(self, range=r)

    def with_check(self, lit: LitCmp) -> "StateConstraint":
        key = render_literal(lit)
        if any(render_literal(c) == key for c in self.checks):
            return self
        return replace(self, checks=self.checks + (lit,))

    def with_kinds(self, kinds: frozenset[DefKind]) -> "StateConstraint":
        if kinds <= self.kinds:
            return self
        return replace(self, kinds=self.kinds | kinds)

    @property
    def meaningful(self) -> bool:
        """Carries information beyond bare membership in sigma."""
        return bool(not self.range.is_empty or self.kinds or self.checks)

    def render(self) -> str:
        if self.checks:
            checks = ", ".join(f"RTC({render_literal(c)})" for c in self.checks)
            s = f"{self.range.render()} ⊕ {{{checks}}}"
        else:
            s = f"{self.range.render()} ⊕ ∅"
        if self.kinds:
            names = ", ".join(sorted(k.name.lower() for k in self.kinds))
            s += f" kinds={{{names}}}"
        return s


def fresh_constraint(ctype: CType, range_: SymRange) -> StateConstraint:
    return StateConstraint(range_, (), frozenset(), ctype)


# -- sigma ---------------------------------------------------------------


class SigmaMap:
    """Insertion-ordered functional map from left-values to constraints."""

    __slots__ = ("_d",)

    def __init__(self, items: Optional[dict[LValue, StateConstraint]] = None):
        self._d: dict[LValue, StateConstraint] = dict(items) if items else {}

    def get(self, lv: LValue) -> Optional[StateConstraint]:
        return self._d.get(lv)

    def __contains__(self, lv: LValue) -> bool:
        return lv in self._d

    def __iter__(self) -> Iterator[LValue]:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def items(self) -> Iterator[tuple[LValue, StateConstraint]]:
        return iter(self._d.items())

    def set(self, lv: LValue, sc: StateConstraint) -> "SigmaMap":
        new = dict(self._d)
        new[lv] = sc  # insertion order is preserved for existing keys
        return SigmaMap(new)

    def digest(self) -> str:
        h = hashlib.sha1()
        for lv, sc in self._d.items():
            line = f"{render_lvalue(lv)} : {render_ctype(sc.ctype)} = {sc.render()}\n"
            h.update(line.encode())
        return h.hexdigest()[:12]

    def render(self) -> str:
        lines = []
        for lv, sc in self._d.items():
            lines.append(
                f"{render_lvalue(lv)} : {render_ctype(sc.ctype)} = {sc.render()}"
            )
        return "\n".join(lines)


_INF = float("inf")


def sigma_interval(sigma: SigmaMap, e: SExpr,
                   _seen: frozenset = frozenset()) -> tuple:
    """Bound a symbolic expression over the extended integers by
    substituting interval endpoints recorded in sigma.  Anything the map
    cannot pin down widens to infinity, so the result over-approximates."""
    from .symbolic import SInf, SMax, SMin

    if isinstance(e, SConst):
        return (e.value, e.value)
    if isinstance(e, SInf):
        return (_INF * e.sign, _INF * e.sign)
    if isinstance(e, SVar):
        if e.lvalue in _seen:
            return (-_INF, _INF)
        sc = sigma.get(e.lvalue)
        if sc is None or sc.range.is_empty:
            return (-_INF, _INF)
        seen = _seen | {e.lvalue}
        lo = sigma_interval(sigma, sc.range.lo, seen)[0]
        hi = sigma_interval(sigma, sc.range.hi, seen)[1]
        return (lo, hi)
    if isinstance(e, SMin):
        a = sigma_interval(sigma, e.left, _seen)
        b = sigma_interval(sigma, e.right, _seen)
        return (min(a[0], b[0]), min(a[1], b[1]))
    if isinstance(e, SMax):
        a = sigma_interval(sigma, e.left, _seen)
        b = sigma_interval(sigma, e.right, _seen)
        return (max(a[0], b[0]), max(a[1], b[1]))
    if isinstance(e, SBin):
        a = sigma_interval(sigma, e.left, _seen)
        b = sigma_interval(sigma, e.right, _seen)
        if e.op is ArithOp.ADD:
            return (a[0] + b[0], a[1] + b[1])
        if e.op is ArithOp.SUB:
            return (a[0] - b[1], a[1] - b[0])
        if e.op is ArithOp.MUL:
            def m(x, y):
                return 0 if x == 0 or y == 0 else x * y
            c = [m(a[0], b[0]), m(a[0], b[1]), m(a[1], b[0]), m(a[1], b[1])]
            return (min(c), max(c))
        if e.op is ArithOp.MOD and isinstance(e.right, SConst) and e.right.value > 0:
            k = e.right.value
            return (0, k - 1) if a[0] >= 0 else (-(k - 1), k - 1)
        if e.op is ArithOp.DIV and isinstance(e.right, SConst) and e.right.value > 0:
            k = e.right.value

            def d(x):
                if x in (_INF, -_INF):
                    return x
                q = abs(int(x)) // k
                return -q if x < 0 else q

            return (d(a[0]), d(a[1]))
    return (-_INF, _INF)


# -- dependency graph -----------------------------------------------------


class CycleError(SpecError):
    """Adding this dependency edge would close a cycle."""


class DepGraph:
    """Functional DAG: an edge a -> b says a's initializer reads b, so b
    must be materialized first."""

    __slots__ = ("_edges",)

    def __init__(self, edges: frozenset[tuple[LValue, LValue]] = frozenset()):
        self._edges = edges

    @property
    def edges(self) -> frozenset[tuple[LValue, LValue]]:
        return self._edges

    def deps_of(self, lv: LValue) -> set[LValue]:
        return {b for a, b in self._edges if a == lv}

    def reaches(self, src: LValue, dst: LValue) -> bool:
        if src == dst:
            return True
        seen = {src}
        stack = [src]
        while stack:
            cur = stack.pop()
            for a, b in self._edges:
                if a == cur and b not in seen:
                    if b == dst:
                        return True
                    seen.add(b)
                    stack.append(b)
        return False

    def with_edge(self, src: LValue, dst: LValue) -> "DepGraph":
        if src == dst or self.reaches(dst, src):
            raise CycleError(
                f"initialization cycle through {render_lvalue(src)} "
                f"and {render_lvalue(dst)}"
            )
        if (src, dst) in self._edges:
            return self
        return DepGraph(self._edges | {(src, dst)})

    def with_edges(self, src: LValue, dsts: list[LValue]) -> "DepGraph":
        g = self
        for d in dsts:
            g = g.with_edge(src, d)
        return g

    def would_cycle(self, src: LValue, dsts: list[LValue]) -> bool:
        try:
            self.with_edges(src, dsts)
        except CycleError:
            return True
        return False

    def topo_order(self, tie_order: list[LValue]) -> list[LValue]:
        """Dependencies-first order; ties broken by position in tie_order."""
        nodes = list(tie_order)
        placed: set[LValue] = set()
        out: list[LValue] = []
        node_set = set(nodes)
        while len(out) < len(nodes):
            progress = False
            for n in nodes:
                if n in placed:
                    continue
                deps = self.deps_of(n) & node_set
                if deps <= placed:
                    out.append(n)
                    placed.add(n)
                    progress = True
                    break
            if not progress:
                raise AssertionError("dependency graph acquired a cycle")
        return out

    def render_dot(self) -> str:
        lines = ["digraph deps {"]
        for a, b in sorted(
            self._edges, key=lambda e: (render_lvalue(e[0]), render_lvalue(e[1]))
        ):
            lines.append(f'  "{render_lvalue(a)}" -> "{render_lvalue(b)}";')
        lines.append("}")
        return "\n".join(lines)
