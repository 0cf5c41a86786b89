"""Driver intermediate representation.

The generator builds a small statement tree instead of C text so one
object feeds both the pretty-printer and the concrete interpreter.
Expressions reference generated names only; the tree is style-free
(the nondeterminism primitive names are chosen at emission time).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .spec_ast import ArrayType, CType, IntType, StructType, render_decl, strip_const

# -- expressions ------------------------------------------------------------


class CExpr:
    __slots__ = ()


@dataclass(frozen=True)
class CConst(CExpr):
    value: int


@dataclass(frozen=True)
class CName(CExpr):
    name: str


@dataclass(frozen=True)
class CField(CExpr):
    base: CExpr
    fieldname: str
    arrow: bool = False


@dataclass(frozen=True)
class CIndex(CExpr):
    base: CExpr
    index: CExpr


@dataclass(frozen=True)
class CDeref(CExpr):
    base: CExpr


@dataclass(frozen=True)
class CAddr(CExpr):
    base: CExpr


@dataclass(frozen=True)
class CBin(CExpr):
    op: str  # + - * / % == != <= >= < >
    left: CExpr
    right: CExpr


@dataclass(frozen=True)
class CCast(CExpr):
    text: str  # e.g. "unsigned char *"; render-only, no semantics
    base: CExpr


@dataclass(frozen=True)
class CMinMax(CExpr):
    """min/max rendered as a conditional expression."""

    is_max: bool
    left: CExpr
    right: CExpr


# binary operator precedence; postfix is 7, unary 6, primaries 8
_PREC = {
    "*": 5, "/": 5, "%": 5,
    "+": 4, "-": 4,
    "<": 3, ">": 3, "<=": 3, ">=": 3,
    "==": 2, "!=": 2,
}


def render_cexpr(e: CExpr, prec: int = 0) -> str:
    if isinstance(e, CConst):
        s = str(e.value)
        return f"({s})" if e.value < 0 and prec > 0 else s
    if isinstance(e, CName):
        return e.name
    if isinstance(e, CField):
        sep = "->" if e.arrow else "."
        return f"{render_cexpr(e.base, 7)}{sep}{e.fieldname}"
    if isinstance(e, CIndex):
        return f"{render_cexpr(e.base, 7)}[{render_cexpr(e.index)}]"
    if isinstance(e, (CDeref, CAddr, CCast)):
        if isinstance(e, CDeref):
            s = f"*{render_cexpr(e.base, 6)}"
        elif isinstance(e, CAddr):
            s = f"&{render_cexpr(e.base, 6)}"
        else:
            s = f"({e.text}){render_cexpr(e.base, 6)}"
        return f"({s})" if prec > 6 else s
    if isinstance(e, CMinMax):
        a = render_cexpr(e.left, 4)
        b = render_cexpr(e.right, 4)
        return f"({a} < {b} ? {b} : {a})" if e.is_max else f"({a} < {b} ? {a} : {b})"
    assert isinstance(e, CBin)
    p = _PREC[e.op]
    left = render_cexpr(e.left, p)
    right = render_cexpr(e.right, p + 1)
    s = f"{left} {e.op} {right}"
    return f"({s})" if prec > p else s


def fold_cexpr(e: CExpr) -> CExpr:
    """Constant-fold +,-,* so sizes print the way a person would write
    them (length, 256) instead of (length - 1 + 1) * 1."""
    if isinstance(e, CBin):
        left = fold_cexpr(e.left)
        right = fold_cexpr(e.right)
        if isinstance(left, CConst) and isinstance(right, CConst):
            if e.op == "+":
                return CConst(left.value + right.value)
            if e.op == "-":
                return CConst(left.value - right.value)
            if e.op == "*":
                return CConst(left.value * right.value)
        if e.op == "*":
            if left == CConst(1):
                return right
            if right == CConst(1):
                return left
        if e.op in ("+", "-") and right == CConst(0):
            return left
        if e.op == "+" and left == CConst(0):
            return right
        # (x - a) + b and (x + a) - b with constants collapse
        if (
            e.op in ("+", "-")
            and isinstance(right, CConst)
            and isinstance(left, CBin)
            and left.op in ("+", "-")
            and isinstance(left.right, CConst)
        ):
            a = left.right.value if left.op == "+" else -left.right.value
            b = right.value if e.op == "+" else -right.value
            return fold_cexpr(
                CBin("+", left.left, CConst(a + b))
                if a + b >= 0
                else CBin("-", left.left, CConst(-(a + b)))
            )
        return CBin(e.op, left, right)
    return e


# -- statements -------------------------------------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class SDecl(Stmt):
    name: str
    ctype: CType


@dataclass(frozen=True)
class SAssign(Stmt):
    target: CExpr
    value: CExpr


@dataclass(frozen=True)
class SRangeInit(Stmt):
    """target = <nondet integer in [lo, hi]>, of the given C kind."""

    target: CExpr
    kind: str
    lo: CExpr
    hi: CExpr


@dataclass(frozen=True)
class SMakeUnknown(Stmt):
    """Fill nelems cells of the given width behind ptr with nondet bytes."""

    ptr: CExpr
    nelems: CExpr
    width: int


@dataclass(frozen=True)
class SAlloc(Stmt):
    """target = malloc(nelems * width), cast to ctype."""

    target: CExpr
    nelems: CExpr
    width: int
    ctype: CType  # pointer type of the target, for the cast


@dataclass(frozen=True)
class SGuard(Stmt):
    cond: CExpr
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class SIf(Stmt):
    cond: CExpr
    then: tuple[Stmt, ...]
    els: tuple[Stmt, ...]


@dataclass(frozen=True)
class SSwitch(Stmt):
    selector: CExpr
    cases: tuple[tuple[int, tuple[Stmt, ...]], ...]


@dataclass(frozen=True)
class SLoop(Stmt):
    """for (var = lo; var <= hi; ++var) body -- available to the emitter
    and the interpreter, currently never produced by the generator."""

    var: str
    lo: CExpr
    hi: CExpr
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class SCall(Stmt):
    func: str
    args: tuple[CExpr, ...]


@dataclass(frozen=True)
class DriverIR:
    """A complete driver: declarations then a statement list, wrapped at
    emission time in ``int <name>(void) { ... return 0; }``."""

    target: str
    name: str
    decls: tuple[SDecl, ...]
    body: tuple[Stmt, ...]
    globals_used: tuple[tuple[str, CType], ...] = ()
    # names the precondition requires to stay indeterminate; they reach
    # the call deliberately unassigned
    indeterminate: frozenset[str] = frozenset()


# -- validation --------------------------------------------------------------


class IRError(ValueError):
    pass


def _names_read(e: CExpr, as_target: bool = False) -> Iterable[tuple[str, bool]]:
    """Yield (name, needs_value) pairs for every variable mentioned.

    A bare name used as an assignment target is a definition, not a
    read.  A name used as a struct or array object (field base, index
    base, address-of, make_unknown on an array) only needs to exist.
    """
    if isinstance(e, CName):
        if not as_target:
            yield (e.name, True)
    elif isinstance(e, CField):
        base = e.base
        if isinstance(base, CName) and not e.arrow:
            yield (base.name, False)
        else:
            yield from _names_read(base)
    elif isinstance(e, CIndex):
        if isinstance(e.base, CName):
            yield (e.base.name, False)
        else:
            yield from _names_read(e.base)
        yield from _names_read(e.index)
    elif isinstance(e, (CDeref, CCast)):
        yield from _names_read(e.base)
    elif isinstance(e, CAddr):
        if isinstance(e.base, CName):
            yield (e.base.name, False)
        else:
            yield from _names_read(e.base)
    elif isinstance(e, CBin):
        yield from _names_read(e.left)
        yield from _names_read(e.right)
    elif isinstance(e, CMinMax):
        yield from _names_read(e.left)
        yield from _names_read(e.right)


@dataclass
class _Scope:
    types: dict[str, CType]
    valued: set[str]

    def child(self) -> "_Scope":
        return _Scope(dict(self.types), set(self.valued))


def _is_object(t: CType) -> bool:
    t = strip_const(t)
    return isinstance(t, (ArrayType, StructType))


def validate_ir(ir: DriverIR) -> None:
    """Structural sanity: names are declared before use, values are
    assigned before they are read, every allocation is immediately
    followed by its null guard."""
    scope = _Scope({}, set(ir.indeterminate))
    for name, ctype in ir.globals_used:
        scope.types[name] = ctype
        if _is_object(ctype):
            scope.valued.add(name)
    for d in ir.decls:
        _declare(scope, d)
    _check_block(ir.body, scope)


def _declare(scope: _Scope, d: SDecl) -> None:
    if d.name in scope.types:
        raise IRError(f"{d.name} declared twice")
    scope.types[d.name] = d.ctype


def _check_expr(scope: _Scope, e: CExpr, as_target: bool = False) -> None:
    for name, needs_value in _names_read(e, as_target):
        if name not in scope.types:
            raise IRError(f"{name} used before declaration")
        if needs_value and not _is_object(scope.types[name]):
            if name not in scope.valued:
                raise IRError(f"{name} read before it is assigned")


def _define_target(scope: _Scope, e: CExpr) -> None:
    if isinstance(e, CName):
        scope.valued.add(e.name)


def _check_block(stmts: tuple[Stmt, ...], scope: _Scope) -> None:
    i = 0
    while i < len(stmts):
        s = stmts[i]
        if isinstance(s, SDecl):
            _declare(scope, s)
        elif isinstance(s, SAssign):
            _check_expr(scope, s.value)
            _check_expr(scope, s.target, as_target=True)
            _define_target(scope, s.target)
        elif isinstance(s, SRangeInit):
            _check_expr(scope, s.lo)
            _check_expr(scope, s.hi)
            _check_expr(scope, s.target, as_target=True)
            _define_target(scope, s.target)
        elif isinstance(s, SMakeUnknown):
            _check_expr(scope, s.ptr)
            _check_expr(scope, s.nelems)
        elif isinstance(s, SAlloc):
            _check_expr(scope, s.nelems)
            _check_expr(scope, s.target, as_target=True)
            _define_target(scope, s.target)
            nxt = stmts[i + 1] if i + 1 < len(stmts) else None
            if not (
                isinstance(nxt, SGuard)
                and nxt.cond == CBin("!=", s.target, CConst(0))
            ):
                raise IRError(
                    f"allocation of {render_cexpr(s.target)} is not "
                    "immediately null-guarded"
                )
        elif isinstance(s, SGuard):
            _check_expr(scope, s.cond)
            _check_block(s.body, scope.child())
        elif isinstance(s, SIf):
            _check_expr(scope, s.cond)
            _check_block(s.then, scope.child())
            _check_block(s.els, scope.child())
        elif isinstance(s, SSwitch):
            _check_expr(scope, s.selector)
            for _, body in s.cases:
                _check_block(body, scope.child())
        elif isinstance(s, SLoop):
            _check_expr(scope, s.lo)
            _check_expr(scope, s.hi)
            inner = scope.child()
            inner.types[s.var] = IntType("int")
            inner.valued.add(s.var)
            _check_block(s.body, inner)
        elif isinstance(s, SCall):
            for a in s.args:
                _check_expr(scope, a)
        else:
            raise IRError(f"unknown statement {s!r}")
        i += 1


# -- textual dump --------------------------------------------------------------


def render_ir(ir: DriverIR) -> str:
    """Human-readable dump of the statement tree."""
    lines = [f"driver {ir.name} -> {ir.target}"]
    for name, ctype in ir.globals_used:
        lines.append(f"global {render_decl(ctype, name)}")
    for d in ir.decls:
        lines.append(f"decl {render_decl(d.ctype, d.name)}")
    _render_block(ir.body, lines, 0)
    return "\n".join(lines)


def _render_block(stmts: tuple[Stmt, ...], lines: list[str], depth: int) -> None:
    pad = "  " * depth
    for s in stmts:
        if isinstance(s, SDecl):
            lines.append(f"{pad}decl {render_decl(s.ctype, s.name)}")
        elif isinstance(s, SAssign):
            lines.append(
                f"{pad}assign {render_cexpr(s.target)} = {render_cexpr(s.value)}"
            )
        elif isinstance(s, SRangeInit):
            lines.append(
                f"{pad}range {render_cexpr(s.target)} : {s.kind} in "
                f"[{render_cexpr(s.lo)}, {render_cexpr(s.hi)}]"
            )
        elif isinstance(s, SMakeUnknown):
            lines.append(
                f"{pad}unknown {render_cexpr(s.ptr)} x {render_cexpr(s.nelems)} "
                f"cells of {s.width}"
            )
        elif isinstance(s, SAlloc):
            lines.append(
                f"{pad}alloc {render_cexpr(s.target)} = "
                f"{render_cexpr(s.nelems)} cells of {s.width}"
            )
        elif isinstance(s, SGuard):
            lines.append(f"{pad}guard {render_cexpr(s.cond)}:")
            _render_block(s.body, lines, depth + 1)
        elif isinstance(s, SIf):
            lines.append(f"{pad}if {render_cexpr(s.cond)}:")
            _render_block(s.then, lines, depth + 1)
            lines.append(f"{pad}else:")
            _render_block(s.els, lines, depth + 1)
        elif isinstance(s, SSwitch):
            lines.append(f"{pad}switch {render_cexpr(s.selector)}:")
            for val, body in s.cases:
                lines.append(f"{pad}  case {val}:")
                _render_block(body, lines, depth + 2)
        elif isinstance(s, SLoop):
            lines.append(
                f"{pad}loop {s.var} in [{render_cexpr(s.lo)}, "
                f"{render_cexpr(s.hi)}]:"
            )
            _render_block(s.body, lines, depth + 1)
        elif isinstance(s, SCall):
            args = ", ".join(render_cexpr(a) for a in s.args)
            lines.append(f"{pad}call {s.func}({args})")
