"""Syntax trees for annotated C declarations.

Two layers live here.  The *surface* layer is what the parser produces:
raw C-ish expressions with no type information, faithful enough to be
pretty-printed back to an equivalent source file.  The *domain* layer is
what the rest of the pipeline consumes: terms, memory values and
left-values in the shape the inference rules expect.  The type checker
is the only bridge between the two.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union


class SpecError(Exception):
    """Input rejected: syntax, typing or unsupported construct."""

    def __init__(self, message: str, loc: Optional["SourceLoc"] = None):
        self.loc = loc
        if loc is not None:
            message = f"{loc.line}:{loc.col}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SourceLoc:
    line: int
    col: int


def _loc_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# C types


class CType:
    """Base class for the supported C types."""

    __slots__ = ()


@dataclass(frozen=True)
class IntType(CType):
    kind: str  # e.g. "int", "unsigned long", "size_t"
    const: bool = False


@dataclass(frozen=True)
class PtrType(CType):
    pointee: CType


@dataclass(frozen=True)
class ArrayType(CType):
    elem: CType
    length: int  # strictly positive constant


@dataclass(frozen=True)
class StructType(CType):
    name: str  # resolved against SpecFile.typedefs
    const: bool = False


@dataclass(frozen=True)
class VoidType(CType):
    """Only valid as a return type (possibly behind pointers)."""

    const: bool = False


def is_integer(t: CType) -> bool:
    return isinstance(t, IntType)


def is_pointer(t: CType) -> bool:
    return isinstance(t, PtrType)


def is_pointerish(t: CType) -> bool:
    """Pointer or array: anything that designates a memory region."""
    return isinstance(t, (PtrType, ArrayType))


def pointee(t: CType) -> CType:
    if isinstance(t, PtrType):
        return t.pointee
    if isinstance(t, ArrayType):
        return t.elem
    raise ValueError(f"not a pointer type: {render_ctype(t)}")


def strip_const(t: CType) -> CType:
    if isinstance(t, IntType) and t.const:
        return IntType(t.kind)
    if isinstance(t, StructType) and t.const:
        return StructType(t.name)
    if isinstance(t, PtrType):
        return PtrType(strip_const(t.pointee))
    if isinstance(t, ArrayType):
        return ArrayType(strip_const(t.elem), t.length)
    return t


def render_ctype(t: CType) -> str:
    """Readable one-line form, arrays spelled suffix-free: int[4]."""
    if isinstance(t, IntType):
        return ("const " if t.const else "") + t.kind
    if isinstance(t, StructType):
        return ("const " if t.const else "") + t.name
    if isinstance(t, VoidType):
        return ("const " if t.const else "") + "void"
    if isinstance(t, PtrType):
        return render_ctype(t.pointee) + " *"
    if isinstance(t, ArrayType):
        return f"{render_ctype(t.elem)}[{t.length}]"
    raise AssertionError(t)


def render_decl(t: CType, name: str) -> str:
    """C declarator for a variable of type t (no const)."""
    t = strip_const(t)
    suffix = ""
    while isinstance(t, ArrayType):
        suffix += f"[{t.length}]"
        t = t.elem
    stars = ""
    while isinstance(t, PtrType):
        stars += "*"
        t = t.pointee
    if isinstance(t, IntType):
        base = t.kind
    elif isinstance(t, VoidType):
        base = "void"
    else:
        base = t.name
    return f"{base} {stars}{name}{suffix}"


# ---------------------------------------------------------------------------
# Operators


class CmpOp(enum.Enum):
    EQ = "=="
    NE = "!="
    LE = "<="
    LT = "<"
    GE = ">="
    GT = ">"

    def __str__(self) -> str:
        return self.value


class ArithOp(enum.Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    MOD = "%"

    def __str__(self) -> str:
        return self.value


class DefKind(enum.Enum):
    VALID = "valid"  # writable region
    VALID_READ = "valid_read"
    INITIALIZED = "initialized"

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Surface expressions (parser output, untyped)


class RExpr:
    __slots__ = ()


@dataclass(frozen=True)
class RConst(RExpr):
    value: int
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RIdent(RExpr):
    name: str
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RUnop(RExpr):
    op: str  # "*" deref, "-" negate
    operand: RExpr
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RBin(RExpr):
    op: ArithOp
    left: RExpr
    right: RExpr
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RField(RExpr):
    base: RExpr
    name: str
    arrow: bool
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RIndex(RExpr):
    base: RExpr
    index: RExpr
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RRange(RExpr):
    """Parenthesized (lo .. hi) displacement set."""

    lo: RExpr
    hi: RExpr
    loc: Optional[SourceLoc] = _loc_field()


class RPred:
    __slots__ = ()


@dataclass(frozen=True)
class RDefined(RPred):
    kind: DefKind
    arg: RExpr
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RCmp(RPred):
    op: CmpOp
    left: RExpr
    right: RExpr
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RAnd(RPred):
    items: tuple[RPred, ...]
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class ROr(RPred):
    items: tuple[RPred, ...]
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class RNot(RPred):
    operand: RPred
    loc: Optional[SourceLoc] = _loc_field()


@dataclass(frozen=True)
class StructField:
    name: str
    ctype: CType


@dataclass(frozen=True)
class Typedef:
    name: str
    fields: tuple[StructField, ...]


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    ctype: CType


@dataclass(frozen=True)
class Param:
    name: str
    ctype: CType


@dataclass(frozen=True)
class Clause:
    label: Optional[str]
    pred: RPred


@dataclass(frozen=True)
class SpecFile:
    """One parsed input: typedefs, globals and a single annotated function."""

    typedefs: tuple[Typedef, ...]
    globals: tuple[GlobalDecl, ...]
    ret_type: CType
    name: str
    params: tuple[Param, ...]
    clauses: tuple[Clause, ...]


# ---------------------------------------------------------------------------
# Domain grammar (typed)


class LValue:
    __slots__ = ()


class MemoryValue:
    __slots__ = ()


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class VarLV(LValue):
    name: str


@dataclass(frozen=True)
class DerefLV(LValue):
    mem: MemoryValue


@dataclass(frozen=True)
class FieldLV(LValue):
    base: LValue
    field: str


@dataclass(frozen=True)
class MemLoc(MemoryValue):
    lvalue: LValue


@dataclass(frozen=True)
class MemRange(MemoryValue):
    """base ++ (lo .. hi); normal form roots base at an LValue."""

    base: MemoryValue
    lo: Term
    hi: Term


@dataclass(frozen=True)
class TConst(Term):
    value: int


@dataclass(frozen=True)
class TMem(Term):
    mem: MemoryValue


@dataclass(frozen=True)
class TBin(Term):
    op: ArithOp
    left: Term
    right: Term


@dataclass(frozen=True)
class TMin(Term):
    """Internal only: introduced when joining displacement offsets."""

    left: Term
    right: Term


@dataclass(frozen=True)
class TMax(Term):
    left: Term
    right: Term


# Typed predicates, pre-DNF.


class Pred:
    __slots__ = ()


@dataclass(frozen=True)
class PDefined(Pred):
    mem: MemoryValue
    kind: DefKind


@dataclass(frozen=True)
class PCmp(Pred):
    """Integer comparison between two terms."""

    op: CmpOp
    left: Term
    right: Term


@dataclass(frozen=True)
class PPtrCmp(Pred):
    """Pointer equality or disequality; None stands for a null constant."""

    op: CmpOp  # EQ or NE
    left: Optional[MemoryValue]
    right: Optional[MemoryValue]


@dataclass(frozen=True)
class PAnd(Pred):
    items: tuple[Pred, ...]


@dataclass(frozen=True)
class POr(Pred):
    items: tuple[Pred, ...]


@dataclass(frozen=True)
class PNot(Pred):
    operand: Pred


# DNF literals.


class Literal:
    __slots__ = ()


@dataclass(frozen=True)
class LitCmp(Literal):
    """Positive integer comparison; op is EQ, LE or GE after normalization."""

    op: CmpOp
    left: Term
    right: Term


@dataclass(frozen=True)
class LitDefined(Literal):
    mem: MemoryValue
    kind: DefKind


@dataclass(frozen=True)
class LitPtrEq(Literal):
    left: Optional[MemoryValue]
    right: Optional[MemoryValue]


@dataclass(frozen=True)
class LitPtrNeq(Literal):
    left: Optional[MemoryValue]
    right: Optional[MemoryValue]


@dataclass(frozen=True)
class LitNotDefined(Literal):
    mem: MemoryValue
    kind: DefKind


ClauseLits = tuple[Literal, ...]


def literal_rank(lit: Literal) -> int:
    """Processing order inside a clause: positives, then pointer
    disequalities, then not-defined checks."""
    if isinstance(lit, (LitCmp, LitDefined, LitPtrEq)):
        return 0
    if isinstance(lit, LitPtrNeq):
        return 1
    return 2


# ---------------------------------------------------------------------------
# Renderings (canonical, used for dumps, digests and dedup keys)

_PREC = {
    ArithOp.ADD: 1,
    ArithOp.SUB: 1,
    ArithOp.MUL: 2,
    ArithOp.DIV: 2,
    ArithOp.MOD: 2,
}


def render_lvalue(lv: LValue) -> str:
    if isinstance(lv, VarLV):
        return lv.name
    if isinstance(lv, FieldLV):
        base = lv.base
        # a->f reads better than (*a).f
        if isinstance(base, DerefLV) and isinstance(base.mem, MemLoc):
            return f"{render_lvalue(base.mem.lvalue)}->{lv.field}"
        return f"{render_lvalue(base)}.{lv.field}"
    if isinstance(lv, DerefLV):
        return f"*({render_mem(lv.mem)})"
    raise AssertionError(lv)


def render_mem(m: MemoryValue) -> str:
    if isinstance(m, MemLoc):
        return render_lvalue(m.lvalue)
    if isinstance(m, MemRange):
        base = render_mem(m.base)
        if m.lo == m.hi:
            return f"{base} + {render_term(m.lo, 3)}"
        return f"{base} + ({render_term(m.lo)} .. {render_term(m.hi)})"
    raise AssertionError(m)


def render_term(t: Term, prec: int = 0) -> str:
    if isinstance(t, TConst):
        s = str(t.value)
        return f"({s})" if t.value < 0 and prec > 0 else s
    if isinstance(t, TMem):
        return render_mem(t.mem)
    if isinstance(t, TMin):
        return f"min({render_term(t.left)}, {render_term(t.right)})"
    if isinstance(t, TMax):
        return f"max({render_term(t.left)}, {render_term(t.right)})"
    if isinstance(t, TBin):
        p = _PREC[t.op]
        left = render_term(t.left, p)
        # right operand of - / % needs one level more
        rp = p + 1 if t.op in (ArithOp.SUB, ArithOp.DIV, ArithOp.MOD) else p
        right = render_term(t.right, rp)
        s = f"{left} {t.op} {right}"
        return f"({s})" if p < prec else s
    raise AssertionError(t)


def render_literal(lit: Literal) -> str:
    if isinstance(lit, LitCmp):
        return f"{render_term(lit.left)} {lit.op} {render_term(lit.right)}"
    if isinstance(lit, LitDefined):
        return f"\\{lit.kind.name.lower()}({render_mem(lit.mem)})"
    if isinstance(lit, LitNotDefined):
        return f"!\\{lit.kind.name.lower()}({render_mem(lit.mem)})"
    null = "\\null"
    if isinstance(lit, LitPtrEq):
        l = null if lit.left is None else render_mem(lit.left)
        r = null if lit.right is None else render_mem(lit.right)
        return f"{l} == {r}"
    if isinstance(lit, LitPtrNeq):
        l = null if lit.left is None else render_mem(lit.left)
        r = null if lit.right is None else render_mem(lit.right)
        return f"{l} != {r}"
    raise AssertionError(lit)


def lvalues_of_term(t: Term) -> list[LValue]:
    """Left-values read by a term, in first-occurrence order."""
    out: list[LValue] = []

    def go_term(t: Term) -> None:
        if isinstance(t, TMem):
            go_mem(t.mem)
        elif isinstance(t, TBin):
            go_term(t.left)
            go_term(t.right)
        elif isinstance(t, (TMin, TMax)):
            go_term(t.left)
            go_term(t.right)

    def go_mem(m: MemoryValue) -> None:
        if isinstance(m, MemLoc):
            if m.lvalue not in out:
                out.append(m.lvalue)
        else:
            assert isinstance(m, MemRange)
            go_mem(m.base)
            go_term(m.lo)
            go_term(m.hi)

    go_term(t)
    return out


def base_lvalue(m: MemoryValue) -> LValue:
    """Root left-value of a normalized memory value."""
    while isinstance(m, MemRange):
        m = m.base
    assert isinstance(m, MemLoc)
    return m.lvalue
