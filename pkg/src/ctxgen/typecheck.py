"""Type checking and elaboration into the domain grammar.

The surface expressions are retyped against the declared parameters,
globals and typedefs.  Pointer arithmetic is elaborated into
displacement memory values (p + 2, p + (0 .. n)), array indexing into a
dereference of a singleton displacement, and comparisons are split into
integer comparisons and pointer (dis)equalities.  Displacement ranges
with distinct bounds may only appear directly under a definedness
predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

from .spec_ast import (
    ArithOp,
    ArrayType,
    CmpOp,
    CType,
    DefKind,
    DerefLV,
    FieldLV,
    IntType,
    LValue,
    MemLoc,
    MemRange,
    MemoryValue,
    PAnd,
    PCmp,
    PDefined,
    PNot,
    POr,
    PPtrCmp,
    Pred,
    PtrType,
    RAnd,
    RBin,
    RCmp,
    RConst,
    RDefined,
    RExpr,
    RField,
    RIdent,
    RIndex,
    RNot,
    ROr,
    RPred,
    RRange,
    RUnop,
    SpecError,
    SpecFile,
    StructType,
    TBin,
    TConst,
    Term,
    TMem,
    VarLV,
    is_integer,
    is_pointerish,
    pointee,
    render_ctype,
    render_lvalue,
    strip_const,
)
from .target import DEFAULT_CONFIG, TargetConfig


@dataclass
class TypedSpec:
    """A SpecFile whose clauses have been elaborated and typed."""

    spec: SpecFile
    cfg: TargetConfig
    env: dict[str, CType]
    structs: dict[str, dict[str, CType]]
    preds: tuple[Pred, ...]  # one per requires clause, in order
    _lv_cache: dict[LValue, CType] = dc_field(default_factory=dict)

    @property
    def precondition(self) -> Pred:
        if len(self.preds) == 1:
            return self.preds[0]
        return PAnd(self.preds)

    def lvalue_type(self, lv: LValue) -> CType:
        cached = self._lv_cache.get(lv)
        if cached is not None:
            return cached
        if isinstance(lv, VarLV):
            t = self.env.get(lv.name)
            if t is None:
                raise SpecError(f"unknown identifier {lv.name!r}")
        elif isinstance(lv, FieldLV):
            base_t = strip_const(self.lvalue_type(lv.base))
            if not isinstance(base_t, StructType):
                raise SpecError(
                    f"field access on non-struct value {render_lvalue(lv.base)}"
                )
            fields = self.structs[base_t.name]
            if lv.field not in fields:
                raise SpecError(f"no field {lv.field!r} in {base_t.name}")
            t = fields[lv.field]
        elif isinstance(lv, DerefLV):
            t = pointee(strip_const(self.mem_type(lv.mem)))
        else:
            raise AssertionError(lv)
        self._lv_cache[lv] = t
        return t

    def mem_type(self, m: MemoryValue) -> CType:
        if isinstance(m, MemLoc):
            return strip_const(self.lvalue_type(m.lvalue))
        assert isinstance(m, MemRange)
        base_t = strip_const(self.mem_type(m.base))
        if isinstance(base_t, ArrayType):
            return PtrType(base_t.elem)
        return base_t

    def int_kind(self, lv: LValue) -> str:
        t = strip_const(self.lvalue_type(lv))
        if not isinstance(t, IntType):
            raise SpecError(f"{render_lvalue(lv)} is not an integer left-value")
        return t.kind


# Conversion results: a term (integer), a memory value (pointerish), or a
# null pointer constant.
_NULL = object()


class _Checker:
    def __init__(self, spec: SpecFile, cfg: TargetConfig):
        self.spec = spec
        self.cfg = cfg
        self.structs: dict[str, dict[str, CType]] = {}
        for td in spec.typedefs:
            if td.name in self.structs:
                raise SpecError(f"duplicate typedef {td.name!r}")
            self.structs[td.name] = {f.name: f.ctype for f in td.fields}
        self.env: dict[str, CType] = {}
        for g in spec.globals:
            if g.name in self.env:
                raise SpecError(f"duplicate global {g.name!r}")
            self.env[g.name] = g.ctype
        for p in spec.params:
            if p.name in self.env:
                raise SpecError(f"parameter {p.name!r} shadows another declaration")
            self.env[p.name] = p.ctype
        self.typed = TypedSpec(spec, cfg, self.env, self.structs, ())
        for t in list(self.env.values()):
            self._check_type(t)

    def _check_type(self, t: CType) -> None:
        t = strip_const(t)
        if isinstance(t, IntType):
            if not self.cfg.has_kind(t.kind):
                raise SpecError(f"unknown integer kind {t.kind!r}")
        elif isinstance(t, StructType):
            if t.name not in self.structs:
                raise SpecError(f"unknown type {t.name!r}")
            for ft in self.structs[t.name].values():
                self._check_type(ft)
        elif isinstance(t, (PtrType, ArrayType)):
            self._check_type(t.elem if isinstance(t, ArrayType) else t.pointee)

    # -- expression conversion

    def convert(self, e: RExpr):
        """Return a Term, a MemoryValue, or _NULL."""
        if isinstance(e, RConst):
            return TConst(e.value)
        if isinstance(e, RIdent):
            lv = VarLV(e.name)
            t = self.typed.lvalue_type(lv)  # raises on unknown names
            if is_pointerish(strip_const(t)):
                return MemLoc(lv)
            if isinstance(strip_const(t), StructType):
                return lv  # only useful as the base of a field access
            return TMem(MemLoc(lv))
        if isinstance(e, RField):
            base = self.convert(e.base)
            if e.arrow:
                mv = self._as_singleton_mem(base, e.loc)
                base_lv: LValue = DerefLV(mv)
            else:
                base_lv = self._as_lvalue(base, e.loc)
            lv = FieldLV(base_lv, e.name)
            t = strip_const(self.typed.lvalue_type(lv))
            if is_pointerish(t):
                return MemLoc(lv)
            if isinstance(t, StructType):
                raise SpecError(f"field {e.name} has aggregate type", e.loc)
            return TMem(MemLoc(lv))
        if isinstance(e, RUnop):
            if e.op == "-":
                operand = self.convert(e.operand)
                if not isinstance(operand, Term):
                    raise SpecError("cannot negate a pointer", e.loc)
                return TBin(ArithOp.SUB, TConst(0), operand)
            assert e.op == "*"
            mv = self._as_singleton_mem(self.convert(e.operand), e.loc)
            return self._deref(mv, e.loc)
        if isinstance(e, RIndex):
            base = self._as_mem(self.convert(e.base), e.loc)
            idx = self._as_term(self.convert(e.index), e.loc)
            return self._deref(self._displace(base, idx, idx, e.loc), e.loc)
        if isinstance(e, RRange):
            raise SpecError("displacement set is only valid after 'pointer +'", e.loc)
        if isinstance(e, RBin):
            return self._convert_bin(e)
        raise AssertionError(e)

    def _convert_bin(self, e: RBin):
        if e.op in (ArithOp.ADD, ArithOp.SUB) and isinstance(e.right, RRange):
            base = self._as_mem(self.convert(e.left), e.loc)
            lo = self._as_term(self.convert(e.right.lo), e.loc)
            hi = self._as_term(self.convert(e.right.hi), e.loc)
            if e.op is ArithOp.SUB:
                lo = TBin(ArithOp.SUB, TConst(0), lo)
                hi = TBin(ArithOp.SUB, TConst(0), hi)
            return self._displace(base, lo, hi, e.loc)
        left = self.convert(e.left)
        right = self.convert(e.right)
        lmem = isinstance(left, MemoryValue)
        rmem = isinstance(right, MemoryValue)
        if lmem or rmem:
            if e.op not in (ArithOp.ADD, ArithOp.SUB):
                raise SpecError(f"pointer operand of {e.op}", e.loc)
            if lmem and rmem:
                raise SpecError("pointer-pointer arithmetic is unsupported", e.loc)
            if rmem:
                if e.op is ArithOp.SUB:
                    raise SpecError("cannot subtract a pointer", e.loc)
                base, off = right, self._as_term(left, e.loc)
            else:
                base, off = left, self._as_term(right, e.loc)
            if e.op is ArithOp.SUB:
                off = TBin(ArithOp.SUB, TConst(0), off)
            return self._displace(self._as_mem(base, e.loc), off, off, e.loc)
        l = self._as_term(left, e.loc)
        r = self._as_term(right, e.loc)
        if e.op in (ArithOp.DIV, ArithOp.MOD) and r == TConst(0):
            raise SpecError("division by constant zero", e.loc)
        return TBin(e.op, l, r)

    def _deref(self, mv: MemoryValue, loc):
        t = strip_const(self.typed.mem_type(mv))
        target = pointee(t)
        lv = DerefLV(mv)
        if is_pointerish(strip_const(target)):
            return MemLoc(lv)
        if isinstance(strip_const(target), StructType):
            raise SpecError("dereference yields an aggregate; access a field", loc)
        return TMem(MemLoc(lv))

    def _displace(self, base: MemoryValue, lo: Term, hi: Term, loc) -> MemoryValue:
        t = strip_const(self.typed.mem_type(base))
        if not is_pointerish(t):
            raise SpecError("displacement of a non-pointer value", loc)
        return MemRange(base, lo, hi)

    def _as_term(self, v, loc) -> Term:
        if isinstance(v, Term):
            return v
        if isinstance(v, LValue):
            raise SpecError("expected an integer expression, found a struct", loc)
        raise SpecError("expected an integer expression, found a pointer", loc)

    def _as_mem(self, v, loc) -> MemoryValue:
        if isinstance(v, MemoryValue):
            return v
        raise SpecError("expected a pointer expression", loc)

    def _as_singleton_mem(self, v, loc) -> MemoryValue:
        mv = self._as_mem(v, loc)
        if isinstance(mv, MemRange) and mv.lo != mv.hi:
            raise SpecError(
                "dereference of a displacement range; ranges may only appear "
                "under \\valid, \\valid_read or \\initialized",
                loc,
            )
        return mv

    def _as_lvalue(self, v, loc) -> LValue:
        if isinstance(v, LValue):
            return v
        if isinstance(v, TMem):
            return v.mem.lvalue
        if isinstance(v, MemLoc):
            return v.lvalue
        raise SpecError("expected a left-value", loc)

    # -- predicate conversion

    def convert_pred(self, p: RPred) -> Pred:
        if isinstance(p, RAnd):
            return PAnd(tuple(self.convert_pred(i) for i in p.items))
        if isinstance(p, ROr):
            return POr(tuple(self.convert_pred(i) for i in p.items))
        if isinstance(p, RNot):
            return PNot(self.convert_pred(p.operand))
        if isinstance(p, RDefined):
            arg = self.convert(p.arg)
            if isinstance(arg, MemoryValue):
                mv = arg
            elif isinstance(arg, TMem):
                # integer left-value: defined means initialized
                if p.kind is not DefKind.INITIALIZED:
                    raise SpecError(
                        f"\\{p.kind} requires a pointer argument", p.loc
                    )
                mv = arg.mem
            else:
                raise SpecError("definedness of a non-left-value", p.loc)
            return PDefined(mv, p.kind)
        if isinstance(p, RCmp):
            left = self.convert(p.left)
            right = self.convert(p.right)
            lptr = isinstance(left, MemoryValue)
            rptr = isinstance(right, MemoryValue)
            if lptr or rptr:
                if p.op not in (CmpOp.EQ, CmpOp.NE):
                    raise SpecError("ordered comparison of pointers", p.loc)
                lm = left if lptr else self._null_side(left, p)
                rm = right if rptr else self._null_side(right, p)
                if lptr and rptr:
                    lt = strip_const(self.typed.mem_type(left))
                    rt = strip_const(self.typed.mem_type(right))
                    if _decay(lt) != _decay(rt):
                        raise SpecError(
                            f"pointer comparison between {render_ctype(lt)} "
                            f"and {render_ctype(rt)}",
                            p.loc,
                        )
                for side in (lm, rm):
                    if isinstance(side, MemRange) and side.lo != side.hi:
                        raise SpecError(
                            "displacement range in pointer comparison", p.loc
                        )
                return PPtrCmp(p.op, lm, rm)
            lt = self._as_term(left, p.loc)
            rt = self._as_term(right, p.loc)
            return PCmp(p.op, lt, rt)
        raise AssertionError(p)

    def _null_side(self, v, p: RCmp) -> Optional[MemoryValue]:
        if isinstance(v, TConst) and v.value == 0:
            return None
        raise SpecError("comparison between pointer and integer", p.loc)


def _decay(t: CType) -> CType:
    if isinstance(t, ArrayType):
        return PtrType(strip_const(t.elem))
    if isinstance(t, PtrType):
        return PtrType(strip_const(t.pointee))
    return t


def typecheck(spec: SpecFile, cfg: TargetConfig = DEFAULT_CONFIG) -> TypedSpec:
    """Elaborate and type a parsed SpecFile.

    :raises SpecError: on any type clash or unsupported construct.
    """
    checker = _Checker(spec, cfg)
    preds = tuple(checker.convert_pred(c.pred) for c in spec.clauses)
    checker.typed.preds = preds
    return checker.typed
