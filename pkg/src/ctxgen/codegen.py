"""Driver generation.

Turns the inferred (Sigma, graph) of each disjunct into one DriverIR:
left-values are materialized dependencies-first, runtime checks become
guards around everything that follows, and initializations shared by
every disjunct are hoisted above the disjunction switch.  The same
module prints the IR as C, in either the analysis style (Frama_C_*
primitives) or a self-contained generic style.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional

from .constraints import alias_of, sigma_interval, sym_term
from .driver_ir import (
    CAddr,
    CBin,
    CCast,
    CConst,
    CDeref,
    CExpr,
    CField,
    CIndex,
    CMinMax,
    CName,
    DriverIR,
    SAlloc,
    SAssign,
    SCall,
    SDecl,
    SGuard,
    SIf,
    SLoop,
    SMakeUnknown,
    SRangeInit,
    SSwitch,
    Stmt,
    fold_cexpr,
    render_cexpr,
    validate_ir,
)
from .inference import FailKind, InferenceFailure, InferenceResult
from .parser import _param_decl, _ret_decl
from .ranges import SymRange
from .spec_ast import (
    ArrayType,
    CType,
    CmpOp,
    DefKind,
    DerefLV,
    FieldLV,
    IntType,
    LitCmp,
    is_integer,
    LValue,
    MemLoc,
    MemRange,
    MemoryValue,
    PtrType,
    SpecFile,
    StructType,
    TBin,
    TConst,
    Term,
    TMax,
    TMem,
    TMin,
    VarLV,
    lvalues_of_term,
    render_decl,
    render_lvalue,
    strip_const,
)
from .symbolic import (
    Cmp,
    SBin,
    SConst,
    SExpr,
    SMax,
    SMin,
    SStar,
    SVar,
    compare,
    is_inf,
)
from .target import FRAMAC, GENERIC, TargetConfig
from .typecheck import TypedSpec


def strip_const_deep(t: CType) -> CType:
    if isinstance(t, IntType):
        return IntType(t.kind) if t.const else t
    if isinstance(t, StructType):
        return StructType(t.name) if t.const else t
    if isinstance(t, PtrType):
        return PtrType(strip_const_deep(t.pointee))
    assert isinstance(t, ArrayType)
    return ArrayType(strip_const_deep(t.elem), t.length)


def sizeof_ctype(t: CType, cfg: TargetConfig,
                 structs: dict[str, dict[str, CType]]) -> int:
    t = strip_const(t)
    if isinstance(t, IntType):
        return cfg.kind_width(t.kind)
    if isinstance(t, PtrType):
        return cfg.ptr_width
    if isinstance(t, ArrayType):
        return t.length * sizeof_ctype(t.elem, cfg, structs)
    assert isinstance(t, StructType)
    return sum(sizeof_ctype(ft, cfg, structs) for ft in structs[t.name].values())


# -- per-left-value fragments -------------------------------------------------


@dataclass(frozen=True)
class Fragment:
    decls: tuple[SDecl, ...]
    pre: tuple[Stmt, ...]
    alloc: Optional[SAlloc]
    post: tuple[Stmt, ...]
    checks_pre: tuple[CExpr, ...]
    checks_post: tuple[CExpr, ...]
    deps: frozenset[str]

    @property
    def key(self) -> str:
        return repr((self.decls, self.pre, self.alloc, self.post,
                     self.checks_pre, self.checks_post))


def _wrap(conds: tuple[CExpr, ...], stmts: list[Stmt]) -> list[Stmt]:
    for c in reversed(conds):
        stmts = [SGuard(c, tuple(stmts))]
    return stmts


def _assemble(frag: Fragment, tail: list[Stmt]) -> list[Stmt]:
    rest = _wrap(frag.checks_post, tail)
    if frag.alloc is not None:
        inner = list(frag.post) + rest
        core: list[Stmt] = list(frag.pre) + [
            frag.alloc,
            SGuard(CBin("!=", frag.alloc.target, CConst(0)), tuple(inner)),
        ]
    else:
        core = list(frag.pre) + list(frag.post) + rest
    return _wrap(frag.checks_pre, core)


# variable surface kinds
_SCALAR = "scalar"
_PTRVAR = "ptr"
_ARRAY = "array"  # named array object, decays at reads and calls
_OBJECT = "object"  # named struct object standing for *pointer
_BYVAL = "byval"  # struct passed by value


@dataclass
class _Binding:
    kind: str
    name: str


class _DisjunctPlan:
    """Materialization of one successful disjunct."""

    def __init__(self, typed: TypedSpec, cfg: TargetConfig,
                 result: InferenceResult, used_names: set[str]):
        self.typed = typed
        self.cfg = cfg
        self.result = result
        self.sigma = result.sigma
        self.binding: dict[LValue, _Binding] = {}
        self.used_names = used_names
        self.order: list[LValue] = result.graph.topo_order(list(result.sigma))
        self.frags: dict[LValue, Fragment] = {}
        self.prelude: dict[str, Fragment] = {}  # params not in sigma
        self.param_names = {p.name for p in typed.spec.params}

        for g in typed.spec.globals:
            self.binding[VarLV(g.name)] = _Binding(self._surface(g.ctype), g.name)
        for p in typed.spec.params:
            t = strip_const(p.ctype)
            if not isinstance(t, PtrType):
                self.binding[VarLV(p.name)] = _Binding(
                    self._surface(p.ctype), cfg.prefix + p.name
                )
        for lv in self.order:
            self.frags[lv] = self._materialize(lv)
        for p in typed.spec.params:
            if VarLV(p.name) not in self.sigma:
                self.prelude[p.name] = self._param_default(p.name, p.ctype)

    def _surface(self, t: CType) -> str:
        t = strip_const(t)
        if isinstance(t, IntType):
            return _SCALAR
        if isinstance(t, PtrType):
            return _PTRVAR
        if isinstance(t, ArrayType):
            return _ARRAY
        return _BYVAL

    # -- naming

    def _cname(self, lv: LValue) -> str:
        assert isinstance(lv, VarLV)
        if lv.name in self.param_names:
            return self.cfg.prefix + lv.name
        return lv.name  # a global keeps its own name

    def _fresh_backing(self, lv: LValue) -> str:
        flat = re.sub(r"[^A-Za-z0-9]+", "_", render_lvalue(lv)).strip("_")
        name = f"{self.cfg.prefix}{flat}_obj"
        n = 2
        while name in self.used_names:
            name = f"{self.cfg.prefix}{flat}_obj{n}"
            n += 1
        self.used_names.add(name)
        return name

    # -- expression rendering over bindings

    def lv_expr(self, lv: LValue) -> CExpr:
        """The C lvalue that stores the domain left-value lv."""
        if isinstance(lv, VarLV):
            b = self.binding[lv]
            return CName(b.name)
        if isinstance(lv, FieldLV):
            base = lv.base
            if isinstance(base, DerefLV):
                p = self.mem_value(base.mem)
                if isinstance(p, CAddr):
                    return CField(p.base, lv.field, arrow=False)
                return CField(p, lv.field, arrow=True)
            return CField(self.lv_expr(base), lv.field, arrow=False)
        assert isinstance(lv, DerefLV)
        p = self.mem_value(lv.mem)
        if isinstance(p, CAddr):
            return p.base
        return CDeref(p)

    def read_value(self, lv: LValue) -> CExpr:
        """The value of lv as a C expression (arrays decay, virtual
        pointers take the backing object's address)."""
        if isinstance(lv, VarLV):
            b = self.binding[lv]
            if b.kind == _OBJECT:
                return CAddr(CName(b.name))
            return CName(b.name)
        return self.lv_expr(lv)

    def mem_value(self, m: MemoryValue) -> CExpr:
        if isinstance(m, MemLoc):
            return self.read_value(m.lvalue)
        assert m.lo == m.hi
        return fold_cexpr(CBin("+", self.mem_value(m.base), self.term_cexpr(m.lo)))

    def term_cexpr(self, t: Term) -> CExpr:
        if isinstance(t, TConst):
            return CConst(t.value)
        if isinstance(t, TMem):
            assert isinstance(t.mem, MemLoc)
            return self.read_value(t.mem.lvalue)
        if isinstance(t, TMin):
            return CMinMax(False, self.term_cexpr(t.left), self.term_cexpr(t.right))
        if isinstance(t, TMax):
            return CMinMax(True, self.term_cexpr(t.left), self.term_cexpr(t.right))
        assert isinstance(t, TBin)
        return CBin(t.op.value, self.term_cexpr(t.left), self.term_cexpr(t.right))

    def sexpr_cexpr(self, e: SExpr) -> CExpr:
        if isinstance(e, SConst):
            return CConst(e.value)
        if isinstance(e, SVar):
            return self.read_value(e.lvalue)
        if isinstance(e, SStar):
            inner = self.sexpr_cexpr(e.inner)
            if isinstance(inner, CAddr):
                return inner.base
            return CDeref(inner)
        if isinstance(e, SMin):
            return CMinMax(False, self.sexpr_cexpr(e.left), self.sexpr_cexpr(e.right))
        if isinstance(e, SMax):
            return CMinMax(True, self.sexpr_cexpr(e.left), self.sexpr_cexpr(e.right))
        assert isinstance(e, SBin), f"cannot emit {e}"
        return CBin(e.op.value, self.sexpr_cexpr(e.left), self.sexpr_cexpr(e.right))

    # -- materialization

    def _checks_split(self, lv: LValue) -> tuple[tuple[CExpr, ...], tuple[CExpr, ...]]:
        pre: list[CExpr] = []
        post: list[CExpr] = []
        for chk in self.sigma.get(lv).checks:
            if self._check_provable(chk):
                continue
            cond = CBin(
                chk.op.value, self.term_cexpr(chk.left), self.term_cexpr(chk.right)
            )
            involved = lvalues_of_term(chk.left) + lvalues_of_term(chk.right)
            (post if lv in involved else pre).append(cond)
        return tuple(pre), tuple(post)

    def _check_provable(self, chk: LitCmp) -> bool:
        """True when the check holds on every state the final sigma
        admits, so its guard could never fire.  The emitted guard is C
        arithmetic, so every subterm must also stay representable in
        each operand kind or the comparison is left in place."""
        lo_lim, hi_lim = self.cfg.kind_bounds("int")
        for lv in lvalues_of_term(chk.left) + lvalues_of_term(chk.right):
            try:
                t = strip_const(self.typed.lvalue_type(lv))
            except Exception:
                return False
            if not is_integer(t):
                return False
            klo, khi = self.cfg.kind_bounds(t.kind)
            lo_lim, hi_lim = max(lo_lim, klo), min(hi_lim, khi)
        try:
            if not (self._term_tame(chk.left, lo_lim, hi_lim)
                    and self._term_tame(chk.right, lo_lim, hi_lim)):
                return False
            a = sigma_interval(self.sigma, sym_term(chk.left))
            b = sigma_interval(self.sigma, sym_term(chk.right))
        except Exception:
            return False
        if chk.op is CmpOp.LE:
            return a[1] <= b[0]
        if chk.op is CmpOp.GE:
            return a[0] >= b[1]
        if chk.op is CmpOp.EQ:
            return a[0] == a[1] == b[0] == b[1]
        if chk.op is CmpOp.NE:
            return a[1] < b[0] or a[0] > b[1]
        return False

    def _term_tame(self, t: Term, lo_lim: int, hi_lim: int) -> bool:
        iv = sigma_interval(self.sigma, sym_term(t))
        if not (lo_lim <= iv[0] and iv[1] <= hi_lim):
            return False
        if isinstance(t, (TBin, TMin, TMax)):
            return (self._term_tame(t.left, lo_lim, hi_lim)
                    and self._term_tame(t.right, lo_lim, hi_lim))
        return True

    def _deps_of(self, lv: LValue) -> frozenset[str]:
        return frozenset(
            render_lvalue(d) for d in self.result.graph.deps_of(lv)
        )

    def _fail(self, kind: FailKind, lv: LValue, msg: str):
        raise InferenceFailure(kind, render_lvalue(lv), msg)

    def _materialize(self, lv: LValue) -> Fragment:
        t = strip_const_deep(self.typed.lvalue_type(lv))
        if isinstance(t, IntType):
            return self._mat_int(lv, t)
        if isinstance(t, (PtrType, ArrayType)):
            return self._mat_region(lv, t)
        self._fail(FailKind.UNSUPPORTED, lv,
                   "cannot initialize a whole struct value directly")

    def _decl_if_var(self, lv: LValue, t: CType) -> tuple[SDecl, ...]:
        if isinstance(lv, VarLV) and lv.name in self.param_names:
            return (SDecl(self._cname(lv), t),)
        return ()

    def _bound_cexpr(self, e: SExpr, fallback: int) -> tuple[CExpr, Optional[int]]:
        """(expression, constant value if known)"""
        if is_inf(e):
            return CConst(fallback), fallback
        if isinstance(e, SConst):
            return CConst(e.value), e.value
        return self.sexpr_cexpr(e), None

    def _mat_int(self, lv: LValue, t: IntType) -> Fragment:
        sc = self.sigma.get(lv)
        checks_pre, checks_post = self._checks_split(lv)
        decls = self._decl_if_var(lv, t)
        if isinstance(lv, VarLV):
            self.binding.setdefault(lv, _Binding(_SCALAR, self._cname(lv)))
        target = self.lv_expr(lv)
        r = sc.range
        assert not r.is_empty, "integer ranges never go empty silently"
        klo, khi = self.cfg.kind_bounds(t.kind)
        stmts: list[Stmt] = []
        if r.lo == r.hi and isinstance(r.lo, SConst):
            v = r.lo.value
            if not (klo <= v <= khi):
                self._fail(FailKind.INCONSISTENT, lv,
                           f"{t.kind} cannot hold the required value {v}")
            stmts.append(SAssign(target, _int_const(v, klo)))
        elif r.lo == r.hi:
            stmts.append(SAssign(target, self.sexpr_cexpr(r.lo)))
        else:
            lo_e, lo_c = self._bound_cexpr(r.lo, klo)
            hi_e, hi_c = self._bound_cexpr(r.hi, khi)
            if lo_c is not None:
                lo_c = max(lo_c, klo)
                lo_e = _int_const(lo_c, klo)
            if hi_c is not None:
                hi_c = min(hi_c, khi)
                hi_e = _int_const(hi_c, klo)
            if lo_c is not None and hi_c is not None and lo_c > hi_c:
                self._fail(FailKind.INCONSISTENT, lv,
                           f"required range of {render_lvalue(lv)} does not "
                           f"fit in {t.kind}")
            if (lo_c is None or hi_c is None) and compare(r.lo, r.hi) not in (
                Cmp.LE, Cmp.EQ
            ):
                a_iv = ((lo_c, lo_c) if lo_c is not None
                        else sigma_interval(self.sigma, r.lo))
                b_iv = ((hi_c, hi_c) if hi_c is not None
                        else sigma_interval(self.sigma, r.hi))
                if not a_iv[1] <= b_iv[0]:
                    checks_pre = (CBin("<=", lo_e, hi_e),) + checks_pre
            stmts.append(SRangeInit(target, t.kind, lo_e, hi_e))
        return Fragment(decls, tuple(stmts), None, (), checks_pre, checks_post,
                        self._deps_of(lv))

    def _region_cells(self, lv: LValue, r: SymRange) -> tuple[CExpr, Optional[int]]:
        """Number of cells the region needs, as (expr, const or None)."""
        if r.is_empty:
            return CConst(1), 1
        assert r.lo == SConst(0), "regions are rooted at the base pointer"
        if isinstance(r.hi, SConst):
            return CConst(r.hi.value + 1), r.hi.value + 1
        if is_inf(r.hi):
            self._fail(FailKind.UNSUPPORTED, lv,
                       "region has no finite upper bound")
        return fold_cexpr(CBin("+", self.sexpr_cexpr(r.hi), CConst(1))), None

    def _mat_region(self, lv: LValue, t: CType) -> Fragment:
        sc = self.sigma.get(lv)
        checks_pre, checks_post = self._checks_split(lv)
        deps = self._deps_of(lv)
        is_param_var = isinstance(lv, VarLV) and lv.name in self.param_names

        al = alias_of(sc.range) if isinstance(t, PtrType) else None
        if al is not None:
            decls = self._decl_if_var(lv, t)
            if isinstance(lv, VarLV):
                self.binding.setdefault(lv, _Binding(_PTRVAR, self._cname(lv)))
            stmt = SAssign(self.lv_expr(lv), self.sexpr_cexpr(sc.range.lo))
            return Fragment(decls, (stmt,), None, (), checks_pre, checks_post,
                            deps)

        elem = strip_const_deep(t.pointee if isinstance(t, PtrType) else t.elem)
        cells_e, cells_c = self._region_cells(lv, sc.range)
        wants_unknown = DefKind.INITIALIZED in sc.kinds

        if isinstance(elem, StructType):
            return self._mat_struct_region(lv, t, elem, cells_c, wants_unknown,
                                           checks_pre, checks_post, deps)
        if isinstance(elem, ArrayType):
            self._fail(FailKind.UNSUPPORTED, lv,
                       "regions of array elements are not supported")
        width = sizeof_ctype(elem, self.cfg, self.typed.structs)
        if wants_unknown and not isinstance(elem, IntType):
            self._fail(FailKind.UNSUPPORTED, lv,
                       "cannot fill pointer cells with unknown contents")

        decls: tuple[SDecl, ...] = ()
        pre: list[Stmt] = []
        alloc: Optional[SAlloc] = None
        post: list[Stmt] = []

        if isinstance(t, ArrayType):
            # the declared array is its own backing; check the region fits
            self._check_region_fits(lv, sc.range, t.length)
            decls = self._decl_if_var(lv, t)
            if isinstance(lv, VarLV):
                self.binding.setdefault(lv, _Binding(_ARRAY, self._cname(lv)))
            base = self.read_value(lv)
        elif is_param_var and cells_c is not None:
            # constant region behind a pointer parameter: a local array
            decls = (SDecl(self._cname(lv), ArrayType(elem, cells_c)),)
            self.binding[lv] = _Binding(_ARRAY, self._cname(lv))
            base = self.read_value(lv)
        else:
            if isinstance(lv, VarLV):
                decls = self._decl_if_var(lv, t)
                self.binding.setdefault(lv, _Binding(_PTRVAR, self._cname(lv)))
            target = self.lv_expr(lv)
            alloc = SAlloc(target, cells_e, width, t)
            base = target
        if wants_unknown:
            mu = SMakeUnknown(base, cells_e, width)
            if alloc is not None:
                post.append(mu)
            else:
                pre.append(mu)
        return Fragment(decls, tuple(pre), alloc, tuple(post), checks_pre,
                        checks_post, deps)

    def _mat_struct_region(self, lv, t, elem, cells_c, wants_unknown,
                           checks_pre, checks_post, deps) -> Fragment:
        if wants_unknown:
            self._fail(FailKind.UNSUPPORTED, lv,
                       "cannot produce unknown struct contents")
        if cells_c is None or cells_c > 1:
            self._fail(FailKind.UNSUPPORTED, lv,
                       "regions of struct elements wider than one cell")
        if isinstance(t, ArrayType):
            self._check_region_fits(lv, self.sigma.get(lv).range, t.length)
            decls = self._decl_if_var(lv, t)
            if isinstance(lv, VarLV):
                self.binding.setdefault(lv, _Binding(_ARRAY, self._cname(lv)))
            return Fragment(decls, (), None, (), checks_pre, checks_post, deps)
        if isinstance(lv, VarLV) and lv.name in self.param_names:
            name = self._cname(lv)
            self.binding[lv] = _Binding(_OBJECT, name)
            return Fragment((SDecl(name, elem),), (), None, (), checks_pre,
                            checks_post, deps)
        # a struct object backing a pointer field or a global pointer
        name = self._fresh_backing(lv)
        stmt = SAssign(self.lv_expr(lv), CAddr(CName(name)))
        return Fragment((SDecl(name, elem),), (stmt,), None, (), checks_pre,
                        checks_post, deps)

    def _check_region_fits(self, lv: LValue, r: SymRange, length: int) -> None:
        if r.is_empty:
            return
        if isinstance(r.hi, SConst):
            if r.hi.value >= length:
                self._fail(
                    FailKind.INCONSISTENT, lv,
                    f"region of {render_lvalue(lv)} exceeds the declared "
                    f"array length {length}",
                )
            return
        if compare(r.hi, SConst(length - 1)) in (Cmp.LE, Cmp.EQ):
            return
        lo, hi = sigma_interval(self.sigma, r.hi)
        if hi <= length - 1:
            return
        if lo > length - 1:
            self._fail(
                FailKind.INCONSISTENT, lv,
                f"region of {render_lvalue(lv)} exceeds the declared "
                f"array length {length}",
            )
        self._fail(
            FailKind.UNSUPPORTED, lv,
            f"cannot prove the region of {render_lvalue(lv)} fits the "
            f"declared array length {length}",
        )

    # -- parameters the precondition never mentions

    def _param_default(self, name: str, ctype: CType) -> Fragment:
        t = strip_const_deep(ctype)
        cname = self.cfg.prefix + name
        lv = VarLV(name)
        decls = (SDecl(cname, t),)
        if lv in self.result.suppressed:
            self.binding.setdefault(lv, _Binding(self._surface(t), cname))
            return Fragment(decls, (), None, (), (), (), frozenset())
        if isinstance(t, IntType):
            self.binding.setdefault(lv, _Binding(_SCALAR, cname))
            return Fragment(decls, (SAssign(CName(cname), CConst(0)),), None,
                            (), (), (), frozenset())
        if isinstance(t, PtrType):
            self.binding.setdefault(lv, _Binding(_PTRVAR, cname))
            return Fragment(decls, (SAssign(CName(cname), CConst(0)),), None,
                            (), (), (), frozenset())
        self.binding.setdefault(lv, _Binding(self._surface(t), cname))
        return Fragment(decls, (), None, (), (), (), frozenset())

    def call(self) -> SCall:
        args = tuple(
            self.read_value(VarLV(p.name)) for p in self.typed.spec.params
        )
        return SCall(self.typed.spec.name, args)


def _int_const(v: int, kind_lo: int) -> CExpr:
    # INT_MIN-style literals do not exist in C; spell them v+1 - 1
    if v == kind_lo and v < -32768:
        return CBin("-", CConst(v + 1), CConst(1))
    return CConst(v)


# -- whole-driver assembly ----------------------------------------------------


def plan_disjunct(typed: TypedSpec, result: InferenceResult,
                  cfg: TargetConfig) -> None:
    """Materialize one disjunct in isolation, raising InferenceFailure
    when its constraints admit no realizable layout."""
    _DisjunctPlan(typed, cfg, result, {cfg.prefix + p.name
                                       for p in typed.spec.params})


def build_driver(typed: TypedSpec, ok: list[tuple[int, InferenceResult]],
                 cfg: TargetConfig) -> DriverIR:
    """Assemble the driver from the successful disjuncts (1-based indices
    paired with their inference results)."""
    assert ok, "at least one disjunct must have succeeded"
    spec = typed.spec
    used_names = {cfg.prefix + p.name for p in spec.params}
    used_names.add(cfg.prefix + "disjunction")
    plans = [_DisjunctPlan(typed, cfg, res, used_names) for _, res in ok]
    n = len(plans)

    # a left-value is hoistable when every disjunct initializes it the
    # same way and all of its dependencies are hoisted too
    uniform: set[LValue] = set()
    for lv in plans[0].order:
        frags = [p.frags.get(lv) for p in plans]
        if all(
            f is not None and f.key == frags[0].key and f.deps == frags[0].deps
            for f in frags
        ):
            uniform.add(lv)
    hoisted = set(uniform)
    changed = True
    while changed:
        changed = False
        for lv in list(hoisted):
            deps = {render_lvalue(d) for d in plans[0].result.graph.deps_of(lv)}
            names = {render_lvalue(h) for h in hoisted}
            if not deps <= names:
                hoisted.discard(lv)
                changed = True

    hoisted_prelude: list[str] = []
    for pname in plans[0].prelude:
        frags = [p.prelude.get(pname) for p in plans]
        if all(f is not None and f.key == frags[0].key for f in frags):
            hoisted_prelude.append(pname)

    def arm(plan: _DisjunctPlan) -> tuple[Stmt, ...]:
        local: list[Stmt] = []
        decls: list[SDecl] = []
        tail: list[Stmt] = [plan.call()]
        arm_lvs = [lv for lv in plan.order if lv not in hoisted]
        for lv in reversed(arm_lvs):
            tail = _assemble(plan.frags[lv], tail)
        for lv in arm_lvs:
            decls.extend(plan.frags[lv].decls)
        for pname, frag in plan.prelude.items():
            if pname in hoisted_prelude:
                continue
            decls.extend(frag.decls)
            local.extend(_assemble(frag, []))
        return tuple(decls) + tuple(local) + tuple(tail)

    if n == 1:
        inner: list[Stmt] = list(arm(plans[0]))
    else:
        sel = CName(cfg.prefix + "disjunction")
        if n == 2:
            inner = [
                SRangeInit(sel, "int", CConst(0), CConst(1)),
                SIf(sel, arm(plans[1]), arm(plans[0])),
            ]
        else:
            inner = [
                SRangeInit(sel, "int", CConst(1), CConst(n)),
                SSwitch(sel, tuple(
                    (i + 1, arm(p)) for i, p in enumerate(plans)
                )),
            ]

    body: list[Stmt] = inner
    hoist_order = [lv for lv in plans[0].order if lv in hoisted]
    for lv in reversed(hoist_order):
        body = _assemble(plans[0].frags[lv], body)
    prelude_stmts: list[Stmt] = []
    for pname in hoisted_prelude:
        prelude_stmts.extend(_assemble(plans[0].prelude[pname], []))
    body = prelude_stmts + body

    # top declarations: parameters in reverse order, then generated
    # backings, then the disjunction selector
    decls: list[SDecl] = []
    seen: set[str] = set()

    def add_decl(d: SDecl) -> None:
        if d.name not in seen:
            seen.add(d.name)
            decls.append(d)

    by_param: dict[str, list[SDecl]] = {}
    extra: list[SDecl] = []
    for lv in hoist_order:
        for d in plans[0].frags[lv].decls:
            root = _decl_param_root(d.name, cfg, {p.name for p in spec.params})
            if root is not None:
                by_param.setdefault(root, []).append(d)
            else:
                extra.append(d)
    for pname in hoisted_prelude:
        for d in plans[0].prelude[pname].decls:
            by_param.setdefault(pname, []).append(d)
    for p in reversed(spec.params):
        for d in by_param.get(p.name, []):
            add_decl(d)
    for d in extra:
        add_decl(d)
    if n > 1:
        add_decl(SDecl(cfg.prefix + "disjunction", IntType("int")))

    indeterminate: set[str] = set()
    for plan in plans:
        for lv in plan.result.suppressed:
            if isinstance(lv, VarLV) and lv.name in plan.param_names:
                indeterminate.add(cfg.prefix + lv.name)

    ir = DriverIR(
        target=spec.name,
        name=cfg.prefix + spec.name,
        decls=tuple(decls),
        body=tuple(body),
        globals_used=tuple((g.name, strip_const_deep(g.ctype)) for g in spec.globals),
        indeterminate=frozenset(indeterminate),
    )
    validate_ir(ir)
    return ir


def _decl_param_root(name: str, cfg: TargetConfig,
                     params: set[str]) -> Optional[str]:
    if name.startswith(cfg.prefix):
        stem = name[len(cfg.prefix):]
        if stem in params:
            return stem
    return None


# -- C emission ----------------------------------------------------------------


def _collect_builtins(stmts: tuple[Stmt, ...], kinds: set[str],
                      flags: dict[str, bool]) -> None:
    for s in stmts:
        if isinstance(s, SRangeInit):
            kinds.add(s.kind)
        elif isinstance(s, SMakeUnknown):
            flags["unknown"] = True
        elif isinstance(s, SAlloc):
            flags["malloc"] = True
        elif isinstance(s, SGuard):
            _collect_builtins(s.body, kinds, flags)
        elif isinstance(s, SIf):
            _collect_builtins(s.then, kinds, flags)
            _collect_builtins(s.els, kinds, flags)
        elif isinstance(s, SSwitch):
            for _, b in s.cases:
                _collect_builtins(b, kinds, flags)
        elif isinstance(s, SLoop):
            _collect_builtins(s.body, kinds, flags)


def _bytes_expr(nelems: CExpr, width: int) -> CExpr:
    return fold_cexpr(CBin("*", nelems, CConst(width)))


class _Emitter:
    def __init__(self, cfg: TargetConfig):
        self.cfg = cfg
        self.lines: list[str] = []

    def line(self, depth: int, text: str) -> None:
        self.lines.append("  " * depth + text)

    def stmt(self, s: Stmt, depth: int) -> None:
        cfg = self.cfg
        if isinstance(s, SDecl):
            self.line(depth, f"{render_decl(s.ctype, s.name)};")
        elif isinstance(s, SAssign):
            self.line(
                depth,
                f"{render_cexpr(s.target)} = {render_cexpr(s.value)};",
            )
        elif isinstance(s, SRangeInit):
            fn = cfg.interval_builtin(s.kind)
            self.line(
                depth,
                f"{render_cexpr(s.target)} = "
                f"{fn}({render_cexpr(s.lo)}, {render_cexpr(s.hi)});",
            )
        elif isinstance(s, SMakeUnknown):
            fn = cfg.make_unknown_builtin()
            ptr = render_cexpr(CCast("char *", s.ptr))
            nbytes = render_cexpr(_bytes_expr(s.nelems, s.width))
            self.line(depth, f"{fn}({ptr}, {nbytes});")
        elif isinstance(s, SAlloc):
            cast = render_decl(s.ctype, "").strip()
            nbytes = render_cexpr(_bytes_expr(s.nelems, s.width))
            self.line(
                depth,
                f"{render_cexpr(s.target)} = ({cast})malloc({nbytes});",
            )
        elif isinstance(s, SGuard):
            self.line(depth, f"if ({render_cexpr(s.cond)}) {{")
            self.block(s.body, depth + 1)
            self.line(depth, "}")
        elif isinstance(s, SIf):
            self.line(depth, f"if ({render_cexpr(s.cond)}) {{")
            self.block(s.then, depth + 1)
            self.line(depth, "} else {")
            self.block(s.els, depth + 1)
            self.line(depth, "}")
        elif isinstance(s, SSwitch):
            self.line(depth, f"switch ({render_cexpr(s.selector)}) {{")
            for val, body in s.cases:
                self.line(depth + 1, f"case {val}: {{")
                self.block(body, depth + 2)
                self.line(depth + 2, "break;")
                self.line(depth + 1, "}")
            self.line(depth, "}")
        elif isinstance(s, SLoop):
            self.line(depth, "{")
            self.line(depth + 1, f"int {s.var};")
            self.line(
                depth + 1,
                f"for ({s.var} = {render_cexpr(s.lo)}; "
                f"{s.var} <= {render_cexpr(s.hi)}; {s.var}++) {{",
            )
            self.block(s.body, depth + 2)
            self.line(depth + 1, "}")
            self.line(depth, "}")
        elif isinstance(s, SCall):
            args = ", ".join(render_cexpr(a) for a in s.args)
            self.line(depth, f"{s.func}({args});")
        else:
            raise AssertionError(s)

    def block(self, stmts: tuple[Stmt, ...], depth: int) -> None:
        for s in stmts:
            self.stmt(s, depth)


def emit_driver(spec: SpecFile, ir: DriverIR, cfg: TargetConfig) -> str:
    """Print the driver as a standalone C translation unit."""
    em = _Emitter(cfg)
    kinds: set[str] = set()
    flags = {"unknown": False, "malloc": False}
    _collect_builtins(ir.body, kinds, flags)

    em.line(0, "#include <stdlib.h>")
    if cfg.style == GENERIC:
        em.line(0, '#include "ctxgen_runtime.h"')
    else:
        for kind in sorted(kinds):
            kt = cfg.builtin_kind(kind)
            em.line(0, f"extern {kt} {cfg.interval_builtin(kind)}({kt}, {kt});")
        if flags["unknown"]:
            em.line(0, f"extern void {cfg.make_unknown_builtin()}"
                       "(char *, unsigned long);")
    em.line(0, "")
    for td in spec.typedefs:
        em.line(0, "typedef struct {")
        for f in td.fields:
            em.line(1, f"{render_decl(f.ctype, f.name)};")
        em.line(0, f"}} {td.name};")
        em.line(0, "")
    for g in spec.globals:
        em.line(0, f"extern {_param_decl_like(g.name, g.ctype)};")
    if spec.globals:
        em.line(0, "")
    params = ", ".join(_param_decl(p) for p in spec.params) or "void"
    em.line(0, f"extern {_ret_decl(spec.ret_type)}{spec.name}({params});")
    em.line(0, "")
    em.line(0, f"int {ir.name}(void) {{")
    for d in ir.decls:
        em.stmt(d, 1)
    em.block(ir.body, 1)
    em.line(1, "return 0;")
    em.line(0, "}")
    return "\n".join(em.lines) + "\n"


def _param_decl_like(name: str, ctype: CType) -> str:
    from .spec_ast import Param

    return _param_decl(Param(name, ctype))


_RUNTIME_KINDS = (
    "char",
    "unsigned char",
    "short",
    "unsigned short",
    "int",
    "unsigned int",
    "long",
    "unsigned long",
    "long long",
    "unsigned long long",
)


def runtime_header(cfg: TargetConfig) -> str:
    """Self-contained implementations of the generic nondeterminism
    primitives, for compiling and running a generated driver directly."""
    out = [
        "#ifndef CTXGEN_RUNTIME_H",
        "#define CTXGEN_RUNTIME_H",
        "",
        "/* Deterministic pseudo-random source; reseed via ctxgen_seed. */",
        "static unsigned long long ctxgen_state = 0x9e3779b97f4a7c15ull;",
        "",
        "static inline void ctxgen_seed(unsigned long long s) {",
        "  ctxgen_state = s ? s : 0x9e3779b97f4a7c15ull;",
        "}",
        "",
        "static inline unsigned long long ctxgen_next(void) {",
        "  unsigned long long x = ctxgen_state;",
        "  x ^= x << 13;",
        "  x ^= x >> 7;",
        "  x ^= x << 17;",
        "  ctxgen_state = x;",
        "  return x;",
        "}",
        "",
        "static inline void ctxgen_make_unknown(char *p, unsigned long n) {",
        "  unsigned long i;",
        "  for (i = 0; i < n; i++) {",
        "    p[i] = (char)ctxgen_next();",
        "  }",
        "}",
        "",
    ]
    for kind in _RUNTIME_KINDS:
        fn = "ctxgen_range_" + kind.replace(" ", "_")
        out += [
            f"static inline {kind} {fn}({kind} lo, {kind} hi) {{",
            "  unsigned long long span = (unsigned long long)hi"
            " - (unsigned long long)lo;",
            "  if (span + 1 == 0) {",
            f"    return ({kind})ctxgen_next();",
            "  }",
            f"  return ({kind})(lo + ({kind})(ctxgen_next() % (span + 1)));",
            "}",
            "",
        ]
    out.append("#endif /* CTXGEN_RUNTIME_H */")
    return "\n".join(out) + "\n"
