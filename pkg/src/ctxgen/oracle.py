"""Concrete execution oracle.

Interprets a driver IR over a small memory model, forking at every
nondeterminism primitive, and evaluates the source precondition against
each state that reaches the target call.  A driver is sound when every
reached state satisfies the disjunct that produced it; a driver covers
its precondition when, over small finite domains, the reachable states
project onto exactly the satisfying assignments.

Integers are modeled unbounded; generated range initializations are
already clamped to their C kind, so in-range programs agree with C.
"""

from __future__ import annotations

import copy
import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

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
)
from .normalize import c_div, c_mod
from .spec_ast import (
    ArrayType,
    ClauseLits,
    CmpOp,
    CType,
    DefKind,
    DerefLV,
    FieldLV,
    IntType,
    LitCmp,
    LitDefined,
    Literal,
    LitNotDefined,
    LitPtrEq,
    LitPtrNeq,
    LValue,
    MemLoc,
    MemRange,
    MemoryValue,
    PtrType,
    StructType,
    TBin,
    TConst,
    Term,
    TMax,
    TMem,
    TMin,
    VarLV,
    render_literal,
    strip_const,
)
from .target import TargetConfig
from .typecheck import TypedSpec


class _Singleton:
    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name

    def __deepcopy__(self, memo):
        return self


UNINIT = _Singleton("UNINIT")
NULLPTR = _Singleton("NULLPTR")


@dataclass(frozen=True)
class CellPtr:
    rid: int
    off: int


@dataclass(frozen=True)
class ObjPtr:
    name: str


@dataclass(frozen=True)
class RegionRef:
    rid: int


Value = Union[int, CellPtr, ObjPtr, RegionRef, _Singleton, dict]


@dataclass
class Region:
    elem: str  # "int" or "ptr"
    width: int
    signed: bool
    vals: list


@dataclass
class State:
    vars: dict[str, Value] = field(default_factory=dict)
    heap: dict[int, Region] = field(default_factory=dict)
    next_rid: int = 1

    def new_region(self, elem: str, width: int, signed: bool, n: int) -> int:
        rid = self.next_rid
        self.next_rid += 1
        self.heap[rid] = Region(elem, width, signed, [UNINIT] * n)
        return rid


class InterpBug(Exception):
    """The driver did something no generated driver should do; this is
    an engine defect, not a property of the input."""


@dataclass
class PathEnd:
    state: State
    args: tuple[Value, ...]
    selector: Optional[int]


# -- value strategies ---------------------------------------------------------


class Strategy:
    def pick_range(self, lo: int, hi: int) -> list[int]:
        raise NotImplementedError

    def pick_cells(self, n: int, lo: int, hi: int) -> list[list[int]]:
        raise NotImplementedError


class RandomStrategy(Strategy):
    def __init__(self, rng: random.Random):
        self.rng = rng

    def pick_range(self, lo: int, hi: int) -> list[int]:
        return [self.rng.randint(lo, hi)]

    def pick_cells(self, n: int, lo: int, hi: int) -> list[list[int]]:
        return [[self.rng.randint(lo, hi) for _ in range(n)]]


class ExtremesStrategy(Strategy):
    def pick_range(self, lo: int, hi: int) -> list[int]:
        return [lo] if lo == hi else [lo, hi]

    def pick_cells(self, n: int, lo: int, hi: int) -> list[list[int]]:
        if lo == hi:
            return [[lo] * n]
        return [[lo] * n, [hi] * n]


class ExhaustiveStrategy(Strategy):
    def __init__(self, domain: list[int]):
        self.domain = sorted(set(domain))

    def pick_range(self, lo: int, hi: int) -> list[int]:
        return [v for v in self.domain if lo <= v <= hi]

    def pick_cells(self, n: int, lo: int, hi: int) -> list[list[int]]:
        allowed = [v for v in self.domain if lo <= v <= hi]
        return [list(t) for t in itertools.product(allowed, repeat=n)]


# -- the interpreter ----------------------------------------------------------

# Largest region the harness will materialize; paths allocating more
# cells are skipped rather than sampled.
_ALLOC_CAP = 1 << 20


class _Interp:
    def __init__(self, ir: DriverIR, typed: TypedSpec, cfg: TargetConfig,
                 strategy: Strategy):
        self.ir = ir
        self.typed = typed
        self.cfg = cfg
        self.strategy = strategy
        self.sel_name = cfg.prefix + "disjunction"
        self.ptr_names: set[str] = set()

    # storage creation

    def _init_storage(self, state: State, name: str, t: CType) -> None:
        if isinstance(strip_const(t), PtrType):
            self.ptr_names.add(name)
        state.vars[name] = self._fresh_value(state, t)

    def _fresh_value(self, state: State, t: CType) -> Value:
        t = strip_const(t)
        if isinstance(t, (IntType, PtrType)):
            return UNINIT
        if isinstance(t, ArrayType):
            elem = strip_const(t.elem)
            if isinstance(elem, IntType):
                rid = state.new_region(
                    "int", self.cfg.kind_width(elem.kind),
                    self.cfg.is_signed(elem.kind), t.length,
                )
            elif isinstance(elem, PtrType):
                rid = state.new_region("ptr", self.cfg.ptr_width, False, t.length)
            else:
                raise InterpBug(f"array of {elem} has no cell model")
            return RegionRef(rid)
        assert isinstance(t, StructType)
        fields = self.typed.structs[t.name]
        return {f: self._fresh_value(state, ft) for f, ft in fields.items()}

    # expression evaluation (driver side: any fault is an engine bug)

    def eval(self, state: State, e: CExpr) -> Value:
        if isinstance(e, CConst):
            return e.value
        if isinstance(e, CName):
            v = state.vars.get(e.name, UNINIT)
            if isinstance(v, RegionRef):
                return CellPtr(v.rid, 0)
            if v is UNINIT:
                raise InterpBug(f"driver reads uninitialized {e.name}")
            return v
        if isinstance(e, CCast):
            return self.eval(state, e.base)
        if isinstance(e, CAddr):
            if isinstance(e.base, CName):
                v = state.vars.get(e.base.name)
                if isinstance(v, dict):
                    return ObjPtr(e.base.name)
                if isinstance(v, RegionRef):
                    return CellPtr(v.rid, 0)
            raise InterpBug(f"cannot take the address of {e.base!r}")
        if isinstance(e, CField):
            obj = self._field_object(state, e)
            v = obj.get(e.fieldname, UNINIT)
            if isinstance(v, RegionRef):
                return CellPtr(v.rid, 0)
            if v is UNINIT:
                raise InterpBug(f"driver reads uninitialized field {e.fieldname}")
            return v
        if isinstance(e, (CDeref, CIndex)):
            ptr, off = self._cell_of(state, e)
            region = state.heap[ptr.rid]
            idx = ptr.off + off
            if not (0 <= idx < len(region.vals)):
                raise InterpBug("driver reads outside a region")
            v = region.vals[idx]
            if v is UNINIT:
                raise InterpBug("driver reads an uninitialized cell")
            return v
        if isinstance(e, CMinMax):
            a = self.eval(state, e.left)
            b = self.eval(state, e.right)
            return max(a, b) if e.is_max else min(a, b)
        assert isinstance(e, CBin)
        return self._binop(state, e)

    def _binop(self, state: State, e: CBin) -> Value:
        a = self.eval(state, e.left)
        b = self.eval(state, e.right)
        if e.op in ("==", "!="):
            if isinstance(a, int) and isinstance(b, int):
                eq = a == b
            else:
                if a == 0:
                    a = NULLPTR
                if b == 0:
                    b = NULLPTR
                eq = a == b
            return int(eq) if e.op == "==" else int(not eq)
        if isinstance(a, CellPtr) and isinstance(b, int):
            if e.op == "+":
                return CellPtr(a.rid, a.off + b)
            if e.op == "-":
                return CellPtr(a.rid, a.off - b)
            raise InterpBug(f"pointer {e.op} integer")
        if not (isinstance(a, int) and isinstance(b, int)):
            raise InterpBug(f"bad operands for {e.op}: {a!r}, {b!r}")
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise ZeroDivisionError
            return c_div(a, b)
        if e.op == "%":
            if b == 0:
                raise ZeroDivisionError
            return c_mod(a, b)
        if e.op == "<=":
            return int(a <= b)
        if e.op == ">=":
            return int(a >= b)
        if e.op == "<":
            return int(a < b)
        if e.op == ">":
            return int(a > b)
        raise InterpBug(f"unknown operator {e.op}")

    def _field_object(self, state: State, e: CField) -> dict:
        if e.arrow:
            p = self.eval(state, e.base)
            if isinstance(p, ObjPtr):
                obj = state.vars[p.name]
            else:
                raise InterpBug("arrow access through a non-object pointer")
        else:
            obj = self._object_of(state, e.base)
        if not isinstance(obj, dict):
            raise InterpBug("field access on a non-struct")
        return obj

    def _object_of(self, state: State, e: CExpr):
        if isinstance(e, CName):
            return state.vars.get(e.name)
        if isinstance(e, CField):
            outer = self._field_object(state, e)
            return outer.get(e.fieldname)
        if isinstance(e, CDeref):
            p = self.eval(state, e.base)
            if isinstance(p, ObjPtr):
                return state.vars[p.name]
        raise InterpBug(f"no object for {e!r}")

    def _cell_of(self, state: State, e: CExpr) -> tuple[CellPtr, int]:
        if isinstance(e, CDeref):
            p = self.eval(state, e.base)
        else:
            assert isinstance(e, CIndex)
            base = self.eval(state, e.base)
            idx = self.eval(state, e.index)
            if not isinstance(base, CellPtr) or not isinstance(idx, int):
                raise InterpBug("bad subscript")
            return base, idx
        if not isinstance(p, CellPtr):
            raise InterpBug(f"dereference of {p!r}")
        return p, 0

    # assignment

    def store(self, state: State, target: CExpr, v: Value) -> None:
        if isinstance(target, CName):
            cur = state.vars.get(target.name, UNINIT)
            if isinstance(cur, (dict, RegionRef)):
                raise InterpBug(f"assignment to object {target.name}")
            if target.name in self.ptr_names and isinstance(v, int) and v == 0:
                v = NULLPTR  # a zero constant assigned to a pointer is null
            state.vars[target.name] = v
            return
        if isinstance(target, CField):
            obj = self._field_object(state, target)
            cur = obj.get(target.fieldname, UNINIT)
            if isinstance(cur, (dict, RegionRef)):
                raise InterpBug(f"assignment to object field {target.fieldname}")
            obj[target.fieldname] = v
            return
        if isinstance(target, (CDeref, CIndex)):
            ptr, off = self._cell_of(state, target)
            region = state.heap[ptr.rid]
            idx = ptr.off + off
            if not (0 <= idx < len(region.vals)):
                raise InterpBug("driver writes outside a region")
            if region.elem == "ptr" and isinstance(v, int) and v == 0:
                v = NULLPTR
            region.vals[idx] = v
            return
        raise InterpBug(f"bad assignment target {target!r}")

    # execution

    def run(self) -> Iterator[PathEnd]:
        state = State()
        for name, ctype in self.ir.globals_used:
            self._init_storage(state, name, ctype)
        for d in self.ir.decls:
            self._init_storage(state, d.name, d.ctype)
        yield from self._block([(self.ir.body, 0)], state)

    def _block(self, frames: list[tuple[tuple[Stmt, ...], int]],
               state: State) -> Iterator[PathEnd]:
        while frames:
            stmts, i = frames[-1]
            if i >= len(stmts):
                frames = frames[:-1]
                continue
            frames = frames[:-1] + [(stmts, i + 1)]
            s = stmts[i]
            if isinstance(s, SDecl):
                self._init_storage(state, s.name, s.ctype)
            elif isinstance(s, SAssign):
                self.store(state, s.target, self.eval(state, s.value))
            elif isinstance(s, SAlloc):
                n = self.eval(state, s.nelems)
                if not isinstance(n, int):
                    raise InterpBug("allocation size is not an integer")
                if n > _ALLOC_CAP:
                    # desk-scale harness: skip paths that would materialize
                    # absurdly large regions instead of exhausting memory
                    return
                if n <= 0:
                    self.store(state, s.target, NULLPTR)
                else:
                    elem = "ptr" if isinstance(
                        strip_const(s.ctype.pointee if isinstance(s.ctype, PtrType)
                                    else s.ctype), PtrType
                    ) else "int"
                    signed = True
                    if elem == "int" and isinstance(s.ctype, PtrType):
                        pt = strip_const(s.ctype.pointee)
                        if isinstance(pt, IntType):
                            signed = self.cfg.is_signed(pt.kind)
                    rid = state.new_region(elem, s.width, signed, n)
                    self.store(state, s.target, CellPtr(rid, 0))
            elif isinstance(s, SRangeInit):
                lo = self.eval(state, s.lo)
                hi = self.eval(state, s.hi)
                if not (isinstance(lo, int) and isinstance(hi, int)):
                    raise InterpBug("range bounds are not integers")
                if lo > hi:
                    return
                choices = self.strategy.pick_range(lo, hi)
                if not choices:
                    return
                for v in choices[:-1]:
                    st2 = copy.deepcopy(state)
                    self.store(st2, s.target, v)
                    yield from self._block(list(frames), st2)
                self.store(state, s.target, choices[-1])
            elif isinstance(s, SMakeUnknown):
                p = self.eval(state, s.ptr)
                n = self.eval(state, s.nelems)
                if not isinstance(p, CellPtr) or not isinstance(n, int):
                    raise InterpBug("make_unknown needs a region pointer")
                if n < 0:
                    return
                region = state.heap[p.rid]
                if p.off < 0 or p.off + n > len(region.vals):
                    raise InterpBug("make_unknown runs outside its region")
                if region.elem != "int":
                    raise InterpBug("make_unknown over non-integer cells")
                bits = 8 * region.width
                if region.signed:
                    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
                else:
                    lo, hi = 0, (1 << bits) - 1
                fills = self.strategy.pick_cells(n, lo, hi)
                if not fills:
                    return
                for fill in fills[:-1]:
                    st2 = copy.deepcopy(state)
                    st2.heap[p.rid].vals[p.off:p.off + n] = fill
                    yield from self._block(list(frames), st2)
                region.vals[p.off:p.off + n] = fills[-1]
            elif isinstance(s, SGuard):
                if not self._truthy(self.eval(state, s.cond)):
                    return
                frames = frames + [(s.body, 0)]
            elif isinstance(s, SIf):
                body = s.then if self._truthy(self.eval(state, s.cond)) else s.els
                frames = frames + [(body, 0)]
            elif isinstance(s, SSwitch):
                sel = self.eval(state, s.selector)
                for val, body in s.cases:
                    if val == sel:
                        frames = frames + [(body, 0)]
                        break
            elif isinstance(s, SLoop):
                lo = self.eval(state, s.lo)
                hi = self.eval(state, s.hi)
                bodies: list[tuple[tuple[Stmt, ...], int]] = []
                for v in range(hi, lo - 1, -1):
                    bodies.append(
                        ((SAssign(CName(s.var), CConst(v)),) + s.body, 0)
                    )
                state.vars.setdefault(s.var, UNINIT)
                frames = frames + bodies
            elif isinstance(s, SCall):
                args = tuple(self._arg_value(state, a) for a in s.args)
                sel = state.vars.get(self.sel_name)
                yield PathEnd(state, args, sel if isinstance(sel, int) else None)
                return
            else:
                raise InterpBug(f"unknown statement {s!r}")

    def _arg_value(self, state: State, e: CExpr) -> Value:
        # deliberately indeterminate parameters reach the call unassigned
        if isinstance(e, CName) and e.name in self.ir.indeterminate:
            v = state.vars.get(e.name, UNINIT)
            if isinstance(v, RegionRef):
                return CellPtr(v.rid, 0)
            return v
        return self.eval(state, e)

    @staticmethod
    def _truthy(v: Value) -> bool:
        if isinstance(v, int):
            return v != 0
        if v is NULLPTR:
            return False
        if isinstance(v, (CellPtr, ObjPtr)):
            return True
        raise InterpBug(f"no truth value for {v!r}")


def interpret(ir: DriverIR, typed: TypedSpec, cfg: TargetConfig,
              strategy: Strategy) -> Iterator[PathEnd]:
    """All complete paths of the driver under the given value strategy."""
    interp = _Interp(ir, typed, cfg, strategy)
    try:
        yield from interp.run()
    except ZeroDivisionError:
        # a runtime check divided by zero; the guard prunes the path
        return


# -- precondition evaluation ---------------------------------------------------

TRUE = "TRUE"
FALSE = "FALSE"
FAULT = "FAULT"


class _PredEval:
    """Three-valued evaluation of clause literals against one concrete
    state, with parameters bound to the values passed at the call."""

    def __init__(self, typed: TypedSpec, state: State, env: dict[str, Value]):
        self.typed = typed
        self.state = state
        self.env = env

    # term/lvalue reads: any touched indeterminate value is a FAULT

    def load_lvalue(self, lv: LValue):
        if isinstance(lv, VarLV):
            if lv.name not in self.env:
                return FAULT
            v = self.env[lv.name]
            if isinstance(v, RegionRef):
                return CellPtr(v.rid, 0)
            return FAULT if v is UNINIT else v
        if isinstance(lv, FieldLV):
            obj = self._struct_of(lv.base)
            if obj is FAULT or not isinstance(obj, dict):
                return FAULT
            v = obj.get(lv.field, UNINIT)
            if isinstance(v, RegionRef):
                return CellPtr(v.rid, 0)
            return FAULT if v is UNINIT else v
        assert isinstance(lv, DerefLV)
        p = self.mem_value(lv.mem)
        if p is FAULT or not isinstance(p, CellPtr):
            return FAULT
        region = self.state.heap.get(p.rid)
        if region is None or not (0 <= p.off < len(region.vals)):
            return FAULT
        v = region.vals[p.off]
        return FAULT if v is UNINIT else v

    def _struct_of(self, lv: LValue):
        if isinstance(lv, VarLV):
            v = self.env.get(lv.name, UNINIT)
            return v if isinstance(v, dict) else FAULT
        if isinstance(lv, FieldLV):
            outer = self._struct_of(lv.base)
            if outer is FAULT:
                return FAULT
            v = outer.get(lv.field, UNINIT)
            return v if isinstance(v, dict) else FAULT
        assert isinstance(lv, DerefLV)
        p = self.mem_value(lv.mem)
        if p is FAULT:
            return FAULT
        if isinstance(p, ObjPtr):
            return self.state.vars.get(p.name)
        return FAULT

    def mem_value(self, m: MemoryValue):
        """The pointer value a memory expression denotes."""
        if isinstance(m, MemLoc):
            lv = m.lvalue
            if isinstance(lv, VarLV):
                v = self.env.get(lv.name, UNINIT)
                if isinstance(v, RegionRef):
                    return CellPtr(v.rid, 0)
                return FAULT if v is UNINIT else v
            if isinstance(lv, FieldLV):
                obj = self._struct_of(lv.base)
                if obj is FAULT or not isinstance(obj, dict):
                    return FAULT
                v = obj.get(lv.field, UNINIT)
                if isinstance(v, RegionRef):
                    return CellPtr(v.rid, 0)
                return FAULT if v is UNINIT else v
            assert isinstance(lv, DerefLV)
            return self.load_lvalue(lv)
        assert isinstance(m, MemRange) and m.lo == m.hi
        base = self.mem_value(m.base)
        off = self.eval_term(m.lo)
        if base is FAULT or off is FAULT:
            return FAULT
        if isinstance(base, CellPtr) and isinstance(off, int):
            return CellPtr(base.rid, base.off + off)
        if isinstance(base, ObjPtr) and off == 0:
            return base
        return FAULT

    def eval_term(self, t: Term):
        if isinstance(t, TConst):
            return t.value
        if isinstance(t, TMem):
            assert isinstance(t.mem, MemLoc)
            v = self.load_lvalue(t.mem.lvalue)
            return v
        if isinstance(t, (TMin, TMax)):
            a = self.eval_term(t.left)
            b = self.eval_term(t.right)
            if a is FAULT or b is FAULT:
                return FAULT
            if not (isinstance(a, int) and isinstance(b, int)):
                return FAULT
            return max(a, b) if isinstance(t, TMax) else min(a, b)
        assert isinstance(t, TBin)
        a = self.eval_term(t.left)
        b = self.eval_term(t.right)
        if a is FAULT or b is FAULT:
            return FAULT
        if not (isinstance(a, int) and isinstance(b, int)):
            return FAULT
        op = t.op.value
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            return FAULT
        return c_div(a, b) if op == "/" else c_mod(a, b)

    # definedness

    def _region_status(self, m: MemoryValue, kind: DefKind) -> str:
        """TRUE/FALSE/FAULT for \\kind over the cells m denotes."""
        if isinstance(m, MemRange):
            base = self.mem_value(m.base)
            lo = self.eval_term(m.lo)
            hi = self.eval_term(m.hi)
            if lo is FAULT or hi is FAULT:
                return FAULT
            if not (isinstance(lo, int) and isinstance(hi, int)):
                return FAULT
            if lo > hi:
                return TRUE  # an empty region asks for nothing
        else:
            base = self.mem_value(m)
            lo = hi = 0
        if base is FAULT:
            # an unset pointer value cannot name valid memory
            return FALSE
        if base is NULLPTR:
            return FALSE
        if isinstance(base, ObjPtr):
            if (lo, hi) != (0, 0):
                return FALSE
            if kind is DefKind.INITIALIZED:
                obj = self.state.vars.get(base.name)
                return TRUE if self._fully_init(obj) else FALSE
            return TRUE
        if not isinstance(base, CellPtr):
            return FALSE
        region = self.state.heap.get(base.rid)
        if region is None:
            return FALSE
        first, last = base.off + lo, base.off + hi
        if first < 0 or last >= len(region.vals):
            return FALSE
        if kind is DefKind.INITIALIZED:
            for i in range(first, last + 1):
                if region.vals[i] is UNINIT:
                    return FALSE
        return TRUE

    def _fully_init(self, v) -> bool:
        if v is UNINIT:
            return False
        if isinstance(v, dict):
            return all(self._fully_init(x) for x in v.values())
        if isinstance(v, RegionRef):
            return all(x is not UNINIT for x in self.state.heap[v.rid].vals)
        return True

    def literal(self, lit: Literal) -> str:
        if isinstance(lit, LitCmp):
            a = self.eval_term(lit.left)
            b = self.eval_term(lit.right)
            if a is FAULT or b is FAULT:
                return FAULT
            if not (isinstance(a, int) and isinstance(b, int)):
                return FAULT
            ok = {
                CmpOp.EQ: a == b,
                CmpOp.LE: a <= b,
                CmpOp.GE: a >= b,
                CmpOp.LT: a < b,
                CmpOp.GT: a > b,
                CmpOp.NE: a != b,
            }[lit.op]
            return TRUE if ok else FALSE
        if isinstance(lit, LitDefined):
            if isinstance(lit.mem, MemLoc) and self._is_int_lvalue(lit.mem):
                v = self.load_lvalue(lit.mem.lvalue)
                return FALSE if v is FAULT else TRUE
            return self._region_status(lit.mem, lit.kind)
        if isinstance(lit, LitNotDefined):
            if isinstance(lit.mem, MemLoc) and self._is_int_lvalue(lit.mem):
                v = self.load_lvalue(lit.mem.lvalue)
                return TRUE if v is FAULT else FALSE
            inner = self._region_status(lit.mem, lit.kind)
            if inner is FAULT:
                return FAULT
            return FALSE if inner is TRUE else TRUE
        if isinstance(lit, (LitPtrEq, LitPtrNeq)):
            want_eq = isinstance(lit, LitPtrEq)
            sides = []
            for m in (lit.left, lit.right):
                if m is None:
                    sides.append(NULLPTR)
                    continue
                v = self.mem_value(m)
                if v is FAULT:
                    return FAULT
                sides.append(v)
            eq = sides[0] == sides[1]
            return TRUE if eq == want_eq else FALSE
        raise AssertionError(lit)

    def _is_int_lvalue(self, m: MemLoc) -> bool:
        from .spec_ast import is_integer

        try:
            return is_integer(self.typed.lvalue_type(m.lvalue))
        except Exception:
            return False

    def clause(self, clause: ClauseLits) -> tuple[str, Optional[Literal]]:
        for lit in clause:
            r = self.literal(lit)
            if r is not TRUE:
                return r, lit
        return TRUE, None


def make_env(typed: TypedSpec, path: PathEnd) -> dict[str, Value]:
    """Bind parameter names to the values passed at the call, and global
    names to their storage."""
    env: dict[str, Value] = {}
    for p, v in zip(typed.spec.params, path.args):
        env[p.name] = v
    for g in typed.spec.globals:
        v = path.state.vars.get(g.name, UNINIT)
        env[g.name] = v
    return env


def eval_clause(typed: TypedSpec, path: PathEnd,
                clause: ClauseLits) -> tuple[str, Optional[Literal]]:
    ev = _PredEval(typed, path.state, make_env(typed, path))
    return ev.clause(clause)


# -- soundness ------------------------------------------------------------------


@dataclass
class Violation:
    strategy: str
    arm: int
    verdict: str
    literal: Optional[str]

    def render(self) -> str:
        what = f"literal {self.literal}" if self.literal else "the clause"
        return (f"[{self.strategy}] disjunct {self.arm}: {what} "
                f"evaluated {self.verdict}")


@dataclass
class SoundnessReport:
    paths: int
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _arm_position(sel: Optional[int], n: int) -> int:
    if n == 1 or sel is None:
        return 1
    if n == 2:
        return 2 if sel else 1
    return sel


def check_soundness(typed: TypedSpec, ir: DriverIR,
                    ok_clauses: list[ClauseLits], cfg: TargetConfig,
                    n: int = 200, seed: int = 0) -> SoundnessReport:
    """Run the driver under n random strategies plus the extremes
    strategy; every completed path must satisfy the clause of the
    disjunct that produced it."""
    report = SoundnessReport(0, [])

    def consume(label: str, paths: Iterator[PathEnd]) -> None:
        for path in paths:
            report.paths += 1
            pos = _arm_position(path.selector, len(ok_clauses))
            clause = ok_clauses[pos - 1]
            verdict, lit = eval_clause(typed, path, clause)
            if verdict is not TRUE:
                report.violations.append(
                    Violation(label, pos, verdict,
                              render_literal(lit) if lit else None)
                )

    for i in range(n):
        rng = random.Random(f"{seed}:{i}")
        consume(f"random:{i}", interpret(ir, typed, cfg, RandomStrategy(rng)))
    consume("extremes", interpret(ir, typed, cfg, ExtremesStrategy()))
    return report


# -- coverage --------------------------------------------------------------------


class CoverageUnsupported(Exception):
    """The clause uses shapes outside the small-model enumeration."""


@dataclass
class CoverageReport:
    reached: set
    satisfying: set

    @property
    def ok(self) -> bool:
        return self.reached == self.satisfying

    def render(self) -> str:
        missing = self.satisfying - self.reached
        extra = self.reached - self.satisfying
        lines = [f"reached {len(self.reached)}, satisfying {len(self.satisfying)}"]
        for m in sorted(map(repr, missing))[:5]:
            lines.append(f"  not reached: {m}")
        for e in sorted(map(repr, extra))[:5]:
            lines.append(f"  not satisfying: {e}")
        return "\n".join(lines)


def _project(typed: TypedSpec, state: State, env: dict[str, Value]):
    """Observable footprint of one call: integer values plus region
    contents, in declaration order."""
    out = []
    names = [p.name for p in typed.spec.params] + [g.name for g in typed.spec.globals]
    for name in names:
        v = env.get(name, UNINIT)
        if isinstance(v, RegionRef):
            v = CellPtr(v.rid, 0)
        if isinstance(v, int):
            out.append(("int", name, v))
        elif v is UNINIT:
            out.append(("uninit", name))
        elif v is NULLPTR:
            out.append(("null", name))
        elif isinstance(v, CellPtr):
            region = state.heap[v.rid]
            cells = tuple(
                "u" if x is UNINIT else x
                for x in region.vals[v.off:]
            )
            out.append(("region", name, cells))
        elif isinstance(v, ObjPtr):
            out.append(("obj", name))
        elif isinstance(v, dict):
            out.append(("struct", name))
        else:
            raise CoverageUnsupported(f"cannot project {v!r}")
    return tuple(out)


class _BruteForce:
    """Enumerate canonical minimal contexts for one clause directly from
    its literals, independent of the inference engine."""

    def __init__(self, typed: TypedSpec, clause: ClauseLits,
                 domain: list[int], cfg: TargetConfig):
        self.typed = typed
        self.clause = clause
        self.domain = sorted(set(domain))
        self.cfg = cfg
        self.int_params: list[str] = []
        self.ptr_params: list[str] = []
        for decl in list(typed.spec.params) + list(typed.spec.globals):
            t = strip_const(decl.ctype)
            if isinstance(t, IntType):
                self.int_params.append(decl.name)
            elif isinstance(t, (PtrType, ArrayType)):
                self.ptr_params.append(decl.name)
            else:
                raise CoverageUnsupported("struct parameters are out of scope")
        self._scan()

    def _root(self, m: MemoryValue) -> str:
        base = m
        while isinstance(base, MemRange):
            base = base.base
        lv = base.lvalue
        while isinstance(lv, DerefLV):
            raise CoverageUnsupported("multi-level pointers are out of scope")
        if not isinstance(lv, VarLV):
            raise CoverageUnsupported("struct fields are out of scope")
        return lv.name

    def _const(self, t: Term) -> int:
        from .normalize import fold_term

        t = fold_term(t)
        if isinstance(t, TConst):
            return t.value
        raise CoverageUnsupported("non-constant region bounds are out of scope")

    def _note_cell(self, name: str, off: int) -> None:
        if off < 0:
            raise CoverageUnsupported("negative displacements are out of scope")
        self.sizes[name] = max(self.sizes.get(name, 0), off + 1)

    def _scan(self) -> None:
        self.sizes: dict[str, int] = {}
        self.mentioned_cells: set[tuple[str, int]] = set()
        self.mentioned_ints: set[str] = set()
        self.aliases: list[tuple[str, str]] = []
        self.not_defined: set[str] = set()

        def scan_term(t: Term) -> None:
            if isinstance(t, TConst):
                return
            if isinstance(t, TMem):
                self._scan_lvalue_read(t.mem.lvalue)
                return
            if isinstance(t, (TMin, TMax, TBin)):
                scan_term(t.left)
                scan_term(t.right)

        def scan_mem_cells(m: MemoryValue) -> tuple[str, int, int]:
            if isinstance(m, MemLoc):
                name = self._root(m)
                return name, 0, 0
            lo = self._const(m.lo)
            hi = self._const(m.hi)
            name = self._root(m)
            if not isinstance(m.base, MemLoc):
                raise CoverageUnsupported("nested displacements are out of scope")
            return name, lo, hi

        for lit in self.clause:
            if isinstance(lit, LitCmp):
                scan_term(lit.left)
                scan_term(lit.right)
            elif isinstance(lit, (LitDefined, LitNotDefined)):
                name, lo, hi = scan_mem_cells(lit.mem)
                if name in self.int_params:
                    self.mentioned_ints.add(name)
                    if isinstance(lit, LitNotDefined):
                        self.not_defined.add(name)
                    continue
                if isinstance(lit, LitNotDefined):
                    self.not_defined.add(name)
                    continue
                if hi >= lo:
                    self._note_cell(name, max(hi, 0))
                if lit.kind is DefKind.INITIALIZED:
                    for off in range(max(lo, 0), hi + 1):
                        self.mentioned_cells.add((name, off))
            elif isinstance(lit, (LitPtrEq, LitPtrNeq)):
                names = []
                for m in (lit.left, lit.right):
                    if m is None:
                        names.append(None)
                        continue
                    name, lo, hi = scan_mem_cells(m)
                    if (lo, hi) != (0, 0):
                        raise CoverageUnsupported(
                            "displaced pointer comparisons are out of scope"
                        )
                    self.sizes.setdefault(name, max(self.sizes.get(name, 0), 1))
                    names.append(name)
                if isinstance(lit, LitPtrEq) and None not in names:
                    self.aliases.append((names[0], names[1]))

    def _scan_lvalue_read(self, lv: LValue) -> None:
        if isinstance(lv, VarLV):
            self.mentioned_ints.add(lv.name)
            return
        if isinstance(lv, DerefLV):
            m = lv.mem
            if isinstance(m, MemLoc):
                name = self._root(m)
                self._note_cell(name, 0)
                self.mentioned_cells.add((name, 0))
                return
            name = self._root(m)
            off = self._const(m.lo)
            self._note_cell(name, off)
            self.mentioned_cells.add((name, off))
            return
        raise CoverageUnsupported("struct fields are out of scope")

    def states(self) -> Iterator[tuple[State, dict[str, Value]]]:
        # alias groups: a simple union-find over pointer names
        leader = {n: n for n in self.ptr_params}

        def find(x: str) -> str:
            while leader[x] != x:
                x = leader[x]
            return x

        for a, b in self.aliases:
            if a in leader and b in leader:
                leader[find(a)] = find(b)
        group_size: dict[str, int] = {}
        for name in self.ptr_params:
            if name in self.sizes:
                g = find(name)
                group_size[g] = max(group_size.get(g, 0), self.sizes[name])

        int_slots = sorted(
            n for n in self.mentioned_ints
            if n in self.int_params and n not in self.not_defined
        )
        cell_slots = sorted(self.mentioned_cells)
        total = len(int_slots) + len(cell_slots)
        if self.domain and len(self.domain) ** total > 500_000:
            raise CoverageUnsupported("the enumeration would be too large")

        for combo in itertools.product(self.domain, repeat=total):
            state = State()
            env: dict[str, Value] = {}
            rids: dict[str, int] = {}
            for g, size in group_size.items():
                rids[g] = state.new_region("int", self.cfg.kind_width("int"),
                                           True, size)
            for name in self.ptr_params:
                if name in self.not_defined:
                    env[name] = UNINIT
                elif find(name) in rids:
                    env[name] = CellPtr(rids[find(name)], 0)
                else:
                    env[name] = NULLPTR
            for name in self.int_params:
                if name in self.not_defined:
                    env[name] = UNINIT
                elif name not in int_slots:
                    env[name] = 0
            for i, name in enumerate(int_slots):
                env[name] = combo[i]
            base = len(int_slots)
            for j, (name, off) in enumerate(cell_slots):
                rid = rids[find(name)]
                state.heap[rid].vals[off] = combo[base + j]
            yield state, env


def check_coverage(typed: TypedSpec, ir: DriverIR,
                   all_clauses: list[ClauseLits], cfg: TargetConfig,
                   domain: list[int]) -> CoverageReport:
    """Exact small-model comparison: driver-reachable projections versus
    the satisfying assignments enumerated from the clause literals."""
    reached = set()
    for path in interpret(ir, typed, cfg, ExhaustiveStrategy(domain)):
        env = make_env(typed, path)
        reached.add(_project(typed, path.state, env))
    satisfying = set()
    for clause in all_clauses:
        brute = _BruteForce(typed, clause, domain, cfg)
        for state, env in brute.states():
            ev = _PredEval(typed, state, env)
            verdict, _ = ev.clause(clause)
            if verdict is TRUE:
                satisfying.add(_project(typed, state, env))
    return CoverageReport(reached, satisfying)
