"""The rule engine: simplify one conjunctive clause into (Sigma, graph).

Literals are processed in clause order (positives, then pointer
disequalities, then negated definedness).  Each rule threads a
functional SigmaMap and DepGraph and appends one replayable derivation
step.  Failures are typed: INCONSISTENT (the clause cannot hold),
CYCLE (mutually dependent left-values), UNSUPPORTED (the symbolic
order abstained where a sound decision was required).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .constraints import (
    DepGraph,
    CycleError,
    SigmaMap,
    StateConstraint,
    alias_of,
    fresh_constraint,
    sym_mem,
    sym_read,
    sym_term,
    tbase,
    toffset,
)
from .normalize import fold_mem, fold_term, max_term_depth, poly_of_term, term_of_poly
from .ranges import EMPTY, SymRange, Tri, interval, ival, join, leq, meet, neutral, singleton
from .spec_ast import (
    ArithOp,
    ArrayType,
    ClauseLits,
    CmpOp,
    DefKind,
    DerefLV,
    FieldLV,
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
    TBin,
    TConst,
    Term,
    TMax,
    TMem,
    TMin,
    VarLV,
    base_lvalue,
    is_pointerish,
    lvalues_of_term,
    render_literal,
    render_lvalue,
    render_mem,
    strip_const,
)
from .symbolic import (
    NEG_INF,
    POS_INF,
    Cmp,
    EvalError,
    SBin,
    SConst,
    SExpr,
    SMax,
    SMin,
    SStar,
    SVar,
    compare,
    is_inf,
    sadd,
)
from .typecheck import TypedSpec


class FailKind(enum.Enum):
    INCONSISTENT = "INCONSISTENT"
    CYCLE = "CYCLE"
    UNSUPPORTED = "UNSUPPORTED"

    def __str__(self) -> str:
        return self.value


class InferenceFailure(Exception):
    def __init__(self, kind: FailKind, literal: str, message: str):
        super().__init__(f"{kind}: {message} (literal: {literal})")
        self.kind = kind
        self.literal = literal
        self.message = message


@dataclass(frozen=True)
class DerivStep:
    rule: str
    subject: str
    before: str  # sigma digest
    after: str
    edges: tuple[tuple[str, str], ...]


@dataclass
class InferenceResult:
    sigma: SigmaMap
    graph: DepGraph
    derivation: tuple[DerivStep, ...]
    suppressed: frozenset[LValue]  # bases of not-defined literals
    steps: int


class _Proof(enum.Enum):
    PROVEN = "proven"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


_INF = float("inf")


def _iv_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _iv_neg(a):
    return (-a[1], -a[0])


def _iv_mul(a, b):
    def m(x, y):
        if x == 0 or y == 0:
            return 0
        return x * y

    cands = [m(a[0], b[0]), m(a[0], b[1]), m(a[1], b[0]), m(a[1], b[1])]
    return (min(cands), max(cands))


class _Engine:
    """One clause derivation.  State is functional underneath; the engine
    object just names the current version of each piece."""

    def __init__(self, typed: TypedSpec, budget: int):
        self.typed = typed
        self.sigma = SigmaMap()
        self.graph = DepGraph()
        self.deriv: list[DerivStep] = []
        self.suppressed: set[LValue] = set()
        self.steps = 0
        self.budget = budget
        self._cur_lit = ""

    # -- bookkeeping

    def _bump(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise RuntimeError(
                f"inference exceeded its step budget of {self.budget}; "
                "this is an engine bug, not an input error"
            )

    def _record(self, rule: str, subject: str, before: str,
                edges: list[tuple[LValue, LValue]]) -> None:
        self.deriv.append(
            DerivStep(
                rule,
                subject,
                before,
                self.sigma.digest(),
                tuple((render_lvalue(a), render_lvalue(b)) for a, b in edges),
            )
        )

    def _edge(self, src: LValue, dst: LValue,
              edges: list[tuple[LValue, LValue]]) -> None:
        try:
            self.graph = self.graph.with_edge(src, dst)
        except CycleError as e:
            raise InferenceFailure(FailKind.CYCLE, self._cur_lit, str(e)) from None
        edges.append((src, dst))

    def _type_of(self, lv: LValue):
        return strip_const(self.typed.lvalue_type(lv))

    def _neutral(self, lv: LValue) -> SymRange:
        return neutral(self._type_of(lv))

    def _set(self, lv: LValue, sc: StateConstraint) -> None:
        self.sigma = self.sigma.set(lv, sc)

    def _fail(self, kind: FailKind, message: str):
        raise InferenceFailure(kind, self._cur_lit, message)

    # -- the two-tier comparison prover ---------------------------------
    #
    # Tier one compares the symbolic forms over all valuations; tier two
    # substitutes constant bounds recorded in sigma and evaluates over
    # extended-integer intervals.

    def _term_interval(self, t: Term) -> tuple:
        if isinstance(t, TConst):
            return (t.value, t.value)
        if isinstance(t, TMem):
            if isinstance(t.mem, MemLoc):
                sc = self.sigma.get(t.mem.lvalue)
                if sc is not None and not sc.range.is_empty:
                    lo = sc.range.lo.value if isinstance(sc.range.lo, SConst) else (
                        -_INF if sc.range.lo == NEG_INF else None
                    )
                    hi = sc.range.hi.value if isinstance(sc.range.hi, SConst) else (
                        _INF if sc.range.hi == POS_INF else None
                    )
                    if lo is not None and hi is not None:
                        return (lo, hi)
            return (-_INF, _INF)
        if isinstance(t, TMin):
            a = self._term_interval(t.left)
            b = self._term_interval(t.right)
            return (min(a[0], b[0]), min(a[1], b[1]))
        if isinstance(t, TMax):
            a = self._term_interval(t.left)
            b = self._term_interval(t.right)
            return (max(a[0], b[0]), max(a[1], b[1]))
        assert isinstance(t, TBin)
        a = self._term_interval(t.left)
        b = self._term_interval(t.right)
        if t.op is ArithOp.ADD:
            return _iv_add(a, b)
        if t.op is ArithOp.SUB:
            return _iv_add(a, _iv_neg(b))
        if t.op is ArithOp.MUL:
            return _iv_mul(a, b)
        if t.op is ArithOp.MOD and isinstance(t.right, TConst) and t.right.value > 0:
            m = t.right.value
            if a[0] >= 0:
                return (0, m - 1)
            return (-(m - 1), m - 1)
        if t.op is ArithOp.DIV and isinstance(t.right, TConst) and t.right.value > 0:
            k = t.right.value
            lo = a[0] if a[0] == -_INF else _c_div_ext(a[0], k)
            hi = a[1] if a[1] == _INF else _c_div_ext(a[1], k)
            return (lo, hi)
        return (-_INF, _INF)

    def _prove_cmp(self, op: CmpOp, t1: Term, t2: Term) -> _Proof:
        e1 = sym_term(t1)
        e2 = sym_term(t2)
        c = compare(e1, e2)
        if op is CmpOp.LE:
            if c in (Cmp.LE, Cmp.EQ):
                return _Proof.PROVEN
        elif op is CmpOp.GE:
            if c in (Cmp.GE, Cmp.EQ):
                return _Proof.PROVEN
        else:
            if c is Cmp.EQ:
                return _Proof.PROVEN
        iv1 = self._term_interval(t1)
        iv2 = self._term_interval(t2)
        if op is CmpOp.LE:
            if iv1[1] <= iv2[0]:
                return _Proof.PROVEN
            if iv1[0] > iv2[1]:
                return _Proof.REFUTED
        elif op is CmpOp.GE:
            if iv1[0] >= iv2[1]:
                return _Proof.PROVEN
            if iv1[1] < iv2[0]:
                return _Proof.REFUTED
        else:
            if iv1[0] == iv1[1] == iv2[0] == iv2[1]:
                return _Proof.PROVEN
            if iv1[1] < iv2[0] or iv1[0] > iv2[1]:
                return _Proof.REFUTED
        return _Proof.UNKNOWN

    # -- defined ---------------------------------------------------------

    def simplify_defined(self, mem: MemoryValue, kind: Optional[DefKind],
                         explicit: bool = False) -> None:
        self._bump()
        if isinstance(mem, MemRange):
            self.range_defined(mem, kind)
            return
        lv = mem.lvalue
        if explicit and is_pointerish(self._type_of(lv)):
            # \valid(p) asks for the cell p points at: region (0 .. 0)
            self.range_defined(MemRange(MemLoc(lv), TConst(0), TConst(0)), kind)
            return
        before = self.sigma.digest()
        if lv in self.sigma:
            if explicit and kind is not None:
                self._set(lv, self.sigma.get(lv).with_kinds(frozenset({kind})))
            self._record("Idempotence", render_lvalue(lv), before, [])
            return
        edges: list[tuple[LValue, LValue]] = []
        if isinstance(lv, VarLV):
            rule = "Variable"
            self._set(lv, fresh_constraint(self.typed.lvalue_type(lv), self._neutral(lv)))
        elif isinstance(lv, FieldLV):
            rule = "Field"
            base = lv.base
            if isinstance(base, DerefLV):
                self._storage_premise(base.mem)
            self._set(lv, fresh_constraint(self.typed.lvalue_type(lv), self._neutral(lv)))
            if isinstance(base, DerefLV):
                for dep in self._mem_lvalues(base.mem):
                    self._edge(lv, dep, edges)
        else:
            assert isinstance(lv, DerefLV)
            rule = "Dereference"
            self._storage_premise(lv.mem)
            self._set(lv, fresh_constraint(self.typed.lvalue_type(lv), self._neutral(lv)))
            for dep in self._mem_lvalues(lv.mem):
                self._edge(lv, dep, edges)
        if explicit and kind is not None:
            self._set(lv, self.sigma.get(lv).with_kinds(frozenset({kind})))
        self._record(rule, render_lvalue(lv), before, edges)

    def _storage_premise(self, m: MemoryValue) -> None:
        """Require the cell designated by pointer value m to exist."""
        if isinstance(m, MemRange):
            self.range_defined(m, None)
        else:
            self.range_defined(MemRange(m, TConst(0), TConst(0)), None)

    def _mem_lvalues(self, m: MemoryValue) -> list[LValue]:
        out = [base_lvalue(m)]
        if isinstance(m, MemRange):
            for t in (m.lo, m.hi):
                for lv in lvalues_of_term(t):
                    if lv not in out:
                        out.append(lv)
        return out

    def range_defined(self, m: MemRange, kind: Optional[DefKind]) -> None:
        self._bump()
        assert isinstance(m.base, MemLoc), "displacement must be rooted"
        lv = m.base.lvalue
        t1, t2 = m.lo, m.hi
        # the pointer itself must hold a value
        self.simplify_defined(MemLoc(lv), None)
        sc = self.sigma.get(lv)
        al = alias_of(sc.range) if is_pointerish(self._type_of(lv)) else None
        if al is not None:
            # Range-2: lv == target + t3, so shift the requested region
            target, off = al
            before = self.sigma.digest()
            t3 = _term_of_sexpr(off)
            lo = fold_term(TBin(ArithOp.ADD, t1, t3))
            hi = fold_term(TBin(ArithOp.ADD, t2, t3))
            self._record("Range-2", f"{render_mem(m)} via {render_lvalue(target)}",
                         before, [])
            self.range_defined(MemRange(MemLoc(target), lo, hi), kind)
            return
        # Range-1
        before = self.sigma.digest()
        edges: list[tuple[LValue, LValue]] = []
        for dep in lvalues_of_term(t1) + lvalues_of_term(t2):
            self.simplify_defined(MemLoc(dep), None)
            if dep != lv:
                self._edge(lv, dep, edges)
            else:
                self._fail(FailKind.CYCLE,
                           f"{render_lvalue(lv)} bounds its own region")
        for op, a, b, what in (
            (CmpOp.LE, TConst(0), t1, f"0 <= {t1}"),
            (CmpOp.LE, t1, t2, "lower bound <= upper bound"),
        ):
            proof = self._prove_cmp(op, a, b)
            if proof is _Proof.REFUTED:
                self._fail(FailKind.INCONSISTENT,
                           f"displacement bounds are violated ({what})")
            if proof is _Proof.UNKNOWN:
                sc = self.sigma.get(lv)
                self._set(lv, sc.with_check(LitCmp(op, a, b)))
        sc = self.sigma.get(lv)
        region = join(sc.range, interval(SConst(0), sym_term(t2)))
        sc = sc.with_range(region)
        if kind is not None:
            sc = sc.with_kinds(frozenset({kind}))
        self._set(lv, sc)
        self._record("Range-1", render_mem(m), before, edges)

    # -- integer comparisons ----------------------------------------------

    def simplify_cmp(self, lit: LitCmp) -> None:
        self._bump()
        diff_atoms, diff_const = _poly_sub(poly_of_term(lit.left),
                                           poly_of_term(lit.right))
        if not diff_atoms:
            ok = {
                CmpOp.EQ: diff_const == 0,
                CmpOp.LE: diff_const <= 0,
                CmpOp.GE: diff_const >= 0,
            }[lit.op]
            if not ok:
                self._fail(FailKind.INCONSISTENT,
                           "constant comparison is false")
            self._record("Cmp-1", render_literal(lit), self.sigma.digest(), [])
            return
        target = self._isolate(lit.op, diff_atoms, diff_const)
        if target is not None:
            lv, op, t3 = target
            before = self.sigma.digest()
            edges: list[tuple[LValue, LValue]] = []
            self.simplify_defined(MemLoc(lv), None)
            for dep in lvalues_of_term(t3):
                self.simplify_defined(MemLoc(dep), None)
                self._edge(lv, dep, edges)
            sc = self.sigma.get(lv)
            new_range = meet(sc.range, ival(op, sym_term(t3)))
            if new_range.is_empty:
                self._fail(
                    FailKind.INCONSISTENT,
                    f"range of {render_lvalue(lv)} became empty",
                )
            self._set(lv, sc.with_range(new_range))
            self._record("Cmp-1", render_literal(lit), before, edges)
            return
        # Cmp-2: runtime check on the latest involved left-value
        before = self.sigma.digest()
        involved: list[LValue] = []
        for t in (lit.left, lit.right):
            for lv in lvalues_of_term(t):
                if lv not in involved:
                    involved.append(lv)
        for lv in involved:
            self.simplify_defined(MemLoc(lv), None)
        sigma_order = [lv for lv in self.sigma if lv in involved]
        for cand in reversed(sigma_order):
            rest = [o for o in involved if o != cand]
            if self.graph.would_cycle(cand, rest):
                continue
            edges = []
            for o in rest:
                self._edge(cand, o, edges)
            self._set(cand, self.sigma.get(cand).with_check(lit))
            self._record("Cmp-2", render_literal(lit), before, edges)
            return
        self._fail(FailKind.CYCLE,
                   "no left-value can carry the runtime check without a cycle")

    def _isolate(self, op: CmpOp, atoms: dict[Term, int],
                 const: int) -> Optional[tuple[LValue, CmpOp, Term]]:
        """Rewrite sum(c_i * a_i) + const  op  0 as  L op' T3 when some
        bare left-value atom's coefficient divides everything else."""
        for atom, coeff in atoms.items():
            if not (isinstance(atom, TMem) and isinstance(atom.mem, MemLoc)):
                continue
            lv = atom.mem.lvalue
            rest = {a: c for a, c in atoms.items() if a is not atom}
            if any(c % coeff for c in rest.values()) or const % coeff:
                continue
            t3_poly = ({a: -c // coeff for a, c in rest.items()}, -const // coeff)
            t3 = term_of_poly(t3_poly)
            if lv in lvalues_of_term(t3):
                continue
            new_op = op
            if coeff < 0 and op is not CmpOp.EQ:
                new_op = CmpOp.GE if op is CmpOp.LE else CmpOp.LE
            return lv, new_op, t3
        return None

    # -- pointer equality ---------------------------------------------------

    def simplify_memeq(self, lit: LitPtrEq) -> None:
        self._bump()
        if lit.left is None or lit.right is None:
            self._fail(
                FailKind.INCONSISTENT,
                "a pointer constrained to null has no realizable context "
                "in this fragment",
            )
        sides = (lit.left, lit.right)
        bases = tuple(tbase(m) for m in sides)
        offs = tuple(toffset(m) for m in sides)

        def score(lv: LValue) -> int:
            sc = self.sigma.get(lv)
            return 1 if sc is not None and sc.meaningful else 0

        candidates = [
            k for k in (0, 1)
            if not isinstance(self._type_of(bases[k]), ArrayType)
        ]
        if not candidates:
            self._fail(FailKind.UNSUPPORTED,
                       "cannot alias two array objects to each other")
        i = min(candidates, key=lambda k: (score(bases[k]), k))
        j = 1 - i
        li, lj = bases[i], bases[j]
        t3 = fold_term(TBin(ArithOp.SUB, offs[j], offs[i]))
        mprime = fold_mem(MemRange(MemLoc(lj), t3, t3))
        before = self.sigma.digest()
        self.simplify_defined(MemLoc(li), None)
        self.simplify_defined(mprime, None)
        sci = self.sigma.get(li)
        scj = self.sigma.get(lj)
        shifted = _shift_range(sci.range, sym_term(t3))
        if shifted is None:
            self._fail(FailKind.UNSUPPORTED,
                       "cannot shift an unbounded region across an alias")
        inc = leq(shifted, scj.range)
        if inc is Tri.FALSE:
            self._fail(
                FailKind.INCONSISTENT,
                f"region of {render_lvalue(li)} exceeds region of "
                f"{render_lvalue(lj)}",
            )
        if inc is Tri.UNKNOWN:
            self._fail(
                FailKind.UNSUPPORTED,
                f"cannot decide region inclusion of {render_lvalue(li)} "
                f"in {render_lvalue(lj)}",
            )
        edges: list[tuple[LValue, LValue]] = []
        self._edge(li, lj, edges)
        for dep in lvalues_of_term(t3):
            if dep != li:
                self._edge(li, dep, edges)
        # the region now lives in lj; transfer requested kinds there
        if sci.kinds:
            self._set(lj, self.sigma.get(lj).with_kinds(sci.kinds))
        self._set(li, StateConstraint(singleton(sym_mem(mprime)), sci.checks,
                                      frozenset(), sci.ctype))
        self._record("Memory-Eq", render_literal(lit), before, edges)

    # -- negative literals ---------------------------------------------------

    def simplify_memneq(self, lit: LitPtrNeq) -> None:
        self._bump()
        before = self.sigma.digest()
        sides = [m for m in (lit.left, lit.right) if m is not None]
        for m in sides:
            self.simplify_defined(m, None)
        if len(sides) < 2:
            # p != null: every materialized pointer is non-null
            self._record("Memory-Neq", render_literal(lit), before, [])
            return
        bases = tuple(tbase(m) for m in sides)
        for a, b in ((0, 1), (1, 0)):
            r1 = singleton(sym_read(bases[a]))
            r2 = self.sigma.get(bases[b]).range
            inc = leq(r1, r2)
            if inc is Tri.TRUE:
                self._fail(
                    FailKind.INCONSISTENT,
                    f"{render_lvalue(bases[a])} overlaps the region of "
                    f"{render_lvalue(bases[b])}",
                )
            if inc is Tri.UNKNOWN:
                self._fail(
                    FailKind.UNSUPPORTED,
                    "cannot decide pointer disjointness",
                )
        self._record("Memory-Neq", render_literal(lit), before, [])

    def simplify_notdefined(self, lit: LitNotDefined) -> None:
        self._bump()
        lv = base_lvalue(lit.mem)
        if lv in self.sigma:
            self._fail(
                FailKind.INCONSISTENT,
                f"{render_lvalue(lv)} is required defined and undefined at once",
            )
        self.suppressed.add(lv)
        self._record("Not-Defined", render_literal(lit), self.sigma.digest(), [])

    # -- driver

    def run(self, clause: ClauseLits) -> InferenceResult:
        for lit in clause:
            self._cur_lit = render_literal(lit)
            if isinstance(lit, LitCmp):
                self.simplify_cmp(lit)
            elif isinstance(lit, LitDefined):
                self.simplify_defined(lit.mem, lit.kind, explicit=True)
            elif isinstance(lit, LitPtrEq):
                self.simplify_memeq(lit)
            elif isinstance(lit, LitPtrNeq):
                self.simplify_memneq(lit)
            else:
                assert isinstance(lit, LitNotDefined)
                self.simplify_notdefined(lit)
        return InferenceResult(
            self.sigma,
            self.graph,
            tuple(self.deriv),
            frozenset(self.suppressed),
            self.steps,
        )


def _c_div_ext(a, b):
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _poly_sub(p1, p2):
    atoms = dict(p1[0])
    for a, c in p2[0].items():
        atoms[a] = atoms.get(a, 0) - c
        if atoms[a] == 0:
            del atoms[a]
    return atoms, p1[1] - p2[1]


def _shift_range(r: SymRange, off: SExpr) -> Optional[SymRange]:
    """Add a symbolic offset to both bounds; None when a bound is infinite
    and the shift cannot be represented."""
    if r.is_empty:
        return r
    if off == SConst(0):
        return r
    try:
        lo = r.lo if is_inf(r.lo) else sadd(r.lo, off)
        hi = r.hi if is_inf(r.hi) else sadd(r.hi, off)
    except EvalError:
        return None
    return SymRange(lo, hi)


def _mem_of_sexpr(e: SExpr) -> MemoryValue:
    if isinstance(e, SVar):
        return MemLoc(e.lvalue)
    if isinstance(e, SStar):
        return MemLoc(DerefLV(_mem_of_sexpr(e.inner)))
    if isinstance(e, SBin) and e.op is ArithOp.ADD:
        t = _term_of_sexpr(e.right)
        return MemRange(_mem_of_sexpr(e.left), t, t)
    raise ValueError(f"not a pointer-shaped expression: {e}")


def _term_of_sexpr(e: SExpr) -> Term:
    if isinstance(e, SConst):
        return TConst(e.value)
    if isinstance(e, SVar):
        return TMem(MemLoc(e.lvalue))
    if isinstance(e, SStar):
        return TMem(MemLoc(DerefLV(_mem_of_sexpr(e.inner))))
    if isinstance(e, SMin):
        return TMin(_term_of_sexpr(e.left), _term_of_sexpr(e.right))
    if isinstance(e, SMax):
        return TMax(_term_of_sexpr(e.left), _term_of_sexpr(e.right))
    if isinstance(e, SBin):
        return TBin(e.op, _term_of_sexpr(e.left), _term_of_sexpr(e.right))
    raise ValueError(f"cannot turn {e} back into a term")


def step_budget(clause: ClauseLits) -> int:
    depth = max_term_depth([clause])
    return 64 * max(1, len(clause)) * (1 + depth) + 256


def simplify_clause(typed: TypedSpec, clause: ClauseLits) -> InferenceResult:
    """Run the rule system on one conjunctive clause.

    :raises InferenceFailure: with a typed cause on any failure.
    """
    engine = _Engine(typed, step_budget(clause))
    return engine.run(clause)
