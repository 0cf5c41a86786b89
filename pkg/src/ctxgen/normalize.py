"""Normal forms for terms, memory values and predicates.

Terms are folded into a canonical linear combination over atomic
subterms (memory reads, division, modulo, non-constant products, min and
max), with constants evaluated under C truncation semantics.  Nested
displacements collapse by adding offsets, and a (0 .. 0) displacement
collapses into its base.  Strict integer comparisons are rewritten into
non-strict ones, and predicates are lowered into disjunctive normal
form over positive literals, pointer disequalities and negated
definedness.
"""

from __future__ import annotations

from .spec_ast import (
    ArithOp,
    ClauseLits,
    CmpOp,
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
    PAnd,
    PCmp,
    PDefined,
    PNot,
    POr,
    PPtrCmp,
    Pred,
    SpecError,
    TBin,
    TConst,
    Term,
    TMax,
    TMem,
    TMin,
    VarLV,
    literal_rank,
    render_literal,
    render_term,
)

MAX_DISJUNCTS = 64


class DnfBudgetError(SpecError):
    """Raised when DNF conversion exceeds the disjunct budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(
            f"precondition expands to {count} disjuncts "
            f"(budget {budget}); simplify the annotation"
        )
        self.count = count
        self.budget = budget


def c_div(a: int, b: int) -> int:
    """Integer division truncating toward zero, as in C."""
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def c_mod(a: int, b: int) -> int:
    return a - b * c_div(a, b)


# -- linear form -------------------------------------------------------
#
# A term is viewed as  sum(coeff_i * atom_i) + const  where atoms are
# terms opaque to linear arithmetic.  The dict is keyed by the folded
# atom; reconstruction orders atoms by their rendering, which makes the
# canonical form deterministic.

Poly = tuple[dict[Term, int], int]


def poly_of_term(t: Term) -> Poly:
    t = fold_term(t)
    return _poly(t)


def _poly(t: Term) -> Poly:
    if isinstance(t, TConst):
        return {}, t.value
    if isinstance(t, TBin) and t.op in (ArithOp.ADD, ArithOp.SUB):
        la, lc = _poly(t.left)
        ra, rc = _poly(t.right)
        sign = 1 if t.op is ArithOp.ADD else -1
        out = dict(la)
        for atom, c in ra.items():
            out[atom] = out.get(atom, 0) + sign * c
            if out[atom] == 0:
                del out[atom]
        return out, lc + sign * rc
    if isinstance(t, TBin) and t.op is ArithOp.MUL:
        if isinstance(t.left, TConst):
            k, inner = t.left.value, t.right
        elif isinstance(t.right, TConst):
            k, inner = t.right.value, t.left
        else:
            return {t: 1}, 0
        if k == 0:
            return {}, 0
        atoms, const = _poly(inner)
        return {a: k * c for a, c in atoms.items()}, k * const
    return {t: 1}, 0


def term_of_poly(poly: Poly) -> Term:
    atoms, const = poly
    items = sorted(atoms.items(), key=lambda it: render_term(it[0]))
    acc: Term | None = None
    for atom, coeff in items:
        if coeff == 0:
            continue
        if acc is None:
            mono = atom if coeff == 1 else TBin(ArithOp.MUL, TConst(coeff), atom)
            acc = mono
        else:
            op = ArithOp.ADD if coeff > 0 else ArithOp.SUB
            k = abs(coeff)
            mono = atom if k == 1 else TBin(ArithOp.MUL, TConst(k), atom)
            acc = TBin(op, acc, mono)
    if acc is None:
        return TConst(const)
    if const > 0:
        return TBin(ArithOp.ADD, acc, TConst(const))
    if const < 0:
        return TBin(ArithOp.SUB, acc, TConst(-const))
    return acc


def fold_term(t: Term) -> Term:
    """Canonicalize a term: fold constants, flatten linear structure."""
    if isinstance(t, TConst):
        return t
    if isinstance(t, TMem):
        return TMem(fold_mem(t.mem))
    if isinstance(t, (TMin, TMax)):
        l = fold_term(t.left)
        r = fold_term(t.right)
        if isinstance(l, TConst) and isinstance(r, TConst):
            pick = min if isinstance(t, TMin) else max
            return TConst(pick(l.value, r.value))
        if l == r:
            return l
        node = TMin if isinstance(t, TMin) else TMax
        return node(l, r)
    assert isinstance(t, TBin)
    if t.op in (ArithOp.ADD, ArithOp.SUB, ArithOp.MUL):
        l = fold_term(t.left)
        r = fold_term(t.right)
        return term_of_poly(_poly(TBin(t.op, l, r)))
    # division and modulo
    l = fold_term(t.left)
    r = fold_term(t.right)
    if isinstance(r, TConst) and r.value == 0:
        raise SpecError("division by constant zero")
    if isinstance(l, TConst) and isinstance(r, TConst):
        f = c_div if t.op is ArithOp.DIV else c_mod
        return TConst(f(l.value, r.value))
    if isinstance(r, TConst) and r.value == 1:
        return l if t.op is ArithOp.DIV else TConst(0)
    return TBin(t.op, l, r)


def fold_mem(m: MemoryValue) -> MemoryValue:
    if isinstance(m, MemLoc):
        return MemLoc(fold_lvalue(m.lvalue))
    assert isinstance(m, MemRange)
    base = fold_mem(m.base)
    lo = fold_term(m.lo)
    hi = fold_term(m.hi)
    if isinstance(base, MemRange):
        # (L + (a .. b)) + (c .. d)  ==  L + ((a+c) .. (b+d))
        lo = fold_term(TBin(ArithOp.ADD, base.lo, lo))
        hi = fold_term(TBin(ArithOp.ADD, base.hi, hi))
        base = base.base
    if lo == TConst(0) and hi == TConst(0):
        return base
    return MemRange(base, lo, hi)


def fold_lvalue(lv: LValue) -> LValue:
    if isinstance(lv, VarLV):
        return lv
    if isinstance(lv, FieldLV):
        return FieldLV(fold_lvalue(lv.base), lv.field)
    assert isinstance(lv, DerefLV)
    return DerefLV(fold_mem(lv.mem))


# -- predicate normalization ------------------------------------------


def normalize_pred(p: Pred) -> Pred:
    """Fold all terms and rewrite strict comparisons as non-strict."""
    if isinstance(p, PAnd):
        return PAnd(tuple(normalize_pred(i) for i in p.items))
    if isinstance(p, POr):
        return POr(tuple(normalize_pred(i) for i in p.items))
    if isinstance(p, PNot):
        return PNot(normalize_pred(p.operand))
    if isinstance(p, PDefined):
        return PDefined(fold_mem(p.mem), p.kind)
    if isinstance(p, PPtrCmp):
        l = fold_mem(p.left) if p.left is not None else None
        r = fold_mem(p.right) if p.right is not None else None
        return PPtrCmp(p.op, l, r)
    assert isinstance(p, PCmp)
    l = fold_term(p.left)
    r = fold_term(p.right)
    op = p.op
    if op is CmpOp.LT:
        op, r = CmpOp.LE, fold_term(TBin(ArithOp.SUB, r, TConst(1)))
    elif op is CmpOp.GT:
        op, r = CmpOp.GE, fold_term(TBin(ArithOp.ADD, r, TConst(1)))
    return PCmp(op, l, r)


def _negate(p: Pred) -> Pred:
    """Push one negation through a normalized predicate."""
    if isinstance(p, PNot):
        return p.operand
    if isinstance(p, PAnd):
        return POr(tuple(_negate(i) for i in p.items))
    if isinstance(p, POr):
        return PAnd(tuple(_negate(i) for i in p.items))
    if isinstance(p, PDefined):
        return PNot(p)
    if isinstance(p, PPtrCmp):
        op = CmpOp.NE if p.op is CmpOp.EQ else CmpOp.EQ
        return PPtrCmp(op, p.left, p.right)
    assert isinstance(p, PCmp)
    if p.op is CmpOp.EQ:
        return PCmp(CmpOp.NE, p.left, p.right)
    if p.op is CmpOp.NE:
        return PCmp(CmpOp.EQ, p.left, p.right)
    if p.op is CmpOp.LE:  # !(a <= b)  ==  a >= b+1
        return PCmp(CmpOp.GE, p.left, fold_term(TBin(ArithOp.ADD, p.right, TConst(1))))
    assert p.op is CmpOp.GE
    return PCmp(CmpOp.LE, p.left, fold_term(TBin(ArithOp.SUB, p.right, TConst(1))))


def _to_clauses(p: Pred, budget: int) -> list[list[Literal]]:
    """DNF conversion of a normalized, negation-free-at-top predicate."""
    if isinstance(p, PNot):
        # after NNF the only surviving negation wraps a definedness atom
        if isinstance(p.operand, PDefined):
            return [[LitNotDefined(p.operand.mem, p.operand.kind)]]
        return _to_clauses(_negate(p.operand), budget)
    if isinstance(p, POr):
        out: list[list[Literal]] = []
        for item in p.items:
            out.extend(_to_clauses(item, budget))
            if len(out) > budget:
                raise DnfBudgetError(len(out), budget)
        return out
    if isinstance(p, PAnd):
        acc: list[list[Literal]] = [[]]
        for item in p.items:
            branches = _to_clauses(item, budget)
            acc = [left + right for left in acc for right in branches]
            if len(acc) > budget:
                raise DnfBudgetError(len(acc), budget)
        return acc
    if isinstance(p, PDefined):
        return [[LitDefined(p.mem, p.kind)]]
    if isinstance(p, PPtrCmp):
        lit = LitPtrEq(p.left, p.right) if p.op is CmpOp.EQ else LitPtrNeq(p.left, p.right)
        return [[lit]]
    assert isinstance(p, PCmp)
    if p.op is CmpOp.NE:
        # a != b  ==  a <= b-1  ||  a >= b+1   over the integers
        below = LitCmp(CmpOp.LE, p.left, fold_term(TBin(ArithOp.SUB, p.right, TConst(1))))
        above = LitCmp(CmpOp.GE, p.left, fold_term(TBin(ArithOp.ADD, p.right, TConst(1))))
        return [[below], [above]]
    return [[LitCmp(p.op, p.left, p.right)]]


def _nnf(p: Pred) -> Pred:
    if isinstance(p, PNot):
        inner = _nnf(p.operand)
        return _negate(inner)
    if isinstance(p, PAnd):
        return PAnd(tuple(_nnf(i) for i in p.items))
    if isinstance(p, POr):
        return POr(tuple(_nnf(i) for i in p.items))
    return p


def to_dnf(p: Pred, budget: int = MAX_DISJUNCTS) -> list[ClauseLits]:
    """Lower a predicate to DNF clauses of ordered, deduplicated literals.

    Within each clause, positive literals come first, then pointer
    disequalities, then negated definedness.  Clauses that exceed the
    disjunct budget raise DnfBudgetError.
    """
    norm = normalize_pred(p)
    clauses = _to_clauses(_nnf(norm), budget)
    out: list[ClauseLits] = []
    seen_clauses: set[frozenset[str]] = set()
    for clause in clauses:
        ordered: list[Literal] = []
        seen: set[str] = set()
        dead = False
        for lit in sorted(clause, key=literal_rank):
            truth = _literal_truth(lit)
            if truth is True:
                continue
            if truth is False:
                dead = True
                break
            key = render_literal(lit)
            if key not in seen:
                seen.add(key)
                ordered.append(lit)
        if dead:
            continue
        digest = frozenset(seen)
        if digest not in seen_clauses:
            seen_clauses.add(digest)
            out.append(tuple(ordered))
    return out


_CMP_EVAL = {
    CmpOp.EQ: lambda a, b: a == b,
    CmpOp.NE: lambda a, b: a != b,
    CmpOp.LE: lambda a, b: a <= b,
    CmpOp.LT: lambda a, b: a < b,
    CmpOp.GE: lambda a, b: a >= b,
    CmpOp.GT: lambda a, b: a > b,
}


def _literal_truth(lit: Literal):
    """Decide literals with no free left-values; None when undecided."""
    if isinstance(lit, LitCmp):
        if isinstance(lit.left, TConst) and isinstance(lit.right, TConst):
            return _CMP_EVAL[lit.op](lit.left.value, lit.right.value)
        return None
    if isinstance(lit, (LitPtrEq, LitPtrNeq)) and lit.left is None \
            and lit.right is None:
        return isinstance(lit, LitPtrEq)
    return None


def max_term_depth(clauses: list[ClauseLits]) -> int:
    def t_depth(t: Term) -> int:
        if isinstance(t, TConst):
            return 1
        if isinstance(t, TMem):
            return 1 + m_depth(t.mem)
        if isinstance(t, (TMin, TMax, TBin)):
            return 1 + max(t_depth(t.left), t_depth(t.right))
        raise AssertionError(t)

    def m_depth(m: MemoryValue) -> int:
        if isinstance(m, MemLoc):
            return lv_depth(m.lvalue)
        return 1 + max(m_depth(m.base), t_depth(m.lo), t_depth(m.hi))

    def lv_depth(lv: LValue) -> int:
        if isinstance(lv, VarLV):
            return 1
        if isinstance(lv, FieldLV):
            return 1 + lv_depth(lv.base)
        return 1 + m_depth(lv.mem)

    depth = 1
    for clause in clauses:
        for lit in clause:
            if isinstance(lit, LitCmp):
                depth = max(depth, t_depth(lit.left), t_depth(lit.right))
            elif isinstance(lit, (LitDefined, LitNotDefined)):
                depth = max(depth, m_depth(lit.mem))
            else:
                for side in (lit.left, lit.right):
                    if side is not None:
                        depth = max(depth, m_depth(side))
    return depth
