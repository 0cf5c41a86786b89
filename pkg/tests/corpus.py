"""Shared spec corpora for the soundness and coverage suites.

HANDWRITTEN pairs a source text with the outcome we expect from the
pipeline: "ok" when at least one disjunct must survive, otherwise the
failure kind every disjunct must carry.  The fuzzer generates well-typed
preconditions over a fixed prototype so each draw is reproducible from
its seed.
"""

from __future__ import annotations

import random

# (name, source, expectation) where expectation is "ok", "INCONSISTENT",
# "CYCLE", "UNSUPPORTED", or "mixed" (at least one disjunct ok).
HANDWRITTEN: list[tuple[str, str, str]] = [
    # plain integer ranges
    ("int-eq", "/*@ requires p: n == 4; */\nint f(int n);", "ok"),
    ("int-le", "/*@ requires p: n <= 9; */\nint f(int n);", "ok"),
    ("int-ge", "/*@ requires p: -3 <= n; */\nint f(int n);", "ok"),
    ("int-box", "/*@ requires p: 0 <= n && n <= 17; */\nint f(int n);", "ok"),
    ("int-chain", "/*@ requires p: 1 <= n <= 6; */\nint f(int n);", "ok"),
    ("int-two", "/*@ requires p: 0 <= n && n <= 5 && 2 <= m && m <= 2; */\nint f(int n, int m);", "ok"),
    ("int-neg-range", "/*@ requires p: -8 <= n && n <= -2; */\nint f(int n);", "ok"),
    ("int-arith", "/*@ requires p: n + 1 <= 10 && 0 <= n; */\nint f(int n);", "ok"),
    ("int-mul-coef", "/*@ requires p: 2 * n == 6; */\nint f(int n);", "ok"),
    ("int-sub-iso", "/*@ requires p: n - m == 2 && 0 <= m && m <= 3; */\nint f(int n, int m);", "ok"),
    ("int-strict", "/*@ requires p: 0 < n && n < 5; */\nint f(int n);", "ok"),
    ("int-ne-disj", "/*@ requires p: n != 3 && 0 <= n && n <= 4; */\nint f(int n);", "ok"),
    # runtime checks
    ("rtc-mod", "/*@ requires p: 0 <= n && n <= 64 && n % 8 == 0; */\nint f(int n);", "ok"),
    ("rtc-mod-odd", "/*@ requires p: 1 <= n && n <= 9 && n % 2 == 1; */\nint f(int n);", "ok"),
    ("rtc-product", "/*@ requires p: 1 <= n && n <= 4 && 1 <= m && m <= 4 && n * m == 4; */\nint f(int n, int m);", "ok"),
    ("rtc-sym-le", "/*@ requires p: 0 <= n && n <= m && m <= 10; */\nint f(int n, int m);", "ok"),
    ("rtc-sym-drop", "/*@ requires p: 5 <= m && m <= 10 && 0 <= n && n <= m; */\nint f(int n, int m);", "ok"),
    # kinds narrower than int
    ("char-clamp", "/*@ requires p: -300 <= c && c <= 300; */\nint f(char c);", "ok"),
    ("uchar", "/*@ requires p: 10 <= c; */\nint f(unsigned char c);", "ok"),
    ("short-box", "/*@ requires p: -5 <= s && s <= 5; */\nint f(short s);", "ok"),
    ("size-t", "/*@ requires p: 16 <= len && len <= 64; */\nint f(size_t len);", "ok"),
    ("ulong", "/*@ requires p: v <= 9; */\nint f(unsigned long v);", "ok"),
    # regions
    ("valid-one", "/*@ requires p: \\valid(p); */\nint f(int *p);", "ok"),
    ("valid-range", "/*@ requires p: \\valid(p + (0 .. 5)); */\nint f(int *p);", "ok"),
    ("valid-read", "/*@ requires p: \\valid_read(src + (0 .. 3)); */\nint f(const int *src);", "ok"),
    ("init-range", "/*@ requires p: \\valid(p + (0 .. 2)) && \\initialized(p + (0 .. 2)); */\nint f(int *p);", "ok"),
    ("init-alone", "/*@ requires p: \\initialized(p + (0 .. 1)); */\nint f(int *p);", "ok"),
    ("deref-eq", "/*@ requires p: \\valid(p) && *(p) == 7; */\nint f(int *p);", "ok"),
    ("deref-grow", "/*@ requires p: \\valid(x + (0 .. 3)) && *(x + 4) == 1; */\nint f(int *x);", "ok"),
    ("sym-region", "/*@ requires p: 1 <= n && n <= 8 && \\valid(b + (0 .. n - 1)); */\nint f(int n, int *b);", "ok"),
    ("two-regions", "/*@ requires p: \\valid(a + (0 .. 1)) && \\valid(b + (0 .. 2)); */\nint f(int *a, int *b);", "ok"),
    ("array-param", "/*@ requires p: \\valid(a + (0 .. 3)); */\nint f(int a[4]);", "ok"),
    ("array-fit-sym", "/*@ requires p: \\valid(a + (0 .. n - 1)) && 1 <= n <= 4; */\nint f(int a[4], int n);", "ok"),
    ("uchar-buf", "/*@ requires p: \\valid(buf + (0 .. 15)) && \\initialized(buf + (0 .. 15)); */\nint f(unsigned char *buf);", "ok"),
    # aliasing
    ("alias-plain", "/*@ requires p: \\valid(q) && p == q; */\nint f(int *p, int *q);", "ok"),
    ("alias-offset", "/*@ requires p: \\valid(q + (0 .. 5)) && p == q + 2 && *(p) == 7; */\nint f(int *p, int *q);", "ok"),
    ("ptr-neq", "/*@ requires p: \\valid(p) && \\valid(q) && p != q; */\nint f(int *p, int *q);", "ok"),
    ("ptr-nonnull", "/*@ requires p: \\valid(p) && p != \\null; */\nint f(int *p);", "ok"),
    # negated definedness
    ("not-valid", "/*@ requires p: !\\valid(x); */\nint f(int *x);", "ok"),
    ("not-valid-mixed", "/*@ requires p: !\\valid(x) && 0 <= n && n <= 3; */\nint f(int *x, int n);", "ok"),
    ("not-init-int", "/*@ requires p: !\\initialized(k) && 0 <= n <= 2; */\nint f(int k, int n);", "ok"),
    # globals and structs
    ("global-int", "int limit;\n/*@ requires p: 0 <= limit && limit <= 3; */\nint f(int n);", "ok"),
    ("global-ptr", "int *table;\n/*@ requires p: \\valid(table + (0 .. 3)); */\nint f(void);", "ok"),
    ("struct-field",
     "typedef struct { int tag; int len; } hdr;\n"
     "/*@ requires p: \\valid(h) && h->tag == 3 && 0 <= h->len && h->len <= 9; */\n"
     "int f(hdr *h);", "ok"),
    ("struct-ptr-field",
     "typedef struct { int n; int *data; } vec;\n"
     "/*@ requires p: \\valid(v) && \\valid(v->data + (0 .. 3)) && v->n == 4; */\n"
     "int f(vec *v);", "ok"),
    ("struct-byval",
     "typedef struct { int tag; } box;\n"
     "/*@ requires p: b.tag == 3; */\nint f(box b);", "ok"),
    # disjunction
    ("disj-two", "/*@ requires p: mode == 0 || mode == 1; */\nint f(int mode);", "ok"),
    ("disj-three", "/*@ requires p: k == 1 || k == 2 || k == 3; */\nint f(int k);", "ok"),
    ("disj-mixed", "/*@ requires p: (m == 0 || m == 1) && 0 <= n && n <= 2; */\nint f(int m, int n);", "ok"),
    ("disj-region", "/*@ requires p: \\valid(p) && (*(p) == 1 || *(p) == 2); */\nint f(int *p);", "ok"),
    ("multi-label", "/*@ requires a: 0 <= n;\n    requires b: n <= 4; */\nint f(int n);", "ok"),
    # failures: inconsistency
    ("inc-notvalid-null", "/*@ requires p: !\\valid(x) && x == 0; */\nint f(int *x);", "INCONSISTENT"),
    ("inc-two-eq", "/*@ requires p: x == 0 && x == 1; */\nint f(int x);", "INCONSISTENT"),
    ("inc-empty-box", "/*@ requires p: 3 <= n && n <= 1; */\nint f(int n);", "INCONSISTENT"),
    ("inc-kind", "/*@ requires p: c == 400; */\nint f(char c);", "INCONSISTENT"),
    ("inc-notvalid-deref", "/*@ requires p: !\\valid(x) && *(x) == 1; */\nint f(int *x);", "INCONSISTENT"),
    ("inc-array-over", "/*@ requires p: \\valid(a + (0 .. 5)); */\nint f(int a[4]);", "INCONSISTENT"),
    # failures: cycles
    ("cyc-two", "/*@ requires p: \\valid(p + (0 .. *(q))) && \\valid(q + (0 .. *(p))); */\nint f(int *p, int *q);", "CYCLE"),
    ("cyc-self", "/*@ requires p: \\valid(p + (0 .. *(p))); */\nint f(int *p);", "CYCLE"),
    # failures: unsupported
    ("uns-two-arrays", "/*@ requires p: p == q && \\valid(p); */\nint f(int p[2], int q[2]);", "UNSUPPORTED"),
    ("uns-fit", "/*@ requires p: \\valid(a + (0 .. n - 1)) && 1 <= n <= 9; */\nint f(int a[4], int n);", "UNSUPPORTED"),
    ("sym-unbounded", "/*@ requires p: \\valid(p + (0 .. n)); */\nint f(int *p, int n);", "ok"),
    # mixed disjunct outcomes
    ("mixed-disj", "/*@ requires p: n == 1 || (n == 0 && n == 2); */\nint f(int n);", "mixed"),
]


PROTO = ("int f(int n, int m, int *p, const int *q);", ["n", "m"], ["p", "q"])


def fuzz_spec(seed: int) -> str:
    """One well-typed precondition over the fixed prototype."""
    rng = random.Random(seed)
    proto, ints, ptrs = PROTO
    lits = []

    def term(depth=0):
        r = rng.random()
        if r < 0.45 or depth >= 2:
            return str(rng.randint(-20, 20))
        if r < 0.8:
            return rng.choice(ints)
        a, b = term(depth + 1), term(depth + 1)
        return f"({a} {rng.choice(['+', '-'])} {b})"

    n_lits = rng.randint(1, 4)
    for _ in range(n_lits):
        kind = rng.random()
        if kind < 0.45:
            op = rng.choice(["==", "<=", "<", ">=", ">", "!="])
            lits.append(f"{term()} {op} {term()}")
        elif kind < 0.6:
            v = rng.choice(ints)
            lits.append(f"{rng.choice(ints)} % {rng.randint(2, 8)} == "
                        f"{rng.randint(0, 3)}")
            lits.append(f"0 <= {v} && {v} <= {rng.randint(1, 50)}")
        elif kind < 0.8:
            p = rng.choice(ptrs)
            pred = rng.choice(["\\valid", "\\valid_read", "\\initialized"])
            hi = rng.choice([str(rng.randint(0, 3)), "n - 1"])
            lits.append(f"{pred}({p} + (0 .. {hi}))")
            if hi == "n - 1":
                lits.append(f"1 <= n && n <= {rng.randint(1, 8)}")
        elif kind < 0.9:
            p = rng.choice(ptrs)
            lits.append(f"!\\valid({p})")
        else:
            lits.append(f"*(p + {rng.randint(0, 2)}) == {rng.randint(-5, 5)}")
            lits.append("\\valid(p + (0 .. 2))")
    body = " && ".join(lits)
    if rng.random() < 0.25:
        alt = f"{rng.choice(ints)} == {rng.randint(0, 3)}"
        body = f"({body}) || ({alt})"
    return f"/*@ requires f: {body}; */\n{proto}"


# Small-domain corpus for the coverage check: at most 3 scalars, domains
# of at most 9 values, regions of at most 4 cells.  Region kinds always
# cover the same cell span, the shape the joined range reproduces
# exactly.
COVERAGE: list[tuple[str, str, list[int]]] = [
    ("cov-int-box", "/*@ requires p: 0 <= n && n <= 2; */\nint f(int n);",
     list(range(-1, 4))),
    ("cov-two-ints", "/*@ requires p: 0 <= n && n <= 2 && (m == 1 || m == 3); */\nint f(int n, int m);",
     list(range(0, 4))),
    ("cov-mod", "/*@ requires p: 0 <= n && n <= 4 && n % 2 == 0; */\nint f(int n);",
     list(range(0, 5))),
    ("cov-eq-pin", "/*@ requires p: n == 2 && 0 <= m && m <= 1; */\nint f(int n, int m);",
     list(range(0, 3))),
    ("cov-neg", "/*@ requires p: -2 <= n && n <= 0; */\nint f(int n);",
     list(range(-3, 2))),
    ("cov-cell", "/*@ requires p: \\valid(x + (0 .. 1)) && *(x) == 1; */\nint f(int *x);",
     list(range(0, 3))),
    ("cov-init", "/*@ requires p: \\valid(p + (0 .. 1)) && \\initialized(p + (0 .. 1)); */\nint f(int *p);",
     [0, 1]),
    ("cov-init-alone", "/*@ requires p: \\initialized(p + (0 .. 2)); */\nint f(int *p);",
     [0, 1]),
    ("cov-valid-only", "/*@ requires p: \\valid(p + (0 .. 3)); */\nint f(int *p);",
     [0, 1]),
    ("cov-alias", "/*@ requires p: \\valid(q) && p == q; */\nint f(int *p, int *q);",
     [0, 1]),
    ("cov-not-valid", "/*@ requires p: !\\valid(x) && 0 <= n && n <= 1; */\nint f(int *x, int n);",
     [0, 1]),
    ("cov-unmentioned", "/*@ requires p: 0 <= n && n <= 1; */\nint f(int n, int *q);",
     [0, 1]),
    ("cov-disj-cell", "/*@ requires p: \\valid(p) && (*(p) == 0 || *(p) == 2); */\nint f(int *p);",
     list(range(0, 3))),
    ("cov-three-scalars", "/*@ requires p: 0 <= a && a <= 1 && b == 1 && (c == 0 || c == 1); */\nint f(int a, int b, int c);",
     [0, 1]),
    ("cov-int-plus-region",
     "/*@ requires p: (k == 0 || k == 2) && \\valid(p + (0 .. 1)) && \\initialized(p + (0 .. 1)); */\nint f(int *p, int k);",
     [0, 1, 2]),
]


# -- randomized property-suite helpers ---------------------------------------
#
# Shared by the symbolic/range unit tests and the acceptance gate so the
# same generators back both.  All draws come from a caller-owned
# random.Random, so every run is reproducible from its seed.

from ctxgen.ranges import EMPTY, FULL, SymRange, Tri, interval, join, leq, meet
from ctxgen.spec_ast import VarLV
from ctxgen.symbolic import (
    Cmp,
    SConst,
    SStar,
    SVar,
    Valuation,
    atoms_of,
    compare,
    render_sexpr,
    sadd,
    smax,
    smin,
    smul,
    ssub,
)

_N = SVar(VarLV("n"))
_M = SVar(VarLV("m"))
_VALUES = (-40, -3, -1, 0, 1, 2, 5, 17, 1000)


def rand_sexpr(rng: random.Random, depth: int = 0):
    """Random symbolic expression over n and m.

    No infinities and no division, so evaluation under a valuation is
    total.
    """
    r = rng.random()
    if r < 0.3 or depth >= 3:
        return SConst(rng.randint(-8, 8))
    if r < 0.55:
        return rng.choice((_N, _M))
    if r < 0.62:
        return SStar(rand_sexpr(rng, depth + 1))
    a = rand_sexpr(rng, depth + 1)
    b = rand_sexpr(rng, depth + 1)
    return rng.choice((sadd, ssub, smul, smin, smax))(a, b)


def rand_range(rng: random.Random) -> SymRange:
    r = rng.random()
    if r < 0.08:
        return EMPTY
    if r < 0.16:
        return FULL
    if r < 0.6:
        lo = rng.randint(-20, 20)
        return interval(SConst(lo), SConst(lo + rng.randint(-3, 25)))
    return interval(rand_sexpr(rng), rand_sexpr(rng))


def rand_valuation(rng: random.Random, exprs) -> Valuation:
    assign = {}
    for e in exprs:
        for atom in atoms_of(e):
            if atom not in assign:
                assign[atom] = rng.choice(_VALUES)
    return Valuation(assign, rng.choice((2, 3)))


def gamma(r: SymRange, val: Valuation):
    """Concretization under one valuation: (lo, hi) or None when empty."""
    if r.is_empty:
        return None
    lo, hi = val.eval(r.lo), val.eval(r.hi)
    return None if lo > hi else (lo, hi)


def _contains(outer, inner) -> bool:
    if inner is None:
        return True
    return outer is not None and outer[0] <= inner[0] and inner[1] <= outer[1]


def lattice_case_problems(rng: random.Random) -> list[str]:
    """Check the join/meet/leq laws and the valuation-level behaviour of
    the range lattice on one random triple; returns violations."""
    r1, r2, r3 = rand_range(rng), rand_range(rng), rand_range(rng)
    out = []

    def flag(cond: bool, law: str) -> None:
        if not cond:
            out.append(f"{law}: {r1.render()}, {r2.render()}, {r3.render()}")

    # structural laws guaranteed by canonicalizing constructors
    flag(join(r1, r2) == join(r2, r1), "join commutative")
    flag(meet(r1, r2) == meet(r2, r1), "meet commutative")
    flag(join(r1, r1) == r1, "join idempotent")
    flag(meet(r1, r1) == r1, "meet idempotent")
    flag(join(r1, EMPTY) == r1, "EMPTY join identity")
    flag(meet(r1, EMPTY) == EMPTY, "EMPTY meet annihilator")
    # leq consistency
    flag(leq(r1, r1) is Tri.TRUE, "leq reflexive")
    flag(leq(meet(r1, r2), r1) is not Tri.FALSE, "meet below operands")
    flag(leq(r1, join(r1, r2)) is not Tri.FALSE, "join above operands")
    incl = leq(r1, r2)

    # concretization: meet is exact intersection, join over-approximates
    # the union and is the exact hull when neither side is empty
    jn, mt = join(r1, r2), meet(r1, r2)
    jassoc1 = join(join(r1, r2), r3)
    jassoc2 = join(r1, join(r2, r3))
    massoc1 = meet(meet(r1, r2), r3)
    massoc2 = meet(r1, meet(r2, r3))
    bounds = [b for r in (r1, r2, r3) for b in (r.lo, r.hi) if b is not None]
    for _ in range(4):
        val = rand_valuation(rng, bounds)
        g1, g2, g3 = gamma(r1, val), gamma(r2, val), gamma(r3, val)
        gj, gm = gamma(jn, val), gamma(mt, val)
        if g1 is not None and g2 is not None:
            lo, hi = max(g1[0], g2[0]), min(g1[1], g2[1])
            inter = None if lo > hi else (lo, hi)
            hull = (min(g1[0], g2[0]), max(g1[1], g2[1]))
            flag(gj == hull, "join is the hull")
        else:
            inter = None
        flag(gm == inter, "meet concretizes to intersection")
        flag(_contains(gj, g1) and _contains(gj, g2), "join contains operands")
        if incl is Tri.TRUE:
            flag(_contains(g2, g1), "leq TRUE implies inclusion")
        flag(_contains(gamma(jassoc1, val), g1)
             and _contains(gamma(jassoc1, val), g3)
             and _contains(gamma(jassoc2, val), g1)
             and _contains(gamma(jassoc2, val), g3),
             "nested join contains operands")
        for m in (massoc1, massoc2):
            gm3 = gamma(m, val)
            if g1 is None or g2 is None or g3 is None:
                flag(gm3 is None, "ternary meet of empty is empty")
            else:
                lo = max(g1[0], g2[0], g3[0])
                hi = min(g1[1], g2[1], g3[1])
                flag(gm3 == (None if lo > hi else (lo, hi)),
                     "ternary meet is intersection")
    return out


def compare_triple_problem(rng: random.Random):
    """Soundness of one (e1, e2, valuation) triple; None when consistent."""
    a, b = rand_sexpr(rng), rand_sexpr(rng)
    verdict = compare(a, b)
    if verdict in (Cmp.UNKNOWN, Cmp.INCOMPARABLE):
        return None
    val = rand_valuation(rng, (a, b))
    va, vb = val.eval(a), val.eval(b)
    ok = (va <= vb if verdict is Cmp.LE
          else va >= vb if verdict is Cmp.GE
          else va == vb)
    if ok:
        return None
    return f"{render_sexpr(a)} {verdict.name} {render_sexpr(b)} but {va} vs {vb}"
