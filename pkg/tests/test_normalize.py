import pytest

from ctxgen import parse_source, typecheck, to_dnf
from ctxgen.normalize import (
    DnfBudgetError,
    c_div,
    c_mod,
    fold_term,
    max_term_depth,
)
from ctxgen.spec_ast import (
    ArithOp,
    LitDefined,
    LitNotDefined,
    TBin,
    TConst,
    render_literal,
)


def dnf(src, budget=64):
    typed = typecheck(parse_source(src))
    return to_dnf(typed.precondition, budget)


def rendered(clauses):
    return [" && ".join(render_literal(l) for l in c) for c in clauses]


def test_single_conjunct():
    assert rendered(dnf("/*@ requires a: 0 <= n && n <= 4; */\nint f(int n);")) == [
        "0 <= n && n <= 4"
    ]


def test_strict_comparisons_tighten():
    assert rendered(dnf("/*@ requires a: n < 5 && n > 0; */\nint f(int n);")) == [
        "n <= 4 && n >= 1"
    ]


def test_disequality_splits():
    assert rendered(dnf("/*@ requires a: n != 3; */\nint f(int n);")) == [
        "n <= 2",
        "n >= 4",
    ]


def test_de_morgan():
    got = rendered(dnf("/*@ requires a: !(n == 1 && m == 2); */\nint f(int n, int m);"))
    assert got == ["n <= 0", "n >= 2", "m <= 1", "m >= 3"]


def test_double_negation():
    assert rendered(dnf("/*@ requires a: !!(n == 1); */\nint f(int n);")) == ["n == 1"]


def test_negated_pointer_disequality():
    assert rendered(dnf("/*@ requires a: !(p != \\null); */\nint f(int *p);")) == [
        "p == \\null"
    ]


def test_negated_defined_becomes_literal():
    clauses = dnf("/*@ requires a: !\\valid(x); */\nint f(int *x);")
    assert len(clauses) == 1 and isinstance(clauses[0][0], LitNotDefined)


def test_distribution_count():
    src = ("/*@ requires a: (a == 0 || a == 1) && (b == 0 || b == 1); */\n"
           "int f(int a, int b);")
    assert len(dnf(src)) == 4


def test_duplicate_clauses_collapse():
    src = ("/*@ requires a: (n == 1 || n == 2) && (n == 2 || n == 1); */\n"
           "int f(int n);")
    got = rendered(dnf(src))
    # cross terms collapse up to ordering; the two pure clauses survive
    assert "n == 1" in got and "n == 2" in got
    assert len(got) == 3


def test_duplicate_literals_within_clause():
    assert rendered(dnf("/*@ requires a: n == 1 && n == 1; */\nint f(int n);")) == [
        "n == 1"
    ]


def test_budget_exceeded():
    many = " && ".join(f"(a{i} == 0 || a{i} == 1)" for i in range(7))
    params = ", ".join(f"int a{i}" for i in range(7))
    with pytest.raises(DnfBudgetError, match="128 disjuncts"):
        dnf(f"/*@ requires a: {many}; */\nint f({params});", budget=64)


def test_budget_boundary_ok():
    many = " && ".join(f"(a{i} == 0 || a{i} == 1)" for i in range(6))
    params = ", ".join(f"int a{i}" for i in range(6))
    assert len(dnf(f"/*@ requires a: {many}; */\nint f({params});", budget=64)) == 64


def test_literal_ordering_positive_first():
    src = ("/*@ requires a: !\\valid(x) && p != \\null && 0 <= n && \\valid(p); */\n"
           "int f(int *x, int *p, int n);")
    (clause,) = dnf(src)
    kinds = [type(l).__name__ for l in clause]
    # positive literals, then pointer disequalities, then negated definedness
    assert kinds.index("LitNotDefined") == len(kinds) - 1
    assert kinds.index("LitPtrNeq") > kinds.index("LitDefined")


def test_defined_survives_normalization():
    (clause,) = dnf("/*@ requires a: \\valid(p + (0 .. 3)); */\nint f(int *p);")
    assert isinstance(clause[0], LitDefined)


def test_constant_folding():
    t = TBin(ArithOp.ADD, TConst(2), TBin(ArithOp.MUL, TConst(3), TConst(4)))
    assert fold_term(t) == TConst(14)


def test_c_division_truncates_toward_zero():
    assert c_div(7, 2) == 3
    assert c_div(-7, 2) == -3
    assert c_div(7, -2) == -3
    assert c_div(-7, -2) == 3


def test_c_modulo_sign_follows_dividend():
    assert c_mod(7, 3) == 1
    assert c_mod(-7, 3) == -1
    assert c_mod(7, -3) == 1
    assert c_mod(-7, -3) == -1
    for a in range(-9, 10):
        for b in (-4, -3, -2, -1, 1, 2, 3, 4):
            assert c_div(a, b) * b + c_mod(a, b) == a


def test_fold_division_in_terms():
    (clause,) = dnf("/*@ requires a: n == 7 / 2; */\nint f(int n);")
    assert render_literal(clause[0]) == "n == 3"


def test_max_term_depth():
    clauses = dnf("/*@ requires a: n + 1 + 1 + 1 == m; */\nint f(int n, int m);")
    assert max_term_depth(clauses) >= 1


def test_true_on_both_sides_constant():
    # a constant comparison that always holds vanishes or keeps the clause
    clauses = dnf("/*@ requires a: 1 <= 2 && n == 1; */\nint f(int n);")
    assert rendered(clauses) == ["n == 1"]


def test_false_constant_drops_clause():
    clauses = dnf("/*@ requires a: (1 == 2 && n == 0) || n == 1; */\nint f(int n);")
    assert rendered(clauses) == ["n == 1"]
