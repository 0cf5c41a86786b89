"""Rule engine behaviour: inferred sigmas, dependency edges, typed
failures, and termination via the step budget."""

import pathlib

import pytest

from ctxgen.inference import FailKind, InferenceFailure, simplify_clause, step_budget
from ctxgen.normalize import to_dnf
from ctxgen.parser import parse_source
from ctxgen.pipeline import compile_spec
from ctxgen.spec_ast import DefKind, VarLV
from ctxgen.target import DEFAULT_CONFIG
from ctxgen.typecheck import typecheck

AES = (pathlib.Path(__file__).parent / "data" / "aes_cbc.spec").read_text()


def _infer(src: str, idx: int = 0):
    typed = typecheck(parse_source(src), DEFAULT_CONFIG)
    clauses = to_dnf(typed.precondition)
    return typed, simplify_clause(typed, clauses[idx])


def _sigma(src: str, name: str, idx: int = 0):
    _, res = _infer(src, idx)
    return res.sigma.get(VarLV(name))


def test_interval_meet():
    sc = _sigma("/*@ requires p: 0 <= n && n <= 17; */\nint f(int n);", "n")
    assert sc.range.render() == "[0; 17]"
    assert sc.checks == ()


def test_equality_pins_singleton():
    sc = _sigma("/*@ requires p: n == 4; */\nint f(int n);", "n")
    assert sc.range.render() == "[4; 4]"


def test_modulo_becomes_runtime_check():
    sc = _sigma("/*@ requires p: n % 16 == 0 && 0 <= n; */\nint f(int n);", "n")
    assert len(sc.checks) == 1
    assert "% 16 == 0" in sc.render()


def test_aes_length_constraint():
    out = compile_spec(AES)
    res = out.ok_disjuncts[0].result
    sc = res.sigma.get(VarLV("length"))
    assert sc.render() == "[16; 16672] ⊕ {RTC(length % 16 == 0)}"


def test_aes_input_region():
    out = compile_spec(AES)
    res = out.ok_disjuncts[0].result
    sc = res.sigma.get(VarLV("input"))
    assert sc.range.render() == "[0; length - 1]"
    assert sc.checks == ()
    assert sc.kinds == {DefKind.VALID_READ, DefKind.INITIALIZED}


def test_aes_dependency_edges():
    out = compile_spec(AES)
    res = out.ok_disjuncts[0].result
    length = VarLV("length")
    assert (VarLV("input"), length) in res.graph.edges
    assert (VarLV("output"), length) in res.graph.edges


def test_aes_struct_fields():
    out = compile_spec(AES)
    sigma = out.ok_disjuncts[0].result.sigma
    rendered = sigma.render()
    assert "ctx->nr : int = [14; 14] ⊕ ∅" in rendered
    assert "ctx->rk : unsigned long * = [ctx->buf; ctx->buf] ⊕ ∅" in rendered
    assert "ctx->buf : unsigned long[68] = [0; 63] ⊕ ∅ kinds={initialized}" in rendered


def test_aes_disjunction_arms():
    out = compile_spec(AES)
    modes = sorted(r.result.sigma.get(VarLV("mode")).range.render()
                   for r in out.ok_disjuncts)
    assert modes == ["[0; 0]", "[1; 1]"]


def test_array_size_from_cell_access():
    src = "/*@ requires p: \\valid(x + (0 .. 3)) && *(x + 4) == 1; */\nint f(int *x);"
    sc = _sigma(src, "x")
    assert sc.range.render() == "[0; 4]"
    assert sc.kinds == {DefKind.VALID}


def test_symbolic_region_bound():
    src = ("/*@ requires p: 1 <= n && n <= 8 && \\valid(b + (0 .. n - 1)); */\n"
           "int f(int n, int *b);")
    typed, res = _infer(src)
    assert res.sigma.get(VarLV("b")).range.render() == "[0; n - 1]"
    assert (VarLV("b"), VarLV("n")) in res.graph.edges


@pytest.mark.parametrize("src", [
    "/*@ requires p: x == 0 && x == 1; */\nint f(int x);",
    "/*@ requires p: 3 <= n && n <= 1; */\nint f(int n);",
    "/*@ requires p: !\\valid(x) && x == 0; */\nint f(int *x);",
    "/*@ requires p: !\\valid(x) && *(x) == 1; */\nint f(int *x);",
])
def test_inconsistent_clauses(src):
    typed = typecheck(parse_source(src), DEFAULT_CONFIG)
    clause = to_dnf(typed.precondition)[0]
    with pytest.raises(InferenceFailure) as e:
        simplify_clause(typed, clause)
    assert e.value.kind is FailKind.INCONSISTENT
    assert e.value.literal


@pytest.mark.parametrize("src,kind", [
    # a char cannot hold 400 on the default target
    ("/*@ requires p: c == 400; */\nint f(char c);", FailKind.INCONSISTENT),
    # region beyond a declared array length
    ("/*@ requires p: \\valid(a + (0 .. 5)); */\nint f(int a[4]);",
     FailKind.INCONSISTENT),
    # the fit of a symbolic region in a fixed array is undecidable here
    ("/*@ requires p: \\valid(a + (0 .. n - 1)) && 1 <= n <= 9; */\n"
     "int f(int a[4], int n);", FailKind.UNSUPPORTED),
])
def test_planning_stage_failures(src, kind):
    out = compile_spec(src)
    assert out.ir is None
    assert [r.failure.kind for r in out.reports] == [kind]


@pytest.mark.parametrize("src", [
    "/*@ requires p: \\valid(p + (0 .. *(q))) && \\valid(q + (0 .. *(p))); */\n"
    "int f(int *p, int *q);",
    "/*@ requires p: \\valid(p + (0 .. *(p))); */\nint f(int *p);",
])
def test_cyclic_clauses(src):
    typed = typecheck(parse_source(src), DEFAULT_CONFIG)
    with pytest.raises(InferenceFailure) as e:
        simplify_clause(typed, to_dnf(typed.precondition)[0])
    assert e.value.kind is FailKind.CYCLE


@pytest.mark.parametrize("k", range(2, 11))
def test_alias_cycle_chain(k):
    """A ring of pointer equalities of any length is rejected as CYCLE,
    never looped on."""
    names = [f"p{i}" for i in range(k)]
    eqs = " && ".join(f"{names[i]} == {names[(i + 1) % k]}" for i in range(k))
    src = (f"/*@ requires c: {eqs}; */\n"
           "int f(" + ", ".join(f"int *{n}" for n in names) + ");")
    typed = typecheck(parse_source(src), DEFAULT_CONFIG)
    with pytest.raises(InferenceFailure) as e:
        simplify_clause(typed, to_dnf(typed.precondition)[0])
    assert e.value.kind is FailKind.CYCLE


def test_unsupported_clause():
    src = "/*@ requires p: p == q && \\valid(p); */\nint f(int p[2], int q[2]);"
    typed = typecheck(parse_source(src), DEFAULT_CONFIG)
    with pytest.raises(InferenceFailure) as e:
        simplify_clause(typed, to_dnf(typed.precondition)[0])
    assert e.value.kind is FailKind.UNSUPPORTED


def test_negated_definedness_suppresses():
    src = "/*@ requires p: !\\valid(x) && 0 <= n && n <= 1; */\nint f(int *x, int n);"
    _, res = _infer(src)
    assert VarLV("x") in res.suppressed


def test_derivation_is_recorded():
    _, res = _infer("/*@ requires p: 0 <= n && n <= 5; */\nint f(int n);")
    assert res.derivation
    assert all(s.rule for s in res.derivation)
    # the recorded trail never exceeds the step count
    assert len(res.derivation) <= res.steps


def test_steps_stay_within_budget():
    sources = [
        "/*@ requires p: 0 <= n && n <= 5; */\nint f(int n);",
        "/*@ requires p: n % 16 == 0 && 16 <= n && n <= 64; */\nint f(int n);",
        "/*@ requires p: \\valid(b + (0 .. n - 1)) && 1 <= n && n <= 8; */\n"
        "int f(int n, int *b);",
    ]
    for src in sources:
        typed = typecheck(parse_source(src), DEFAULT_CONFIG)
        clause = to_dnf(typed.precondition)[0]
        res = simplify_clause(typed, clause)
        assert res.steps <= step_budget(clause)


def test_budget_grows_with_clause():
    small = to_dnf(typecheck(parse_source(
        "/*@ requires p: n == 1; */\nint f(int n);"), DEFAULT_CONFIG).precondition)[0]
    big = to_dnf(typecheck(parse_source(
        "/*@ requires p: n == 1 && m == 2 && \\valid(b + (0 .. n + m)); */\n"
        "int f(int n, int m, int *b);"), DEFAULT_CONFIG).precondition)[0]
    assert step_budget(big) > step_budget(small)
