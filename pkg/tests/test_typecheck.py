import pytest

from ctxgen import SpecError, parse_source, typecheck
from ctxgen.spec_ast import (
    DefKind,
    FieldLV,
    IntType,
    LitCmp,
    LitDefined,
    PtrType,
    VarLV,
)


def tc(src):
    return typecheck(parse_source(src))


def test_env_and_lvalue_types():
    typed = tc(
        "int limit;\n"
        "/*@ requires a: 0 <= n && \\valid(p); */\n"
        "int f(int n, const int *p);"
    )
    assert typed.lvalue_type(VarLV("n")) == IntType("int")
    assert typed.lvalue_type(VarLV("limit")) == IntType("int")
    t = typed.lvalue_type(VarLV("p"))
    assert isinstance(t, PtrType)


def test_struct_field_types():
    typed = tc(
        "typedef struct { int nr; unsigned long *rk; } ctx_t;\n"
        "/*@ requires a: c->nr == 14; */\n"
        "int f(ctx_t *c);"
    )
    assert "ctx_t" in typed.structs
    assert typed.structs["ctx_t"]["nr"] == IntType("int")
    assert typed.structs["ctx_t"]["rk"] == PtrType(IntType("unsigned long"))


def test_precondition_is_conjunction_of_clauses():
    typed = tc(
        "/*@ requires a: 0 <= n;\n"
        "  @ requires b: n <= 9;\n"
        "  */\n"
        "int f(int n);"
    )
    # both clause predicates fold into one conjunction
    pre = typed.precondition
    assert type(pre).__name__ == "PAnd"
    assert len(pre.items) == 2


def test_unknown_identifier():
    with pytest.raises(SpecError, match="unknown"):
        tc("/*@ requires a: zz == 1; */\nint f(int n);")


def test_valid_on_integer_rejected():
    with pytest.raises(SpecError):
        tc("/*@ requires a: \\valid(n + (0 .. 2)); */\nint f(int n);")


def test_arith_on_pointer_rejected():
    with pytest.raises(SpecError):
        tc("/*@ requires a: p * 2 == 0; */\nint f(int *p);")


def test_pointer_pointer_arith_rejected():
    with pytest.raises(SpecError, match="pointer-pointer"):
        tc("/*@ requires a: \\valid(p + q); */\nint f(int *p, int *q);")


def test_struct_needs_field_access():
    with pytest.raises(SpecError, match="integer expression"):
        tc(
            "typedef struct { int tag; } box;\n"
            "/*@ requires a: b == 3; */\nint f(box b);"
        )


def test_byvalue_field_access_allowed():
    typed = tc(
        "typedef struct { int tag; } box;\n"
        "/*@ requires a: b.tag == 3; */\nint f(box b);"
    )
    assert typed.lvalue_type(FieldLV(VarLV("b"), "tag")) == IntType("int")


def test_field_access_on_non_struct():
    with pytest.raises(SpecError):
        tc("/*@ requires a: p.tag == 1; */\nint f(int *p);")


def test_unknown_field():
    with pytest.raises(SpecError):
        tc(
            "typedef struct { int tag; } box;\n"
            "/*@ requires a: b->len == 3; */\nint f(box *b);"
        )


def test_deref_of_non_pointer():
    with pytest.raises(SpecError):
        tc("/*@ requires a: *(n) == 1; */\nint f(int n);")


def test_division_by_zero_constant():
    with pytest.raises(SpecError):
        tc("/*@ requires a: n / 0 == 1; */\nint f(int n);")


def test_range_outside_defined_rejected():
    with pytest.raises(SpecError, match="ranges may only appear"):
        tc("/*@ requires a: *(p + (0 .. 3)) == 1; */\nint f(int *p);")


def test_literals_of_simple_clause():
    typed = tc("/*@ requires a: \\valid(p) && *(p) == 7; */\nint f(int *p);")
    kinds = {type(lit) for lit in _first_literals(typed)}
    assert kinds == {LitDefined, LitCmp}


def _first_literals(typed):
    from ctxgen import to_dnf

    return to_dnf(typed.precondition)[0]


def test_initialized_kind_tracked():
    typed = tc("/*@ requires a: \\initialized(p + (0 .. 2)); */\nint f(int *p);")
    lits = _first_literals(typed)
    assert any(
        isinstance(l, LitDefined) and l.kind is DefKind.INITIALIZED for l in lits
    )


def test_valid_read_kind():
    typed = tc("/*@ requires a: \\valid_read(p + (0 .. 2)); */\nint f(const int *p);")
    lits = _first_literals(typed)
    assert any(
        isinstance(l, LitDefined) and l.kind is DefKind.VALID_READ for l in lits
    )


def test_int_kind_for_terms():
    typed = tc("/*@ requires a: 16 <= len; */\nint f(size_t len);")
    assert typed.lvalue_type(VarLV("len")) == IntType("size_t")
