import pytest

from ctxgen import SpecError, parse_source
from ctxgen.spec_ast import (
    ArrayType,
    IntType,
    PtrType,
    StructType,
    VoidType,
    render_ctype,
)


def parse(src):
    return parse_source(src)


def test_minimal_prototype():
    spec = parse("/*@ requires a: n == 1; */\nint f(int n);")
    assert spec.name == "f"
    assert [p.name for p in spec.params] == ["n"]
    assert spec.params[0].ctype == IntType("int")
    assert len(spec.clauses) == 1
    assert spec.clauses[0].label == "a"


def test_void_parameter_list_and_return():
    spec = parse("int g;\n/*@ requires a: g == 1; */\nvoid f(void);")
    assert spec.params == ()
    assert spec.ret_type == VoidType()


def test_pointer_and_array_params():
    spec = parse(
        "/*@ requires a: \\valid(p); */\n"
        "int f(const unsigned char *p, int a[16], long **pp);"
    )
    p, a, pp = spec.params
    assert isinstance(p.ctype, PtrType)
    assert p.ctype.pointee == IntType("unsigned char", const=True)
    assert a.ctype == ArrayType(IntType("int"), 16)
    assert isinstance(pp.ctype, PtrType) and isinstance(pp.ctype.pointee, PtrType)


def test_typedef_struct_and_globals():
    spec = parse(
        "typedef struct { int nr; unsigned long *rk; unsigned long buf[68]; } aes_context;\n"
        "int counter;\n"
        "/*@ requires a: \\valid(ctx); */\n"
        "int f(aes_context *ctx);"
    )
    td = spec.typedefs[0]
    assert td.name == "aes_context"
    assert [f.name for f in td.fields] == ["nr", "rk", "buf"]
    assert spec.globals[0].name == "counter"
    assert spec.params[0].ctype == PtrType(StructType("aes_context"))


def test_multiple_labeled_requires():
    spec = parse(
        "/*@ requires lo: 0 <= n;\n"
        "  @ requires hi: n <= 64;\n"
        "  */\n"
        "int f(int n);"
    )
    assert [c.label for c in spec.clauses] == ["lo", "hi"]


def test_label_optional():
    spec = parse("/*@ requires n == 1; */\nint f(int n);")
    assert spec.clauses[0].label is None


def test_duplicate_label_rejected():
    with pytest.raises(SpecError, match="duplicate clause label"):
        parse("/*@ requires a: n == 1; requires a: n == 2; */\nint f(int n);")


def test_chained_comparison_expands():
    spec = parse("/*@ requires a: 16 <= length <= 16672; */\nint f(int length);")
    # the surface predicate is a conjunction of the two comparisons
    pred = spec.clauses[0].pred
    assert type(pred).__name__ == "RAnd"


def test_hex_and_negative_literals():
    spec = parse("/*@ requires a: n == 0x10 && m == -3; */\nint f(int n, int m);")
    assert spec is not None


def test_null_keyword():
    spec = parse("/*@ requires a: p != \\null; */\nint f(int *p);")
    assert spec is not None


def test_displacement_range():
    spec = parse("/*@ requires a: \\valid(p + (0 .. n - 1)); */\nint f(int *p, int n);")
    assert spec is not None


def test_annotation_required():
    with pytest.raises(SpecError):
        parse("int f(int n);")


def test_unknown_backslash_construct():
    with pytest.raises(SpecError, match=r"unsupported annotation construct"):
        parse("/*@ requires a: \\separated(p, q); */\nint f(int *p, int *q);")


def test_unknown_type_rejected():
    with pytest.raises(SpecError):
        parse("/*@ requires a: n == 1; */\nint f(widget n);")


def test_missing_semicolon():
    with pytest.raises(SpecError):
        parse("/*@ requires a: n == 1; */\nint f(int n)")


def test_error_carries_location():
    try:
        parse("/*@ requires a: n === 1; */\nint f(int n);")
    except SpecError as e:
        assert e.loc is not None
    else:  # pragma: no cover
        pytest.fail("expected a parse error")


def test_two_functions_rejected():
    with pytest.raises(SpecError):
        parse(
            "/*@ requires a: n == 1; */\nint f(int n);\n"
            "/*@ requires b: m == 1; */\nint g(int m);"
        )


def test_field_access_forms():
    spec = parse(
        "typedef struct { int tag; } box;\n"
        "/*@ requires a: b->tag == 1 && c.tag == 2; */\n"
        "int f(box *b, box c);"
    )
    assert spec is not None


def test_render_ctype_roundtrip_shapes():
    spec = parse(
        "/*@ requires a: \\valid(p); */\n"
        "int f(const unsigned char *p, unsigned long buf[4]);"
    )
    assert render_ctype(spec.params[0].ctype) == "const unsigned char *"
    assert render_ctype(spec.params[1].ctype) == "unsigned long[4]"
