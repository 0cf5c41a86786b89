"""Symbolic expression order: constructor folding and the soundness of
compare() against brute-force valuation checking."""

import random

import pytest

from ctxgen.spec_ast import ArithOp, VarLV
from ctxgen.symbolic import (
    NEG_INF,
    POS_INF,
    Cmp,
    EvalError,
    SBin,
    SConst,
    SStar,
    SVar,
    Valuation,
    atoms_of,
    compare,
    probe_valuations,
    proven_le,
    render_sexpr,
    sadd,
    sdiv,
    smax,
    smin,
    smod,
    smul,
    ssub,
)

N = SVar(VarLV("n"))
M = SVar(VarLV("m"))


def test_constant_folding():
    assert sadd(SConst(2), SConst(3)) == SConst(5)
    assert ssub(SConst(2), SConst(3)) == SConst(-1)
    assert smul(SConst(4), SConst(-2)) == SConst(-8)


def test_neutral_elements():
    assert sadd(N, SConst(0)) == N
    assert sadd(SConst(0), N) == N


def test_c_semantics_in_fold():
    assert sdiv(SConst(-7), SConst(2)) == SConst(-3)
    assert smod(SConst(-7), SConst(2)) == SConst(-1)


def test_min_max_fold():
    assert smin(SConst(3), SConst(5)) == SConst(3)
    assert smax(SConst(3), SConst(5)) == SConst(5)
    assert smin(N, N) == N
    assert smax(N, N) == N


def test_min_max_absorb_infinities():
    assert smin(N, POS_INF) == N
    assert smax(N, NEG_INF) == N
    assert smin(N, NEG_INF) == NEG_INF
    assert smax(N, POS_INF) == POS_INF


def test_arithmetic_rejects_infinities():
    with pytest.raises(EvalError):
        sadd(POS_INF, SConst(1))


def test_render():
    assert render_sexpr(ssub(N, SConst(1))) == "n - 1"
    # smin orders its operands canonically
    assert render_sexpr(smin(N, M)) == "min(m, n)"
    assert render_sexpr(POS_INF) == "+inf"


def test_compare_identical():
    e = sadd(N, SConst(3))
    assert compare(e, e) is Cmp.EQ


def test_compare_constants():
    assert compare(SConst(1), SConst(2)) is Cmp.LE
    assert compare(SConst(5), SConst(5)) is Cmp.EQ
    assert compare(SConst(9), SConst(2)) is Cmp.GE


def test_compare_infinities():
    assert compare(NEG_INF, N) is Cmp.LE
    assert compare(N, POS_INF) is Cmp.LE
    assert compare(NEG_INF, POS_INF) is Cmp.LE


def test_compare_offset():
    assert compare(N, sadd(N, SConst(1))) is Cmp.LE
    assert compare(sadd(N, SConst(1)), N) is Cmp.GE
    assert compare(ssub(N, SConst(4)), sadd(N, SConst(2))) is Cmp.LE


def test_compare_unrelated_variables():
    assert compare(N, M) in (Cmp.UNKNOWN, Cmp.INCOMPARABLE)


def test_compare_min_max_bounds():
    assert compare(smin(N, M), N) is Cmp.LE
    assert compare(N, smax(N, M)) is Cmp.LE
    assert compare(smin(N, M), smax(N, M)) is Cmp.LE


def test_star_monotone():
    # V(*E) = k * V(E) with k >= 2, so *n >= n only when n >= 0 is known;
    # with unconstrained sign the order must not claim LE or GE
    assert compare(SStar(N), N) in (Cmp.UNKNOWN, Cmp.INCOMPARABLE)


def test_proven_le():
    assert proven_le(N, sadd(N, SConst(2)))
    assert not proven_le(sadd(N, SConst(2)), N)
    assert not proven_le(N, M)


def test_atoms_of_order_and_opacity():
    e = sadd(sdiv(N, SConst(2)), M)
    atoms = atoms_of(e)
    # the division is opaque: it appears as one atom, with m after it
    assert atoms[-1] == M
    assert any(isinstance(a, SBin) and a.op is ArithOp.DIV for a in atoms)


def test_valuation_star_coefficient():
    v = Valuation({N: 5}, k=3)
    assert v.eval(SStar(N)) == 15
    assert v.eval(SStar(SStar(N))) == 45


def test_valuation_rejects_small_k():
    with pytest.raises(ValueError):
        Valuation({}, k=1)


def _rand_expr(rng, depth=0):
    r = rng.random()
    if r < 0.3 or depth >= 3:
        return SConst(rng.randint(-8, 8))
    if r < 0.55:
        return rng.choice([N, M])
    if r < 0.62:
        return SStar(_rand_expr(rng, depth + 1))
    a = _rand_expr(rng, depth + 1)
    b = _rand_expr(rng, depth + 1)
    f = rng.choice([sadd, ssub, smul, smin, smax])
    try:
        return f(a, b)
    except EvalError:  # pragma: no cover - no infinities generated here
        return a


def test_compare_soundness_fuzz():
    """compare() may say UNKNOWN freely, but a LE/GE/EQ claim must hold
    under every sampled valuation.  10^4 random pairs."""
    rng = random.Random(20260819)
    contradictions = 0
    for _ in range(10_000):
        a = _rand_expr(rng)
        b = _rand_expr(rng)
        verdict = compare(a, b)
        if verdict in (Cmp.UNKNOWN, Cmp.INCOMPARABLE):
            continue
        for val in probe_valuations([a, b], limit=24):
            try:
                va, vb = val.eval(a), val.eval(b)
            except EvalError:
                continue
            if verdict is Cmp.LE and not va <= vb:
                contradictions += 1
            elif verdict is Cmp.GE and not va >= vb:
                contradictions += 1
            elif verdict is Cmp.EQ and va != vb:
                contradictions += 1
    assert contradictions == 0


def test_compare_antisymmetric_consistency():
    """compare(a, b) and compare(b, a) must never disagree."""
    flip = {Cmp.LE: Cmp.GE, Cmp.GE: Cmp.LE, Cmp.EQ: Cmp.EQ}
    rng = random.Random(77)
    for _ in range(2_000):
        a = _rand_expr(rng)
        b = _rand_expr(rng)
        ab = compare(a, b)
        ba = compare(b, a)
        if ab in flip and ba in flip:
            assert ba == flip[ab], (render_sexpr(a), render_sexpr(b))
