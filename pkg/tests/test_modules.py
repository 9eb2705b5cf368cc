"""Modules with connection: operator actions, compatibility checks,
pullbacks, and traces along cyclic covers."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovc.modules import (
    ModuleVector,
    SeriesMatrix,
    SigmaNablaModule,
    apply_D,
    apply_nabla_v,
    check_frobenius_compat,
    check_integrability,
    pullback_module,
    trace_map,
    trace_projector_check,
)
from ovc.padics import make_scalar
from ovc.series import (
    DAGGER,
    ROBBA,
    TATE,
    RingDescriptor,
    Series,
    t_d_dt,
)

P, M = 3, 12
R = RingDescriptor(ROBBA, ("t",), ((-12, 12),), P, M, slope=Fraction(1), q=3)
W2 = RingDescriptor(DAGGER, ("x", "y"), ((0, 8), (0, 8)), P, M, decay=1)


def test_apply_D_examples():
    mod = SigmaNablaModule(R, 1, connection=SeriesMatrix.zero(R, 1))
    out = apply_D(mod, ModuleVector.make(mod, [Series.monomial(R, (1,))]))
    assert out.coords[0].terms == Series.monomial(R, (1,)).terms
    n2 = SigmaNablaModule(R, 2,
                          connection=SeriesMatrix.from_scalars(R, [[0, 1], [0, 0]]))
    out2 = apply_D(n2, ModuleVector.make(n2, [0, 1]))
    assert [not c.is_zero() for c in out2.coords] == [True, False]
    const = apply_D(mod, ModuleVector.make(mod, [5]))
    assert const.is_zero_at_precision()


def test_apply_nabla_v_examples():
    z = SeriesMatrix.zero(W2, 1)
    mod = SigmaNablaModule(W2, 1, gammas=(("x", z), ("y", z)))
    out = apply_nabla_v(mod, ModuleVector.make(mod, [Series.monomial(W2, (2, 0))]),
                        "x")
    ((e, c),) = out.coords[0].terms
    assert e == (1, 0) and c.unit == 2
    const = SigmaNablaModule(W2, 1, gammas=(
        ("x", SeriesMatrix.from_scalars(W2, [[7]])), ("y", z)))
    out2 = apply_nabla_v(const, ModuleVector.make(const, [1]), "x")
    assert out2.coords[0].coeff((0, 0)).unit == 7
    out3 = apply_nabla_v(mod, ModuleVector.make(mod, [4]), "x")
    assert out3.is_zero_at_precision()


def test_frobenius_compat():
    trivial = SigmaNablaModule(R, 1, connection=SeriesMatrix.zero(R, 1),
                               frobenius=SeriesMatrix.identity(R, 1))
    assert check_frobenius_compat(trivial).passed
    # rank one with constant a = m/(q-1) and F acting through t^m:
    # t dPhi/dt = m Phi and q a - a = m, so the square commutes exactly
    a = Series.monomial(R, (0,), Fraction(1, 2))
    mod = SigmaNablaModule(R, 1, connection=SeriesMatrix.make(R, [[a]]),
                           frobenius=SeriesMatrix.make(
                               R, [[Series.monomial(R, (1,))]]))
    res = check_frobenius_compat(mod)
    assert res.passed
    bad = SigmaNablaModule(R, 1, connection=SeriesMatrix.zero(R, 1),
                           frobenius=SeriesMatrix.make(
                               R, [[Series.monomial(R, (1,))]]))
    res2 = check_frobenius_compat(bad)
    assert not res2.passed and res2.defect_value == 0


def test_integrability_examples():
    z = SeriesMatrix.zero(W2, 1)
    assert check_integrability(SigmaNablaModule(W2, 1,
                                                gammas=(("x", z), ("y", z))))
    gy = SeriesMatrix.make(W2, [[Series.monomial(W2, (0, 1))]])
    assert not check_integrability(SigmaNablaModule(
        W2, 1, gammas=(("x", gy), ("y", z))))
    gx2 = SeriesMatrix.make(W2, [[Series.monomial(W2, (0, 1))]])
    gy2 = SeriesMatrix.make(W2, [[Series.monomial(W2, (1, 0))]])
    assert check_integrability(SigmaNablaModule(
        W2, 1, gammas=(("x", gx2), ("y", gy2))))


def test_pullback_examples():
    a = Series.monomial(R, (0,), Fraction(1, 2))
    mod = SigmaNablaModule(R, 1, connection=SeriesMatrix.make(R, [[a]]))
    same = pullback_module(mod, "kummer", 1)
    assert same.connection.rows[0][0].terms == a.terms
    doubled = pullback_module(mod, "kummer", 2)
    assert doubled.connection.rows[0][0].coeff((0,)).congruent(
        make_scalar(1, P, M))
    z = pullback_module(SigmaNablaModule(R, 1,
                                         connection=SeriesMatrix.zero(R, 1)),
                        "frobenius")
    assert z.connection.rows[0][0].is_zero()


def test_pullback_preserves_compat():
    a = Series.monomial(R, (0,), Fraction(1, 2))
    mod = SigmaNablaModule(R, 1, connection=SeriesMatrix.make(R, [[a]]),
                           frobenius=SeriesMatrix.make(
                               R, [[Series.monomial(R, (1,))]]))
    pulled = pullback_module(mod, "kummer", 2)
    assert check_frobenius_compat(pulled).passed


def test_trace_examples():
    R5 = RingDescriptor(ROBBA, ("t",), ((-12, 12),), 5, 10, slope=Fraction(1))
    w = Series.from_ints(R5, {(2,): 1, (3,): 1})
    tr = trace_map(w, 2)
    ((e, c),) = tr.terms
    assert e == (1,) and c.unit == 2
    one = trace_map(Series.one(R5), 3)
    assert one.coeff((0,)).unit == 3
    with pytest.raises(ValueError):
        trace_map(w, 5)


@given(st.integers(-4, 4), st.integers(1, 9), st.sampled_from([2, 3, 4]))
@settings(max_examples=60)
def test_trace_of_pullback_is_degree(k, c, e):
    from ovc.series import kummer_substitute
    R5 = RingDescriptor(ROBBA, ("t",), ((-20, 20),), 5, 10, slope=Fraction(1))
    if e % 5 == 0:
        return
    f = Series.from_ints(R5, {(k,): c})
    raw = trace_map(kummer_substitute(f, e), e)
    expected = f.scale(e)
    assert raw.sub(expected).is_zero()


def test_trace_projector_check():
    R5 = RingDescriptor(ROBBA, ("t",), ((-18, 18),), 5, 10, slope=Fraction(1))
    mod = SigmaNablaModule(R5, 1, connection=SeriesMatrix.zero(R5, 1))
    one = (Series.one(R5),)
    for e in (2, 3):
        res = trace_projector_check(mod, e, h0_reps=[one], h1_reps=[one])
        assert res.passed


def test_leibniz_rule_for_D():
    n2 = SigmaNablaModule(R, 2,
                          connection=SeriesMatrix.from_scalars(R, [[0, 1], [0, 0]]))
    c = Series.from_ints(R, {(2,): 5, (-1,): 1})
    v = ModuleVector.make(n2, [Series.one(R), Series.monomial(R, (1,))])
    cv = ModuleVector(n2, tuple(c.mul(x) for x in v.coords))
    lhs = apply_D(n2, cv)
    dv = apply_D(n2, v)
    rhs = tuple(t_d_dt(c).mul(x).add(c.mul(y))
                for x, y in zip(v.coords, dv.coords))
    for a, b in zip(lhs.coords, rhs):
        diff = a.sub(b)
        assert diff.is_zero() or all(cc.val is None or cc.val >= M - 1
                                     for _, cc in diff.terms)


def test_dual_module():
    gx = SeriesMatrix.from_scalars(W2, [[2]])
    mod = SigmaNablaModule(W2, 1, gammas=(("x", gx),))
    dual = mod.dual()
    assert dual.gamma("x").rows[0][0].coeff((0, 0)).congruent(
        make_scalar(-2, P, M))


def test_frobenius_injective_on_classes():
    from ovc.modules import frobenius_injective_on_classes
    from ovc.unipotent import h0_h1_unipotent, strongly_unipotent_basis

    # rank-2 nilpotent with the filtration-compatible Frobenius diag(1, q)
    N = SeriesMatrix.from_scalars(R, [[0, 1], [0, 0]])
    Phi = SeriesMatrix.make(R, [
        [Series.one(R), Series.zero(R)],
        [Series.zero(R), Series.monomial(R, (0,), 3)]])
    mod = SigmaNablaModule(R, 2, connection=N, frobenius=Phi)
    assert check_frobenius_compat(mod).passed
    rep = h0_h1_unipotent(strongly_unipotent_basis(mod))
    for deg in (0, 1):
        reps = [tuple(v.coords) for v in rep.generators(deg)]
        assert frobenius_injective_on_classes(mod, reps, deg)
