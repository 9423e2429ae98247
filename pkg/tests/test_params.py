from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from oracles import mobius_maps, random_valid_points
from takagi.errors import InconsistencyError, InvalidInput, ValidationError
from takagi.params import (CurvePoint, Measure, ParamCurve, alpha_beta, check_nd, classify, dual,
                           dual_triple, matrices, validate)


def test_validate_examples():
    assert validate(0.5, 0, 0).valid
    rep = validate(2, 0, 0)
    assert not rep.valid and not rep.b1_range
    rep = validate(0.5, -1 / 3, -1 / 3)
    assert rep.valid and rep.ass_first


def test_figure_one_point_fails_ass():
    rep = validate(0.5, -1 / 3, 1 / 3)
    assert rep.cond and not rep.ass_first and not rep.ass_second
    with pytest.raises(ValidationError):
        CurvePoint(0.5, -1 / 3, 1 / 3)
    assert CurvePoint(0.5, -1 / 3, 1 / 3, force=True).b1 == 0.5


def test_force_does_not_override_cond():
    with pytest.raises(ValidationError):
        CurvePoint(2, 0, 0, force=True)


def test_non_finite_rejected():
    with pytest.raises(InvalidInput):
        validate(float("nan"), 0, 0)


def test_matrices_examples():
    m = matrices(CurvePoint(0.5, 0, 0))
    np.testing.assert_array_equal(m.A0, [[0.5, 0], [0, 1]])
    np.testing.assert_array_equal(m.A1, [[0.5, 0.5], [0, 1]])
    m = matrices(CurvePoint(1 / 3, 0, 0))
    np.testing.assert_allclose(m.A1, [[2 / 3, 1 / 3], [0, 1]])


def test_dual_examples():
    assert dual(CurvePoint(0.5, 0, 0)).triple == (0.5, 0, 0)
    assert dual_triple(Fraction(1, 2), Fraction(-1, 3), Fraction(1, 3)) == (
        Fraction(1, 2), Fraction(-1, 4), Fraction(1, 2))


def test_alpha_beta_examples():
    assert alpha_beta(CurvePoint(0.3, 0, 0)) == (0, 0)
    a, b = alpha_beta(CurvePoint(0.5, -1 / 3, 1 / 3, force=True))
    assert a == pytest.approx(-0.5) and b == pytest.approx(2 / 3)
    a, b = alpha_beta(CurvePoint(0.5, -1 / 3, -1 / 3))
    assert a == pytest.approx(-2 / 3) and b == 0


def test_classify_examples():
    assert classify(CurvePoint(0.5, 0, 0)) is Measure.ABSOLUTELY_CONTINUOUS
    assert classify(CurvePoint(1 / 3, 0, 0)) is Measure.SINGULAR
    assert classify(CurvePoint(0.3, 0, 0.42)) is Measure.SINGULAR


def test_random_points_endpoint_identities_and_dual(rng):
    for trip in random_valid_points(rng, 100):
        p = CurvePoint(*trip)
        m = matrices(p)
        b1 = p.b1
        assert m.phi(0, 0.0) == pytest.approx(0, abs=1e-14)
        assert m.phi(0, 1.0) == pytest.approx(b1, abs=1e-14)
        assert m.phi(1, 0.0) == pytest.approx(b1, abs=1e-14)
        assert m.phi(1, 1.0) == pytest.approx(1, abs=1e-14)
        np.testing.assert_allclose(dual(dual(p)).triple, p.triple, atol=1e-14)
        a, b = alpha_beta(p)
        assert a <= 0 <= b


def test_dual_involution_exact(rng):
    for trip in random_valid_points(rng, 100):
        q = tuple(Fraction(v).limit_denominator(1000) for v in trip)
        assert dual_triple(*dual_triple(*q)) == q


def test_cond_invariant_under_duality(rng):
    hits = 0
    for _ in range(1000):
        b1 = rng.uniform(0.01, 0.99)
        c0 = rng.uniform(b1 - 1, 1 / b1 - 1)
        c1 = rng.uniform(-b1, b1 / (1 - b1))
        assert validate(b1, c0, c1).cond
        assert validate(*dual_triple(b1, c0, c1)).cond
        hits += validate(b1, c0, c1).valid
    assert hits > 0


def test_alpha_beta_interval_is_invariant(rng):
    # [alpha, beta] is mapped into itself by both branches of the recursion
    for trip in random_valid_points(rng, 50):
        a, b = alpha_beta(CurvePoint(*trip))
        b1, c0, c1 = trip
        for y in np.linspace(a, b, 11):
            g0 = b1 * (1 + c0) * y + c0
            g1 = ((1 - b1 + c1) * y + c1) / (b1 * y + 1)
            assert a - 1e-12 <= g0 <= b + 1e-12
            assert a - 1e-12 <= g1 <= b + 1e-12


def test_curve_validation_and_serialization():
    c = ParamCurve([1 / 3, 1, 0.5], [0], [0], order=2)
    assert c.order == 2 and c.point.triple == (1 / 3, 0, 0)
    assert ParamCurve.from_json(c.to_json()) == c
    with pytest.raises(ValidationError):
        ParamCurve([0.999, 1], [0], [0], order=1, half_width=0.01)


def test_curve_dual_matches_pointwise_dual():
    c = ParamCurve([0.5, 1], [-1 / 3, 0.5], [-1 / 3, 0.2], order=1)
    d = c.dual()
    for t in (-0.004, 0.0, 0.003):
        want = dual_triple(*c.triple_at(t))
        got = d.triple_at(t)
        np.testing.assert_allclose(got, want, atol=5e-5)
    np.testing.assert_allclose(d.triple_at(0), dual_triple(*c.triple_at(0)), atol=1e-15)


def test_nd_examples():
    assert check_nd(ParamCurve([0.3, 1], [0], [0], order=1)).nd_holds
    assert not check_nd(ParamCurve([0.3, -1], [0], [0], order=1)).nd_holds
    assert not check_nd(ParamCurve.constant(0.3)).nd_holds
    rep = check_nd(ParamCurve([0.3, 1], [0], [0], order=1))
    assert rep.delta0 == rep.delta1 == rep.delta0_dual == rep.delta1_dual == 0


def test_nd_invariant_under_reparametrization():
    for coeffs in ([[0.5, 1], [-1 / 3, 1], [-1 / 3]], [[0.4, -0.5], [0.1, 0.7], [0.2, 0.3]],
                   [[0.3, 1], [0], [0.42, -2]]):
        c = ParamCurve(*coeffs, order=1, half_width=0.002)
        assert check_nd(c).nd_holds == check_nd(c.reparametrized(2)).nd_holds


def test_nd_at_least_one_delta1_defined(rng):
    for trip in random_valid_points(rng, 30):
        slope = rng.normal(size=3)
        c = ParamCurve(*[[v, s] for v, s in zip(trip, slope)], order=1, check=False)
        try:
            rep = check_nd(c)
        except InconsistencyError:
            pytest.fail(f"neither delta_1 defined at {trip}")
        assert rep.delta1 is not None or rep.delta1_dual is not None


@given(st.floats(0.05, 0.95), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_validate_matches_hand_conditions(b1, c0, c1):
    rep = validate(b1, c0, c1)
    cond = 0 < b1 < 1 and b1 - 1 < c0 < 1 / b1 - 1 and -b1 < c1 < b1 / (1 - b1)
    ass = ((1 + c1) * (1 - b1 * (1 + c0)) ** 2 < 1 - b1) or (b1 + c1) ** 2 < b1 * (1 + c0) * (1 + c1)
    assert rep.cond == cond
    assert rep.valid == (cond and ass)


@given(st.floats(0.05, 0.95), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_dual_matrices_reflect(b1, c0, c1):
    assume(validate(b1, c0, c1).valid)
    p = CurvePoint(b1, c0, c1)
    q = dual(p)
    # the dual measure is the reflection: Phi~_i(z) = 1 - Phi_{1-i}(1 - z)
    f0, f1 = mobius_maps(*p.triple)
    g0, g1 = mobius_maps(*q.triple)
    for z in (0.0, 0.25, 0.7, 1.0):
        assert g0(z) == pytest.approx(1 - f1(1 - z), abs=1e-12)
        assert g1(z) == pytest.approx(1 - f0(1 - z), abs=1e-12)
