import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.stats import chisquare

from oracles import F_exact, F_float, cylinder_mass, random_valid_points
from takagi import core
from takagi.core import Coeffs, delta_kF, eval_F, eval_F_jet, trajectory, z_series
from takagi.dyadic import BinaryPoint, parse_point
from takagi.errors import InvalidInput, PrecisionExhausted
from takagi.params import CurvePoint, ParamCurve, dual


def exact_triple(curve, t):
    t = Fraction(t)
    return tuple(sum(Fraction(float(c)) * t ** j for j, c in enumerate(v))
                 for v in (curve.b1, curve.c0, curve.c1))


def test_lebesgue_identity_levels():
    p = CurvePoint(0.5, 0, 0)
    for level in range(0, 11):
        for j in range(0, 1 << level, max(1, (1 << level) // 37)):
            x = BinaryPoint.from_fraction(Fraction(j, 1 << level))
            assert abs(eval_F(p, x).value - j / 2 ** level) < 1e-13


def test_F_examples():
    p = CurvePoint(1 / 3, 0, 0)
    assert eval_F(p, parse_point("1/4")).value == pytest.approx(1 / 9, abs=1e-15)
    assert eval_F(p, parse_point("5/8")).value == pytest.approx(11 / 27, abs=1e-15)
    assert F_exact((Fraction(1, 3), 0, 0), [1, 0, 1]) == Fraction(11, 27)


def test_F_half_is_b1(rng):
    for trip in random_valid_points(rng, 20):
        assert eval_F(CurvePoint(*trip), parse_point("1/2")).value == pytest.approx(trip[0], abs=1e-14)


def test_F_matches_exact_recursion(rng):
    for trip in random_valid_points(rng, 20):
        q = tuple(Fraction(v).limit_denominator(10 ** 6) for v in trip)
        p = CurvePoint(*map(float, q))
        bits = rng.integers(0, 2, 12)
        bits[-1] = 1
        x = BinaryPoint(bits)
        assert eval_F(p, x).value == pytest.approx(float(F_exact(q, bits)), abs=1e-13)


def test_F_non_dyadic_matches_float_oracle(rng):
    for trip in random_valid_points(rng, 10):
        p = CurvePoint(*trip)
        x = parse_point("3/7")
        ev = eval_F(p, x)
        want = F_float(trip, x.digits(3000))
        assert ev.value == pytest.approx(want, abs=1e-12)
        assert ev.tail_bound < 1e-13


def test_F_monotone(rng):
    p = CurvePoint(0.3, 0.2, -0.1)
    xs = sorted(Fraction(int(v), 4096) for v in rng.integers(0, 4096, 50))
    vals = [eval_F(p, BinaryPoint.from_fraction(x)).value for x in xs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_precision_errors():
    p = CurvePoint(0.5, 0, 0)
    with pytest.raises(InvalidInput):
        eval_F(p, parse_point("1/3"), tol=1e-20)
    short = BinaryPoint([0, 1] * 10, truncated=True)
    with pytest.raises(PrecisionExhausted):
        eval_F(p, short)


def test_takagi_examples(takagi_curve):
    ev = eval_F_jet(takagi_curve, parse_point("1/2"), K=1)
    assert ev.value == 0.5 and ev.f(1) == 1.0
    zs = z_series(takagi_curve, parse_point("1/2"), 1, 6)
    np.testing.assert_allclose(zs.y_values, [-2, 2, 2, 2, 2, 2])
    assert zs.values[2] == pytest.approx(2)
    x = parse_point("1/2")
    for n in (3, 5, 10, 40):
        y = x.add_offset(Fraction(1, 2 ** n))
        assert delta_kF(takagi_curve, x, y, 1) == pytest.approx(2 * n - 4, abs=1e-9)


def test_advance_examples():
    cf = Coeffs(ParamCurve([1 / 3, 1], [0], [0], order=1))
    tr = trajectory(cf, [[1, 0]])
    assert np.all(tr.g == 0)
    assert np.exp2(tr.e[0, 2]) == pytest.approx(2 / 9)
    H = tr.H()
    np.testing.assert_allclose(H[0, :, 0], [2 / 3, 1 / 3])


def test_constant_curve_derivatives_vanish():
    c = ParamCurve.constant(0.3, 0.1, -0.05, order=2)
    ev = eval_F_jet(c, parse_point("1/3"), K=2)
    assert ev.f(1) == 0 and ev.f(2) == 0


def test_z0_is_one_and_zy(rng):
    c = ParamCurve([0.4, 0.3], [0.1, -0.2], [-0.1, 0.5], order=2)
    cf = Coeffs(c)
    bits = rng.integers(0, 2, (5, 60))
    tr = trajectory(cf, bits)
    np.testing.assert_allclose(core.z_from_trajectory(tr, 0), 1.0)
    Y = core.y_from_trajectory(tr)
    Z1 = core.z_from_trajectory(tr, 1)
    np.testing.assert_allclose(Z1[:, 1:], np.cumsum(Y, axis=1), rtol=1e-12, atol=1e-12)


def test_y_magnitudes_lebesgue_case(rng):
    a = 0.3
    zs = z_series(ParamCurve([a, 1], [0], [0], order=1), parse_point("5/11"), 1, 40)
    bits = parse_point("5/11").digits(40)
    np.testing.assert_allclose(zs.y_values, np.where(bits == 0, 1 / a, -1 / (1 - a)))


def test_child_additivity_jets(rng):
    c = ParamCurve([0.4, 0.3, 0.1], [0.1, -0.2, 0.05], [-0.1, 0.5, 0.2], order=2)
    cf = Coeffs(c)
    for _ in range(20):
        n = int(rng.integers(0, 15))
        pre = rng.integers(0, 2, n)
        rows = np.array([np.r_[pre, 0], np.r_[pre, 1]], dtype=np.uint8)
        tr = trajectory(cf, rows)
        M = tr.m * np.exp2(tr.e)[..., None]
        np.testing.assert_allclose(M[0, n + 1] + M[1, n + 1], M[0, n], rtol=1e-12, atol=1e-14)


def test_cylinder_mass_matches_exact(rng):
    for trip in random_valid_points(rng, 10):
        q = tuple(Fraction(v).limit_denominator(1000) for v in trip)
        cf = Coeffs(CurvePoint(*map(float, q)), 0)
        bits = rng.integers(0, 2, 8)
        tr = trajectory(cf, bits[None, :])
        assert float(np.exp2(tr.e[0, 8])) == pytest.approx(float(cylinder_mass(q, bits)), rel=1e-12)


def test_f1_matches_exact_finite_difference():
    c = ParamCurve([0.4, 0.7, -0.3], [0.1, 0.2, 0.4], [-0.1, 0.5, -0.2], order=2)
    bits = [0, 1, 1, 0, 1, 0, 0, 1, 1, 1]
    x = BinaryPoint(bits)
    ev = eval_F_jet(c, x, K=2)
    errs1, errs2 = [], []
    for h in (Fraction(1, 1000), Fraction(1, 2000)):
        fp, f0, fm = (F_exact(exact_triple(c, t), bits) for t in (h, 0, -h))
        errs1.append(abs(ev.f(1) - float((fp - fm) / (2 * h))))
        errs2.append(abs(ev.f(2) - float((fp - 2 * f0 + fm) / h ** 2)))
    assert 3.9 < errs1[0] / errs1[1] < 4.1
    assert 3.9 < errs2[0] / errs2[1] < 4.1


def test_tree_and_series_agree():
    c = ParamCurve([1 / 3, 1], [0.1, 0.2], [0.05, -0.1], order=2)
    _, A = core.dyadic_grid_tree(c, 10)
    _, B = core.dyadic_grid_series(c, 10)
    np.testing.assert_allclose(A, B, atol=1e-12)


def test_duality_values(rng):
    for trip in random_valid_points(rng, 20):
        p = CurvePoint(*trip)
        d = dual(p)
        for q in (Fraction(1, 3), Fraction(5, 17), Fraction(3, 8)):
            x = BinaryPoint.from_fraction(q)
            lhs = eval_F(d, x).value
            rhs = 1 - eval_F(p, x.reflect()).value
            assert lhs == pytest.approx(rhs, abs=1e-10)


def test_derivative_duality():
    c = ParamCurve([0.4, 0.7], [0.1, 0.2], [-0.1, 0.5], order=2)
    x, y = parse_point("1/3"), parse_point("5/13")
    for k in (1, 2):
        a = delta_kF(c.dual(), x, y, k)
        b = delta_kF(c, x.reflect(), y.reflect(), k)
        assert a == pytest.approx(b, rel=1e-8, abs=1e-8)


def test_general_delta_matches_offsets_and_direct():
    c = ParamCurve([0.4, 0.7], [0.1, 0.2], [-0.1, 0.5], order=2)
    cf = Coeffs(c, 2)
    x = parse_point("1/3")
    prof = core.PointProfile(cf, x, 40)
    ns = np.array([5, 12, 30])
    for side in (+1, -1):
        inc = prof.offsets(ns, side)
        for n, d1, d2 in zip(ns, inc.delta(1), inc.delta(2)):
            y = x.add_offset(Fraction(side, 2 ** int(n)))
            assert delta_kF(c, x, y, 1, K=2) == pytest.approx(d1, rel=1e-9)
            assert delta_kF(c, x, y, 2, K=2) == pytest.approx(d2, rel=1e-9)
    # moderate offsets can also be checked by evaluating both endpoints
    y = parse_point("3/8")
    ex, ey = eval_F_jet(c, x, K=2), eval_F_jet(c, y, K=2)
    for k in (1, 2):
        want = (ex.f(k) - ey.f(k)) / (ex.value - ey.value)
        assert delta_kF(c, x, y, k) == pytest.approx(want, rel=1e-9)


def test_delta0_is_one():
    c = ParamCurve([0.4, 0.7], [0.1], [0.2], order=1)
    assert delta_kF(c, parse_point("1/3"), parse_point("1/5"), 0) == 1.0


def test_sandwich(rng):
    c = ParamCurve([0.4, 0.7], [0.1, 0.2], [-0.1, 0.5], order=2)
    x = parse_point("7/19")
    for k in (1, 2):
        zs = z_series(c, x, k, 30)
        for n in (4, 9, 20):
            xn = BinaryPoint(x.digits(n))
            a = delta_kF(c, x, xn, k) if x != xn else None
            b = delta_kF(c, x, xn.add_offset(Fraction(1, 2 ** n)), k)
            z = zs.values[n - 1]
            lo, hi = (min(a, b), max(a, b)) if a is not None else (b, b)
            assert lo - 1e-9 <= z <= hi + 1e-9


def test_h_derivatives_bounded(rng):
    c = ParamCurve([0.4, 0.7, 0.2, 0.1], [0.1, 0.2, -0.1, 0.0], [-0.1, 0.5, 0.1, 0.2], order=3)
    cf = Coeffs(c)
    tr = trajectory(cf, rng.integers(0, 2, (20, 2000)))
    H = tr.H()
    early = np.abs(H[:, :200, 1:]).max(axis=(0, 1))
    late = np.abs(H[:, 1000:, 1:]).max(axis=(0, 1))
    assert np.all(late <= 2 * early + 1e-12)


def test_sampler_bernoulli_frequency():
    a = 0.3
    x = core.sample_mu0(CurvePoint(a, 0, 0), 4096, seed=5)
    freq = float(np.mean(x.prefix == 0))
    assert abs(freq - a) < 3 * math.sqrt(a * (1 - a) / 4096)


def test_sampler_cylinder_frequencies():
    trip = (0.4, 0.2, -0.1)
    p = CurvePoint(*trip)
    n = 100_000
    bits = core.sample_mu0_bits(p, 3, np.random.default_rng(0), n).astype(int)
    codes = bits[:, 0] * 4 + bits[:, 1] * 2 + bits[:, 2]
    counts = np.bincount(codes, minlength=8)
    masses = np.array([float(cylinder_mass(tuple(Fraction(v) for v in trip),
                                           [int(c) for c in format(j, "03b")]))
                       for j in range(8)])
    assert masses.sum() == pytest.approx(1, abs=1e-14)
    assert chisquare(counts, n * masses).pvalue > 1e-3
    for c, m in zip(counts, masses):
        assert abs(c / n - m) < 3 * math.sqrt(m * (1 - m) / n)


def test_sampler_deterministic():
    p = CurvePoint(0.4, 0.2, -0.1)
    assert core.sample_mu0(p, 300, seed=3) == core.sample_mu0(p, 300, seed=3)
    assert core.sample_mu0(p, 300, seed=3) != core.sample_mu0(p, 300, seed=4)


@given(st.integers(1, 2 ** 12 - 1), st.integers(1, 2 ** 12 - 1))
def test_F_strictly_increasing_on_grid(i, j):
    assume(i != j)
    p = CurvePoint(0.35, -0.1, 0.2)
    fi = eval_F(p, BinaryPoint.from_fraction(Fraction(i, 4096))).value
    fj = eval_F(p, BinaryPoint.from_fraction(Fraction(j, 4096))).value
    assert (fi < fj) == (i < j)


@given(st.integers(0, 2 ** 10 - 1), st.sampled_from([(0.5, 0.0, 0.0), (0.3, 0.1, -0.2), (0.6, -0.2, 0.3)]))
def test_series_matches_exact_on_dyadics(j, trip):
    q = tuple(Fraction(v) for v in trip)
    x = BinaryPoint.from_fraction(Fraction(j, 1024))
    want = F_exact(q, x.digits(10))
    assert eval_F(CurvePoint(*trip), x).value == pytest.approx(float(want), abs=1e-14)


def test_scalar_route_matches_batched(rng):
    for trip in random_valid_points(rng, 20):
        cf = Coeffs(CurvePoint(*trip), 0)
        bits = rng.integers(0, 2, 300).astype(np.uint8)
        F, M = core._series_scalar(cf, bits)
        tr = trajectory(cf, bits[None, :])
        assert F == pytest.approx(core.series_sum(tr)[0, 0], rel=1e-13)
        assert M == pytest.approx(np.exp2(tr.e[0, -1]), rel=1e-10)
