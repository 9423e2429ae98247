"""Asymptotics of Delta_k F and of f_k increments at dyadic rationals."""
from __future__ import annotations

import math

import numpy as np

from .. import core
from ..dyadic import BinaryPoint, parse_point
from ..errors import DomainError
from ..params import Measure, check_nd, classify
from .report import ExperimentReport, Timer, verdict


def _as_point(x):
    return x if isinstance(x, BinaryPoint) else parse_point(x)


def limit_constants(curve):
    """Right and left slopes q1, q2 so that the limits are q1^k and (-q2)^k."""
    b1, c0, c1 = curve.point.triple
    db1 = curve.b1[1] if curve.order >= 1 else 0.0
    dc0 = curve.c0[1] if curve.order >= 1 else 0.0
    dc1 = curve.c1[1] if curve.order >= 1 else 0.0
    return db1 / b1 + dc0 / (c0 + 1), db1 / b1 + dc1 / (c1 + 1)


def _nd_warning(curve, warnings):
    try:
        if not check_nd(curve).nd_holds:
            warnings.append("(ND) does not hold for this curve")
    except Exception as exc:  # the check itself can be inconclusive
        warnings.append(f"(ND) check failed: {exc}")


def delta_sequences(curve, x, k, n_values):
    """Delta_k F(x, x + 2^-n) and Delta_k F(x, x - 2^-n), the latter two ways."""
    n_values = np.asarray(n_values, dtype=np.int64)
    cf = core.Coeffs(curve, k)
    prof = core.PointProfile(cf, x, int(n_values.max()))
    right = prof.offsets(n_values, +1).delta(k)
    left = prof.offsets(n_values, -1).delta(k)
    # left limit through the reflected measure: Delta_k F(x, x-h) = Delta_k F~(1-x, 1-x+h)
    dual = core.Coeffs(curve.dual(), k)
    dprof = core.PointProfile(dual, x.reflect(), int(n_values.max()))
    left_dual = dprof.offsets(n_values, +1).delta(k)
    return right, left, left_dual


def dyadic_limit_check(curve, x, k, n_values=(25, 50, 100, 200, 400), tol=0.05):
    x = _as_point(x)
    if not x.is_dyadic:
        raise DomainError("dyadic_limit_check needs a dyadic rational x")
    warnings = []
    _nd_warning(curve, warnings)
    with Timer() as tm:
        n_values = np.asarray(sorted(n_values), dtype=np.int64)
        right, left, left_dual = delta_sequences(curve, x, k, n_values)
        q1, q2 = limit_constants(curve)
        r_lim, l_lim = q1 ** k, (-q2) ** k
        nk = n_values.astype(float) ** k
        r_ratio, l_ratio = right / nk, left_dual / nk
        # informational: leading coefficient of a degree-k polynomial in n
        fit_r = np.polyfit(n_values.astype(float), right, k)[0] if n_values.size > k else np.nan
        fit_l = np.polyfit(n_values.astype(float), left_dual, k)[0] if n_values.size > k else np.nan
        ok = abs(r_ratio[-1] - r_lim) <= tol and abs(l_ratio[-1] - l_lim) <= tol
    fit = {
        "right_limit": r_lim, "left_limit": l_lim,
        "right_last": r_ratio[-1], "left_last": l_ratio[-1],
        "right_residual": r_ratio[-1] - r_lim, "left_residual": l_ratio[-1] - l_lim,
        "right_poly_leading": fit_r, "left_poly_leading": fit_l,
    }
    details = {
        "left_series": [[int(n), float(v)] for n, v in zip(n_values, l_ratio)],
        "left_direct_series": [[int(n), float(v)] for n, v in zip(n_values, left / nk)],
        "duality_gap": float(np.max(np.abs(left - left_dual) / np.maximum(1, np.abs(left)))),
        "scale": "h = 2^-n, normalized by n^k",
    }
    return ExperimentReport(
        "dyadic-limit",
        {"curve": curve.to_dict(), "x": str(x), "k": k, "n_values": n_values.tolist()},
        None, [[int(n), float(v)] for n, v in zip(n_values, r_ratio)], fit, verdict(ok), tol,
        tm.ms, warnings, details)


def residual_decay(curve, x, k, n_values):
    """Slope of log2 |k-th difference of Delta_k F(x, x+2^-n) - k! q1^k| against n."""
    x = _as_point(x)
    n_values = np.arange(int(min(n_values)), int(max(n_values)) + k + 1)
    right, _, _ = delta_sequences(curve, x, k, n_values)
    q1, _ = limit_constants(curve)
    d = np.diff(right, n=k)
    res = np.abs(d - math.factorial(k) * q1 ** k)
    keep = res > 1e-11 * np.maximum(1, np.abs(right[:-k] if k else right))
    nn = n_values[: d.size][keep]
    if nn.size < 3:
        return -np.inf, res
    slope = np.polyfit(nn, np.log2(res[keep]), 1)[0]
    return float(slope), res


def d2_case(point):
    b1, c0, c1 = point.triple
    if c0 < (1 - 2 * b1) / (2 * b1) and c1 > 1 - 2 * b1:
        return "i"
    return "ii"


def increments(curve, x, k, n_values, side=+1):
    """log2 |f_k(x + side 2^-n) - f_k(x)| for each n."""
    cf = core.Coeffs(curve, k)
    prof = core.PointProfile(cf, x, int(max(n_values)))
    return prof.offsets(np.asarray(n_values), side).log2_abs_diff(k)


def critical_exponent(n_values, log2inc, k):
    """c fitted from log2 |inc_n| ~ a + k log2 n - c n."""
    n = np.asarray(n_values, float)
    y = np.asarray(log2inc, float) - k * np.log2(n)
    ok = np.isfinite(y)
    return float(-np.polyfit(n[ok], y[ok], 1)[0])


def d2_holder_check(curve, x, k, n_values=tuple(range(8, 121)), c_grid=None, tol=1e-3):
    x = _as_point(x)
    if not x.is_dyadic:
        raise DomainError("d2_holder_check needs a dyadic rational x")
    warnings = []
    _nd_warning(curve, warnings)
    with Timer() as tm:
        n_values = np.asarray(sorted(n_values), dtype=np.int64)
        case = d2_case(curve.point)
        measure = classify(curve.point)
        lr = increments(curve, x, k, n_values, +1)
        ll = increments(curve, x, k, n_values, -1)
        worst = np.maximum(lr, ll)
        half = n_values >= n_values[n_values.size // 2]
        c_hat = critical_exponent(n_values[half], worst[half], k)
        c_grid = np.round(np.linspace(0.5, 1.5, 21), 10) if c_grid is None else np.asarray(c_grid)
        scan = {f"{c:.4g}": float(worst[-1] + c * n_values[-1]) for c in c_grid}
        # case (i) is one-sided: the left side belongs to the dual curve at 1 - x
        scaled = np.exp2(lr + n_values)
        if case == "i":
            ok = bool(scaled[-1] < tol)
            series = [[int(n), float(v)] for n, v in zip(n_values, scaled)]
        else:
            if measure is Measure.SINGULAR:
                ok = c_hat < 1 - 0.01
            else:
                ok = abs(c_hat - 1) <= 0.01
            series = [[int(n), float(v)] for n, v in zip(n_values, worst)]
    fit = {"case": case, "measure": measure.value, "critical_exponent": c_hat,
           "last_scaled_increment": float(scaled[-1]),
           "last_scaled_increment_left": float(np.exp2(ll[-1] + n_values[-1]))}
    details = {"log2_increment_right": lr, "log2_increment_left": ll,
               "log2_ratio_at_last_n_by_c": scan,
               "series_meaning": ("|f_k(x+2^-n) - f_k(x)| * 2^n" if case == "i"
                                  else "log2 max |f_k(x+-2^-n) - f_k(x)|")}
    return ExperimentReport(
        "d2-holder",
        {"curve": curve.to_dict(), "x": str(x), "k": k, "n_values": n_values.tolist()},
        None, series, fit, verdict(ok), tol, tm.ms, warnings, details)
