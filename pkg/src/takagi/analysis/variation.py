"""Variation sums and local monotonicity (MTNI) probes on dyadic intervals."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .. import core
from ..dyadic import parse_point
from ..errors import DomainError
from ..params import Measure, check_nd, classify
from .exponents import decay_samples
from .report import ExperimentReport, Timer, loglog_slope, verdict


def dyadic_interval(interval, m):
    """Grid indices [lo, hi] of the interval endpoints at level m."""
    a, b = (Fraction(v) if not isinstance(v, str) else parse_point(v).to_fraction() if v != "1"
            else Fraction(1) for v in interval)
    lo, hi = a * (1 << m), b * (1 << m)
    if lo.denominator != 1 or hi.denominator != 1 or not 0 <= lo < hi <= (1 << m):
        raise DomainError(f"interval {interval} is not a dyadic interval at level {m}")
    return int(lo), int(hi)


def _hypothesis_warnings(curve, k):
    out = []
    try:
        if not check_nd(curve).nd_holds:
            out.append("(ND) does not hold; divergence is not expected")
    except Exception as exc:
        out.append(f"(ND) check failed: {exc}")
    if k >= 2 and not curve.is_lebesgue_type():
        out.append("k >= 2 on a curve with nonzero c0(t) or c1(t) is outside the standing hypothesis")
    return out


def variation_direct(curve, k, interval, m):
    """sum |f_k(l/2^m) - f_k((l-1)/2^m)| with f_k evaluated point by point."""
    lo, hi = dyadic_interval(interval, m)
    _, F = core.dyadic_grid_series(curve, m, k, lo, hi)
    f = math.factorial(k) * F[:, k]
    return float(np.abs(np.diff(f)).sum())


def variation_expectation(curve, k, interval, m):
    """mu_0([a, b]) times the conditional mu_0 expectation of |Z_{k,m}| over the level-m cells."""
    lo, hi = dyadic_interval(interval, m)
    mass, acc = 0.0, 0.0
    for _, _, M in core.iter_cells(curve, m, k, lo, hi):
        M0 = M[:, 0]
        Z = math.factorial(k) * M[:, k] / M0
        mass += M0.sum()
        acc += (M0 * np.abs(Z)).sum()
    return float(mass * (acc / mass)), float(mass)


def variation_profile(curve, k=1, interval=("0", "1"), m_values=tuple(range(8, 21)),
                      expected_exponent=None, tol=0.05, identity_tol=1e-9):
    warnings = _hypothesis_warnings(curve, k)
    with Timer() as tm:
        ms = list(m_values)
        direct = np.array([variation_direct(curve, k, interval, m) for m in ms])
        expect = [variation_expectation(curve, k, interval, m) for m in ms]
        via_e = np.array([e for e, _ in expect])
        gap = float(np.max(np.abs(direct - via_e) / np.maximum(1.0, np.abs(direct))))
        identity_ok = gap <= identity_tol
        increasing = bool(np.all(direct[1:] > direct[:-1] * (1 + identity_tol)))
        positive = bool(np.all(direct > 0))
        slope = loglog_slope(ms, direct)[0] if positive else float("nan")
        if not positive or warnings:
            ok = identity_ok
        else:
            ok = identity_ok and increasing
            if expected_exponent is not None:
                ok = ok and abs(slope - expected_exponent) <= tol
    fit = {"growth_exponent": slope, "identity_gap": gap, "strictly_increasing": increasing,
           "expected_exponent": expected_exponent,
           "ties": [int(m) for m, a, b in zip(ms[1:], direct[:-1], direct[1:])
                    if not b > a * (1 + identity_tol)]}
    details = {"expectation_route": [[int(m), float(v)] for m, v in zip(ms, via_e)],
               "interval_mass": [e[1] for e in expect]}
    return ExperimentReport(
        "variation",
        {"curve": curve.to_dict(), "k": k, "interval": [str(v) for v in interval], "m_values": ms,
         "expected_exponent": expected_exponent},
        None, [[int(m), float(v)] for m, v in zip(ms, direct)], fit, verdict(ok), tol, tm.ms,
        warnings, details)


def quotient_extremes(curve, k, interval, level, c):
    """max and min of (f_k(x) - f_k(y)) / (x - y)^c over adjacent level-`level` dyadic pairs."""
    lo, hi = dyadic_interval(interval, level)
    best_hi, best_lo = -np.inf, np.inf
    scale = math.factorial(k) * 2.0 ** (level * c)
    for _, _, M in core.iter_cells(curve, level, k, lo, hi):
        q = M[:, k] * scale
        best_hi = max(best_hi, float(q.max()))
        best_lo = min(best_lo, float(q.min()))
    return best_hi, best_lo


def mtni_probe(curve, k=1, interval=("1/4", "1/2"), levels=None, c=None, seed=0,
               compare=(16, 24), factor=2.0, jobs=1):
    warnings = _hypothesis_warnings(curve, k)
    lo_level, hi_level = compare
    levels = list(range(2, hi_level + 1)) if levels is None else sorted(levels)
    if lo_level not in levels or hi_level not in levels:
        raise DomainError("comparison levels must be among the probed levels")
    with Timer() as tm:
        if c is None:
            if classify(curve.point) is Measure.ABSOLUTELY_CONTINUOUS:
                c = 1.0
            else:
                c = float(decay_samples(curve.point, "mu0", 4096, 200, seed, jobs).mean())
        run_hi, run_lo = -np.inf, np.inf
        rows, his, los = [], {}, {}
        for L in levels:
            mx, mn = quotient_extremes(curve, k, interval, L, c)
            run_hi, run_lo = max(run_hi, mx), min(run_lo, mn)
            his[L], los[L] = run_hi, run_lo
            rows.append([L, run_hi])
        a_hi, b_hi = his[lo_level], his[hi_level]
        a_lo, b_lo = los[lo_level], los[hi_level]
        ok = (b_hi > 0 > b_lo and a_hi > 0 > a_lo
              and b_hi >= factor * a_hi and -b_lo >= factor * -a_lo)
    fit = {"c": c, "max_at": {str(lo_level): a_hi, str(hi_level): b_hi},
           "min_at": {str(lo_level): a_lo, str(hi_level): b_lo},
           "max_growth": b_hi / a_hi if a_hi > 0 else None,
           "min_growth": b_lo / a_lo if a_lo < 0 else None, "factor": factor}
    details = {"running_min": [[int(L), float(los[L])] for L in levels],
               "c_source": "mu0 decay exponent (200 samples, depth 4096)"}
    return ExperimentReport(
        "mtni",
        {"curve": curve.to_dict(), "k": k, "interval": [str(v) for v in interval],
         "levels": levels, "c": c, "compare": list(compare), "factor": factor},
        seed, rows, fit, verdict(ok), factor, tm.ms, warnings, details)
