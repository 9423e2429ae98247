"""Box-counting style dimension estimate for the graph of f_k."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .. import core
from ..errors import DomainError
from .report import ExperimentReport, Timer, verdict

OVERSAMPLE = 5


def oscillations(values, fine_level, level, oversample=OVERSAMPLE):
    """O(f, level, l) from grid values at j / 2^fine_level, using 2^oversample steps per cell."""
    stride = 1 << (fine_level - level - oversample)
    v = values[::stride]
    per = 1 << oversample
    body = v[:-1].reshape(-1, per)
    ends = v[per::per]
    hi = np.maximum(body.max(axis=1), ends)
    lo = np.minimum(body.min(axis=1), ends)
    return hi - lo


def _log_sum_pow(d, s):
    a = np.log(d) * s
    m = a.max()
    return m + math.log(np.exp(a - m).sum())


def critical_s(osc_now, n, osc_prev, span=1):
    """s with sum_l diam(R(n,l))^s = sum_l diam(R(n-span,l))^s.

    With delta = 2^n diam = sqrt(1 + 4 (2^n O)^2) the equation reads
    s = log2(sum delta_n^s / sum delta_{n-span}^s) / span.
    """
    d_now = np.sqrt(1 + 4 * (osc_now * 2.0 ** n) ** 2)
    d_prev = np.sqrt(1 + 4 * (osc_prev * 2.0 ** (n - span)) ** 2)
    if np.all(d_now == 1) and np.all(d_prev == 1):
        return 1.0
    h = lambda s: s - (_log_sum_pow(d_now, s) - _log_sum_pow(d_prev, s)) / (span * math.log(2))
    lo, hi = 1.0, 2.0
    if h(lo) >= 0:
        return 1.0
    if h(hi) <= 0:
        return 2.0
    return float(brentq(h, lo, hi, xtol=1e-13))


def box_sums(osc, n, s_grid):
    diam = np.sqrt(4.0 ** -n + 4 * osc ** 2)
    logd = np.log(diam)
    return [float(np.exp(np.log(np.exp(s * logd - (s * logd).max()).sum()) + (s * logd).max()))
            for s in s_grid]


def box_dimension_estimate(curve, k, max_level=14, min_level=2, s_grid=None, bound=1.2,
                           monotone_from=8, span=2):
    if max_level > 16:
        raise DomainError("max_level above 16")
    with Timer() as tm:
        fine = max_level + OVERSAMPLE
        cf = core.Coeffs(curve, k)
        _, F = core.dyadic_grid_tree(cf, fine)
        f = math.factorial(k) * F[:, k]
        levels = list(range(max(min_level, 1), max_level + 1))
        osc = {n: oscillations(f, fine, n) for n in range(max(levels[0] - span, 0), max_level + 1)}
        est = {n: critical_s(osc[n], n, osc[n - span], span) for n in levels if n - span in osc}
        s_grid = np.linspace(1.0, 2.0, 11) if s_grid is None else np.asarray(s_grid)
        sums = {str(n): box_sums(osc[n], n, s_grid) for n in levels}
        ns = sorted(est)
        vals = np.array([est[n] for n in ns])
        tail = vals[np.array(ns) >= monotone_from]
        monotone = bool(np.all(np.diff(tail) <= 1e-12))
        ok = vals[-1] <= bound and bool(np.all(vals >= 1 - 1e-12)) and monotone
    fit = {"estimate": float(vals[-1]), "level": int(ns[-1]), "nonincreasing_from": monotone_from,
           "nonincreasing": monotone, "bound": bound}
    details = {"s_grid": s_grid, "box_sums": sums}
    return ExperimentReport(
        "box-dimension",
        {"curve": curve.to_dict(), "k": k, "max_level": max_level, "min_level": min_level,
         "span": span, "bound": bound},
        None, [[int(n), float(est[n])] for n in ns], fit, verdict(ok), bound, tm.ms, [], details)
