"""Modulus of continuity of f_1 at a point, and law of the iterated logarithm profiles."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import partial

import numpy as np

from .. import core
from ..dyadic import BinaryPoint, parse_point
from ..errors import DomainError
from ..params import check_nd
from .report import EXPLORATORY, ExperimentReport, Timer, chunk_rngs, pool_map, verdict

LOG_FLOOR = 16


def double_gap_point(depth=4096):
    """x whose complement 1 - x has its n-th one-digit at position 2^n."""
    bits = np.ones(depth, dtype=np.uint8)
    p = 2
    while p <= depth:
        bits[p - 1] = 0
        p *= 2
    return BinaryPoint(bits, truncated=True)


def named_point(spec):
    if isinstance(spec, BinaryPoint):
        return spec
    if spec == "double-gap":
        return double_gap_point()
    return parse_point(spec)


def _ratios(positions):
    p = np.asarray(positions, float)
    return p[1:] / p[:-1]


def _ones(bits, count):
    pos = np.flatnonzero(bits) + 1
    return pos[:count]


def modulus_profile(curve, x, n_max=200, window=(100, 200), expect=None, tol=0.05,
                    fluctuation=0.1):
    """Delta_1 F(x, x + h) / log2(1/h) along h = 2^-m and h = 3 2^-(m+1).

    expect: a number (limit expected), "fluctuation", or None (Cauchy test only).
    """
    xp = named_point(x)
    if xp.is_dyadic:
        raise DomainError("modulus_profile needs a non-dyadic point")
    warnings = []
    try:
        if not check_nd(curve).nd_holds:
            warnings.append("(ND) does not hold for this curve")
    except Exception as exc:
        warnings.append(f"(ND) check failed: {exc}")
    with Timer() as tm:
        cf = core.Coeffs(curve, 1)
        ms = np.arange(1, n_max + 1)
        prof = core.PointProfile(cf, xp, n_max + 2)
        d_dy = prof.offsets(ms, +1).delta(1) / ms
        # a non power-of-two offset: h = 3 * 2^-(m+1), so log2(1/h) = m + 1 - log2 3
        inc = []
        for m in ms:
            h = Fraction(3, 1 << int(m + 1))
            try:
                y = xp.add_offset(h)
                inc.append(core.delta_kF(cf, xp, y, 1, K=1) / (m + 1 - math.log2(3)))
            except Exception:
                inc.append(float("nan"))
        inc = np.array(inc)
        z = core.z_from_trajectory(prof.tr, 1)[0, 1: n_max + 1] / ms
        bits = prof.bits
        r_x = _ratios(_ones(bits[: max(n_max, 64) * 4], n_max))
        r_c = _ratios(_ones(1 - bits[: max(n_max, 64) * 4], n_max))
        w = (ms >= window[0]) & (ms <= window[1])
        spread = float(np.nanmax(d_dy[w]) - np.nanmin(d_dy[w]))
        quarter = ms > n_max - n_max // 4
        cauchy = float(np.nanmax(d_dy[quarter]) - np.nanmin(d_dy[quarter]))
        limit = float(np.nanmean(d_dy[quarter]))
        if expect == "fluctuation":
            ok = spread > fluctuation
        elif expect is not None:
            ok = abs(d_dy[-1] - float(expect)) <= tol
        else:
            ok = cauchy <= tol
    fit = {"last": float(d_dy[-1]), "limit_estimate": limit, "cauchy_spread_last_quarter": cauchy,
           "window_spread": spread, "window": list(window), "z_over_n_last": float(z[-1]),
           "expect": expect, "limit_exists": cauchy <= tol}
    details = {
        "offset_3_2^-(m+1)": [[int(m), float(v)] for m, v in zip(ms, inc)],
        "z_over_n": [[int(m), float(v)] for m, v in zip(ms, z)],
        "ones_ratio_x": r_x[-5:], "ones_ratio_1_minus_x": r_c[-5:],
    }
    return ExperimentReport(
        "modulus",
        {"curve": curve.to_dict(), "x": x if isinstance(x, str) else str(x), "n_max": n_max,
         "window": list(window), "expect": expect},
        None, [[int(m), float(v)] for m, v in zip(ms, d_dy)], fit, verdict(ok), tol, tm.ms,
        warnings, details)


def lil_normalizer(I):
    I = np.maximum(I, float(LOG_FLOOR))
    return np.sqrt(2 * I * np.log(np.log(I)))


def _lil_chunk(args, curve, k, depth, with_delta):
    start, n, rng = args
    cf = core.Coeffs(curve, max(k, 1))
    bits = core.sample_mu0_bits(curve.point, depth, rng, n)
    tr = core.trajectory(cf, bits)
    Z = core.z_from_trajectory(tr, k)[:, 1:]
    I = np.cumsum(core.conditional_variance(tr), axis=1)
    idx = np.arange(1, depth + 1)
    use = idx >= LOG_FLOOR
    norm = lil_normalizer(I)
    S = Z / norm
    sup = S[:, use].max(axis=1)
    inf = S[:, use].min(axis=1)
    sup_all = Z.max(axis=1)
    inf_all = Z.min(axis=1)
    dsup = np.full(n, np.nan)
    dinf = np.full(n, np.nan)
    if with_delta:
        ns = np.arange(LOG_FLOOR, depth - cf.window() - 1)
        for i in range(n):
            prof = core.PointProfile(cf, BinaryPoint(bits[i], truncated=True), int(ns.max()))
            r = prof.offsets(ns, +1).delta(k)
            l = prof.offsets(ns, -1).delta(k)
            lg = np.log(np.log(ns.astype(float)))
            nrm = np.sqrt(ns * lg)
            dsup[i] = np.nanmax(np.fmax(r, l) / nrm)
            dinf[i] = np.nanmin(np.fmin(r, l) / nrm)
    return sup, inf, sup_all, inf_all, dsup, dinf


def lil_profile(curve, k=1, n_samples=200, depth=4096, seed=0, jobs=1, bracket=(0.85, 1.15),
                delta_samples=0):
    warnings = []
    if k >= 2:
        warnings.append("k >= 2: the iterated logarithm law is not established; verdict is exploratory")
    with Timer() as tm:
        chunks = chunk_rngs(seed, n_samples)
        parts = []
        for c in chunks:
            parts.append(c)
        fn = partial(_lil_chunk, curve=curve, k=k, depth=depth, with_delta=False)
        res = pool_map(fn, parts, jobs)
        sup = np.concatenate([r[0] for r in res])
        inf = np.concatenate([r[1] for r in res])
        sup_all = np.concatenate([r[2] for r in res])
        inf_all = np.concatenate([r[3] for r in res])
        med = float(np.median(sup))
        med_inf = float(np.median(inf))
        opposite = (sup > 0) & (inf < 0)
        if curve.is_constant():
            ok = bool(np.all(sup == 0) and np.all(inf == 0))
        else:
            ok = bracket[0] <= med <= bracket[1] and bool(opposite.all())
        dstats = {}
        if delta_samples:
            fn = partial(_lil_chunk, curve=curve, k=k, depth=depth, with_delta=True)
            dres = pool_map(fn, chunk_rngs(seed + 1, delta_samples), jobs)
            dstats = {"delta_sup": np.concatenate([r[4] for r in dres]),
                      "delta_inf": np.concatenate([r[5] for r in dres])}
    fit = {"median_sup": med, "median_inf": med_inf, "bracket": list(bracket),
           "opposite_signs": int(opposite.sum()), "samples": int(n_samples),
           "same_sign_samples": [int(i) for i in np.flatnonzero(~opposite)],
           "opposite_signs_from_n1": int(((sup_all > 0) & (inf_all < 0)).sum())}
    details = {"inf": inf, "normalizer": "sqrt(2 I_n log log I_n), I_n = sum of conditional "
               "variances of Y_i, n >= 16", **dstats}
    v = EXPLORATORY if k >= 2 else verdict(ok)
    return ExperimentReport(
        "lil",
        {"curve": curve.to_dict(), "k": k, "n_samples": n_samples, "depth": depth,
         "bracket": list(bracket), "delta_samples": delta_samples},
        seed, [[i, float(v_)] for i, v_ in enumerate(sup)], fit, v, bracket[1] - bracket[0],
        tm.ms, warnings, details)
