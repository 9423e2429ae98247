"""Decay exponents of cylinder masses and Hoelder-type ratio probes."""
from __future__ import annotations

from functools import partial

import numpy as np

from .. import core
from ..dyadic import BinaryPoint
from ..params import CurvePoint, Measure, ParamCurve, classify
from .report import ExperimentReport, Timer, chunk_rngs, pool_map, verdict

SAMPLERS = ("lebesgue", "mu0")


def draw_bits(point, sampler, depth, rng, n):
    if sampler == "lebesgue":
        return core.lebesgue_bits(depth, rng, n)
    if sampler == "mu0":
        return core.sample_mu0_bits(point, depth, rng, n)
    raise ValueError(f"unknown sampler {sampler!r}")


def _decay_chunk(args, point, sampler, depth):
    start, n, rng = args
    bits = draw_bits(point, sampler, depth, rng, n)
    cf = core.Coeffs(point, 0)
    # only the log-mass is needed; a K=0 trajectory is cheap
    tr = core.trajectory(cf, bits)
    return -tr.e[:, depth] / depth


def decay_samples(point, sampler, depth, n_samples, seed, jobs=1):
    fn = partial(_decay_chunk, point=point, sampler=sampler, depth=depth)
    parts = pool_map(fn, chunk_rngs(seed, n_samples), jobs)
    return np.concatenate(parts)


def decay_exponent(point, sampler="lebesgue", depth=4096, n_samples=200, seed=0, jobs=1,
                   expected=None, tol=0.01):
    if isinstance(point, ParamCurve):
        point = point.point
    with Timer() as tm:
        ex = decay_samples(point, sampler, depth, n_samples, seed, jobs)
        mean, std = float(ex.mean()), float(ex.std(ddof=1)) if ex.size > 1 else 0.0
        if expected is not None:
            ok = abs(mean - expected) <= tol
        elif classify(point) is Measure.ABSOLUTELY_CONTINUOUS:
            ok = abs(mean - 1) <= tol
        else:
            ok = mean > 1 if sampler == "lebesgue" else mean < 1
    fit = {"mean": mean, "std": std, "stderr": std / np.sqrt(ex.size), "expected": expected,
           "measure": classify(point).value}
    return ExperimentReport(
        "decay-exponent",
        {"point": list(point.triple), "sampler": sampler, "depth": depth, "n_samples": n_samples,
         "expected": expected},
        seed, [[i, float(v)] for i, v in enumerate(ex)], fit, verdict(ok), tol, tm.ms)


def _holder_chunk(args, curve, sampler, k, n_max, c):
    start, n, rng = args
    cf = core.Coeffs(curve, k)
    depth = n_max + cf.window() + 8
    bits = draw_bits(curve.point, sampler, depth, rng, n)
    ns = np.arange(1, n_max + 1)
    out = np.empty(n)
    for i in range(n):
        prof = core.PointProfile(cf, BinaryPoint(bits[i], truncated=True), n_max)
        r = prof.offsets(ns, +1).log2_abs_diff(k)
        l = prof.offsets(ns, -1).log2_abs_diff(k)
        best = np.fmax(r, l) + c * ns
        out[i] = np.nanmax(best)
    return out


def holder_probe(curve, k=1, sampler="lebesgue", c=None, n_max=1000, n_samples=100, seed=0,
                 jobs=1, expect="bounded", threshold=1e3, fraction=0.9):
    """max over n <= n_max of |f_k(x +- 2^-n) - f_k(x)| 2^{cn} for sampled x.

    expect="bounded": every sample stays below threshold.
    expect="divergent": at least `fraction` of the samples exceed it.
    """
    if c is None:
        c = 1.0 if classify(curve.point) is Measure.ABSOLUTELY_CONTINUOUS else (
            float(decay_samples(curve.point, sampler, 4096, 200, seed, jobs).mean()))
    with Timer() as tm:
        fn = partial(_holder_chunk, curve=curve, sampler=sampler, k=k, n_max=n_max, c=c)
        log2max = np.concatenate(pool_map(fn, chunk_rngs(seed, n_samples), jobs))
        lt = np.log2(threshold)
        above = float(np.mean(log2max > lt))
        ok = bool(np.all(log2max <= lt)) if expect == "bounded" else above >= fraction
    fit = {"c": c, "log2_max_ratio_median": float(np.median(log2max)),
           "log2_max_ratio_max": float(log2max.max()), "fraction_above_threshold": above}
    return ExperimentReport(
        "holder",
        {"curve": curve.to_dict(), "k": k, "sampler": sampler, "c": c, "n_max": n_max,
         "n_samples": n_samples, "expect": expect, "threshold": threshold},
        seed, [[i, float(v)] for i, v in enumerate(log2max)], fit, verdict(ok), threshold, tm.ms,
        [], {"series_meaning": "log2 of max_n ratio per sample"})
