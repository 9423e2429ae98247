"""Desk-scale experiments on the f_k family, each returning an ExperimentReport."""
from __future__ import annotations

import inspect

from ..errors import InvalidInput
from .dimension import box_dimension_estimate, critical_s, oscillations
from .exponents import decay_exponent, decay_samples, holder_probe
from .limits import d2_case, d2_holder_check, dyadic_limit_check, limit_constants, residual_decay
from .modulus import double_gap_point, lil_normalizer, lil_profile, modulus_profile
from .report import (EXPLORATORY, FAIL, PASS, ExperimentReport, chunk_rngs, load_schema,
                     pool_map)
from .variation import mtni_probe, quotient_extremes, variation_direct, variation_expectation, \
    variation_profile

EXPERIMENTS = {
    "dyadic-limit": dyadic_limit_check,
    "d2-holder": d2_holder_check,
    "box-dimension": box_dimension_estimate,
    "decay-exponent": decay_exponent,
    "variation": variation_profile,
    "mtni": mtni_probe,
    "modulus": modulus_profile,
    "lil": lil_profile,
    "holder": holder_probe,
}


def run_experiment(name, curve, params=None, seed=0, jobs=1, tol=None) -> ExperimentReport:
    """Dispatch by experiment name; seed, jobs and tol are passed where the experiment takes them."""
    if name not in EXPERIMENTS:
        raise InvalidInput(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    fn = EXPERIMENTS[name]
    accepted = inspect.signature(fn).parameters
    kw = dict(params or {})
    unknown = sorted(set(kw) - set(accepted))
    if unknown:
        raise InvalidInput(f"experiment {name!r} does not take parameters {unknown}")
    if "seed" in accepted:
        kw.setdefault("seed", seed)
    if "jobs" in accepted:
        kw["jobs"] = jobs
    if tol is not None and "tol" in accepted:
        kw["tol"] = tol
    return fn(curve, **kw)


__all__ = [
    "EXPERIMENTS", "EXPLORATORY", "FAIL", "PASS", "ExperimentReport", "box_dimension_estimate",
    "chunk_rngs", "critical_s", "d2_case", "d2_holder_check", "decay_exponent", "decay_samples",
    "double_gap_point", "dyadic_limit_check", "holder_probe", "limit_constants", "lil_normalizer",
    "lil_profile", "load_schema", "modulus_profile", "mtni_probe", "oscillations", "pool_map",
    "quotient_extremes", "residual_decay", "run_experiment", "variation_direct",
    "variation_expectation", "variation_profile",
]
