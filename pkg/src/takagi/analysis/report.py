"""Experiment reports, fitting helpers and the chunked sample pool."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

PASS = "pass"
FAIL = "fail"
EXPLORATORY = "exploratory"

SAMPLE_CHUNK = 25


def _clean(v):
    """Make numpy scalars/arrays JSON friendly; non-finite floats become None."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


@dataclass
class ExperimentReport:
    experiment: str
    inputs: dict
    seed: int | None
    series: list
    fit: dict
    verdict: str
    tolerance: float
    runtime_ms: float = 0.0
    warnings: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        out = {
            "experiment": self.experiment,
            "inputs": _clean(self.inputs),
            "seed": self.seed,
            "series": [[_clean(n), _clean(v)] for n, v in self.series],
            "fit": _clean(self.fit),
            "verdict": self.verdict,
            "tolerance": _clean(self.tolerance),
            "runtime_ms": round(float(self.runtime_ms), 3),
        }
        if self.warnings:
            out["warnings"] = list(self.warnings)
        if self.details:
            out["details"] = _clean(self.details)
        return out

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False, allow_nan=False)


def load_schema():
    with resources.files("takagi").joinpath("report.schema.json").open() as fh:
        return json.load(fh)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = (time.perf_counter() - self.t0) * 1000.0


def verdict(ok):
    return PASS if ok else FAIL


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.vstack([np.log(x), np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    return float(coef[0]), float(coef[1])


def chunk_rngs(seed, n_items, chunk=SAMPLE_CHUNK):
    """One independent generator per fixed-size chunk, so results do not depend on job count."""
    n_chunks = -(-n_items // chunk)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [(i * chunk, min(chunk, n_items - i * chunk), np.random.Generator(np.random.PCG64(s)))
            for i, s in enumerate(children)]


def pool_map(fn, tasks, jobs=1):
    """Map over tasks in order; processes are used only when jobs > 1."""
    tasks = list(tasks)
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))
