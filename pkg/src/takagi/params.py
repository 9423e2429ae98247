"""Parameter points (b1, c0, c1), matrix pairs, duals and parametrized curves."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import jets
from .errors import InconsistencyError, InvalidInput, ValidationError, DomainError

AC_TOL = 1e-12


@dataclass(frozen=True)
class ValidationReport:
    b1_range: bool
    c0_range: bool
    c1_range: bool
    ass_first: bool
    ass_second: bool

    @property
    def cond(self):
        return self.b1_range and self.c0_range and self.c1_range

    @property
    def ass(self):
        return self.ass_first or self.ass_second

    @property
    def valid(self):
        return self.cond and self.ass

    def failures(self):
        out = [name for name in ("b1_range", "c0_range", "c1_range") if not getattr(self, name)]
        if not self.ass:
            out.append("ass")
        return out

    def as_dict(self):
        return {
            "b1 in (0,1)": self.b1_range,
            "c0 in (b1-1, 1/b1-1)": self.c0_range,
            "c1 in (-b1, b1/(1-b1))": self.c1_range,
            "(1+c1)(1-b1(1+c0))^2 < 1-b1": self.ass_first,
            "(b1+c1)^2 < b1(1+c0)(1+c1)": self.ass_second,
            "valid": self.valid,
        }


def validate(b1, c0=None, c1=None) -> ValidationReport:
    """Check (Cond) and both disjuncts of (Ass)."""
    if c0 is None:
        b1, c0, c1 = b1.b1, b1.c0, b1.c1
    vals = [float(v) for v in (b1, c0, c1)]
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInput(f"non-finite parameter in {vals}")
    b1, c0, c1 = vals
    ok_b = 0.0 < b1 < 1.0
    if ok_b:
        ok_c0 = b1 - 1.0 < c0 < 1.0 / b1 - 1.0
        ok_c1 = -b1 < c1 < b1 / (1.0 - b1)
    else:
        ok_c0 = ok_c1 = False
    ass1 = (1 + c1) * (1 - b1 * (1 + c0)) ** 2 < 1 - b1
    ass2 = (b1 + c1) ** 2 < b1 * (1 + c0) * (1 + c1)
    return ValidationReport(ok_b, ok_c0, ok_c1, ass1, ass2)


class Measure(enum.Enum):
    ABSOLUTELY_CONTINUOUS = "absolutely-continuous"
    SINGULAR = "singular"


@dataclass(frozen=True)
class MatrixPair:
    A0: np.ndarray
    A1: np.ndarray

    def phi(self, i, z):
        (a, b), (c, d) = (self.A0, self.A1)[i]
        return (a * z + b) / (c * z + d)


@dataclass(frozen=True)
class CurvePoint:
    b1: float
    c0: float
    c1: float
    force: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("b1", "c0", "c1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        rep = validate(self.b1, self.c0, self.c1)
        if not rep.valid:
            # (Cond) is needed for the recursion to make sense at all
            if not self.force or not rep.cond:
                raise ValidationError(
                    f"point ({self.b1}, {self.c0}, {self.c1}) fails {', '.join(rep.failures())}", rep)

    @property
    def triple(self):
        return (self.b1, self.c0, self.c1)

    def report(self):
        return validate(self.b1, self.c0, self.c1)

    def matrices(self):
        return matrices(self)

    def dual(self):
        return dual(self)

    def alpha_beta(self):
        return alpha_beta(self)

    def classify(self):
        return classify(self)


def matrices(p: CurvePoint) -> MatrixPair:
    b1, c0, c1 = p.triple
    A0 = np.array([[b1 * (c0 + 1), 0.0], [c0, 1.0]])
    A1 = np.array([[1 - b1 + c1, b1], [c1, 1.0]])
    return MatrixPair(A0, A1)


def dual_triple(b1, c0, c1):
    return (1 - b1, -c1 / (1 + c1), -c0 / (1 + c0))


def dual(p: CurvePoint) -> CurvePoint:
    # (Cond) is preserved by duality but (Ass) as written is not, so only (Cond) is enforced
    return CurvePoint(*dual_triple(*p.triple), force=True)


def alpha_beta(p):
    b1, c0, c1 = p.triple if hasattr(p, "triple") else p
    cands = (0.0, c0 / (1 - b1 * (c0 + 1)), c1 / b1)
    return min(cands), max(cands)


def classify(p: CurvePoint) -> Measure:
    b1, c0, c1 = p.triple
    if abs(c0 - (0.5 / b1 - 1)) <= AC_TOL and abs(c1 - (1 - 2 * b1)) <= AC_TOL:
        return Measure.ABSOLUTELY_CONTINUOUS
    return Measure.SINGULAR


def p_bounds(p):
    """Smallest and largest possible H_n(0, .) over the invariant interval."""
    b1 = p.b1
    a, b = alpha_beta(p)
    p0 = lambda y: b1 * (y + 1) / (b1 * y + 1)
    # p0 is increasing in y, so P ranges over [p0(a), p0(b)]
    lo = min(p0(a), 1 - p0(b))
    hi = max(p0(b), 1 - p0(a))
    return lo, hi


class ParamCurve:
    """Taylor jets at t=0 of (b1(t), c0(t), c1(t)).

    The coefficient vectors are also read as a polynomial in t, which is
    what ``at`` evaluates and what the sampled validity check uses.
    """

    def __init__(self, b1, c0, c1, order=None, half_width=0.01, force=False, check=True):
        arrs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in (b1, c0, c1)]
        if order is None:
            order = max(a.size for a in arrs) - 1
        order = int(order)
        if not 0 <= order <= jets.MAX_ORDER:
            raise InvalidInput(f"order must be in 0..{jets.MAX_ORDER}")
        out = []
        for a in arrs:
            if a.size > order + 1 and np.any(a[order + 1:] != 0):
                raise InvalidInput("coefficient vector longer than the declared order")
            v = np.zeros(order + 1)
            v[: min(a.size, order + 1)] = a[: order + 1]
            v.setflags(write=False)
            out.append(v)
        self.b1, self.c0, self.c1 = out
        self.order = order
        self.half_width = float(half_width)
        self.force = bool(force)
        if not self.half_width > 0:
            raise InvalidInput("half_width must be positive")
        self.point = CurvePoint(self.b1[0], self.c0[0], self.c1[0], force=force)
        if check:
            for t in (-self.half_width, -self.half_width / 2, self.half_width / 2, self.half_width):
                rep = validate(*self.triple_at(t))
                if not (rep.valid or (force and rep.cond)):
                    raise ValidationError(f"curve leaves the parameter region at t={t}", rep)

    @classmethod
    def constant(cls, b1, c0=0.0, c1=0.0, order=2, **kw):
        return cls([b1], [c0], [c1], order=order, **kw)

    @classmethod
    def linear(cls, point, slope, order=2, **kw):
        b1, c0, c1 = point.triple if isinstance(point, CurvePoint) else point
        return cls([b1, slope[0]], [c0, slope[1]], [c1, slope[2]], order=order, **kw)

    def triple_at(self, t):
        return tuple(float(jets.compose_poly(v, t)) for v in (self.b1, self.c0, self.c1))

    def at(self, t, force=None) -> CurvePoint:
        return CurvePoint(*self.triple_at(t), force=self.force if force is None else force)

    def jets(self, K=None):
        """Stacked (3, K+1) array of Taylor coefficients."""
        K = self.order if K is None else K
        if K > self.order:
            raise DomainError(f"order {K} requested from a curve of order {self.order}")
        return np.stack([self.b1[: K + 1], self.c0[: K + 1], self.c1[: K + 1]])

    def truncated(self, K):
        if K > self.order:
            raise DomainError(f"order {K} requested from a curve of order {self.order}")
        return ParamCurve(self.b1[: K + 1], self.c0[: K + 1], self.c1[: K + 1], order=K,
                          half_width=self.half_width, force=self.force, check=False)

    def reparametrized(self, scale):
        """The curve t -> curve(scale * t)."""
        f = float(scale) ** np.arange(self.order + 1)
        return ParamCurve(self.b1 * f, self.c0 * f, self.c1 * f, order=self.order,
                          half_width=self.half_width / abs(scale), force=self.force)

    def rebased(self, t0):
        """Taylor expansion of the polynomial curve about t0."""
        K = self.order
        out = []
        for v in (self.b1, self.c0, self.c1):
            poly = np.polynomial.Polynomial(v)
            coeffs = []
            for k in range(K + 1):
                coeffs.append(poly(t0) / math.factorial(k))
                poly = poly.deriv()
            out.append(coeffs)
        return ParamCurve(*out, order=K, half_width=self.half_width, force=self.force)

    def dual(self):
        b1, c0, c1 = self.jets()
        one = jets.const(1.0, self.order)
        db1 = one - b1
        dc0 = -jets.div(c1, one + c1)
        dc1 = -jets.div(c0, one + c0)
        return ParamCurve(db1, dc0, dc1, order=self.order, half_width=self.half_width,
                          force=True, check=False)

    def is_lebesgue_type(self, tol=0.0):
        """c0(t) = c1(t) = 0 identically (the Lebesgue singular function family)."""
        return bool(np.all(np.abs(self.c0) <= tol) and np.all(np.abs(self.c1) <= tol))

    def is_constant(self):
        return bool(np.all(self.b1[1:] == 0) and np.all(self.c0[1:] == 0) and np.all(self.c1[1:] == 0))

    def to_dict(self):
        return {
            "b1": self.b1.tolist(),
            "c0": self.c0.tolist(),
            "c1": self.c1.tolist(),
            "order": self.order,
            "half_width": self.half_width,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d, force=False):
        try:
            return cls(d["b1"], d["c0"], d["c1"], order=d.get("order"),
                       half_width=d.get("half_width", 0.01), force=force)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed curve object: {exc}") from exc

    @classmethod
    def from_json(cls, text, force=False):
        return cls.from_dict(json.loads(text), force=force)

    def __eq__(self, other):
        return (isinstance(other, ParamCurve) and self.order == other.order
                and all(np.array_equal(a, b) for a, b in zip(self.jets(), other.jets()))
                and self.half_width == other.half_width)

    def __repr__(self):
        return (f"ParamCurve(b1={self.b1.tolist()}, c0={self.c0.tolist()}, "
                f"c1={self.c1.tolist()}, order={self.order})")


# -- non-degeneracy ---------------------------------------------------------

@dataclass(frozen=True)
class NDReport:
    delta0: float | None
    delta1: float | None
    delta0_dual: float | None
    delta1_dual: float | None
    nd1_holds: bool
    nd2_holds: bool

    @property
    def nd_holds(self):
        return self.nd1_holds or self.nd2_holds


def _g_parts(trip_jets, y):
    """∂_t G_i(0, y) and ∂_y G_i(0, y) for i = 0, 1 on a grid of y."""
    b1, c0, c1 = trip_jets
    y = np.asarray(y, dtype=float)
    K = b1.shape[-1] - 1
    Y = jets.const(1.0, K, y.shape) * y[..., None]
    one = jets.const(1.0, K)
    g0 = jets.mul(jets.mul(b1, one + c0)[None, :] * np.ones_like(Y), Y) + c0
    num = jets.mul(np.broadcast_to(one - b1 + c1, Y.shape), Y) + c1
    den = jets.mul(np.broadcast_to(b1, Y.shape), Y) + one
    g1 = jets.div(num, den)
    b, q0, q1 = b1[0], c0[0], c1[0]
    dy0 = np.full(y.shape, b * (1 + q0))
    dy1 = (1 - b) * (1 + q1) / (b * y + 1) ** 2
    return (g0[..., 1], dy0), (g1[..., 1], dy1)


def _extremize(fun, lo, hi, sign, npts=1025):
    """sign=+1 for min, -1 for max of fun over [lo, hi]."""
    if hi - lo <= 0:
        return float(fun(np.array([lo]))[0])
    ys = np.linspace(lo, hi, npts)
    vals = sign * fun(ys)
    i = int(np.argmin(vals))
    best = vals[i]
    a, b = ys[max(i - 1, 0)], ys[min(i + 1, npts - 1)]
    if b > a:
        res = minimize_scalar(lambda y: sign * float(fun(np.array([y]))[0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun < best:
            best = res.fun
    return float(sign * best)


def _deltas(curve, sign):
    trip = curve.jets(1) if curve.order >= 1 else np.concatenate(
        [curve.jets(0), np.zeros((3, 1))], axis=1)
    lo, hi = alpha_beta(curve.point)
    b, q1 = curve.point.b1, curve.point.c1

    def ratio(i):
        def f(y):
            parts = _g_parts(trip, y)[i]
            return parts[0] / (1 - parts[1])
        return f

    d0 = _extremize(ratio(0), lo, hi, sign)
    # 1 - ∂_y G_1 vanishes where (b y + 1)^2 = (1 - b)(1 + c1)
    root = (math.sqrt((1 - b) * (1 + q1)) - 1) / b
    if lo <= root <= hi:
        d1 = None
    else:
        d1 = _extremize(ratio(1), lo, hi, sign)
    return d0, d1, lo


def check_nd(curve: ParamCurve) -> NDReport:
    d0, d1, alpha = _deltas(curve, +1)
    dual = curve.dual()
    e0, e1, alpha_t = _deltas(dual, -1)
    if d1 is None and e1 is None:
        raise InconsistencyError("neither delta_1 nor its dual counterpart is defined")
    b = curve.point.b1
    db = curve.b1[1] if curve.order >= 1 else 0.0
    nd1 = d1 is not None and db * (alpha + 1) + b * (1 - b) * min(0.0, d0, d1) > 0
    bt = dual.point.b1
    dbt = dual.b1[1] if dual.order >= 1 else 0.0
    nd2 = e1 is not None and dbt * (alpha_t + 1) + bt * (1 - bt) * max(0.0, e0, e1) < 0
    return NDReport(d0, d1, e0, e1, bool(nd1), bool(nd2))
