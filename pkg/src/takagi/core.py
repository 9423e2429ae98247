"""Evaluation of F(t, x) and its t-jets through the cylinder recursion.

Everything is batched: digit arrays have shape (B, N) and jets (B, K+1).
Cylinder masses are carried as a normalized mantissa jet (constant term 1)
together with log2 of the constant term, so depths of several thousand
digits never underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import jets
from .dyadic import BinaryPoint, first_disagreement
from .errors import (DomainError, EqualInputs, ExhaustedError, InstabilityError,
                     InvalidInput, PrecisionExhausted, SingularDivision)
from .params import CurvePoint, ParamCurve, alpha_beta, p_bounds

HARD_CAP = 4096
SAFETY = 10.0
TAIL_REL = 2.0 ** -64
_EPS_BASIC = 1e-9


class Coeffs:
    """Jets of the matrix entries of a curve, truncated at order K."""

    def __init__(self, curve, K=None):
        if isinstance(curve, CurvePoint):
            curve = ParamCurve.constant(*curve.triple, order=0 if K is None else K,
                                        force=curve.force, check=False)
        K = curve.order if K is None else K
        if K > curve.order:
            raise DomainError(f"order {K} requested from a curve of order {curve.order}")
        if K > jets.MAX_ORDER:
            raise DomainError(f"order {K} exceeds {jets.MAX_ORDER}")
        self.curve = curve
        self.K = K
        self.point = curve.point
        b1, c0, c1 = curve.jets(K)
        one = jets.const(1.0, K)
        self.one = one
        self.b1, self.c0, self.c1 = b1, c0, c1
        self.a0 = jets.mul(b1, one + c0)
        self.a1 = one - b1 + c1
        self.alpha, self.beta = alpha_beta(curve.point)
        self.pmin, self.pmax = p_bounds(curve.point)

    def window(self, rel=TAIL_REL):
        """Digits after which the remaining relative mass is below rel, with the n^K envelope."""
        p = self.pmax
        N = 1
        while p ** N * (1 + N ** self.K * SAFETY) >= rel:
            N += 1
            if N > HARD_CAP:
                break
        return N

    def p0(self, g):
        den = jets.mul(np.broadcast_to(self.b1, g.shape), g) + self.one
        P = jets.div(jets.mul(np.broadcast_to(self.b1, g.shape), g + self.one), den)
        return P, den

    def step(self, g, bits):
        """One digit: returns (g_next, H, P) with P = p0(g) and H = p_bit(g)."""
        P, den = self.p0(g)
        g0 = jets.mul(np.broadcast_to(self.a0, g.shape), g) + self.c0
        g1 = jets.div(jets.mul(np.broadcast_to(self.a1, g.shape), g) + self.c1, den)
        b = np.asarray(bits, dtype=bool)[..., None]
        H = np.where(b, _one_minus(P), P)
        return np.where(b, g1, g0), H, P

    def check(self, g, H, n):
        g0 = g[..., 0]
        if np.any(g0 < self.alpha - _EPS_BASIC) or np.any(g0 > self.beta + _EPS_BASIC):
            raise InstabilityError(f"g left [alpha, beta] at step {n}", step=n)
        h0 = H[..., 0]
        if np.any(h0 <= 0) or np.any(h0 >= 1) or not np.all(np.isfinite(h0)):
            raise InstabilityError(f"H left (0, 1) at step {n}", step=n)


def _normalize(m, e):
    c = m[..., 0].copy()
    m = m / c[..., None]
    m[..., 0] = 1.0
    return m, e + np.log2(c)


@dataclass
class Trajectory:
    """States along digit rows: index n holds g_n, P_n, m_n, e_n (n = 0..N)."""

    bits: np.ndarray
    g: np.ndarray
    P: np.ndarray
    m: np.ndarray
    e: np.ndarray

    @property
    def N(self):
        return self.bits.shape[-1]

    def H(self):
        b = self.bits.astype(bool)[..., None]
        P = self.P[:, :-1]
        return np.where(b, _one_minus(P), P)


def trajectory(cf: Coeffs, bits, check=True) -> Trajectory:
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    B, N = bits.shape
    K = cf.K
    g = np.zeros((B, N + 1, K + 1))
    P = np.zeros((B, N + 1, K + 1))
    m = np.zeros((B, N + 1, K + 1))
    e = np.zeros((B, N + 1))
    gc = jets.const(0.0, K, (B,))
    mc = jets.const(1.0, K, (B,))
    ec = np.zeros(B)
    m[:, 0] = mc
    for n in range(N):
        gn, H, Pn = cf.step(gc, bits[:, n])
        if check:
            cf.check(gc, H, n)
        g[:, n] = gc
        P[:, n] = Pn
        mc, ec = _normalize(jets.mul(mc, H), ec)
        gc = gn
        m[:, n + 1] = mc
        e[:, n + 1] = ec
    g[:, N] = gc
    P[:, N] = cf.p0(gc)[0]
    return Trajectory(bits, g, P, m, e)


# -- relative sums ------------------------------------------------------------

@dataclass
class Scaled:
    """A batch of jets v * 2**s (s = -inf marks an exact zero)."""

    v: np.ndarray
    s: np.ndarray

    def value(self):
        with np.errstate(under="ignore"):
            return self.v * np.exp2(self.s)[..., None]


def _add_scaled(a: Scaled, b: Scaled) -> Scaled:
    s = np.maximum(a.s, b.s)
    fin = np.isfinite(s)
    sa = np.where(fin, a.s - np.where(fin, s, 0), -np.inf)
    sb = np.where(fin, b.s - np.where(fin, s, 0), -np.inf)
    with np.errstate(under="ignore"):
        v = a.v * np.exp2(sa)[..., None] + b.v * np.exp2(sb)[..., None]
    return Scaled(v, np.where(fin, s, -np.inf))


def _scale_jet(j: Scaled, factor):
    return Scaled(jets.mul(j.v, factor), j.s)


def walk(cf: Coeffs, g_start, digits, steps, zero_tail):
    """Forward relative sums from a state.

    For each row, from the state g_start the digits digits[r, :steps[r]] are
    read.  Returns Scaled U, V, R and the bound on the relative error of the
    open tails, where U (resp. V) is the relative mass of the part of the
    cylinder left (resp. right) of the point and R the mass of the last
    sub-cylinder.  Rows with zero_tail continue with zeros forever, so their
    tail is exact (U gains nothing, V gains all of R).
    """
    g = np.array(g_start, dtype=float)
    Bn, K1 = g.shape
    steps = np.asarray(steps, dtype=np.int64)
    J = int(steps.max()) if steps.size else 0
    one = jets.const(1.0, K1 - 1, (Bn,))
    prod = one.copy()
    pe = np.zeros(Bn)
    U = Scaled(np.zeros((Bn, K1)), np.full(Bn, -np.inf))
    V = Scaled(np.zeros((Bn, K1)), np.full(Bn, -np.inf))
    for j in range(J):
        act = steps > j
        if not act.any():
            break
        bits = digits[:, j]
        gn, H, P = cf.step(g, bits)
        b = bits.astype(bool) & act
        z = (~bits.astype(bool)) & act
        termU = Scaled(jets.mul(P, prod), np.where(b, pe, -np.inf))
        termV = Scaled(jets.mul(_one_minus(P), prod), np.where(z, pe, -np.inf))
        U = _add_scaled(U, termU)
        V = _add_scaled(V, termV)
        newprod, newpe = _normalize(jets.mul(prod, H), pe)
        a = act[:, None]
        prod = np.where(a, newprod, prod)
        pe = np.where(act, newpe, pe)
        g = np.where(a, gn, g)
    R = Scaled(prod, pe)
    zt = np.asarray(zero_tail, dtype=bool) & np.ones(Bn, dtype=bool)
    half = Scaled(prod * 0.5, np.where(zt, -np.inf, pe))
    U = _add_scaled(U, half)
    V = _add_scaled(V, Scaled(np.where(zt[:, None], prod, prod * 0.5), pe))
    bound = np.where(zt, 0.0, np.exp2(pe) * (1 + np.maximum(steps, 1) ** (K1 - 1) * SAFETY))
    return U, V, R, bound


def backward_sums(cf: Coeffs, tr: Trajectory, zero_tail):
    """U_n and W_n = 1 - U_n along each trajectory row, as Scaled arrays (B, N+1).

    U_n is the relative mass left of x inside its level-n cylinder, W_n the
    mass right of it.  Both recursions only add positive terms.
    """
    B, N = tr.bits.shape
    K1 = cf.K + 1
    zt = np.asarray(zero_tail, dtype=bool) & np.ones(B, dtype=bool)
    Uv = np.zeros((B, N + 1, K1))
    Us = np.full((B, N + 1), -np.inf)
    Wv = np.zeros((B, N + 1, K1))
    Ws = np.zeros((B, N + 1))
    Uv[:, N, 0] = np.where(zt, 0.0, 0.5)
    Us[:, N] = np.where(zt, -np.inf, 0.0)
    Wv[:, N, 0] = np.where(zt, 1.0, 0.5)
    H = tr.H()
    for n in range(N - 1, -1, -1):
        x = tr.bits[:, n].astype(bool)
        P = tr.P[:, n]
        Hn = H[:, n]
        # U_n = X P + H U_{n+1}
        u = _scale_jet(Scaled(Uv[:, n + 1], Us[:, n + 1]), Hn)
        u = _add_scaled(u, Scaled(P, np.where(x, 0.0, -np.inf)))
        nz = np.isfinite(u.s)
        vv, ss = _normalize(np.where(nz[:, None], u.v, 1.0), np.where(nz, u.s, 0.0))
        Uv[:, n] = np.where(nz[:, None], vv, 0.0)
        Us[:, n] = np.where(nz, ss, -np.inf)
        # W_n = (1 - X)(1 - P) + H W_{n+1}
        w = _scale_jet(Scaled(Wv[:, n + 1], Ws[:, n + 1]), Hn)
        w = _add_scaled(w, Scaled(_one_minus(P), np.where(x, -np.inf, 0.0)))
        Wv[:, n], Ws[:, n] = _normalize(w.v, w.s)
    return Scaled(Uv, Us), Scaled(Wv, Ws)


def _one_minus(P):
    Q = -P
    Q[..., 0] += 1.0
    return Q


# -- increments at offsets ------------------------------------------------------

@dataclass
class Increment:
    """F(y) - F(x) for a batch of pairs, as the jet mant * 2**log2scale.

    ``sign`` is +1 when y > x.  ``ratio[..., k]`` is Delta_k F / k! in
    Taylor form, i.e. Delta_k F = k! * ratio[k].
    """

    mant: np.ndarray
    log2scale: np.ndarray
    sign: np.ndarray
    level: np.ndarray
    bound: np.ndarray

    def delta(self, k):
        return math.factorial(k) * self.mant[..., k] / self.mant[..., 0]

    def log2_abs_diff(self, k):
        """log2 |f_k(y) - f_k(x)|."""
        with np.errstate(divide="ignore"):
            return np.log2(math.factorial(k) * np.abs(self.mant[..., k])) + self.log2scale

    def diff(self, k):
        with np.errstate(under="ignore", over="ignore"):
            return self.sign * math.factorial(k) * self.mant[..., k] * np.exp2(self.log2scale)


def _digit_source(x: BinaryPoint, need):
    """Digits of x with enough room, plus (dyadic level or None, usable length)."""
    if x.truncated:
        d = x.prefix.copy()
        return d, None, d.size
    if x.is_dyadic:
        q = x.level
        d = np.zeros(max(need, q), dtype=np.uint8)
        d[:q] = x.prefix
        return d, q, d.size
    d = x.digits(need)
    return d, None, d.size


class PointProfile:
    """Precomputed trajectory of a single point x for offset probes x +- 2^-n."""

    def __init__(self, cf: Coeffs, x: BinaryPoint, n_max, window=None):
        self.cf = cf
        self.x = x
        T = cf.window() if window is None else window
        self.T = T
        bits, q, avail = _digit_source(x, n_max + T + 1)
        self.q = q
        if x.truncated and avail < n_max:
            raise ExhaustedError("truncated point has fewer digits than requested offsets")
        self.bits = bits
        self.avail = avail
        self.n_max = n_max
        N = min(avail, n_max + T) if q is None else max(q, n_max)
        self.tr = trajectory(cf, bits[None, :N])
        zt = q is not None
        self.Usum, self.Wsum = backward_sums(cf, self.tr, zt)
        self.zero_tail = zt

    def _rows(self, ns, side):
        ns = np.asarray(ns, dtype=np.int64)
        bits = self.bits
        target = 0 if side > 0 else 1
        # positions (1-based) of the last target digit at or before n
        pos = np.where(bits[: self.n_max] == target, np.arange(1, self.n_max + 1), 0)
        last = np.maximum.accumulate(pos)
        ls = np.where(ns >= 1, last[np.clip(ns - 1, 0, self.n_max - 1)], 0)
        return ns, ls

    def offsets(self, ns, side=+1) -> Increment:
        """F(x + side 2^-n) - F(x) for each n in ns (NaN rows where out of range)."""
        cf = self.cf
        ns, ls = self._rows(ns, side)
        ok = ls >= 1
        K1 = cf.K + 1
        R = ns.size
        lsafe = np.where(ok, ls, 1)
        L = lsafe - 1
        gL = self.tr.g[0, L]
        PL = self.tr.P[0, L]
        mL = self.tr.m[0, L]
        eL = self.tr.e[0, L]
        # state of the offset point y right after digit l
        ybit = np.full(R, 1 if side > 0 else 0, dtype=np.uint8)
        gy, _, _ = cf.step(gL, ybit)
        run = ns - lsafe
        fill = 0 if side > 0 else 1
        if self.q is not None:
            steps = np.maximum(np.maximum(ns, self.q) - lsafe, 0)
            zt = True
        else:
            steps = np.minimum(run + self.T, self.avail - lsafe)
            zt = False
        J = int(steps.max()) if R else 0
        jj = np.arange(J)
        idx = lsafe[:, None] + jj[None, :]
        src = self.bits[np.clip(idx, 0, self.bits.size - 1)]
        src = np.where(idx < self.bits.size, src, 0)
        digits = np.where(jj[None, :] < run[:, None], fill, src).astype(np.uint8)
        U, V, Rr, bound = walk(cf, gy, digits, steps, zt)
        if side > 0:
            # D = P_L W_l(x) + (1 - P_L) U_l(y)
            Wx = Scaled(self.Wsum.v[0, lsafe], self.Wsum.s[0, lsafe])
            D = _add_scaled(_scale_jet(Wx, PL), _scale_jet(U, _one_minus(PL)))
        else:
            # D = P_L W_l(y) + (1 - P_L) U_l(x),  W_l(y) = V + R (R already folded in V)
            Ux = Scaled(self.Usum.v[0, lsafe], self.Usum.s[0, lsafe])
            D = _add_scaled(_scale_jet(V, PL), _scale_jet(Ux, _one_minus(PL)))
        mant, s = _normalize_safe(jets.mul(mL, D.v), D.s)
        mant = np.where(ok[:, None], mant, np.nan)
        return Increment(mant, np.where(ok, s + eL, np.nan), np.full(R, float(side)), ls,
                         np.where(ok, bound, np.nan))


def _normalize_safe(m, s):
    c = m[..., 0]
    good = c > 0
    cc = np.where(good, c, 1.0)
    out = m / cc[..., None]
    return out, s + np.log2(cc)


def delta_increment(curve, x: BinaryPoint, y: BinaryPoint, K=None) -> Increment:
    """F(y) - F(x) as a scaled jet for arbitrary distinct points."""
    cf = curve if isinstance(curve, Coeffs) else Coeffs(curve, K)
    if x == y:
        raise EqualInputs("x and y are equal")
    sign = 1.0
    if _less(y, x):
        x, y = y, x
        sign = -1.0
    l = first_disagreement(x, y)
    T = cf.window()
    L = l - 1
    horizon = _last_difference(x, y) + T
    xb, xq, xa = _digit_source(x, horizon + 1)
    yb, yq, ya = _digit_source(y, horizon + 1)
    tr = trajectory(cf, xb[None, :L]) if L else trajectory(cf, np.zeros((1, 0), dtype=np.uint8))
    gL, PL, mL, eL = tr.g[:, L], tr.P[:, L], tr.m[:, L], tr.e[:, L]

    def side(bits, q, avail, b):
        g, _, _ = cf.step(gL, np.array([b], dtype=np.uint8))
        if q is not None:
            steps = max(q - l, 0)
            zt = True
        else:
            steps = min(horizon, avail) - l
            zt = False
        d = bits[l: l + steps][None, :]
        return walk(cf, g, d, np.array([steps]), zt)

    Ux, Vx, Rx, bx = side(xb, xq, xa, 0)
    Uy, Vy, Ry, by = side(yb, yq, ya, 1)
    D = _add_scaled(_scale_jet(Vx, PL), _scale_jet(Uy, _one_minus(PL)))
    mant, s = _normalize_safe(jets.mul(mL, D.v), D.s)
    return Increment(mant, s + eL, np.array([sign]), np.array([l]), np.maximum(bx, by))


def _last_difference(x: BinaryPoint, y: BinaryPoint):
    """Position after which the digits of x and y coincide (as far as they are known)."""
    if x.truncated or y.truncated:
        n = min(v.prefix.size for v in (x, y) if v.truncated)
    else:
        px = x.period.size if x.period is not None else 1
        py = y.period.size if y.period is not None else 1
        n = max(x.prefix.size, y.prefix.size) + int(np.lcm(px, py))
    dx, dy = _digit_source(x, n)[0][:n], _digit_source(y, n)[0][:n]
    diff = np.flatnonzero(dx != dy)
    return int(diff[-1]) + 1 if diff.size else 0


def _less(a: BinaryPoint, b: BinaryPoint):
    l = first_disagreement(a, b)
    return a.digit(l) < b.digit(l)


def delta_kF(curve, x: BinaryPoint, y: BinaryPoint, k, K=None):
    """(f_k(x) - f_k(y)) / (F(x) - F(y))."""
    if k == 0:
        if x == y:
            raise EqualInputs("x and y are equal")
        return 1.0
    inc = delta_increment(curve, x, y, K if K is not None else k)
    return float(inc.delta(k)[0])


# -- values of F -----------------------------------------------------------------

@dataclass
class Evaluation:
    value: float
    jet: np.ndarray
    terms_used: int
    tail_bound: float

    def f(self, k):
        return math.factorial(k) * float(self.jet[k])


def _series_terms(cf: Coeffs, tol):
    N = 1
    while True:
        if cf.pmax ** N * (1 + N ** cf.K * SAFETY) < tol:
            return N
        N += 1
        if N > HARD_CAP:
            return None


def eval_F_jet(curve, x: BinaryPoint, K=None, tol=1e-13) -> Evaluation:
    if tol < 1e-13:
        raise InvalidInput("tolerance below 1e-13 is not supported")
    cf = curve if isinstance(curve, Coeffs) else Coeffs(curve, K)
    if x.is_dyadic:
        N = x.level
        bits = x.prefix
        bound = 0.0
    else:
        N = _series_terms(cf, tol)
        if N is None:
            achieved = cf.pmax ** HARD_CAP * (1 + HARD_CAP ** cf.K * SAFETY)
            raise PrecisionExhausted(f"term cap {HARD_CAP} reached with bound {achieved:.3g}",
                                     achieved, HARD_CAP)
        if x.truncated and N > x.prefix.size:
            raise PrecisionExhausted("not enough known digits for the tolerance",
                                     float("nan"), x.prefix.size)
        bits = x.digits(N)
    if cf.K == 0:
        F, M_N = _series_scalar(cf, bits)
        jet = np.array([F])
    else:
        tr = trajectory(cf, bits[None, :])
        jet = series_sum(tr)[0]
        M_N = float(np.exp2(tr.e[0, N]))
    if not x.is_dyadic:
        bound = M_N * (1 + N ** cf.K * SAFETY)
    return Evaluation(float(jet[0]), jet, int(N), float(bound))


def _series_scalar(cf: Coeffs, bits):
    """Order-0 series for one digit string in plain floats (same recursion as trajectory)."""
    b1, c0, c1 = (float(v[0]) for v in (cf.b1, cf.c0, cf.c1))
    a0, a1 = float(cf.a0[0]), float(cf.a1[0])
    lo, hi = cf.alpha - _EPS_BASIC, cf.beta + _EPS_BASIC
    g, M, F = 0.0, 1.0, 0.0
    for n, b in enumerate(bits.tolist()):
        if not lo <= g <= hi:
            raise InstabilityError(f"g left [alpha, beta] at step {n}", step=n)
        den = b1 * g + 1.0
        P = b1 * (g + 1.0) / den
        if not 0.0 < P < 1.0:
            raise InstabilityError(f"H left (0, 1) at step {n}", step=n)
        if b:
            F += M * P
            M *= 1.0 - P
            g = (a1 * g + c1) / den
        else:
            M *= P
            g = a0 * g + c0
    return F, M


def eval_F(point, x: BinaryPoint, tol=1e-13) -> Evaluation:
    cf = Coeffs(point, 0) if isinstance(point, CurvePoint) else Coeffs(point, 0)
    return eval_F_jet(cf, x, tol=tol)


def series_sum(tr: Trajectory):
    """sum over n with X_{n+1} = 1 of M_n P_n, per row."""
    b = tr.bits.astype(float)[..., None]
    with np.errstate(under="ignore"):
        terms = jets.mul(tr.m[:, :-1], tr.P[:, :-1]) * np.exp2(tr.e[:, :-1])[..., None]
    return (terms * b).sum(axis=1)


def series_sum_stream(cf: Coeffs, bits):
    """Same as series_sum(trajectory(cf, bits)) without storing the states."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    B, N = bits.shape
    g = jets.const(0.0, cf.K, (B,))
    M = jets.const(1.0, cf.K, (B,))
    F = np.zeros((B, cf.K + 1))
    for n in range(N):
        gn, H, P = cf.step(g, bits[:, n])
        F += jets.mul(M, P) * bits[:, n, None]
        M = jets.mul(M, H)
        g = gn
    return F


def dyadic_grid_series(curve, level, K=None, lo=0, hi=None):
    """F jets at j / 2^level for j in [lo, hi] by the per-point series."""
    cf = curve if isinstance(curve, Coeffs) else Coeffs(curve, K)
    hi = (1 << level) if hi is None else hi
    js = np.arange(lo, hi + 1, dtype=np.int64)
    out = np.zeros((js.size, cf.K + 1))
    top = js == (1 << level)
    inner = js[~top]
    shifts = np.arange(level - 1, -1, -1, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(level, 1))
    res = []
    for s in range(0, inner.size, chunk):
        part = inner[s: s + chunk]
        bits = ((part[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        if level == 0:
            res.append(np.zeros((part.size, cf.K + 1)))
            continue
        res.append(series_sum_stream(cf, bits))
    if res:
        out[~top] = np.concatenate(res)
    out[top] = jets.const(1.0, cf.K)
    return js, out


def iter_cells(curve, level, K=None, lo=0, hi=None, chunk_depth=16):
    """Walk the cylinder tree and yield blocks of level-`level` cells.

    Yields (start, Fleft, M) where cells start..start+len-1 cover [j/2^level,
    (j+1)/2^level), Fleft are the F jets at the left endpoints and M the
    cylinder mass jets, i.e. F(right) - F(left).  Only cells in [lo, hi) are
    produced.
    """
    cf = curve if isinstance(curve, Coeffs) else Coeffs(curve, K)
    hi = (1 << level) if hi is None else hi
    top = max(level - chunk_depth, 0)

    def expand(g, M, F, start, depth, lvl_from, lo_, hi_):
        for d in range(depth):
            lvl = lvl_from + d
            P, den = cf.p0(g)
            g0 = jets.mul(np.broadcast_to(cf.a0, g.shape), g) + cf.c0
            g1 = jets.div(jets.mul(np.broadcast_to(cf.a1, g.shape), g) + cf.c1, den)
            M0 = jets.mul(M, P)
            M1 = M - M0
            n = g.shape[0]
            g = np.stack([g0, g1], axis=1).reshape(2 * n, -1)
            F = np.stack([F, F + M0], axis=1).reshape(2 * n, -1)
            M = np.stack([M0, M1], axis=1).reshape(2 * n, -1)
            start = 2 * start
            # keep only cells overlapping [lo_, hi_) at the target level
            shift = level - (lvl + 1)
            idx = start + np.arange(2 * n)
            keep = ((idx + 1) << shift > lo_) & ((idx << shift) < hi_)
            if not keep.all():
                first = int(np.argmax(keep))
                cnt = int(keep.sum())
                g, F, M = g[first:first + cnt], F[first:first + cnt], M[first:first + cnt]
                start += first
        return g, M, F, start

    g = jets.const(0.0, cf.K, (1,))
    M = jets.const(1.0, cf.K, (1,))
    F = jets.const(0.0, cf.K, (1,))
    g, M, F, start = expand(g, M, F, 0, top, 0, lo, hi)
    for i in range(g.shape[0]):
        gg, MM, FF, ss = expand(g[i:i + 1], M[i:i + 1], F[i:i + 1], start + i,
                                level - top, top, lo, hi)
        yield ss, FF, MM


def dyadic_grid_tree(curve, level, K=None, lo=0, hi=None):
    """F jets at j / 2^level for j in [lo, hi] by the cylinder tree."""
    hi_ = (1 << level) if hi is None else hi
    parts, last = [], None
    for start, F, M in iter_cells(curve, level, K, lo, hi_):
        parts.append(F)
        last = F[-1] + M[-1]
    vals = np.concatenate(parts + [last[None, :]])
    return np.arange(lo, hi_ + 1), vals


# -- Z and Y series ----------------------------------------------------------------

@dataclass
class ZSeries:
    k: int
    values: np.ndarray
    y_values: np.ndarray | None


def z_from_trajectory(tr: Trajectory, k):
    """Z_{k,n} = k! m_n[k] for n = 0..N (m normalized so Z_{0,n} = 1)."""
    return math.factorial(k) * tr.m[..., k]


def y_from_trajectory(tr: Trajectory):
    H = tr.H()
    return H[..., 1] / H[..., 0]


def z_series(curve, x: BinaryPoint, k, n_max, K=None) -> ZSeries:
    if n_max > HARD_CAP:
        raise DomainError(f"n_max above {HARD_CAP}")
    K = max(k, 1) if K is None else K
    cf = curve if isinstance(curve, Coeffs) else Coeffs(curve, K)
    if k > cf.K:
        raise DomainError(f"order {k} exceeds the curve order {cf.K}")
    bits = x.digits(n_max) if not x.is_dyadic else _digit_source(x, n_max)[0][:n_max]
    tr = trajectory(cf, bits[None, :])
    Z = z_from_trajectory(tr, k)[0, 1:]
    Y = y_from_trajectory(tr)[0] if cf.K >= 1 else None
    return ZSeries(k, Z, Y)


def conditional_variance(tr: Trajectory):
    """E[Y_{n+1}^2 | first n digits] = (∂_t P_n)^2 / (P_n (1 - P_n))."""
    P = tr.P[..., :-1, :]
    return P[..., 1] ** 2 / (P[..., 0] * (1 - P[..., 0]))


# -- sampling -------------------------------------------------------------------------

def sample_mu0_bits(point, depth, rng, n_samples=1):
    """Digit rows drawn from mu_0: digit i+1 is 0 with probability P_i(0, x)."""
    if depth > HARD_CAP:
        raise DomainError(f"depth above {HARD_CAP}")
    if isinstance(point, ParamCurve):
        point = point.point
    b1, c0, c1 = point.triple
    u = rng.random((n_samples, depth))
    bits = np.zeros((n_samples, depth), dtype=np.uint8)
    g = np.zeros(n_samples)
    for i in range(depth):
        P = b1 * (g + 1) / (b1 * g + 1)
        b = u[:, i] >= P
        bits[:, i] = b
        g = np.where(b, ((1 - b1 + c1) * g + c1) / (b1 * g + 1), b1 * (1 + c0) * g + c0)
    return bits


def sample_mu0(point, depth, seed=0):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bits = sample_mu0_bits(point, depth, rng, 1)[0]
    return BinaryPoint(bits, truncated=True)


def lebesgue_bits(depth, rng, n_samples=1):
    return rng.integers(0, 2, size=(n_samples, depth), dtype=np.uint8)
