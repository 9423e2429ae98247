"""Exact binary digit streams for points of [0, 1)."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, EqualInputs, ExhaustedError, InvalidInput, RangeError


@dataclass(frozen=True)
class DyadicRational:
    k: int
    n: int

    def __post_init__(self):
        k, n = int(self.k), int(self.n)
        if n < 0 or k < 0 or k > (1 << n):
            raise InvalidInput(f"{k}/2^{n} is not in [0, 1]")
        if k == 0:
            n = 0
        while n > 0 and k % 2 == 0:
            k //= 2
            n -= 1
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", n)

    @property
    def value(self):
        return Fraction(self.k, 1 << self.n)

    def __float__(self):
        return self.k / 2.0 ** self.n

    def point(self):
        return BinaryPoint.from_fraction(self.value)

    def __str__(self):
        return f"{self.k}/2^{self.n}"


def _bits(seq):
    arr = np.array([int(b) for b in seq], dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise InvalidInput("digits must be 0 or 1")
    return arr


class BinaryPoint:
    """x = sum X_i 2^-i given by a finite prefix and an optional repeating block.

    With ``truncated=True`` the point stands for an (irrational) number of which
    only the prefix is known; reading digits past the prefix is an error.
    """

    __slots__ = ("prefix", "period", "truncated")

    def __init__(self, prefix=(), period=None, truncated=False):
        pre = _bits(prefix)
        per = None if period is None or len(period) == 0 else _bits(period)
        if per is not None and truncated:
            raise InvalidInput("a truncated point cannot carry a period")
        if per is not None:
            if per.all():
                raise InvalidInput("a tail of ones is not a valid expansion; use the terminating form")
            if not per.any():
                per = None
            else:
                per = _minimal_period(per)
                # fold a prefix suffix that already repeats the block
                while pre.size and pre[-1] == per[-1]:
                    pre = pre[:-1]
                    per = np.roll(per, 1)
        if per is None and not truncated:
            nz = np.flatnonzero(pre)
            pre = pre[: nz[-1] + 1] if nz.size else pre[:0]
        pre.setflags(write=False)
        if per is not None:
            per.setflags(write=False)
        object.__setattr__(self, "prefix", pre)
        object.__setattr__(self, "period", per)
        object.__setattr__(self, "truncated", bool(truncated))

    def __setattr__(self, name, value):
        raise AttributeError("BinaryPoint is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def from_fraction(cls, q):
        q = Fraction(q)
        if not 0 <= q < 1:
            raise RangeError(f"{q} is outside [0, 1)")
        p, d = q.numerator, q.denominator
        seen = {}
        digits = []
        r = p
        while r and r not in seen:
            seen[r] = len(digits)
            r *= 2
            digits.append(1 if r >= d else 0)
            if r >= d:
                r -= d
        if not r:
            return cls(digits)
        start = seen[r]
        return cls(digits[:start], digits[start:])

    @classmethod
    def from_bits(cls, bits, truncated=True):
        return cls(bits, truncated=truncated)

    # queries --------------------------------------------------------------
    @property
    def is_dyadic(self):
        return self.period is None and not self.truncated

    @property
    def level(self):
        """Number of digits after which a dyadic point is all zeros."""
        if not self.is_dyadic:
            raise DomainError("point is not a dyadic rational")
        return int(self.prefix.size)

    @property
    def known_digits(self):
        return self.prefix.size if self.truncated else None

    def digit(self, i):
        if i < 1:
            raise InvalidInput("digit index starts at 1")
        return int(self.digits(i)[i - 1])

    def digits(self, n):
        """First n digits as a uint8 array."""
        n = int(n)
        pre = self.prefix
        if n <= pre.size:
            return pre[:n].copy()
        if self.truncated:
            raise ExhaustedError(f"only {pre.size} digits are known", found=())
        out = np.zeros(n, dtype=np.uint8)
        out[: pre.size] = pre
        if self.period is not None:
            per = self.period
            rest = n - pre.size
            reps = -(-rest // per.size)
            out[pre.size:] = np.tile(per, reps)[:rest]
        return out

    def truncate(self, n):
        d = self.digits(n)
        k = int("".join(map(str, d.tolist())) or "0", 2)
        return DyadicRational(k, n)

    def to_fraction(self):
        pre = self.prefix
        L = pre.size
        v = Fraction(int("".join(map(str, pre.tolist())) or "0", 2), 1 << L)
        if self.period is not None:
            p = self.period.size
            block = int("".join(map(str, self.period.tolist())), 2)
            v += Fraction(block, ((1 << p) - 1) << L)
        return v

    def __float__(self):
        if self.truncated:
            d = self.prefix[:80].astype(float)
            return float(d @ (0.5 ** np.arange(1, d.size + 1)))
        return float(self.to_fraction())

    def ones_positions(self, count):
        found = []
        n = max(64, self.prefix.size + (self.period.size if self.period is not None else 0))
        while True:
            limit = n if (self.truncated or self.period is None) else n
            if self.truncated:
                limit = min(limit, self.prefix.size)
            d = self.digits(limit)
            found = (np.flatnonzero(d) + 1).tolist()
            if len(found) >= count:
                return found[:count]
            if self.period is None or self.truncated:
                raise ExhaustedError(f"only {len(found)} one-digits available", found)
            n *= 2

    def _horizon(self):
        return self.prefix.size + (self.period.size if self.period is not None else 0)

    def __eq__(self, other):
        if not isinstance(other, BinaryPoint):
            return NotImplemented
        if self.truncated or other.truncated:
            return (self.truncated == other.truncated and np.array_equal(self.prefix, other.prefix))
        return self.to_fraction() == other.to_fraction()

    def __hash__(self):
        if self.truncated:
            return hash(self.prefix.tobytes())
        return hash(self.to_fraction())

    def __str__(self):
        pre = "".join(map(str, self.prefix.tolist()))
        if self.period is not None:
            return f"0.{pre}({''.join(map(str, self.period.tolist()))})"
        if self.truncated:
            return f"0.{pre}..."
        # an explicit zero period keeps the text binary (a bare "0.1" parses as decimal)
        return f"0.{pre or '0'}(0)"

    def __repr__(self):
        return f"BinaryPoint('{self}')"

    def reflect(self):
        """1 - x (for x in (0, 1))."""
        if self.truncated:
            # complementing all digits maps sum X_i 2^-i to 1 - x up to the unknown tail
            return BinaryPoint(1 - self.prefix, truncated=True)
        return BinaryPoint.from_fraction(1 - self.to_fraction())

    def add_offset(self, h):
        return add_offset(self, h)


def _minimal_period(per):
    n = per.size
    for p in range(1, n + 1):
        if n % p == 0 and np.array_equal(np.tile(per[:p], n // p), per):
            return per[:p].copy()
    return per


def truncate(x: BinaryPoint, n):
    return x.truncate(n)


def digit(x: BinaryPoint, i):
    return x.digit(i)


def ones_positions(z: BinaryPoint, count):
    return z.ones_positions(count)


def first_disagreement(y: BinaryPoint, z: BinaryPoint):
    if y == z:
        raise EqualInputs("points are equal")
    if y.truncated or z.truncated:
        n = min(y.prefix.size, z.prefix.size)
        if y.truncated and z.truncated:
            n = min(y.prefix.size, z.prefix.size)
        dy, dz = y.digits(n), z.digits(n)
    else:
        py = y.period.size if y.period is not None else 1
        pz = z.period.size if z.period is not None else 1
        n = max(y.prefix.size, z.prefix.size) + np.lcm(py, pz)
        dy, dz = y.digits(n), z.digits(n)
    diff = np.flatnonzero(dy != dz)
    if not diff.size:
        raise EqualInputs("points agree on all known digits")
    return int(diff[0]) + 1


def add_offset(x: BinaryPoint, h):
    """Digit-exact x + h for a signed dyadic h (Fraction, int pair or DyadicRational)."""
    if isinstance(h, DyadicRational):
        h = h.value
    h = Fraction(h)
    if h == 0:
        return x
    q = h.denominator
    n = q.bit_length() - 1
    if q != 1 << n:
        raise DomainError("offset must be a dyadic rational")
    L = max(n, x.prefix.size)
    if x.period is not None:
        L = x.prefix.size + -(-(max(n - x.prefix.size, 0)) // x.period.size) * x.period.size
        L = max(L, x.prefix.size)
    head = x.digits(L) if not x.truncated else x.prefix
    if x.truncated and n > x.prefix.size:
        raise ExhaustedError("offset is finer than the known digits of a truncated point")
    L = head.size
    k = int("".join(map(str, head.tolist())) or "0", 2)
    k += int(h * (1 << L))
    if k < 0 or k >= 1 << L:
        raise RangeError("x + h leaves [0, 1)")
    bits = [int(c) for c in format(k, f"0{L}b")] if L else []
    if x.truncated:
        return BinaryPoint(bits, truncated=True)
    return BinaryPoint(bits, x.period)


_BIN_RE = re.compile(r"^(?:0?\.)?([01]*)(?:\(([01]+)\))?$")


def parse_point(text) -> BinaryPoint:
    """Parse "0.0101(01)", "0b0101", "k/2^n", "p/q" or a decimal literal."""
    s = str(text).strip().replace(" ", "")
    if not s:
        raise InvalidInput("empty point")
    if s.startswith("0b") or "(" in s:
        body = s[2:] if s.startswith("0b") else s
        m = _BIN_RE.match(body)
        if not m:
            raise InvalidInput(f"bad binary point {text!r}")
        return BinaryPoint(m.group(1), m.group(2) or None)
    m = re.fullmatch(r"(\d+)/2\^(\d+)", s)
    try:
        if m:
            q = Fraction(int(m.group(1)), 1 << int(m.group(2)))
        else:
            q = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"cannot parse point {text!r}") from exc
    return BinaryPoint.from_fraction(q)


def last_zero_at_or_before(bits, n):
    """Largest l <= n with bits[l-1] == 0, or 0 if none."""
    seg = np.flatnonzero(np.asarray(bits[:n]) == 0)
    return int(seg[-1]) + 1 if seg.size else 0


def digit_gaps(x: BinaryPoint, y: BinaryPoint):
    """l, and the first zero of x / first one of y after l (for x < y)."""
    l = first_disagreement(x, y)
    n = l + 4096
    dx, dy = x.digits(n), y.digits(n)
    zx = np.flatnonzero(dx[l:] == 0)
    oy = np.flatnonzero(dy[l:] == 1)
    lx = l + 1 + int(zx[0]) if zx.size else None
    ly = l + 1 + int(oy[0]) if oy.size else None
    return l, lx, ly
