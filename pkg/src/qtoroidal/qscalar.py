"""Exact arithmetic in Q(v) where v = q^(1/4).

Two value types live here. ``LaurentPoly`` is a plain sparse Laurent
polynomial in v with rational coefficients. ``Scalar`` is an element of the
rational function field, stored in canonical form

    v^shift * num(v) / den(v),   num(0) != 0,  den(0) == 1,  gcd(num, den) = 1

with ``num`` and ``den`` ordinary polynomials (FLINT ``fmpq_poly``).  The
canonical form makes equality and hashing syntactic.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, lcm

import flint

_P = flint.fmpq_poly
_ONE_POLY = _P([1])
_ZERO_POLY = _P([])


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    return Fraction(x)


def _fmpq(x) -> flint.fmpq:
    x = _frac(x)
    return flint.fmpq(x.numerator, x.denominator)


class LaurentPoly:
    """Sparse Laurent polynomial in v with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        clean = {}
        if coeffs:
            for e, c in coeffs.items():
                c = _frac(c)
                if c:
                    clean[int(e)] = c
        self.coeffs = clean

    @classmethod
    def monomial(cls, e: int, c=1) -> "LaurentPoly":
        return cls({e: c})

    def is_zero(self) -> bool:
        return not self.coeffs

    def min_exp(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    def max_exp(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def __add__(self, other):
        other = _as_laurent(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_as_laurent(other))

    def __rsub__(self, other):
        return _as_laurent(other) - self

    def __mul__(self, other):
        other = _as_laurent(other)
        out: dict[int, Fraction] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly({0: other})
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def evaluate(self, v) -> Fraction:
        v = _frac(v)
        return sum((c * v**e for e, c in self.coeffs.items()), Fraction(0))

    def to_poly(self) -> tuple[flint.fmpq_poly, int]:
        """Return (p, s) with self = v^s * p(v) and p an ordinary polynomial."""
        if not self.coeffs:
            return _ZERO_POLY, 0
        s = min(self.coeffs)
        top = max(self.coeffs)
        arr = [0] * (top - s + 1)
        for e, c in self.coeffs.items():
            arr[e - s] = _fmpq(c)
        return _P(arr), s

    @classmethod
    def from_poly(cls, p: flint.fmpq_poly, shift: int = 0) -> "LaurentPoly":
        return cls({i + shift: _frac(c) for i, c in enumerate(p.coeffs()) if c != 0})

    def __repr__(self):
        return f"LaurentPoly({render_laurent(self)})"


def _as_laurent(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    return LaurentPoly({0: x})


class Scalar:
    """Element of Q(v) in canonical form (see module docstring)."""

    __slots__ = ("_n", "_d", "_s", "_h")

    def __init__(self, num=0, den=None):
        # General constructor: num and den may be ints, Fractions,
        # LaurentPolys or Scalars.  Fast internal paths use _raw/_make.
        if isinstance(num, Scalar) and den is None:
            self._n, self._d, self._s, self._h = num._n, num._d, num._s, num._h
            return
        a = _to_scalar(num)
        if den is not None:
            a = a / _to_scalar(den)
        self._n, self._d, self._s, self._h = a._n, a._d, a._s, None

    @classmethod
    def _raw(cls, n, d, s) -> "Scalar":
        obj = object.__new__(cls)
        obj._n = n
        obj._d = d
        obj._s = s
        obj._h = None
        return obj

    @classmethod
    def _make(cls, n, d, s) -> "Scalar":
        """Normalize v^s * n/d into canonical form."""
        if n.is_zero():
            return ZERO
        if d.is_zero():
            raise ZeroDivisionError("Scalar with zero denominator")
        cn = n.coeffs()
        k = 0
        while cn[k] == 0:
            k += 1
        if k:
            n = n.right_shift(k)
            s += k
        cd = d.coeffs()
        k = 0
        while cd[k] == 0:
            k += 1
        if k:
            d = d.right_shift(k)
            s -= k
        if d.degree() > 0:
            g = n.gcd(d)
            if g.degree() > 0:
                n = n // g
                d = d // g
        c0 = d[0]
        if c0 != 1:
            n = n / c0
            d = d / c0
        return cls._raw(n, d, s)

    # -- constructors -------------------------------------------------
    @classmethod
    def from_laurent(cls, p: LaurentPoly) -> "Scalar":
        n, s = p.to_poly()
        return cls._make(n, _ONE_POLY, s)

    @classmethod
    def v_power(cls, k: int, c=1) -> "Scalar":
        c = _fmpq(c)
        if c == 0:
            return ZERO
        return cls._raw(_P([c]), _ONE_POLY, int(k))

    # -- accessors ----------------------------------------------------
    @property
    def num(self) -> LaurentPoly:
        return LaurentPoly.from_poly(self._n, self._s)

    @property
    def den(self) -> LaurentPoly:
        return LaurentPoly.from_poly(self._d, 0)

    @property
    def parts(self):
        """Raw canonical data (numerator poly, denominator poly, v-shift)."""
        return self._n, self._d, self._s

    def is_zero(self) -> bool:
        return self._n.is_zero()

    def is_laurent(self) -> bool:
        return self._d.is_one()

    def is_monomial(self) -> bool:
        return self._d.is_one() and self._n.degree() == 0

    def __bool__(self):
        return not self._n.is_zero()

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Scalar):
            other = _to_scalar(other)
        if self._n.is_zero():
            return other
        if other._n.is_zero():
            return self
        s1, s2 = self._s, other._s
        m = min(s1, s2)
        a = self._n.left_shift(s1 - m) if s1 > m else self._n
        b = other._n.left_shift(s2 - m) if s2 > m else other._n
        if self._d == other._d:
            return Scalar._make(a + b, self._d, m)
        return Scalar._make(a * other._d + b * self._d, self._d * other._d, m)

    __radd__ = __add__

    def __neg__(self):
        if self._n.is_zero():
            return self
        return Scalar._raw(-self._n, self._d, self._s)

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            other = _to_scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return _to_scalar(other) - self

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, int) or isinstance(other, Fraction):
                if not other:
                    return ZERO
                if self._n.is_zero():
                    return self
                return Scalar._raw(self._n * _fmpq(other), self._d, self._s)
            other = _to_scalar(other)
        if self._n.is_zero() or other._n.is_zero():
            return ZERO
        if self._d.is_one() and other._d.is_one():
            return Scalar._raw(self._n * other._n, _ONE_POLY, self._s + other._s)
        return Scalar._make(self._n * other._n, self._d * other._d, self._s + other._s)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self._n.is_zero():
            raise ZeroDivisionError("division by the zero Scalar")
        return Scalar._make(self._d, self._n, -self._s)

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            other = _to_scalar(other)
        if other._n.is_zero():
            raise ZeroDivisionError("division by the zero Scalar")
        if self._n.is_zero():
            return ZERO
        return Scalar._make(self._n * other._d, self._d * other._n, self._s - other._s)

    def __rtruediv__(self, other):
        return _to_scalar(other) / self

    def __pow__(self, k: int):
        k = int(k)
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return ONE
        if self._n.is_zero():
            return ZERO
        return Scalar._raw(self._n**k, self._d**k, self._s * k)

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, (int, Fraction, LaurentPoly)):
                other = _to_scalar(other)
            else:
                return NotImplemented
        return self._s == other._s and self._n == other._n and self._d == other._d

    def __hash__(self):
        if self._h is None:
            self._h = hash((self._s, tuple(self._n.coeffs()), tuple(self._d.coeffs())))
        return self._h

    def evaluate(self, v) -> Fraction:
        """Exact value at a rational point v (error at a pole)."""
        v = _fmpq(v)
        d = self._d(v)
        if d == 0:
            raise ZeroDivisionError("evaluation at a pole")
        val = self._n(v) / d
        if self._s:
            val = val * v**self._s
        return _frac(val)

    def normalize(self) -> "Scalar":
        return Scalar._make(self._n, self._d, self._s)

    def __str__(self):
        return render_scalar(self)

    def __repr__(self):
        return f"Scalar({render_scalar(self)})"


def _to_scalar(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, LaurentPoly):
        return Scalar.from_laurent(x)
    if isinstance(x, (int, Fraction, flint.fmpq)):
        x = _fmpq(x)
        if x == 0:
            return ZERO
        return Scalar._raw(_P([x]), _ONE_POLY, 0)
    raise TypeError(f"cannot convert {type(x).__name__} to Scalar")


ZERO = Scalar._raw(_ZERO_POLY, _ONE_POLY, 0)
ONE = Scalar._raw(_ONE_POLY, _ONE_POLY, 0)


def scalar_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Field operation by name: add, sub, mul or div."""
    a, b = _to_scalar(a), _to_scalar(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def _quarter_units(r) -> int:
    r = _frac(r)
    e = 4 * r
    if e.denominator != 1:
        raise ValueError(f"exponent {r} is not a multiple of 1/4")
    return int(e)


def q_power(r) -> Scalar:
    """q^r = v^(4r); r must have denominator dividing 4."""
    return Scalar.v_power(_quarter_units(r))


@lru_cache(maxsize=None)
def _q_int_cached(k: Fraction, d: Fraction) -> Scalar:
    e = _quarter_units(d * k)
    base = _quarter_units(d)
    num = Scalar.v_power(e) - Scalar.v_power(-e)
    den = Scalar.v_power(base) - Scalar.v_power(-base)
    return num / den


def q_int(k, d) -> Scalar:
    """[k]_d = (q^(dk) - q^(-dk)) / (q^d - q^(-d)).  k may be rational."""
    return _q_int_cached(_frac(k), _frac(d))


@lru_cache(maxsize=None)
def _q_fact(m: int, d: Fraction) -> Scalar:
    out = ONE
    for k in range(1, m + 1):
        out = out * q_int(k, d)
    return out


def q_binom(m: int, l: int, d) -> Scalar:
    """Gaussian binomial [m choose l]_d."""
    if m < 0 or l < 0 or l > m:
        raise ValueError(f"q_binom needs 0 <= l <= m, got m={m}, l={l}")
    d = _frac(d)
    return _q_fact(m, d) / (_q_fact(l, d) * _q_fact(m - l, d))


def binomial(m: int, l: int) -> int:
    return comb(m, l)


# -- rendering --------------------------------------------------------

def _render_qexp(e: int) -> str:
    r = Fraction(e, 4)
    if r == 0:
        return ""
    if r == 1:
        return "q"
    if r.denominator == 1:
        return f"q^{r.numerator}"
    return f"q^({r})"


def render_laurent(p: LaurentPoly) -> str:
    """Render a Laurent polynomial in v as a polynomial in q, highest power first."""
    if p.is_zero():
        return "0"
    parts = []
    for e in sorted(p.coeffs, reverse=True):
        c = p.coeffs[e]
        mono = _render_qexp(e)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mono and a == 1:
            body = mono
        elif mono:
            body = f"{a}*{mono}"
        else:
            body = str(a)
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def render_scalar(x: Scalar) -> str:
    """Reduced fraction rendering with integer coefficients where possible."""
    n, d, s = x.parts
    if n.is_zero():
        return "0"
    if d.is_one():
        return render_laurent(LaurentPoly.from_poly(n, s))
    # clear rational coefficients for display
    scale = 1
    for c in list(n.coeffs()) + list(d.coeffs()):
        scale = lcm(scale, int(c.q))
    num = LaurentPoly.from_poly(n * scale, s)
    den = LaurentPoly.from_poly(d * scale, 0)
    return f"({render_laurent(num)})/({render_laurent(den)})"
