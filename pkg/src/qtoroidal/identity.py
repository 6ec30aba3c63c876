"""Multivariate Laurent polynomials with Scalar coefficients."""

from __future__ import annotations

from itertools import permutations

from .qscalar import ONE, ZERO, Scalar, render_scalar


def _perm_sign(p) -> int:
    sign, seen = 1, set()
    for i in range(len(p)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class MultiPoly:
    """Sparse map from integer exponent vectors to nonzero Scalars; fixed arity."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None):
        self.arity = int(arity)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != self.arity:
                raise ValueError(f"exponent {e} does not have arity {self.arity}")
            if not isinstance(c, Scalar):
                c = Scalar(c)
            if c:
                clean[e] = clean[e] + c if e in clean else c
        self.terms = {e: c for e, c in clean.items() if c}

    @classmethod
    def const(cls, arity: int, c=ONE) -> "MultiPoly":
        return cls(arity, {(0,) * arity: c})

    @classmethod
    def var(cls, arity: int, i: int, power: int = 1, c=ONE) -> "MultiPoly":
        e = [0] * arity
        e[i] = power
        return cls(arity, {tuple(e): c})

    @classmethod
    def linear(cls, arity: int, coeffs: dict) -> "MultiPoly":
        """sum_i coeffs[i] * x_i."""
        out = cls(arity)
        for i, c in coeffs.items():
            out = out + cls.var(arity, i, 1, c)
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other):
        if not isinstance(other, MultiPoly):
            raise TypeError("expected a MultiPoly")
        if other.arity != self.arity:
            raise ValueError(f"arity mismatch: {self.arity} vs {other.arity}")

    def _lift(self, other):
        if isinstance(other, MultiPoly):
            self._check(other)
            return other
        return MultiPoly.const(self.arity, other if isinstance(other, Scalar) else Scalar(other))

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return MultiPoly(self.arity, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.arity, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                val = c1 * c2
                out[e] = out[e] + val if e in out else val
        return MultiPoly(self.arity, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if len(self.terms) != 1:
                raise ValueError("only monomials have negative powers")
            (e, c), = self.terms.items()
            return MultiPoly(self.arity, {tuple(-k * x for x in e): c**k})
        out = MultiPoly.const(self.arity)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.arity == other.arity and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def permute(self, perm) -> "MultiPoly":
        """Rename variable i to perm[i]."""
        out = {}
        for e, c in self.terms.items():
            e2 = [0] * self.arity
            for i, x in enumerate(e):
                e2[perm[i]] += x
            out[tuple(e2)] = c
        return MultiPoly(self.arity, out)

    def map_coeffs(self, f) -> "MultiPoly":
        return MultiPoly(self.arity, {e: f(c) for e, c in self.terms.items()})

    def specialize(self, v) -> "MultiPoly":
        """Evaluate every coefficient at the rational point v."""
        return self.map_coeffs(lambda c: Scalar(c.evaluate(v)))

    def degree_range(self, i: int):
        xs = [e[i] for e in self.terms]
        return (min(xs), max(xs)) if xs else (0, 0)

    def to_str(self, names=None) -> str:
        names = names or [f"x{i + 1}" for i in range(self.arity)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(
                (n if x == 1 else f"{n}^{x}") for n, x in zip(names, e) if x
            )
            parts.append(f"({render_scalar(c)})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"MultiPoly({self.to_str()})"


def poly_arith(p: MultiPoly, q: MultiPoly, op: str) -> MultiPoly:
    p._check(q)
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}")


def signed_symmetrize(p: MultiPoly, vars) -> MultiPoly:
    """sum over permutations sigma of vars of sgn(sigma) * sigma(p)."""
    vars = list(vars)
    if any(v < 0 or v >= p.arity for v in vars):
        raise ValueError("variable index outside the arity")
    if len(set(vars)) != len(vars):
        raise ValueError("repeated variable in symmetrization set")
    out = MultiPoly(p.arity)
    for img in permutations(range(len(vars))):
        perm = list(range(p.arity))
        for a, b in enumerate(img):
            perm[vars[a]] = vars[b]
        term = p.permute(perm)
        out = out + term if _perm_sign(img) > 0 else out - term
    return out


def substitute(p: MultiPoly, var: int, value: MultiPoly) -> MultiPoly:
    """Replace variable var by value; negative powers need a monomial value."""
    p._check(value)
    out = MultiPoly(p.arity)
    cache = {}
    for e, c in p.terms.items():
        k = e[var]
        if k not in cache:
            cache[k] = value**k
        rest = list(e)
        rest[var] = 0
        out = out + MultiPoly(p.arity, {tuple(rest): c}) * cache[k]
    return out


__all__ = ["MultiPoly", "poly_arith", "signed_symmetrize", "substitute", "ZERO"]
