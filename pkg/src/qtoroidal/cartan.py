"""Root and lattice data of affine C_n and the form on ZJ."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


@dataclass(frozen=True)
class AlgebraParams:
    """Rank n of C_n and number N of toroidal directions (J = {1..N-1})."""

    n: int = 2
    N: int = 3

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.N, int) or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")

    @property
    def nodes(self) -> range:
        return range(0, self.n + 1)

    @property
    def dirs(self) -> range:
        return range(1, self.N)

    def is_long(self, i: int) -> bool:
        return i == 0 or i == self.n


@dataclass(frozen=True)
class WeightVector:
    """sum_i eps[i] * eps_i + delta * delta, with eps indexed 0..len-1.

    Coordinates are stored as a tuple of Fractions; trailing zeros are
    stripped so that equal vectors compare equal regardless of length.
    """

    eps: tuple = ()
    delta: Fraction = Fraction(0)

    def __post_init__(self):
        coords = [Fraction(c) for c in self.eps]
        while coords and coords[-1] == 0:
            coords.pop()
        object.__setattr__(self, "eps", tuple(coords))
        object.__setattr__(self, "delta", Fraction(self.delta))

    @classmethod
    def from_map(cls, eps: dict, delta=0) -> "WeightVector":
        size = max(eps, default=-1) + 1
        return cls(tuple(eps.get(i, 0) for i in range(size)), delta)

    @classmethod
    def basis(cls, i: int, c=1) -> "WeightVector":
        return cls(tuple([0] * i + [c]))

    def coord(self, i: int) -> Fraction:
        return self.eps[i] if i < len(self.eps) else Fraction(0)

    def __add__(self, other: "WeightVector") -> "WeightVector":
        size = max(len(self.eps), len(other.eps))
        return WeightVector(
            tuple(self.coord(i) + other.coord(i) for i in range(size)),
            self.delta + other.delta,
        )

    def __neg__(self) -> "WeightVector":
        return WeightVector(tuple(-c for c in self.eps), -self.delta)

    def __sub__(self, other: "WeightVector") -> "WeightVector":
        return self + (-other)

    def scale(self, c) -> "WeightVector":
        c = Fraction(c)
        return WeightVector(tuple(c * x for x in self.eps), c * self.delta)

    def is_zero(self) -> bool:
        return not self.eps and self.delta == 0

    def to_json(self) -> dict:
        out = {f"eps{i}": str(c) for i, c in enumerate(self.eps) if c}
        if self.delta:
            out["delta"] = str(self.delta)
        return out


ZERO_WEIGHT = WeightVector()


@dataclass(frozen=True)
class JVector:
    """Integer vector in ZJ; comps[s-1] is the coefficient of s_s."""

    comps: tuple = ()

    def __post_init__(self):
        coords = [int(c) for c in self.comps]
        while coords and coords[-1] == 0:
            coords.pop()
        object.__setattr__(self, "comps", tuple(coords))

    @classmethod
    def basis(cls, s: int, c: int = 1) -> "JVector":
        return cls(tuple([0] * (s - 1) + [c]))

    def coord(self, s: int) -> int:
        return self.comps[s - 1] if 0 < s <= len(self.comps) else 0

    def __add__(self, other: "JVector") -> "JVector":
        size = max(len(self.comps), len(other.comps))
        return JVector(tuple(self.coord(s) + other.coord(s) for s in range(1, size + 1)))

    def __neg__(self) -> "JVector":
        return JVector(tuple(-c for c in self.comps))

    def __sub__(self, other: "JVector") -> "JVector":
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.comps

    def to_json(self) -> dict:
        return {f"s{s}": c for s, c in enumerate(self.comps, start=1) if c}


ZERO_J = JVector()


def _check_node(n: int, i: int) -> None:
    if not (0 <= i <= n):
        raise IndexError(f"node {i} outside 0..{n}")


def d_value(i: int, n: int) -> Fraction:
    """Symmetrizer d_i: 1 at the long nodes 0 and n, 1/2 otherwise."""
    _check_node(n, i)
    return Fraction(1) if i in (0, n) else Fraction(1, 2)


@lru_cache(maxsize=None)
def simple_root(i: int, n: int) -> WeightVector:
    """alpha_i in (eps, delta) coordinates; alpha_0 = delta - 2 eps_1."""
    _check_node(n, i)
    if i == 0:
        return WeightVector((0, -2), delta=1)
    if i == n:
        return WeightVector.basis(n, 2)
    return WeightVector.basis(i) - WeightVector.basis(i + 1)


def weight_pairing(x: WeightVector, y: WeightVector) -> Fraction:
    """(eps_i|eps_j) = delta_ij / 2; the null root pairs to zero."""
    size = min(len(x.eps), len(y.eps))
    return sum((x.eps[i] * y.eps[i] for i in range(size)), Fraction(0)) / 2


@lru_cache(maxsize=None)
def root_pairing(i: int, j: int, n: int) -> Fraction:
    return weight_pairing(simple_root(i, n), simple_root(j, n))


@lru_cache(maxsize=None)
def cartan_entry(i: int, j: int, n: int) -> int:
    """a_ij = (alpha_i|alpha_j) / d_i."""
    val = root_pairing(i, j, n) / d_value(i, n)
    assert val.denominator == 1
    return int(val)


def cartan_matrix(n: int) -> list[list[int]]:
    return [[cartan_entry(i, j, n) for j in range(n + 1)] for i in range(n + 1)]


def marks(n: int) -> list[int]:
    """Null-vector coefficients (1, 2, ..., 2, 1) of the affine C_n matrix."""
    return [1] + [2] * (n - 1) + [1]


def jlattice_pairing(a: JVector, b: JVector) -> int:
    """(s_i|s_j) = -1 for i != j and 0 for i == j, extended bilinearly."""
    total = 0
    for s, x in enumerate(a.comps, start=1):
        if not x:
            continue
        for t, y in enumerate(b.comps, start=1):
            if y and s != t:
                total -= x * y
    return total
