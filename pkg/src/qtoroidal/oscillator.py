"""Quantum Heisenberg algebra: structure constants and zero-mode exchange."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .cartan import (
    JVector,
    WeightVector,
    cartan_entry,
    d_value,
    jlattice_pairing,
    simple_root,
    weight_pairing,
)
from .qscalar import ZERO, Scalar, q_int, q_power


class OscGen(NamedTuple):
    """Oscillator a_node^(dir)(mode) or b_node^(dir)(mode); mode != 0."""

    family: str
    node: int
    dir: int
    mode: int

    def __str__(self):
        return f"{self.family}{self.node}^({self.dir})({self.mode})"


class ZeroMode(NamedTuple):
    """a0(i), b0(i) or s0(s).  For s0, index is the direction s of the basis vector."""

    kind: str
    index: int

    def __str__(self):
        return f"{self.kind}({self.index})"


def make_osc(family: str, node: int, dir: int, mode: int) -> OscGen:
    if family not in ("a", "b"):
        raise ValueError(f"unknown oscillator family {family!r}")
    if mode == 0:
        raise ValueError("oscillator mode must be nonzero; zero modes are ZeroMode")
    return OscGen(family, node, dir, mode)


@lru_cache(maxsize=None)
def _a_comm(i: int, j: int, r: int, n: int) -> Scalar:
    a_ij = cartan_entry(i, j, n)
    di, dj = d_value(i, n), d_value(j, n)
    qj = q_power(dj)
    val = q_int(r * a_ij, di) * (q_power(Fraction(-r, 2)) - q_power(Fraction(r, 2)))
    return val / (Fraction(r) * (qj - qj.inverse()))


def comm(g1: OscGen, g2: OscGen, n: int) -> Scalar:
    """Central value of [g1, g2]."""
    if g1.family != g2.family or g1.dir != g2.dir or g1.mode + g2.mode != 0:
        return ZERO
    if g1.family == "b":
        return Scalar(g1.mode) if g1.node == g2.node else ZERO
    return _a_comm(g1.node, g2.node, g1.mode, n)


def zero_mode_shift_exponent(h: ZeroMode, shift, n: int) -> Fraction:
    """Exponent picked up when z^h is moved across e^shift.

    shift must live in the lattice h pairs with: a WeightVector for a0
    (alpha lattice), a WeightVector without delta for b0 (beta lattice), a
    JVector for s0.
    """
    if h.kind == "a0":
        if not isinstance(shift, WeightVector):
            raise TypeError("a0 pairs with the alpha lattice (WeightVector)")
        return weight_pairing(simple_root(h.index, n), shift)
    if h.kind == "b0":
        if not isinstance(shift, WeightVector) or shift.delta != 0:
            raise TypeError("b0 pairs with the beta lattice (WeightVector, no delta)")
        return 2 * shift.coord(h.index) / 2
    if h.kind == "s0":
        if not isinstance(shift, JVector):
            raise TypeError("s0 pairs with ZJ (JVector)")
        return Fraction(jlattice_pairing(JVector.basis(h.index), shift))
    raise ValueError(f"unknown zero mode kind {h.kind!r}")
