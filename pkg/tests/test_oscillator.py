from fractions import Fraction

import pytest

from qtoroidal.cartan import JVector, WeightVector, cartan_entry, d_value, simple_root
from qtoroidal.oscillator import OscGen, ZeroMode, comm, make_osc, zero_mode_shift_exponent
from qtoroidal.qscalar import ONE, ZERO, Scalar, q_power

v = Scalar.v_power


def qint_oracle(m, d):
    # [m]_d straight from the defining fraction
    return (q_power(d * m) - q_power(-d * m)) / (q_power(d) - q_power(-d))


def a_comm_oracle(i, j, r, n):
    qj = q_power(d_value(j, n))
    gamma = q_power(Fraction(-1, 2))
    return qint_oracle(r * cartan_entry(i, j, n), d_value(i, n)) / r * (gamma**r - gamma ** (-r)) / (qj - qj.inverse())


def test_different_directions_commute():
    assert comm(OscGen("a", 1, 1, 1), OscGen("a", 1, 2, -1), 2) == ZERO


def test_b_value():
    assert comm(OscGen("b", 1, 1, 2), OscGen("b", 1, 1, -2), 2) == Scalar(2)
    assert comm(OscGen("b", 1, 1, 2), OscGen("b", 2, 1, -2), 2) == ZERO


def test_a_value_short():
    assert comm(OscGen("a", 1, 1, 1), OscGen("a", 1, 1, -1), 2) == -(v(2) + v(-2))


@pytest.mark.parametrize("n", [2, 3])
def test_a_matches_formula(n):
    for i in range(n + 1):
        for j in range(n + 1):
            for r in (1, 2, 3, -1, -2):
                got = comm(OscGen("a", i, 1, r), OscGen("a", j, 1, -r), n)
                assert got == a_comm_oracle(i, j, r, n)


def test_mixed_families_commute():
    assert comm(OscGen("a", 1, 1, 1), OscGen("b", 1, 1, -1), 2) == ZERO


def test_mode_sum_must_vanish():
    assert comm(OscGen("a", 1, 1, 2), OscGen("a", 1, 1, -1), 2) == ZERO


def test_antisymmetry():
    g, h = OscGen("a", 1, 1, 2), OscGen("a", 2, 1, -2)
    assert comm(g, h, 2) == -comm(h, g, 2)


def test_make_osc_validation():
    with pytest.raises(ValueError):
        make_osc("a", 1, 1, 0)
    with pytest.raises(ValueError):
        make_osc("c", 1, 1, 1)


def test_zero_mode_shift_exponents():
    n = 2
    for i in range(n + 1):
        for j in range(n + 1):
            got = zero_mode_shift_exponent(ZeroMode("a0", i), simple_root(j, n), n)
            assert got == d_value(i, n) * cartan_entry(i, j, n)
    assert zero_mode_shift_exponent(ZeroMode("b0", 1), WeightVector.basis(1), n) == 1
    assert zero_mode_shift_exponent(ZeroMode("b0", 1), WeightVector.basis(2), n) == 0
    assert zero_mode_shift_exponent(ZeroMode("s0", 1), JVector.basis(1), n) == 0
    assert zero_mode_shift_exponent(ZeroMode("s0", 1), JVector.basis(2), n) == -1


def test_zero_mode_lattice_type_checked():
    with pytest.raises(TypeError):
        zero_mode_shift_exponent(ZeroMode("a0", 1), JVector.basis(1), 2)
