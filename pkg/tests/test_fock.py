from fractions import Fraction

import pytest

from qtoroidal.cartan import AlgebraParams, JVector, WeightVector, simple_root
from qtoroidal.fock import (
    LatticeLabel,
    State,
    act_annihilation,
    act_creation,
    act_lattice,
    default_states,
    monomial,
    state_from_spec,
    vacuum,
    zero_mode_eigenvalue,
)
from qtoroidal.oscillator import OscGen, ZeroMode, comm
from qtoroidal.qscalar import ONE, Scalar

a_m1 = OscGen("a", 1, 1, -1)
a_p1 = OscGen("a", 1, 1, 1)


def test_create_on_vacuum():
    st = act_creation(a_m1, vacuum())
    assert st.terms == {monomial([a_m1]): ONE}


def test_create_twice_is_symmetric():
    b = OscGen("b", 2, 1, -2)
    assert act_creation(a_m1, act_creation(b, vacuum())) == act_creation(b, act_creation(a_m1, vacuum()))
    st = act_creation(a_m1, act_creation(a_m1, vacuum()))
    assert st.terms == {monomial([a_m1, a_m1]): ONE}


def test_creation_is_linear():
    s1 = vacuum()
    s2 = act_creation(OscGen("b", 0, 1, -1), vacuum()).scale(Scalar(3))
    assert act_creation(a_m1, s1 + s2) == act_creation(a_m1, s1) + act_creation(a_m1, s2)


def test_annihilate_vacuum():
    assert act_annihilation(a_p1, vacuum(), 2).is_zero()


def test_annihilate_b_pair():
    st = act_creation(OscGen("b", 1, 1, -1), vacuum())
    assert act_annihilation(OscGen("b", 1, 1, 1), st, 2) == vacuum()


def test_annihilate_leibniz():
    st = act_creation(a_m1, act_creation(a_m1, vacuum()))
    expected = act_creation(a_m1, vacuum()).scale(comm(a_p1, a_m1, 2) * 2)
    assert act_annihilation(a_p1, st, 2) == expected


def test_annihilation_hits_other_nodes():
    # a_2(1) against a_1(-1) picks up the off-diagonal structure constant
    st = act_creation(a_m1, vacuum())
    g = OscGen("a", 2, 1, 1)
    assert act_annihilation(g, st, 2) == vacuum().scale(comm(g, a_m1, 2))


def test_lattice_actions():
    n = 2
    st = act_lattice("e_a", 1, vacuum(), n)
    assert next(iter(st.terms)).label == LatticeLabel(alpha=simple_root(1, n))
    back = act_lattice("e_b", 2, act_lattice("e_b", 2, vacuum(), n), n, sign=-1)
    assert back == vacuum()
    start = vacuum(LatticeLabel(sigma=JVector.basis(2)))
    st = act_lattice("e_s", 1, start, n)
    assert next(iter(st.terms)).label.sigma == JVector.basis(1) + JVector.basis(2)


def test_zero_mode_eigenvalues():
    n = 2
    assert zero_mode_eigenvalue(ZeroMode("a0", 1), LatticeLabel(alpha=simple_root(1, n)), n) == 1
    lab = LatticeLabel(beta=WeightVector.basis(2))
    assert zero_mode_eigenvalue(ZeroMode("b0", 2), lab, n) == 1
    assert zero_mode_eigenvalue(ZeroMode("b0", 1), lab, n) == 0
    assert zero_mode_eigenvalue(ZeroMode("s0", 1), LatticeLabel(sigma=JVector.basis(2)), n) == -1


def test_monomials_need_negative_modes():
    with pytest.raises(ValueError):
        monomial([a_p1])


def test_state_algebra_and_degree():
    st = act_creation(OscGen("a", 1, 1, -3), vacuum()) + vacuum()
    assert st.degree == 3
    assert (st - st).is_zero()
    assert st.truncate(2) == vacuum()


def test_default_states():
    P = AlgebraParams(2, 3)
    sts = default_states(P)
    assert len(sts) == 1 + 2 * 3 * 2 + 3
    assert {"vac", "e^alpha1", "e^eps1", "e^s1"} <= set(sts)


def test_state_from_spec():
    P = AlgebraParams(2, 3)
    st = state_from_spec({"oscillators": [["a", 1, 1, -1]], "beta": {"1": 1}, "sigma": {"2": 1}, "coeff": "1/2"}, P)
    (m, c), = st.terms.items()
    assert c == Scalar(Fraction(1, 2))
    assert m.oscillators == (a_m1,)
    assert m.label.beta == WeightVector.basis(1) and m.label.sigma == JVector.basis(2)
    with pytest.raises(ValueError):
        state_from_spec({"oscillators": [["a", 1, 1, 2]]}, P)


def test_zero_coefficients_dropped():
    assert State({monomial(): 0}).is_zero()
