from fractions import Fraction

import pytest

from qtoroidal.cartan import AlgebraParams, JVector, WeightVector, simple_root
from qtoroidal.fock import LatticeLabel, State, act_creation, monomial, vacuum
from qtoroidal.oscillator import OscGen
from qtoroidal.qscalar import ONE, Scalar, q_int, q_power
from qtoroidal.vertexop import (
    ModeMap,
    OperatorExpression,
    apply_modes,
    build_K,
    build_phi_psi,
    build_theorem_map,
    build_X_eps,
    build_X_long_minus,
    build_X_multi,
    build_Y,
    build_Z,
    compose,
    k_multiplier,
    normalize_window,
)

P = AlgebraParams(2, 3)
n = P.n


@pytest.mark.parametrize("sign", [1, -1])
def test_Z_templates(sign):
    Z = build_Z(1, 1, sign, n)
    assert Z.creat[0].coeff(3, n) == Scalar(Fraction(sign, 3))
    assert Z.ann[0].coeff(1, n) == Scalar(-sign)
    assert Z.shift == LatticeLabel(beta=WeightVector.basis(1, sign))


@pytest.mark.parametrize("sign", [1, -1])
def test_Y_templates(sign):
    Y = build_Y(1, 1, sign, n)
    assert Y.creat[0].coeff(1, n) == -sign * q_power(Fraction(sign, 4))
    assert Y.zmodes[0].zmult == -2 * sign
    assert Y.shift.alpha == simple_root(1, n).scale(sign)


@pytest.mark.parametrize("sign", [1, -1])
def test_X_multi_templates(sign):
    X = build_X_multi(n, sign, P)
    assert dict(X.monom) == {"z1": 1, "z2": 1}
    ann = [t for t in X.ann if t.var == "z1"][0]
    assert ann.coeff(2, n) == -sign * q_power(-sign) / q_int(2, 1)
    assert X.shift.alpha == simple_root(n, n).scale(sign)


def test_X_eps_long_labels():
    X = build_X_eps(0, 1, 1, 1, P).terms[0].factors[0]
    assert X.shift.beta == WeightVector.basis(0, 2)
    assert X.shift.alpha == simple_root(0, n)
    assert X.shift.sigma == JVector.basis(1)
    assert len(build_X_eps(0, 0, 1, 1, P).terms) == 1


def test_X_eps_rejects_bad_eps():
    with pytest.raises(ValueError):
        build_X_eps(1, 0, 1, 1, P)
    with pytest.raises(ValueError):
        build_X_eps(0, 1, 1, -1, P)


def test_X_eps_short_minus_labels():
    X = build_X_eps(1, 1, 1, -1, P).terms[0].factors[0]
    assert X.shift.beta == WeightVector.basis(2) - WeightVector.basis(1)
    assert X.shift.sigma == JVector.basis(1, -1)


def test_theorem_map_short_plus():
    T = build_theorem_map(1, 1, 1, P)
    h = q_power(Fraction(1, 2)) - q_power(Fraction(-1, 2))
    assert [t.coeff for t in T.terms] == [h.inverse(), -h.inverse()]
    assert all(t.varpowers == (("z", Fraction(-1)),) for t in T.terms)


def test_theorem_map_long_minus():
    T = build_theorem_map(0, 1, -1, P)
    assert len(T.terms) == 1 and T.terms[0].coeff == ONE and T.terms[0].varpowers == ()
    assert T.terms[0].factors[0] == build_X_long_minus(0, 1, P)


def test_theorem_map_long_plus_has_three_terms():
    assert len(build_theorem_map(2, 1, 1, P).terms) == 3


def test_phi_psi_zero_modes_are_K():
    lab = vacuum(LatticeLabel(alpha=simple_root(1, n)))
    for conv in ("q", "q_i"):
        m = k_multiplier(1, n, conv)
        phi = apply_modes(build_phi_psi(1, 1, "phi", P, k_convention=conv), lab, (-2, 2), 2, n)
        psi = apply_modes(build_phi_psi(1, 1, "psi", P, k_convention=conv), lab, (-2, 2), 2, n)
        # (alpha_1|alpha_1) = 1
        assert phi.get((0,)) == lab.scale(q_power(m))
        assert psi.get((0,)) == lab.scale(q_power(-m))
        K = apply_modes(build_K(1, P, k_convention=conv), lab, (0, 0), 0, n, vars=())
        assert K.get(()) == lab.scale(q_power(m))


def test_phi_annihilates_vacuum_above_zero_mode():
    phi = apply_modes(build_phi_psi(1, 1, "phi", P), vacuum(), (-3, 3), 3, n)
    assert list(phi.entries) == [(Fraction(0),)]


def test_Z_on_vacuum_by_exponential_expansion():
    M = apply_modes(build_Z(1, 1, 1, n), vacuum(), (-1, 2), 2, n)
    shifted = LatticeLabel(beta=WeightVector.basis(1))
    b1, b2 = OscGen("b", 1, 1, -1), OscGen("b", 1, 1, -2)
    assert M.get((0,)) == vacuum(shifted)
    assert M.get((1,)) == State({monomial([b1], shifted): 1})
    assert M.get((2,)) == State({monomial([b2], shifted): Fraction(1, 2), monomial([b1, b1], shifted): Fraction(1, 2)})
    assert M.get((-1,)).is_zero()


def test_Y_exponents_follow_zero_mode():
    # on e^{alpha_1} the factor z^{-2 a_1(0)} moves every exponent by -2 (alpha_1|alpha_1) = -2
    Y = build_Y(1, 1, 1, n)
    base = apply_modes(Y, vacuum(), (-4, 4), 2, n)
    sec = apply_modes(Y, vacuum(LatticeLabel(alpha=simple_root(1, n))), (-6, 6), 2, n)
    assert sorted(k[0] - 2 for k in base.entries) == sorted(k[0] for k in sec.entries)


@pytest.mark.parametrize("builder", [
    lambda: OperatorExpression.single(build_Y(1, 1, 1, n, "z")) * OperatorExpression.single(build_Y(2, 1, -1, n, "w")),
    lambda: build_theorem_map(1, 1, 1, P, "z") * build_theorem_map(2, 1, -1, P, "w"),
    lambda: build_theorem_map(0, 1, -1, P, "z") * build_theorem_map(0, 1, -1, P, "w"),
])
@pytest.mark.parametrize("state", ["vac", "a"])
def test_wick_engine_matches_sequential(builder, state):
    expr = builder()
    st = vacuum() if state == "vac" else act_creation(OscGen("a", 1, 1, -1), vacuum())
    win = {"z": (-2, 2), "w": (-2, 2)}
    fast = apply_modes(expr, st, win, 2, n, vars=("z", "w"))
    slow = apply_modes(expr, st, win, 2, n, method="sequential", vars=("z", "w"))
    assert fast == slow


def test_compose():
    X = build_theorem_map(1, 1, 1, P)
    assert compose([(X, "z")]).terms == X.terms
    Y = build_theorem_map(2, 1, 1, P)
    C = compose([(X, "z"), (Y, "w")])
    assert len(C) == len(X) * len(Y)
    assert C.vars == ("z", "w")
    with pytest.raises(ValueError):
        compose([(X, "z"), (Y, "z")])


def test_modemap_shift_and_window():
    M = ModeMap(("z",), {(0,): vacuum(), (1,): vacuum()})
    assert M.shift("z", 2) == ModeMap(("z",), {(2,): vacuum(), (3,): vacuum()})
    assert M.restrict((0, 0)) == ModeMap(("z",), {(0,): vacuum()})
    with pytest.raises(ValueError):
        normalize_window((Fraction(1, 8), 1), ("z",))
