from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtoroidal.identity import MultiPoly, poly_arith, signed_symmetrize, substitute
from qtoroidal.qscalar import ONE, Scalar, q_power
from qtoroidal.verifier import serre_polynomials


def z(k, arity=3, c=ONE):
    return MultiPoly.var(arity, k, 1, c)


def sign(p):
    s = 1
    for a in range(len(p)):
        for b in range(a + 1, len(p)):
            if p[a] > p[b]:
                s = -s
    return s


def test_multiply_by_one():
    p = z(0) * z(1) - z(2) * 3
    assert poly_arith(p, MultiPoly.const(3), "mul") == p


def test_difference_of_squares():
    lhs = poly_arith(z(0) - z(1), z(0) + z(1), "mul")
    assert lhs == z(0) * z(0) - z(1) * z(1)


def test_arity_mismatch():
    with pytest.raises(ValueError):
        poly_arith(z(0, 2), z(0, 3), "add")


def test_symmetric_polynomial_vanishes():
    p = z(0) * z(1) * z(2) + z(0) + z(1) + z(2)
    assert signed_symmetrize(p, [0, 1, 2]).is_zero()


def test_alternating_sum_two_vars():
    assert signed_symmetrize(z(0, 2), [0, 1]) == z(0, 2) - z(1, 2)


def test_symmetrize_subset_leaves_rest():
    p = z(0) * z(2)
    assert signed_symmetrize(p, [0, 1]) == z(0) * z(2) - z(1) * z(2)


def test_substitution_examples():
    w = MultiPoly.var(3, 2)
    assert substitute(z(0) - w, 0, w).is_zero()
    q = q_power(1)
    assert substitute(z(0) - z(1, c=q), 1, w) == z(0) - w * q


def test_substitution_order_independence():
    p = z(0) * z(0) * z(1) - z(1) * z(2) * 5
    a, b = z(2) + 1, z(2) * z(2)
    assert substitute(substitute(p, 0, a), 1, b) == substitute(substitute(p, 1, b), 0, a)


def test_serre_polynomials_vanish():
    polys, _ = serre_polynomials()
    for p in polys.values():
        assert signed_symmetrize(p, [0, 1, 2]).is_zero()
        assert signed_symmetrize(p.specialize(1), [0, 1, 2]).is_zero()


def linear_value(zs, q):
    """Signed sum of the linear polynomial evaluated in plain rationals."""
    total = Fraction(0)
    for perm in permutations(range(3)):
        w = [zs[perm[k]] for k in range(3)]
        prod = Fraction(1)
        for k in range(3):
            for t in range(k + 1, 3):
                prod *= q * w[k] - w[t]
        total += sign(perm) * (w[0] - (q * q + q) * w[1] + q**3 * w[2]) * prod
    return total


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=3, max_size=3), st.fractions(-3, 3, max_denominator=5))
def test_linear_identity_pointwise(zs, q):
    # independent route: numeric evaluation at rational points, no polynomial engine
    assert linear_value(zs, q) == 0


def test_non_identity_is_caught():
    # perturbing a coefficient must give a nonzero antisymmetrization
    q = q_power(1)
    _, prod = serre_polynomials()
    bad = (z(0) - z(1) * (q * q) + z(2) * q**3) * prod
    assert not signed_symmetrize(bad, [0, 1, 2]).is_zero()


monos = st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2)),
                        st.integers(-3, 3), max_size=4)
polys3 = monos.map(lambda d: MultiPoly(3, d))


@settings(max_examples=40, deadline=None)
@given(polys3, polys3, polys3)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert (a - a).is_zero()


@settings(max_examples=30, deadline=None)
@given(polys3)
def test_double_symmetrization_is_six_times(p):
    once = signed_symmetrize(p, [0, 1, 2])
    assert signed_symmetrize(once, [0, 1, 2]) == once * Scalar(6)
