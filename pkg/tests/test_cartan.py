from fractions import Fraction

import pytest

from qtoroidal.cartan import (
    AlgebraParams,
    JVector,
    WeightVector,
    cartan_entry,
    cartan_matrix,
    d_value,
    jlattice_pairing,
    marks,
    root_pairing,
    simple_root,
    weight_pairing,
)


def eps_expand(i, n):
    """Independent expansion of alpha_i as an eps-coefficient dict plus delta part."""
    if i == 0:
        return {1: -2}, 1
    if i == n:
        return {n: 2}, 0
    return {i: 1, i + 1: -1}, 0


def pairing_oracle(i, j, n):
    a, _ = eps_expand(i, n)
    b, _ = eps_expand(j, n)
    return sum(Fraction(c * b.get(k, 0), 2) for k, c in a.items())


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_diagonal_is_two(n):
    assert all(cartan_entry(i, i, n) == 2 for i in range(n + 1))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_entries_match_eps_expansion(n):
    for i in range(n + 1):
        for j in range(n + 1):
            assert cartan_entry(i, j, n) == pairing_oracle(i, j, n) / d_value(i, n)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_short_long_boundary(n):
    assert cartan_entry(n - 1, n, n) == -2
    assert cartan_entry(n, n - 1, n) == -1
    assert cartan_entry(1, 0, n) == -2
    assert cartan_entry(0, 1, n) == -1


def test_nonadjacent_zero():
    assert cartan_entry(0, 2, 4) == 0


def test_c2_matrix():
    assert cartan_matrix(2) == [[2, -1, 0], [-2, 2, -2], [0, -1, 2]]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_marks_give_null_root(n):
    # delta = sum m_i alpha_i pairs to zero with every alpha_j
    A = cartan_matrix(n)
    m = marks(n)
    assert all(sum(m[i] * d_value(i, n) * A[i][j] for i in range(n + 1)) == 0 for j in range(n + 1))


def test_simple_roots():
    n = 3
    assert simple_root(n, n) == WeightVector.basis(n, 2)
    assert simple_root(1, n) == WeightVector.basis(1) - WeightVector.basis(2)
    a0 = simple_root(0, n)
    assert a0.delta == 1 and a0.coord(1) == -2


@pytest.mark.parametrize("n", [2, 3])
def test_alpha0_telescopes_to_delta(n):
    total = simple_root(0, n)
    for i in range(1, n):
        total = total + simple_root(i, n).scale(2)
    total = total + simple_root(n, n)
    assert total.delta == 1 and all(total.coord(k) == 0 for k in range(1, n + 1))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_pairing_is_symmetrized_matrix(n):
    assert weight_pairing(simple_root(n, n), simple_root(n, n)) == 2
    for i in range(n + 1):
        for j in range(n + 1):
            assert root_pairing(i, j, n) == d_value(i, n) * cartan_entry(i, j, n)


def test_delta_pairs_to_zero():
    delta = WeightVector((), delta=1)
    assert all(weight_pairing(delta, simple_root(i, 3)) == 0 for i in range(4))


def test_d_values():
    assert (d_value(0, 3), d_value(1, 3), d_value(2, 3), d_value(3, 3)) == (1, Fraction(1, 2), Fraction(1, 2), 1)


def test_jlattice_form():
    s1, s2 = JVector.basis(1), JVector.basis(2)
    assert jlattice_pairing(s1, s1) == 0
    assert jlattice_pairing(s1, s2) == -1
    assert jlattice_pairing(s1 + s2, s1) == -1


def test_params_validation():
    with pytest.raises(ValueError):
        AlgebraParams(1, 3)
    with pytest.raises(ValueError):
        AlgebraParams(2, 1)
    P = AlgebraParams(3, 4)
    assert list(P.nodes) == [0, 1, 2, 3] and list(P.dirs) == [1, 2, 3]
    assert P.is_long(0) and P.is_long(3) and not P.is_long(1)


def test_node_range_checked():
    with pytest.raises(IndexError):
        simple_root(4, 3)
