from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwlab import liealg as la

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def test_commutator_of_pauli_basis_by_hand():
    t = -0.5j * PAULI
    # t1 t2 = (-i/2)^2 s1 s2 = -1/4 * i s3 ; t2 t1 = +1/4 i s3
    t1t2 = np.array([[-0.25j, 0], [0, 0.25j]])
    assert np.allclose(t[0] @ t[1], t1t2)
    assert np.allclose(la.commutator(t[0], t[1]), t[2], atol=1e-15)


def test_commutator_antisymmetric_and_dimension_check():
    X = la.anti_hermitian_part(np.arange(9.0).reshape(3, 3) + 1j)
    assert np.all(la.commutator(X, X) == 0)
    with pytest.raises(ValueError):
        la.commutator(np.zeros((2, 2)), np.zeros((3, 3)))


@pytest.mark.parametrize("dim", [2, 3, 4, 5, 7])
def test_principal_su2_relations_and_casimir(dim):
    t = la.principal_su2(dim)
    assert t.bracket_defect() <= 1e-14
    s = (dim - 1) / 2
    assert np.allclose(t.casimir(), -s * (s + 1) * np.eye(dim), atol=1e-10)
    assert np.allclose(np.diag(np.diag(t.t3)), t.t3)
    assert np.allclose(np.diag(1j * t.t3).real, [s - k for k in range(dim)])
    for m in t.as_array():
        assert la.is_anti_hermitian(m) and la.is_traceless(m)


def test_principal_su2_dim2_is_the_standard_basis():
    t = la.principal_su2(2)
    assert np.allclose(t.as_array(), -0.5j * PAULI)


def test_principal_su2_dim3_is_spin_one():
    t = la.principal_su2(3)
    # i t_a are hermitian spin-1 matrices with eigenvalues -1, 0, 1
    for m in t.as_array():
        assert np.allclose(np.linalg.eigvalsh(1j * m), [-1, 0, 1], atol=1e-14)


def test_principal_su2_rejects_small_dim():
    with pytest.raises(ValueError):
        la.principal_su2(1)


def test_su2_triple_check_rejects_wrong_relations():
    t = la.principal_su2(2)
    bad = la.Su2Triple(t.t1, t.t2, -t.t3)
    with pytest.raises(ValueError):
        bad.check()


def test_cocharacter_element_examples():
    assert np.all(la.cocharacter_element(la.Cocharacter((1, -1)), 0.0) == 0)
    assert np.allclose(la.cocharacter_element(la.Cocharacter((1, -1)), 0.5), np.diag([0.5j, -0.5j]))
    assert np.allclose(la.cocharacter_element(la.Cocharacter((2, 0, -2)), 1.0), np.diag([2j, 0, -2j]))


def test_cocharacter_dominance_and_integrality():
    with pytest.raises(ValueError):
        la.Cocharacter((-1, 1))
    with pytest.raises(ValueError):
        la.Cocharacter((0.5, -0.5))
    assert la.Cocharacter((1, 0, -1)).is_special
    assert not la.Cocharacter((1, 0)).is_special


def test_trace_form_examples():
    t = la.principal_su2(2)
    assert la.trace_form(t.t3, t.t3) == pytest.approx(0.5)
    assert la.trace_form(t.t1, t.t2) == pytest.approx(0.0, abs=1e-16)
    with pytest.raises(ValueError):
        la.trace_form(np.zeros((2, 2)), np.zeros((3, 3)))


def test_lie_element_validation():
    with pytest.raises(ValueError):
        la.lie_element(np.eye(2))
    with pytest.raises(ValueError):
        la.lie_element(1j * np.eye(2), traceless=True)
    assert la.lie_element(1j * np.diag([1.0, -1.0]), traceless=True).shape == (2, 2)


matrices = st.integers(min_value=0, max_value=2 ** 32 - 1).map(
    lambda s: np.random.default_rng(s).standard_normal((3, 3, 3)) + 1j * np.random.default_rng(s + 1).standard_normal((3, 3, 3)))


@settings(max_examples=50, deadline=None)
@given(matrices, st.floats(-3, 3), st.floats(-3, 3))
def test_trace_form_symmetric_bilinear_positive(M, a, b):
    X, Y, Z = la.anti_hermitian_part(M)
    assert la.trace_form(X, Y) == pytest.approx(la.trace_form(Y, X), abs=1e-12)
    lhs = la.trace_form(a * X + b * Y, Z)
    assert lhs == pytest.approx(a * la.trace_form(X, Z) + b * la.trace_form(Y, Z), abs=1e-10)
    assert la.trace_form(X, X) > 0
    assert la.norm_sq(X) == pytest.approx(la.trace_form(X, X))


@settings(max_examples=30, deadline=None)
@given(matrices)
def test_commutator_preserves_anti_hermiticity(M):
    X, Y, _ = la.anti_hermitian_part(M)
    assert la.is_anti_hermitian(la.commutator(X, Y))
