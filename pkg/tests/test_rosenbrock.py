import numpy as np
import pytest

from rosenfied.errors import DimensionError, GiveUp, IrregularSystem, SingularAtPoint
from rosenfied.matpoly import MatrixPolynomial, det_poly
from rosenfied.rosenbrock import (SystemMatrix, det_spectrum, eval_R, eval_S, invariant_zeros,
                                  normal_rank, random_system)

from conftest import scalar_system


def test_dimensions(unit_system):
    s = unit_system
    assert (s.n, s.m, s.dA, s.dD, s.d, s.r, s.pencil_size) == (1, 1, 1, 1, 1, 1, 2)


def test_bad_coupling_shape():
    A = MatrixPolynomial.lam(2)
    D = MatrixPolynomial.lam(1)
    with pytest.raises(DimensionError):
        SystemMatrix(A, np.ones((1, 2)), np.ones((1, 2)), D)
    with pytest.raises(DimensionError):
        SystemMatrix(A, np.ones((2, 1)), np.ones((2, 1)), D)


def test_degree_zero_rejected():
    with pytest.raises(DimensionError):
        SystemMatrix(MatrixPolynomial.identity(1), [[1]], [[1]], MatrixPolynomial.lam(1))


def test_S_poly_layout(unit_system):
    S = unit_system.S_poly()
    assert np.array_equal(S[0], [[0, -1], [1, 0]])
    assert np.array_equal(S[1], np.eye(2))
    assert np.allclose(eval_S(unit_system, 2.0), [[2, -1], [1, 2]])


def test_transfer_function(unit_system):
    # R(λ) = λ + 1/λ
    assert np.isclose(eval_R(unit_system, 2.0)[0, 0], 2.5)
    assert abs(eval_R(unit_system, 1j)[0, 0]) < 1e-15
    with pytest.raises(SingularAtPoint):
        eval_R(unit_system, 0.0)


def test_invariant_zeros_unit(unit_system):
    spec = invariant_zeros(unit_system)
    eig = spec.eigenvalues
    assert eig.size == 2 and np.allclose(sorted(eig, key=lambda z: z.imag), [-1j, 1j])
    assert spec.infinite_count == 0


def test_decoupled_zeros():
    s = scalar_system([-2, 1], [6, -5, 1], 0, 0)
    assert np.allclose(np.sort(invariant_zeros(s).eigenvalues.real), [2, 2, 3])


def test_infinite_eigenvalues_counted():
    # singular leading D coefficient drops the determinant degree
    s = scalar_system([-1, 1], [-2, 1, 0], 1, 0)
    spec = invariant_zeros(s)
    assert spec.formal_degree == 3 and spec.effective_degree == 2 and spec.infinite_count == 1


def test_irregular_detected():
    zero = MatrixPolynomial.zeros(2, 1)
    with pytest.raises(IrregularSystem):
        det_spectrum(zero)


def test_random_system_properties():
    s = random_system(2, 3, 3, 2, np.random.default_rng(1), integer=True)
    assert s.is_integer_valued()
    for arr in (s.A.coeffs, s.D.coeffs, s.B, s.C):
        assert np.all(np.abs(arr) <= 3)
    assert abs(np.linalg.det(s.A[s.dA])) > 0.5
    assert not det_poly(s.A).is_zero()
    assert normal_rank(s) == 5


def test_random_system_seeded():
    a = random_system(2, 2, 2, 3, np.random.default_rng(9))
    b = random_system(2, 2, 2, 3, np.random.default_rng(9))
    assert a.A == b.A and a.D == b.D and np.array_equal(a.B, b.B) and np.array_equal(a.C, b.C)
    assert not a.is_integer_valued()


def test_random_system_rejects_bad_dims():
    with pytest.raises(ValueError):
        random_system(1, 1, 0, 1, np.random.default_rng(0))


def test_random_system_gives_up():
    class Zeros:
        def integers(self, lo, hi, size):
            return np.zeros(size, dtype=int)

    with pytest.raises(GiveUp):
        random_system(1, 1, 1, 1, Zeros(), integer=True, max_tries=3)
