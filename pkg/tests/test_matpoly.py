import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from rosenfied.matpoly import (MatrixPolynomial, ScalarPolynomial, derivative, det_poly, evaluate,
                               horner_shift, interpolation_radius, is_regular, is_unimodular,
                               polish_roots)


def rand_poly(rng, size, deg, integer=True):
    if integer:
        return MatrixPolynomial(rng.integers(-3, 4, size=(deg + 1, size, size)).astype(float))
    return MatrixPolynomial(rng.standard_normal((deg + 1, size, size)))


def sympy_det_coeffs(p):
    lam = sympy.Symbol("lam")
    c = np.real(p.coeffs).astype(int)
    mat = sympy.Matrix(p.size, p.size, lambda i, j: sum(int(c[k, i, j]) * lam ** k
                                                         for k in range(p.deg + 1)))
    poly = sympy.Poly(mat.det(method="berkowitz"), lam)
    return [int(v) for v in reversed(poly.all_coeffs())]


def test_lambda_squared():
    lam = MatrixPolynomial.lam(2)
    sq = lam @ lam
    assert sq.deg == 2
    assert np.array_equal(sq[2], np.eye(2)) and not np.any(sq[:2])


def test_add_pads_degrees():
    p = MatrixPolynomial.identity(2) + MatrixPolynomial.lam(2).shift(2)
    assert p.deg == 3
    assert np.array_equal(p[0], np.eye(2)) and np.array_equal(p[3], np.eye(2))
    assert p - p == MatrixPolynomial.zeros(2)


def test_immutable():
    p = MatrixPolynomial.identity(2)
    with pytest.raises(AttributeError):
        p.coeffs = None
    with pytest.raises(ValueError):
        p.coeffs[0, 0, 0] = 3


def test_rejects_non_square():
    with pytest.raises(ValueError):
        MatrixPolynomial(np.zeros((2, 2, 3)))


def test_ndarray_matmul_stays_polynomial():
    out = np.eye(2) @ MatrixPolynomial.lam(2)
    assert isinstance(out, MatrixPolynomial) and out.deg == 1


def test_effective_degree_and_trim():
    p = MatrixPolynomial([np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))])
    assert p.deg == 2 and p.effective_degree == 0
    assert p.trim().deg == 0
    assert MatrixPolynomial.zeros(2, 3).effective_degree == -1


def test_evaluate_matches_polyval(rng):
    p = rand_poly(rng, 1, 4, integer=False)
    z = 0.3 - 1.1j
    assert np.isclose(evaluate(p, z)[0, 0], np.polynomial.polynomial.polyval(z, p.coeffs[:, 0, 0]))


def test_horner_shift_recurrence(rng):
    p = rand_poly(rng, 2, 4)
    lam = MatrixPolynomial.lam(2)
    for k in range(p.deg):
        step = lam @ horner_shift(p, k) + p[p.deg - k - 1]
        assert step == horner_shift(p, k + 1)
    assert horner_shift(p, 0) == MatrixPolynomial([p[p.deg]])
    assert horner_shift(p, p.deg) == p
    with pytest.raises(ValueError):
        horner_shift(p, p.deg + 1)


def test_derivative():
    p = MatrixPolynomial([[[1.0]], [[2.0]], [[3.0]]])
    assert derivative(p) == MatrixPolynomial([[[2.0]], [[6.0]]])
    assert derivative(MatrixPolynomial.identity(2)) == MatrixPolynomial.zeros(2)


def test_det_poly_diagonal():
    # diag(λ - 1, λ - 2)
    p = MatrixPolynomial([-np.diag([1.0, 2.0]), np.eye(2)])
    assert np.allclose(det_poly(p).coeffs, [2, -3, 1])


@pytest.mark.parametrize("size,deg", [(1, 3), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_det_poly_against_cofactor_expansion(size, deg):
    rng = np.random.default_rng(size * 10 + deg)
    for _ in range(4):
        p = rand_poly(rng, size, deg)
        want = np.trim_zeros(np.array(sympy_det_coeffs(p), dtype=float), "b")
        got = det_poly(p).coeffs
        assert got.size == max(want.size, 1)
        assert np.allclose(got, want, atol=1e-8 * max(1.0, np.max(np.abs(want), initial=0.0)))


def test_det_poly_large_coefficients():
    p = MatrixPolynomial([np.diag([-1e3, -2e3]), np.eye(2)])
    assert interpolation_radius(p) > 1
    assert np.allclose(det_poly(p).coeffs, [2e6, -3e3, 1], rtol=1e-9)


def test_unimodular():
    unit_upper = MatrixPolynomial([np.eye(2), [[0, 1], [0, 0]]])
    assert is_unimodular(unit_upper)
    assert not is_unimodular(MatrixPolynomial.lam(2))
    assert not is_unimodular(MatrixPolynomial.zeros(2, 1))


def test_regularity():
    assert is_regular(MatrixPolynomial.lam(3))
    assert not is_regular(MatrixPolynomial.zeros(2, 2))
    ones = np.ones((2, 2))
    assert not is_regular(MatrixPolynomial([ones, ones]))


def test_scalar_polynomial_roots_and_trim():
    p = ScalarPolynomial([2, -3, 1, 1e-14])
    assert p.trim().degree == 2
    assert np.allclose(np.sort(p.trim().roots().real), [1, 2])
    assert ScalarPolynomial([0]).is_zero()
    assert ScalarPolynomial([5]).roots().size == 0


def test_polish_roots_refines():
    p = MatrixPolynomial([-np.diag([1.0, 2.0, 3.0]), np.eye(3)])
    rough = np.array([1.01, 1.98, 3.02])
    assert np.allclose(np.sort(polish_roots(p, rough).real), [1, 2, 3], atol=1e-12)


small_ints = st.integers(-3, 3)


@st.composite
def int_polys(draw, size=2, max_deg=3):
    deg = draw(st.integers(0, max_deg))
    vals = draw(st.lists(small_ints, min_size=(deg + 1) * size * size,
                         max_size=(deg + 1) * size * size))
    return MatrixPolynomial(np.array(vals, dtype=float).reshape(deg + 1, size, size))


@settings(max_examples=60, deadline=None)
@given(int_polys(), int_polys(), st.complex_numbers(max_magnitude=3, allow_nan=False,
                                                    allow_infinity=False))
def test_product_evaluates_pointwise(p, q, z):
    assert np.allclose(evaluate(p @ q, z), evaluate(p, z) @ evaluate(q, z), atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(int_polys(), int_polys())
def test_det_multiplicative(p, q):
    dp, dq, dpq = det_poly(p), det_poly(q), det_poly(p @ q)
    want = np.polynomial.polynomial.polymul(dp.coeffs, dq.coeffs)
    want = ScalarPolynomial(want).trim().coeffs
    got = dpq.coeffs
    scale = max(1.0, np.max(np.abs(want)))
    if np.allclose(want, 0):
        assert dpq.is_zero() or np.allclose(got, 0, atol=1e-8 * scale)
    else:
        assert got.size == want.size and np.allclose(got, want, atol=1e-8 * scale)
