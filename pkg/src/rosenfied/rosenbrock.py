"""Rosenbrock system matrix S(λ) = [[A(λ), -B], [C, D(λ)]] and its transfer function."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GiveUp, IrregularSystem, SingularAtPoint
from .matpoly import MatrixPolynomial, det_poly, evaluate, is_regular, polish_roots

POLE_RCOND = 1e-12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    formal_degree: int
    effective_degree: int

    @property
    def infinite_count(self):
        return self.formal_degree - self.effective_degree


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """The quadruple (A(λ), B, C, D(λ)) with constant coupling matrices."""

    A: MatrixPolynomial
    B: np.ndarray
    C: np.ndarray
    D: MatrixPolynomial
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = self.A if isinstance(self.A, MatrixPolynomial) else MatrixPolynomial(self.A)
        D = self.D if isinstance(self.D, MatrixPolynomial) else MatrixPolynomial(self.D)
        B = np.array(self.B, dtype=np.complex128, ndmin=2)
        C = np.array(self.C, dtype=np.complex128, ndmin=2)
        n, m = A.size, D.size
        if A.deg < 1 or D.deg < 1:
            raise DimensionError(f"A and D need degree >= 1 (got d_A={A.deg}, d_D={D.deg})")
        if B.shape != (n, m):
            raise DimensionError(f"B must be {n}x{m}, got {B.shape[0]}x{B.shape[1]}")
        if C.shape != (m, n):
            raise DimensionError(f"C must be {m}x{n}, got {C.shape[0]}x{C.shape[1]}")
        B.setflags(write=False)
        C.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.A.size

    @property
    def m(self):
        return self.D.size

    @property
    def dA(self):
        return self.A.deg

    @property
    def dD(self):
        return self.D.deg

    @property
    def d(self):
        return max(self.dA, self.dD)

    @property
    def r(self):
        return min(self.dA, self.dD)

    @property
    def pencil_size(self):
        return self.n * self.dA + self.m * self.dD

    def is_integer_valued(self):
        arrays = (self.A.coeffs, self.B, self.C, self.D.coeffs)
        return all(np.array_equal(a, np.round(a.real)) for a in arrays)

    def S_poly(self):
        """S(λ) as an (n+m)-square matrix polynomial of degree d."""
        n, m, d = self.n, self.m, self.d
        out = np.zeros((d + 1, n + m, n + m), dtype=np.complex128)
        out[: self.dA + 1, :n, :n] = self.A.coeffs
        out[: self.dD + 1, n:, n:] = self.D.coeffs
        out[0, :n, n:] = -self.B
        out[0, n:, :n] = self.C
        return MatrixPolynomial(out)

    def with_coupling(self, B=None, C=None):
        return SystemMatrix(self.A, self.B if B is None else B, self.C if C is None else C, self.D)


def eval_S(sys, lam0):
    n = sys.n
    out = np.empty((n + sys.m, n + sys.m), dtype=np.complex128)
    out[:n, :n] = evaluate(sys.A, lam0)
    out[:n, n:] = -sys.B
    out[n:, :n] = sys.C
    out[n:, n:] = evaluate(sys.D, lam0)
    return out


def eval_R(sys, lam0):
    """R(λ0) = D(λ0) + C A(λ0)^{-1} B."""
    a = evaluate(sys.A, lam0)
    if np.linalg.cond(a) * POLE_RCOND > 1.0:
        raise SingularAtPoint(f"A({lam0}) is numerically singular")
    return evaluate(sys.D, lam0) + sys.C @ np.linalg.solve(a, sys.B)


def backward_error(p, z):
    """σ_min / σ_max of P(z): how far P(z) is from singular, relative to its size."""
    s = np.linalg.svd(evaluate(p, z), compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def det_spectrum(p, formal_degree=None, polish=True, tol=1e-10):
    """Finite roots of det P(λ) from the interpolated determinant.

    Companion-matrix roots are refined with Aberth steps driven by Jacobi's formula.
    For each root the refined value replaces the companion estimate only if P is
    closer to singular there, so polishing never makes a root worse. This matters
    for large pencils, whose interpolated low-order coefficients can be poor.
    """
    det = det_poly(p, tol)
    if det.is_zero():
        raise IrregularSystem("determinant vanishes identically")
    roots = det.roots()
    if polish and roots.size:
        refined = polish_roots(p, roots, maxiter=100)
        for k in range(roots.size):
            if np.isfinite(refined[k]) and backward_error(p, refined[k]) <= backward_error(p, roots[k]):
                roots[k] = refined[k]
    if formal_degree is None:
        formal_degree = p.size * p.deg
    return Spectrum(np.sort_complex(roots), int(formal_degree), det.degree)


def invariant_zeros(sys, polish=True):
    """Roots of det S(λ) with multiplicity; the spectral oracle for pencil checks."""
    return det_spectrum(sys.S_poly(), sys.n * sys.dA + sys.m * sys.dD, polish=polish)


def normal_rank(sys, samples=20, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0
    for _ in range(samples):
        z = complex(rng.normal(), rng.normal())
        mat = eval_S(sys, z)
        s = np.linalg.svd(mat, compute_uv=False)
        tol = max(mat.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        best = max(best, int(np.sum(s > tol)))
    return best


def random_system(n, m, dA, dD, rng, integer=False, max_tries=100):
    """Random system with regular A(λ) and invertible leading coefficient A_{d_A}.

    Integer mode draws entries from {-3, ..., 3}; otherwise standard normal reals.
    """
    if min(n, m, dA, dD) < 1:
        raise ValueError("n, m, dA, dD must all be >= 1")

    def draw(*shape):
        if integer:
            return rng.integers(-3, 4, size=shape).astype(float)
        return rng.standard_normal(shape)

    for _ in range(max_tries):
        A = MatrixPolynomial(draw(dA + 1, n, n))
        D = MatrixPolynomial(draw(dD + 1, m, m))
        B, C = draw(n, m), draw(m, n)
        lead = A.coeffs[-1]
        if integer:
            # integer determinant: nonzero means invertible
            degenerate = abs(np.linalg.det(lead)) < 0.5
        else:
            degenerate = np.linalg.cond(lead) > 1e8
        if degenerate:
            continue
        if not is_regular(A):
            continue
        return SystemMatrix(A, B, C, D)
    raise GiveUp(f"no valid system after {max_tries} draws (n={n}, m={m}, dA={dA}, dD={dD})")
