"""Dense matrix polynomials P(λ) = Σ λ^i A_i with square complex coefficients.

Coefficients are stored as one complex128 array of shape ``(deg + 1, size, size)``.
Products of small integer-valued inputs stay exact in double precision, which is
what the structural checks elsewhere in the package rely on.
"""
from __future__ import annotations

import numpy as np

TRIM_TOL = 1e-10


def _as_coeff_array(coeffs):
    arr = np.array(coeffs, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise ValueError("coefficients must be a non-empty list of square matrices")
    if arr.shape[1] != arr.shape[2]:
        raise ValueError(f"coefficient matrices must be square, got {arr.shape[1:]}")
    return arr


class ScalarPolynomial:
    """Scalar polynomial with coefficients in ascending powers."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.array(coeffs, dtype=np.complex128))
        if c.size == 0:
            c = np.zeros(1, dtype=np.complex128)
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self):
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else -1

    def is_zero(self):
        return self.degree < 0

    def trim(self, tol=TRIM_TOL):
        """Drop trailing coefficients below ``tol`` times the largest magnitude."""
        c = self.coeffs
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale == 0.0:
            return ScalarPolynomial([0.0])
        keep = np.nonzero(np.abs(c) > tol * scale)[0]
        return ScalarPolynomial(c[: keep[-1] + 1])

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def roots(self):
        """Roots via eigenvalues of the companion matrix."""
        p = self.trim(0.0)
        if p.degree <= 0:
            return np.zeros(0, dtype=np.complex128)
        return np.asarray(np.polynomial.polynomial.polyroots(p.coeffs), dtype=np.complex128)

    def __repr__(self):
        return f"ScalarPolynomial({self.coeffs.tolist()})"


class MatrixPolynomial:
    """Square matrix polynomial with a formal (declared) degree.

    The leading coefficient may be zero; ``deg`` is always ``len(coeffs) - 1``.
    Instances are immutable.
    """

    __slots__ = ("coeffs",)
    __array_ufunc__ = None  # make ndarray @ MatrixPolynomial defer to __rmatmul__

    def __init__(self, coeffs):
        arr = _as_coeff_array(coeffs)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixPolynomial is immutable")

    # construction helpers
    @classmethod
    def constant(cls, mat):
        return cls([mat])

    @classmethod
    def identity(cls, size):
        return cls([np.eye(size)])

    @classmethod
    def zeros(cls, size, deg=0):
        return cls(np.zeros((deg + 1, size, size)))

    @classmethod
    def lam(cls, size):
        """The polynomial λ·I."""
        return cls([np.zeros((size, size)), np.eye(size)])

    @property
    def size(self):
        return self.coeffs.shape[1]

    @property
    def deg(self):
        return self.coeffs.shape[0] - 1

    @property
    def effective_degree(self):
        nz = [i for i in range(self.deg + 1) if np.any(self.coeffs[i])]
        return nz[-1] if nz else -1

    def __getitem__(self, i):
        return self.coeffs[i]

    def __len__(self):
        return self.coeffs.shape[0]

    # arithmetic
    def _padded(self, deg):
        if deg == self.deg:
            return self.coeffs
        out = np.zeros((deg + 1, self.size, self.size), dtype=np.complex128)
        out[: self.deg + 1] = self.coeffs
        return out

    @staticmethod
    def _lift(other, size):
        if isinstance(other, MatrixPolynomial):
            return other
        arr = np.asarray(other, dtype=np.complex128)
        if arr.ndim == 0:
            arr = arr * np.eye(size)
        return MatrixPolynomial([arr])

    def __add__(self, other):
        other = self._lift(other, self.size)
        deg = max(self.deg, other.deg)
        return MatrixPolynomial(self._padded(deg) + other._padded(deg))

    __radd__ = __add__

    def __neg__(self):
        return MatrixPolynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other, self.size))

    def __rsub__(self, other):
        return self._lift(other, self.size) - self

    def __mul__(self, scalar):
        if isinstance(scalar, MatrixPolynomial):
            raise TypeError("use @ for matrix-polynomial products")
        return MatrixPolynomial(self.coeffs * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._lift(other, self.size)
        out = np.zeros((self.deg + other.deg + 1, self.size, other.size), dtype=np.complex128)
        for i in range(self.deg + 1):
            if not np.any(self.coeffs[i]):
                continue
            for j in range(other.deg + 1):
                out[i + j] += self.coeffs[i] @ other.coeffs[j]
        return MatrixPolynomial(out)

    def __rmatmul__(self, other):
        return self._lift(other, self.size) @ self

    def shift(self, k=1):
        """Multiply by λ^k."""
        out = np.zeros((self.deg + k + 1, self.size, self.size), dtype=np.complex128)
        out[k:] = self.coeffs
        return MatrixPolynomial(out)

    def trim(self):
        """Drop exactly-zero leading coefficients (keeps at least the constant term)."""
        return MatrixPolynomial(self.coeffs[: max(self.effective_degree, 0) + 1])

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if self.size != other.size:
            return False
        deg = max(self.deg, other.deg)
        return bool(np.array_equal(self._padded(deg), other._padded(deg)))

    __hash__ = None

    def max_deviation(self, other):
        """Largest absolute coefficient difference (degrees padded)."""
        deg = max(self.deg, other.deg)
        diff = self._padded(deg) - other._padded(deg)
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    def allclose(self, other, atol=1e-10):
        return self.max_deviation(other) <= atol

    def block(self, rows, cols):
        """Sub-polynomial restricted to index ranges (slices or index arrays)."""
        return self.coeffs[:, rows][:, :, cols]

    def __call__(self, lam):
        return evaluate(self, lam)

    def __repr__(self):
        return f"MatrixPolynomial(size={self.size}, deg={self.deg})"


def evaluate(p, lam0):
    """Σ λ0^i A_i by Horner's rule."""
    c = p.coeffs
    out = c[-1].copy()
    for k in range(p.deg - 1, -1, -1):
        out = lam0 * out + c[k]
    return out


def derivative(p):
    if p.deg == 0:
        return MatrixPolynomial.zeros(p.size)
    k = np.arange(1, p.deg + 1)[:, None, None]
    return MatrixPolynomial(p.coeffs[1:] * k)


def horner_shift(p, k):
    """Degree-k Horner shift A_{m-k} + λ A_{m-k+1} + ... + λ^k A_m."""
    if not 0 <= k <= p.deg:
        raise ValueError(f"Horner shift degree {k} outside 0..{p.deg}")
    return MatrixPolynomial(p.coeffs[p.deg - k:])


def _coeff_scale(p):
    return max(float(np.max(np.abs(p.coeffs))), 0.0)


def interpolation_radius(p):
    """max(1, max|coeff|^(1/deg)) for the sampling circle."""
    if p.deg == 0:
        return 1.0
    scale = _coeff_scale(p)
    if scale == 0.0:
        return 1.0
    return max(1.0, scale ** (1.0 / p.deg))


def det_poly(p, tol=TRIM_TOL):
    """Coefficients of det P(λ) by interpolation on a scaled circle.

    Uses N + 1 equispaced nodes with N = size·deg, so the interpolation system is
    an inverse DFT. Coefficients below ``tol`` relative to the largest are dropped.
    """
    if p.deg == 0:
        return ScalarPolynomial([np.linalg.det(p.coeffs[0])])
    N = p.size * p.deg
    rho = interpolation_radius(p)
    nodes = rho * np.exp(2j * np.pi * np.arange(N + 1) / (N + 1))
    values = np.array([np.linalg.det(evaluate(p, z)) for z in nodes])
    coeffs = np.fft.fft(values) / (N + 1)
    coeffs = coeffs / rho ** np.arange(N + 1)
    return ScalarPolynomial(coeffs).trim(tol)


def is_unimodular(p, tol=TRIM_TOL):
    d = det_poly(p)
    return d.degree == 0 and abs(d.coeffs[0]) > tol


def _full_rank_at(mat, rtol=1e-12):
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0:
        return True
    return s[0] > 0 and s[-1] > rtol * s[0]


def is_regular(p, samples=5, rng=None):
    """True if P(λ0) has full numerical rank at one of ``samples`` random points."""
    rng = np.random.default_rng(0) if rng is None else rng
    scale = interpolation_radius(p)
    for _ in range(samples):
        z = scale * complex(rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform()))
        if _full_rank_at(evaluate(p, z)):
            return True
    return False


def log_det_derivative(p, dp, z):
    """d/dλ log det P at z via Jacobi's formula, tr(P(z)^{-1} P'(z))."""
    return complex(np.trace(np.linalg.solve(evaluate(p, z), evaluate(dp, z))))


def polish_roots(p, roots, maxiter=60):
    """Refine approximate roots of det P(λ) by simultaneous Aberth iteration.

    The Newton ratio det/det' is taken from Jacobi's formula, so no determinant
    coefficients are involved. A root is frozen once its update stalls or P(z)
    becomes exactly singular.
    """
    z = np.array(roots, dtype=np.complex128)
    if z.size == 0:
        return z
    dp = derivative(p)
    active = np.ones(z.size, dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        for k in np.nonzero(active)[0]:
            try:
                g = log_det_derivative(p, dp, z[k])
            except np.linalg.LinAlgError:
                active[k] = False
                continue
            if g == 0 or not np.isfinite(g):
                active[k] = False
                continue
            newton = 1.0 / g
            others = np.delete(z, k)
            repulsion = np.sum(1.0 / (z[k] - others)) if others.size else 0.0
            denom = 1.0 - newton * repulsion
            step = newton / denom if denom != 0 and np.isfinite(repulsion) else newton
            if not np.isfinite(step):
                active[k] = False
                continue
            z[k] -= step
            if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(z[k])):
                active[k] = False
    return z
