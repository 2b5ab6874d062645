"""Fiedler matrices, bijections and Fiedler pencils of a Rosenbrock system matrix.

Block conventions: the pencil acts on d_A blocks of size n (the A-part) followed by
d_D blocks of size m (the D-part). Block coordinates reported to users are 1-based;
everything stored internally is 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DegreeMismatch, StructureMismatch
from .matpoly import MatrixPolynomial


# ---------------------------------------------------------------------------
# bijections and CISS

@dataclass(frozen=True)
class Bijection:
    """σ: {0..d-1} -> {1..d}, stored as the image list (σ(0), ..., σ(d-1))."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(v) for v in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"{list(images)} is not a permutation of 1..{len(images)}")
        object.__setattr__(self, "images", images)

    @property
    def d(self):
        return len(self.images)

    def __call__(self, j):
        return self.images[j]

    @property
    def order(self):
        """Factor indices in product order: (σ^{-1}(1), ..., σ^{-1}(d))."""
        inv = [0] * self.d
        for j, pos in enumerate(self.images):
            inv[pos - 1] = j
        return tuple(inv)

    def has_consecution(self, j):
        return self.images[j] < self.images[j + 1]

    def has_inversion(self, j):
        return self.images[j] > self.images[j + 1]

    @classmethod
    def from_order(cls, order):
        images = [0] * len(order)
        for pos, j in enumerate(order):
            images[j] = pos + 1
        return cls(tuple(images))

    @classmethod
    def descending(cls, d):
        """M_{d-1} ... M_1 M_0: the first companion form."""
        return cls.from_order(range(d - 1, -1, -1))

    @classmethod
    def ascending(cls, d):
        """M_0 M_1 ... M_{d-1}: the second companion form."""
        return cls.from_order(range(d))

    def __str__(self):
        return "(" + ", ".join(map(str, self.images)) + ")"


def all_bijections(d):
    for perm in itertools.permutations(range(1, d + 1)):
        yield Bijection(perm)


def random_bijection(d, rng):
    return Bijection(tuple(int(v) + 1 for v in rng.permutation(d)))


@dataclass(frozen=True)
class CISS:
    """Consecution-inversion structure sequence as (c_k, i_k) pairs."""

    pairs: tuple

    @property
    def c1(self):
        return self.pairs[0][0]

    @property
    def i1(self):
        return self.pairs[0][1]

    @property
    def consecutions(self):
        return sum(c for c, _ in self.pairs)

    @property
    def inversions(self):
        return sum(i for _, i in self.pairs)

    def flat(self):
        return tuple(v for pair in self.pairs for v in pair)


def ciss(sigma):
    """Run-length encode consecutions/inversions of σ at 0..d-2."""
    runs = []  # alternating counts, starting with consecutions
    want_consecution = True
    count = 0
    for j in range(sigma.d - 1):
        if sigma.has_consecution(j) == want_consecution:
            count += 1
        else:
            runs.append(count)
            want_consecution = not want_consecution
            count = 1
    runs.append(count)
    if len(runs) % 2:
        runs.append(0)
    return CISS(tuple(zip(runs[::2], runs[1::2])))


# ---------------------------------------------------------------------------
# Fiedler matrices

def fiedler_matrices(P):
    """[F_0, ..., F_k] for a matrix polynomial of degree k (the M_i or N_i family)."""
    n, k = P.size, P.deg
    c = P.coeffs
    eye = np.eye(n * k, dtype=np.complex128)
    mats = []
    F0 = eye.copy()
    F0[(k - 1) * n:, (k - 1) * n:] = -c[0]
    mats.append(F0)
    for i in range(1, k):
        F = eye.copy()
        p = (k - i - 1) * n
        q = p + n
        F[p:q, p:q] = -c[i]
        F[q:q + n, q:q + n] = 0
        F[p:q, q:q + n] = np.eye(n)
        F[q:q + n, p:q] = np.eye(n)
        mats.append(F)
    Fk = eye.copy()
    Fk[:n, :n] = c[k]
    mats.append(Fk)
    return mats


def build_M(A):
    return fiedler_matrices(A)


def build_N(D):
    return fiedler_matrices(D)


def _e(k, size):
    """Standard basis column e_k (1-based) of length ``size``."""
    v = np.zeros((size, 1))
    v[k - 1, 0] = 1.0
    return v


def coupling_B(sys, i, j):
    """(e_i e_j^T) ⊗ B as an (n d_A) x (m d_D) block."""
    return np.kron(_e(i, sys.dA) @ _e(j, sys.dD).T, sys.B)


def coupling_C(sys, k, l):
    """(e_k e_l^T) ⊗ C as an (m d_D) x (n d_A) block."""
    return np.kron(_e(k, sys.dD) @ _e(l, sys.dA).T, sys.C)


def _block_diag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=np.complex128)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


@dataclass(frozen=True, eq=False)
class FiedlerMatrixSet:
    M: list
    N: list
    MM: list
    dA: int
    dD: int
    n: int
    m: int

    @property
    def d(self):
        return max(self.dA, self.dD)

    @property
    def r(self):
        return min(self.dA, self.dD)

    @property
    def nA(self):
        return self.n * self.dA

    def M_part(self, i):
        """A-part of the system factor with index i (identity past d_A - 1)."""
        return self.M[i] if i < self.dA else np.eye(self.nA, dtype=np.complex128)

    def N_part(self, i):
        return self.N[i] if i < self.dD else np.eye(self.m * self.dD, dtype=np.complex128)


def build_MM(sys, inject_typo=False):
    """System Fiedler matrices MM_0..MM_d.

    ``inject_typo`` flips the sign of the C coupling in MM_0 (a deliberate
    corruption used as a negative control).
    """
    M, N = build_M(sys.A), build_N(sys.D)
    d, nA = sys.d, sys.n * sys.dA
    mats = []
    MM0 = _block_diag(M[0], N[0])
    MM0[:nA, nA:] = coupling_B(sys, sys.dA, sys.dD)
    c_sign = 1.0 if inject_typo else -1.0
    MM0[nA:, :nA] = c_sign * coupling_C(sys, sys.dD, sys.dA)
    mats.append(MM0)
    eyeA = np.eye(nA, dtype=np.complex128)
    eyeD = np.eye(sys.m * sys.dD, dtype=np.complex128)
    for i in range(1, d):
        mats.append(_block_diag(M[i] if i < sys.dA else eyeA, N[i] if i < sys.dD else eyeD))
    mats.append(_block_diag(M[sys.dA], N[sys.dD]))
    return FiedlerMatrixSet(M, N, mats, sys.dA, sys.dD, sys.n, sys.m)


def _check_degree(sys, sigma):
    if sigma.d != sys.d:
        raise DegreeMismatch(f"bijection has d={sigma.d}, system has d=max(d_A, d_D)={sys.d}")


def assemble_product(ms, sigma):
    """MM_σ = MM_{σ^{-1}(1)} ··· MM_{σ^{-1}(d)} by explicit multiplication."""
    if sigma.d != ms.d:
        raise DegreeMismatch(f"bijection has d={sigma.d}, system has d={ms.d}")
    return reduce(np.matmul, (ms.MM[j] for j in sigma.order))


def part_product(mats_for, sigma):
    """Ordered product over σ of a per-index factor family (e.g. ``ms.M_part``)."""
    return reduce(np.matmul, (mats_for(j) for j in sigma.order))


# ---------------------------------------------------------------------------
# pencils

@dataclass(frozen=True, eq=False)
class BlockPencil:
    """λX + Y with A-part of d_A n-blocks followed by a D-part of d_D m-blocks.

    ``b_block``/``c_block`` are the 1-based (row, col) block positions of the
    coupling terms -(e_i e_j^T)⊗B (top-right) and (e_k e_l^T)⊗C (bottom-left).
    """

    X: np.ndarray
    Y: np.ndarray
    n: int
    m: int
    dA: int
    dD: int
    B: np.ndarray
    C: np.ndarray
    b_block: tuple
    c_block: tuple
    label: str = field(default="")

    @property
    def nA(self):
        return self.n * self.dA

    @property
    def size(self):
        return self.X.shape[0]

    def value(self, lam):
        return lam * self.X + self.Y

    def as_matpoly(self):
        return MatrixPolynomial([self.Y, self.X])

    def a_part(self):
        return self.X[: self.nA, : self.nA], self.Y[: self.nA, : self.nA]

    def d_part(self):
        return self.X[self.nA:, self.nA:], self.Y[self.nA:, self.nA:]

    def top_right(self):
        return self.Y[: self.nA, self.nA:]

    def bottom_left(self):
        return self.Y[self.nA:, : self.nA]

    def a_block(self, mat, i, j):
        n = self.n
        return mat[(i - 1) * n: i * n, (j - 1) * n: j * n]

    def d_block(self, mat, i, j):
        m, o = self.m, self.nA
        return mat[o + (i - 1) * m: o + i * m, o + (j - 1) * m: o + j * m]

    def equals(self, other):
        return np.array_equal(self.X, other.X) and np.array_equal(self.Y, other.Y)


def predicted_corners(dA, dD, c):
    """1-based block positions of the B and C couplings implied by CISS(σ).

    Positions saturate at block 1 once the leading run exceeds a part's degree
    (the shorter part is padded with identities beyond its own degree).
    """
    if c.c1 > 0:
        b = (dA, dD - min(c.c1, dD - 1))
        cc = (dD, dA - min(c.c1, dA - 1))
    else:
        b = (dA - min(c.i1, dA - 1), dD)
        cc = (dD - min(c.i1, dD - 1), dA)
    return b, cc


def fiedler_pencil(sys, sigma, ms=None):
    """L_σ(λ) = λ MM_d - MM_σ as a BlockPencil (X = MM_d, Y = -MM_σ)."""
    _check_degree(sys, sigma)
    ms = build_MM(sys) if ms is None else ms
    b, c = predicted_corners(sys.dA, sys.dD, ciss(sigma))
    return BlockPencil(ms.MM[-1].copy(), -assemble_product(ms, sigma), sys.n, sys.m,
                       sys.dA, sys.dD, sys.B, sys.C, b, c, label=f"L_sigma{sigma}")


def companion_first(sys):
    """First companion form C1(λ) = λX + Y, placed block by block."""
    n, m, dA, dD = sys.n, sys.m, sys.dA, sys.dD
    nA = n * dA
    size = sys.pencil_size
    X = np.eye(size, dtype=np.complex128)
    X[:n, :n] = sys.A[dA]
    X[nA:nA + m, nA:nA + m] = sys.D[dD]
    Y = np.zeros((size, size), dtype=np.complex128)
    for j in range(dA):
        Y[:n, j * n:(j + 1) * n] = sys.A[dA - 1 - j]
    for j in range(1, dA):
        Y[j * n:(j + 1) * n, (j - 1) * n:j * n] = -np.eye(n)
    for j in range(dD):
        Y[nA:nA + m, nA + j * m:nA + (j + 1) * m] = sys.D[dD - 1 - j]
    for j in range(1, dD):
        Y[nA + j * m:nA + (j + 1) * m, nA + (j - 1) * m:nA + j * m] = -np.eye(m)
    Y[:n, size - m:] = -sys.B
    Y[nA:nA + m, nA - n:nA] = sys.C
    return BlockPencil(X, Y, n, m, dA, dD, sys.B, sys.C, (1, dD), (1, dA), label="C1")


def companion_second(sys):
    """Second companion form C2(λ) = λX + Y, placed block by block."""
    n, m, dA, dD = sys.n, sys.m, sys.dA, sys.dD
    nA = n * dA
    size = sys.pencil_size
    X = np.eye(size, dtype=np.complex128)
    X[:n, :n] = sys.A[dA]
    X[nA:nA + m, nA:nA + m] = sys.D[dD]
    Y = np.zeros((size, size), dtype=np.complex128)
    for j in range(dA):
        Y[j * n:(j + 1) * n, :n] = sys.A[dA - 1 - j]
    for j in range(1, dA):
        Y[(j - 1) * n:j * n, j * n:(j + 1) * n] = -np.eye(n)
    for j in range(dD):
        Y[nA + j * m:nA + (j + 1) * m, nA:nA + m] = sys.D[dD - 1 - j]
    for j in range(1, dD):
        Y[nA + (j - 1) * m:nA + j * m, nA + j * m:nA + (j + 1) * m] = -np.eye(m)
    Y[nA - n:nA, nA:nA + m] = -sys.B
    Y[size - m:, :n] = sys.C
    return BlockPencil(X, Y, n, m, dA, dD, sys.B, sys.C, (dA, 1), (dD, 1), label="C2")


# ---------------------------------------------------------------------------
# multiplication-free assembly

def _window(W, sys, kA, kD):
    """Submatrix on the trailing kA A-blocks and trailing kD D-blocks."""
    n, m, nA = sys.n, sys.m, sys.n * sys.dA
    idx = np.r_[nA - kA * n:nA, W.shape[0] - kD * m:W.shape[0]]
    return W[np.ix_(idx, idx)].copy()


def assemble_algorithmic(sys, sigma, return_steps=False):
    """MM_σ built from block placements only, growing W_0, ..., W_{d-2}.

    Each step i brings in factor MM_{i+1}: on the right when σ has a consecution
    at i (its pivot column pair is rewritten), on the left otherwise (pivot row
    pair rewritten). Because earlier factors never touch the new pivot's leading
    block, each rewrite is a copy of an existing block row/column plus the new
    -A_{i+1} / -D_{i+1} entry and an identity block.
    """
    _check_degree(sys, sigma)
    n, m, dA, dD, d = sys.n, sys.m, sys.dA, sys.dD, sys.d
    nA, size = n * dA, sys.pencil_size
    W = np.eye(size, dtype=np.complex128)
    W[nA - n:nA, nA - n:nA] = -sys.A[0]
    W[size - m:, size - m:] = -sys.D[0]
    W[nA - n:nA, size - m:] = sys.B
    W[size - m:, nA - n:nA] = -sys.C

    sides = ((0, n, dA, sys.A), (nA, m, dD, sys.D))
    steps = []
    for i in range(d - 1):
        k = i + 1
        right = sigma.has_consecution(i)
        for offset, bs, deg, P in sides:
            if k > deg - 1:
                continue
            p = offset + (deg - k - 1) * bs
            q = p + bs
            rp, rq = slice(p, p + bs), slice(q, q + bs)
            if right:
                col = W[:, rq].copy()
                col[rp] = -P[k]
                W[:, rp] = col
                W[:, rq] = 0
                W[rp, rq] = np.eye(bs)
            else:
                row = W[rq, :].copy()
                row[:, rp] = -P[k]
                W[rp, :] = row
                W[rq, :] = 0
                W[rq, rp] = np.eye(bs)
        if return_steps:
            steps.append(_window(W, sys, min(i + 2, dA), min(i + 2, dD)))
    if return_steps:
        return W, steps
    return W


# ---------------------------------------------------------------------------
# corner structure

@dataclass
class CornerReport:
    c1: int
    i1_leading: int
    B_block: tuple
    C_block: tuple
    exact_match: bool
    coupling_match: bool = True
    a_part_match: bool = True
    d_part_match: bool = True
    offending: list = field(default_factory=list)

    def to_dict(self):
        return {
            "c1": self.c1,
            "i1_leading": self.i1_leading,
            "B_block": list(self.B_block),
            "C_block": list(self.C_block),
            "exact_match": self.exact_match,
        }


def corner_structure(sys, sigma, ms=None, strict=True):
    """Compare the product-built pencil with the block layout predicted by CISS(σ).

    Checks the coupling corners sit at the predicted e-vector positions and that
    the A- and D-parts equal λM_{d_A} - M_σ and λN_{d_D} - N_σ (factors of the
    shorter part beyond its degree are dropped, keeping relative order).
    """
    _check_degree(sys, sigma)
    ms = build_MM(sys) if ms is None else ms
    c = ciss(sigma)
    b_pos, c_pos = predicted_corners(sys.dA, sys.dD, c)
    L = fiedler_pencil(sys, sigma, ms)
    offending = []

    want_tr = -coupling_B(sys, *b_pos)
    want_bl = coupling_C(sys, *c_pos)
    coupling_ok = True
    for name, got, want, bs_r, bs_c in (("B", L.top_right(), want_tr, sys.n, sys.m),
                                         ("C", L.bottom_left(), want_bl, sys.m, sys.n)):
        if not np.array_equal(got, want):
            coupling_ok = False
            rows, cols = got.shape[0] // bs_r, got.shape[1] // bs_c
            for bi in range(rows):
                for bj in range(cols):
                    blk = (slice(bi * bs_r, (bi + 1) * bs_r), slice(bj * bs_c, (bj + 1) * bs_c))
                    if not np.array_equal(got[blk], want[blk]):
                        offending.append((name, bi + 1, bj + 1))
    # X never carries coupling
    nA = sys.n * sys.dA
    if np.any(L.X[:nA, nA:]) or np.any(L.X[nA:, :nA]):
        coupling_ok = False
        offending.append(("X", 0, 0))

    M_sig = part_product(lambda j: ms.M[j], _restrict(sigma, sys.dA))
    N_sig = part_product(lambda j: ms.N[j], _restrict(sigma, sys.dD))
    XA, YA = L.a_part()
    XD, YD = L.d_part()
    a_ok = np.array_equal(XA, ms.M[sys.dA]) and np.array_equal(YA, -M_sig)
    d_ok = np.array_equal(XD, ms.N[sys.dD]) and np.array_equal(YD, -N_sig)
    if not a_ok:
        offending.append(("A-part", 0, 0))
    if not d_ok:
        offending.append(("D-part", 0, 0))

    report = CornerReport(c.c1, c.i1 if c.c1 == 0 else 0, b_pos, c_pos,
                          coupling_ok and a_ok and d_ok, coupling_ok, a_ok, d_ok, offending)
    if strict and not report.exact_match:
        raise StructureMismatch(f"corner structure mismatch for σ={sigma}: {offending}", offending)
    return report


def _restrict(sigma, k):
    """σ restricted to indices < k, keeping relative order (a bijection onto 1..k)."""
    kept = [j for j in sigma.order if j < k]
    return Bijection.from_order(kept)


# ---------------------------------------------------------------------------
# block transpose

def block_transpose_matrix(mat, bs):
    """(E^B)_{ij} = E_{ji} for a square matrix of bs x bs blocks."""
    k = mat.shape[0] // bs
    return mat.reshape(k, bs, k, bs).transpose(2, 1, 0, 3).reshape(k * bs, k * bs)


def block_transpose(p):
    """Rosenbrock block transpose: block-transpose both parts, swap coupling indices."""
    nA = p.nA
    X = np.zeros_like(p.X)
    Y = np.zeros_like(p.Y)
    for src, dst in ((p.X, X), (p.Y, Y)):
        dst[:nA, :nA] = block_transpose_matrix(src[:nA, :nA], p.n)
        dst[nA:, nA:] = block_transpose_matrix(src[nA:, nA:], p.m)
    (i, j), (k, l) = p.b_block, p.c_block
    b_new, c_new = (l, k), (j, i)
    Y[:nA, nA:] = -np.kron(_e(l, p.dA) @ _e(k, p.dD).T, p.B)
    Y[nA:, :nA] = np.kron(_e(j, p.dD) @ _e(i, p.dA).T, p.C)
    return BlockPencil(X, Y, p.n, p.m, p.dA, p.dD, p.B, p.C, b_new, c_new,
                       label=(p.label + "^B") if p.label else "")
