"""Auxiliary matrix polynomials and the system-equivalence chain L_σ ~ I ⊕ S ⊕ I.

Each side of the system (the A-part with d_A blocks of size n, the D-part with
d_D blocks of size m) carries its own family Q_i, R_i, T_i, D_i built from the
Horner shifts of A(λ) or D(λ). At system step i, the side of degree k uses its
local index i - (d - k); when that index falls outside 1..k-1 the side is not
touched at that step (identity transforms, zero T, leading block unchanged).
Factors of the lower-degree part are exhausted first in the product order, so
they are the last ones to be peeled off by the chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationFailure, RelationViolation, StepMismatch
from .fiedler import Bijection, block_transpose_matrix, build_MM
from .matpoly import MatrixPolynomial, det_poly, evaluate, horner_shift, is_unimodular
from .rosenbrock import eval_S


def _embed(size, bs, start, block2, rest_identity=True, deg=None):
    """Polynomial with a 2x2-block pivot at block ``start`` (0-based) of a bs-grid.

    ``block2`` is a 2x2 nested list of MatrixPolynomials (bs x bs each); blocks before
    the pivot are zero if ``rest_identity`` is False, otherwise identity; blocks after
    the pivot follow ``rest_identity`` as well unless given as a tuple.
    """
    lead_id, tail_id = rest_identity if isinstance(rest_identity, tuple) else (rest_identity,) * 2
    deg = max(b.deg for row in block2 for b in row) if deg is None else deg
    out = np.zeros((deg + 1, size, size), dtype=np.complex128)
    p = start * bs
    if lead_id:
        out[0, :p, :p] = np.eye(p)
    if tail_id:
        out[0, p + 2 * bs:, p + 2 * bs:] = np.eye(size - p - 2 * bs)
    for a in range(2):
        for b in range(2):
            blk = block2[a][b]
            out[: blk.deg + 1, p + a * bs:p + (a + 1) * bs, p + b * bs:p + (b + 1) * bs] = blk.coeffs
    return MatrixPolynomial(out)


@dataclass(frozen=True, eq=False)
class SideFamily:
    """Q_i, R_i, T_i (i = 1..k-1) and D_i (i = 1..k) for one matrix polynomial."""

    Q: dict
    R: dict
    T: dict
    D: dict
    k: int
    bs: int


def side_family(P, r_sign=1.0):
    """Auxiliary polynomials of a degree-k matrix polynomial P.

    The pivot of R_i is [[0, I], [r_sign·I, P_i(λ)]]; ``r_sign=+1`` is the choice for
    which the auxiliary relations and R_i^B = R_i hold.
    """
    k, b = P.deg, P.size
    size = k * b
    I = MatrixPolynomial.identity(b)
    Z = MatrixPolynomial.zeros(b)
    lamI = MatrixPolynomial.lam(b)
    Q, R, T, D = {}, {}, {}, {}
    for i in range(1, k):
        Pi = horner_shift(P, i)
        Pim1 = horner_shift(P, i - 1)
        Q[i] = _embed(size, b, i - 1, [[I, lamI], [Z, I]])
        R[i] = _embed(size, b, i - 1, [[Z, I], [r_sign * I, Pi]])
        T[i] = _embed(size, b, i - 1, [[Z, Pim1.shift(1)], [lamI, Pim1.shift(2)]],
                      rest_identity=False)
        D[i] = _embed(size, b, i - 1, [[Pim1, Z], [Z, I]], rest_identity=(False, True))
    lead = horner_shift(P, k - 1)
    out = np.zeros((lead.deg + 1, size, size), dtype=np.complex128)
    out[:, size - b:, size - b:] = lead.coeffs
    D[k] = MatrixPolynomial(out)
    return SideFamily(Q, R, T, D, k, b)


def _poly_block_diag(a, b):
    deg = max(a.deg, b.deg)
    sa, sb = a.size, b.size
    out = np.zeros((deg + 1, sa + sb, sa + sb), dtype=np.complex128)
    out[: a.deg + 1, :sa, :sa] = a.coeffs
    out[: b.deg + 1, sa:, sa:] = b.coeffs
    return MatrixPolynomial(out)


def system_block_transpose(p, nA, n, m):
    """Block transpose of a polynomial that is block-diagonal across the A/D split."""
    c = p.coeffs
    if np.any(c[:, :nA, nA:]) or np.any(c[:, nA:, :nA]):
        raise ValueError("system block transpose needs a block-diagonal polynomial")
    out = np.zeros_like(c)
    for t in range(c.shape[0]):
        out[t, :nA, :nA] = block_transpose_matrix(c[t, :nA, :nA], n)
        out[t, nA:, nA:] = block_transpose_matrix(c[t, nA:, nA:], m)
    return MatrixPolynomial(out)


@dataclass(frozen=True, eq=False)
class AuxiliaryFamily:
    A_side: SideFamily
    D_side: SideFamily
    Q: dict  # system-level, i = 1..d-1
    R: dict
    T: dict
    DD: dict  # system-level leading polynomials, i = 1..d
    n: int
    m: int
    dA: int
    dD: int

    @property
    def d(self):
        return max(self.dA, self.dD)

    @property
    def nA(self):
        return self.n * self.dA

    def bt(self, p):
        return system_block_transpose(p, self.nA, self.n, self.m)


def _local(i, d, k):
    return i - (d - k)


def build_auxiliary(sys, r_sign=1.0):
    """Side families for A and D, and the system-level polynomials."""
    fa = side_family(sys.A, r_sign)
    fd = side_family(sys.D, r_sign)
    d = sys.d
    nA, nD = sys.n * sys.dA, sys.m * sys.dD
    IA, ID = MatrixPolynomial.identity(nA), MatrixPolynomial.identity(nD)
    ZA, ZD = MatrixPolynomial.zeros(nA), MatrixPolynomial.zeros(nD)

    def part(fam, i, which, default):
        j = _local(i, d, fam.k)
        return getattr(fam, which)[j] if 1 <= j <= fam.k - 1 else default

    Q, R, T, DD = {}, {}, {}, {}
    for i in range(1, d):
        Q[i] = _poly_block_diag(part(fa, i, "Q", IA), part(fd, i, "Q", ID))
        R[i] = _poly_block_diag(part(fa, i, "R", IA), part(fd, i, "R", ID))
        T[i] = _poly_block_diag(part(fa, i, "T", ZA), part(fd, i, "T", ZD))
    for i in range(1, d + 1):
        ja = min(max(_local(i, d, fa.k), 1), fa.k)
        jd = min(max(_local(i, d, fd.k), 1), fd.k)
        DD[i] = _poly_block_diag(fa.D[ja], fd.D[jd])
    return AuxiliaryFamily(fa, fd, Q, R, T, DD, sys.n, sys.m, sys.dA, sys.dD)


# ---------------------------------------------------------------------------
# auxiliary relations

@dataclass
class RelationReport:
    checked: int = 0
    failures: list = field(default_factory=list)
    max_deviation: float = 0.0

    @property
    def ok(self):
        return not self.failures

    def to_dict(self):
        return {"checked": self.checked, "ok": self.ok, "max_deviation": self.max_deviation,
                "failures": [list(f) for f in self.failures]}


def check_aux_relations(fam, ms, atol=0.0, strict=False):
    """Verify relations (a), (b), (c) coefficient-wise for every valid i and j.

    (a) Q_i^B (λD_i) R_i = λD_{i+1} + T_i  and  Q_i^B (MM_{d-i-1} MM_{d-i}) R_i = MM_{d-i-1} + T_i
    (b) R_i^B (λD_i) Q_i = λD_{i+1} + T_i^B  and  R_i^B (MM_{d-i} MM_{d-i-1}) Q_i = MM_{d-i-1} + T_i^B
    (c) T_i MM_j = MM_j T_i = T_i, same for T_i^B, for all j <= d-i-2
    """
    d = fam.d
    rep = RelationReport()

    def check(name, i, j, lhs, rhs):
        dev = lhs.max_deviation(rhs)
        rep.checked += 1
        rep.max_deviation = max(rep.max_deviation, dev)
        if dev > atol:
            rep.failures.append((name, i, j, dev))
            if strict:
                raise RelationViolation(name, i, j, dev)

    for i in range(1, d):
        Q, R, T = fam.Q[i], fam.R[i], fam.T[i]
        QB, RB, TB = fam.bt(Q), fam.bt(R), fam.bt(T)
        lamD, lamD1 = fam.DD[i].shift(1), fam.DD[i + 1].shift(1)
        lo, hi = ms.MM[d - i - 1], ms.MM[d - i]
        check("a1", i, None, QB @ lamD @ R, lamD1 + T)
        check("a2", i, None, QB @ (lo @ hi) @ R, T + lo)
        check("b1", i, None, RB @ lamD @ Q, lamD1 + TB)
        check("b2", i, None, RB @ (hi @ lo) @ Q, TB + lo)
        for j in range(0, d - i - 1):
            Mj = ms.MM[j]
            for name, t in (("c", T), ("cB", TB)):
                check(name, i, j, t @ Mj, t)
                check(name, i, j, Mj @ t, t)
    return rep


# ---------------------------------------------------------------------------
# the chain

def partial_product(ms, sigma, j):
    """MM_σ^(j): factors with index <= d - j, in their relative σ order."""
    d = ms.d
    kept = [k for k in sigma.order if k <= d - j]
    out = ms.MM[kept[0]]
    for k in kept[1:]:
        out = out @ ms.MM[k]
    return out


def chain_pencil(fam, ms, sigma, j):
    """L_σ^(j)(λ) = λ D_j - MM_σ^(j), built directly."""
    return fam.DD[j].shift(1) - partial_product(ms, sigma, j)


def _step_factors(fam, sigma, i):
    """Left/right factors carrying L^(i) to L^(i+1)."""
    d = fam.d
    if sigma.has_consecution(d - i - 1):
        return "consecution", fam.bt(fam.Q[i]), fam.R[i]
    return "inversion", fam.bt(fam.R[i]), fam.Q[i]


def reduce_step(pencil, fam, sigma, i, ms=None, atol=1e-10):
    """Apply step i of the chain and compare with the direct construction of L^(i+1)."""
    _, left, right = _step_factors(fam, sigma, i)
    out = left @ pencil @ right
    if ms is not None:
        want = chain_pencil(fam, ms, sigma, i + 1)
        dev = out.max_deviation(want)
        if dev > atol:
            raise StepMismatch(f"step {i}: deviation {dev:.3e} from direct L^({i + 1})")
    return out


def build_UV(sys, sigma, fam=None):
    """U = U_0 ··· U_{d-2} and V = V_{d-2} ··· V_0 with U L_σ V = L_σ^(d)."""
    fam = build_auxiliary(sys) if fam is None else fam
    d, size = sys.d, sys.pencil_size
    U = MatrixPolynomial.identity(size)
    V = MatrixPolynomial.identity(size)
    for i in range(d - 1):
        _, left, right = _step_factors(fam, sigma, d - (i + 1))
        U = U @ left
        V = right @ V
    return U.trim(), V.trim()


def final_transform(sys):
    """Constant (left, right) carrying L_σ^(d) to I_{(d_A-1)n} ⊕ S(λ) ⊕ I_{(d_D-1)m}.

    left = P^T Σ flips the sign of the identity blocks; P moves the last D-block
    in front of the other D-blocks. Both respect the A/D partition.
    """
    n, m, dA, dD = sys.n, sys.m, sys.dA, sys.dD
    nA, size = n * dA, sys.pencil_size
    signs = np.ones(size)
    signs[: nA - n] = -1
    signs[nA: size - m] = -1
    perm = np.r_[np.arange(nA), np.arange(size - m, size), np.arange(nA, size - m)]
    P = np.eye(size)[:, perm]
    return P.T @ np.diag(signs), P


def target_form(sys):
    """I_{(d_A-1)n} ⊕ S(λ) ⊕ I_{(d_D-1)m} as a matrix polynomial."""
    n, m = sys.n, sys.m
    k = (sys.dA - 1) * n
    size = sys.pencil_size
    S = sys.S_poly()
    out = np.zeros((S.deg + 1, size, size), dtype=np.complex128)
    out[0] = np.eye(size)
    out[:, k:k + n + m, k:k + n + m] = S.coeffs
    return MatrixPolynomial(out)


@dataclass
class Step:
    index: int
    side: str
    left: MatrixPolynomial
    right: MatrixPolynomial
    residual: float

    def to_dict(self):
        return {"index": self.index, "side": self.side, "left_degree": self.left.deg,
                "right_degree": self.right.deg, "residual": self.residual}


@dataclass
class EquivalenceCertificate:
    sigma: Bijection
    steps: list
    final_form: MatrixPolynomial
    U: MatrixPolynomial
    V: MatrixPolynomial
    permutation: tuple
    uv_residual: float
    target_residual: float
    det_U: complex
    det_V: complex
    det_ratio_spread: float
    block_diagonal: bool

    def to_dict(self):
        return {
            "sigma": list(self.sigma.images),
            "steps": [s.to_dict() for s in self.steps],
            "uv_residual": self.uv_residual,
            "target_residual": self.target_residual,
            "det_U": [self.det_U.real, self.det_U.imag],
            "det_V": [self.det_V.real, self.det_V.imag],
            "det_ratio_spread": self.det_ratio_spread,
            "block_diagonal": self.block_diagonal,
        }


def _is_block_diagonal(p, nA):
    c = p.coeffs if isinstance(p, MatrixPolynomial) else p[None]
    return not (np.any(c[:, :nA, nA:]) or np.any(c[:, nA:, :nA]))


def det_ratio_spread(sys, pencil_poly, samples=20, rng=None):
    """Relative spread of det L(z) / det S(z) over random sample points."""
    rng = np.random.default_rng(12345) if rng is None else rng
    ratios = []
    for _ in range(samples):
        z = complex(rng.normal(), rng.normal())
        ratios.append(np.linalg.det(evaluate(pencil_poly, z)) / np.linalg.det(eval_S(sys, z)))
    ratios = np.array(ratios)
    mean = np.mean(ratios)
    return float(np.max(np.abs(ratios - mean)) / abs(mean))


def certify(sys, sigma, ms=None, fam=None, atol=None, tol_unimodular=1e-10, tol_ratio=1e-8):
    """Run the full chain and the closing constant transform; raise on the first failure.

    ``atol`` defaults to 0 for integer-valued systems (exact comparison) and 1e-10
    otherwise.
    """
    if atol is None:
        atol = 0.0 if sys.is_integer_valued() else 1e-10
    ms = build_MM(sys) if ms is None else ms
    fam = build_auxiliary(sys) if fam is None else fam
    nA = sys.n * sys.dA
    L = chain_pencil(fam, ms, sigma, 1)
    steps = []
    for i in range(1, sys.d):
        side, left, right = _step_factors(fam, sigma, i)
        if not (_is_block_diagonal(left, nA) and _is_block_diagonal(right, nA)):
            raise CertificationFailure(f"step {i}", "transform not block-diagonal")
        L = left @ L @ right
        residual = L.max_deviation(chain_pencil(fam, ms, sigma, i + 1))
        steps.append(Step(i, side, left, right, residual))
        if residual > atol:
            raise CertificationFailure(f"step {i}", f"residual {residual:.3e}")
    final = L.trim()

    pencil = chain_pencil(fam, ms, sigma, 1)
    U, V = build_UV(sys, sigma, fam)
    uv_res = (U @ pencil @ V).max_deviation(final)
    if uv_res > atol:
        raise CertificationFailure("U L V", f"residual {uv_res:.3e}")
    dU, dV = det_poly(U), det_poly(V)
    if not (is_unimodular(U, tol_unimodular) and is_unimodular(V, tol_unimodular)):
        raise CertificationFailure("unimodularity", f"det U ~ {dU}, det V ~ {dV}")

    left, right = final_transform(sys)
    mapped = left @ final @ right
    target_res = mapped.max_deviation(target_form(sys))
    if target_res > atol:
        raise CertificationFailure("final transform", f"residual {target_res:.3e}")

    spread = det_ratio_spread(sys, pencil)
    if not spread <= tol_ratio:
        raise CertificationFailure("determinant ratio", f"relative spread {spread:.3e}")

    block_diag = (_is_block_diagonal(U, nA) and _is_block_diagonal(V, nA)
                  and _is_block_diagonal(left, nA) and _is_block_diagonal(right, nA))
    perm = tuple(int(k) for k in np.argmax(right, axis=0))
    return EquivalenceCertificate(sigma, steps, final, U, V, perm, uv_res, target_res,
                                  complex(dU.coeffs[0]), complex(dV.coeffs[0]), spread,
                                  block_diag)
