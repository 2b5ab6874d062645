"""Spectral checks: pencil eigenvalues against the invariant zeros of S, and
eigenvector recovery from pencil null vectors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import IrregularSystem, PoleAtEigenvalue, SingularAtPoint, SpectralMismatch, SingularPencil
from .fiedler import companion_first, fiedler_pencil
from .matpoly import evaluate
from .rosenbrock import det_spectrum, eval_R, eval_S, invariant_zeros

CLUSTER_RTOL = 1e-4
SIMPLE_GAP = 1e-6


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def pencil_eigenvalues(p, polish=True):
    """Finite spectrum of λX + Y from its interpolated determinant."""
    try:
        return det_spectrum(p.as_matpoly(), formal_degree=p.size, polish=polish)
    except IrregularSystem as exc:
        raise SingularPencil(str(exc)) from None


@dataclass
class EigenReport:
    pencil_eigs: np.ndarray
    oracle_eigs: np.ndarray
    matching: list
    max_matched_distance: float
    max_relative_distance: float
    unmatched: tuple
    passed: bool
    tol: float
    infinite_count: int = 0
    eigenvectors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "pencil_eigs": [_c(z) for z in self.pencil_eigs],
            "oracle_eigs": [_c(z) for z in self.oracle_eigs],
            "matching": [[_c(a), _c(b), dist] for a, b, dist in self.matching],
            "max_matched_distance": self.max_matched_distance,
            "max_relative_distance": self.max_relative_distance,
            "unmatched": {"pencil": self.unmatched[0], "oracle": self.unmatched[1]},
            "infinite_count": self.infinite_count,
            "tol": self.tol,
            "passed": self.passed,
            "eigenvectors": [v.to_dict() for v in self.eigenvectors],
        }


def _cluster_diameters(values, rtol=CLUSTER_RTOL):
    """Diameter of the near-coincident group each value belongs to."""
    k = len(values)
    label = np.arange(k)
    for a in range(k):
        for b in range(a + 1, k):
            if abs(values[a] - values[b]) <= rtol * (1 + abs(values[a])):
                old, new = label[b], label[a]
                label[label == old] = new
    diam = np.zeros(k)
    for g in np.unique(label):
        idx = np.nonzero(label == g)[0]
        if idx.size > 1:
            pts = values[idx]
            diam[idx] = np.max(np.abs(pts[:, None] - pts[None, :]))
    return diam


def match_spectra(pencil_eigs, oracle_eigs, tol=1e-6):
    """Minimum-cost matching of two eigenvalue multisets.

    A pair passes when its distance is at most tol·(1 + |λ|) plus the diameter of
    the cluster of nearly equal values it sits in, since multiple eigenvalues are
    only determined to a fractional power of the working precision.
    """
    p = np.asarray(pencil_eigs, dtype=np.complex128)
    o = np.asarray(oracle_eigs, dtype=np.complex128)
    if p.size == 0 or o.size == 0:
        return [], np.zeros(0, dtype=bool), p, o
    cost = np.abs(p[:, None] - o[None, :])
    rows, cols = linear_sum_assignment(cost)
    union = np.concatenate([p, o])
    diam = _cluster_diameters(union)
    pairs, ok = [], []
    for r, c in zip(rows, cols):
        dist = float(cost[r, c])
        allowed = tol * (1 + abs(o[c])) + max(diam[r], diam[p.size + c])
        pairs.append((p[r], o[c], dist))
        ok.append(dist <= allowed)
    rest_p = np.delete(p, rows)
    rest_o = np.delete(o, cols)
    return pairs, np.array(ok), rest_p, rest_o


def compare_spectra(sys, sigma, tol=1e-6, pencil=None, strict=True):
    """Compare the finite spectrum of L_σ with the invariant zeros of S."""
    pencil = fiedler_pencil(sys, sigma) if pencil is None else pencil
    spec = pencil_eigenvalues(pencil)
    oracle = invariant_zeros(sys)
    pairs, ok, rest_p, rest_o = match_spectra(spec.eigenvalues, oracle.eigenvalues, tol)
    dists = [dist for _, _, dist in pairs]
    rel = [dist / (1 + abs(b)) for _, b, dist in pairs]
    passed = bool(rest_p.size == 0 and rest_o.size == 0 and np.all(ok))
    report = EigenReport(
        spec.eigenvalues, oracle.eigenvalues, pairs,
        max(dists, default=0.0), max(rel, default=0.0),
        (int(rest_p.size), int(rest_o.size)), passed, tol, spec.infinite_count)
    if strict and not passed:
        bad_p = list(rest_p) + [a for (a, _, _), good in zip(pairs, ok) if not good]
        bad_o = list(rest_o) + [b for (_, b, _), good in zip(pairs, ok) if not good]
        raise SpectralMismatch(
            f"spectra differ: {len(spec.eigenvalues)} pencil vs {len(oracle.eigenvalues)} oracle "
            f"eigenvalues, max matched distance {report.max_matched_distance:.3e}",
            bad_p, bad_o)
    return report


@dataclass
class RecoveredEigenvector:
    lambda0: complex
    w: np.ndarray
    x0: np.ndarray
    u0: np.ndarray
    residual_S: float
    residual_R: float
    alignment: float = float("nan")
    cond_A: float = float("nan")

    def to_dict(self):
        return {
            "lambda0": _c(self.lambda0),
            "x0": [_c(z) for z in self.x0],
            "u0": [_c(z) for z in self.u0],
            "residual_S": self.residual_S,
            "residual_R": self.residual_R,
            "alignment": self.alignment,
        }


def null_vector(mat):
    """Right singular vector of the smallest singular value, plus the two smallest values."""
    _, s, vh = np.linalg.svd(mat)
    second = s[-2] if s.size > 1 else np.inf
    return vh[-1].conj(), s[-1], second


def _relative(mat, vec):
    denom = np.linalg.norm(mat, 2) * np.linalg.norm(vec)
    return float(np.linalg.norm(mat @ vec) / denom) if denom > 0 else 0.0


def _alignment(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) / (na * nb))


def predicted_w(sys, lam0, u0):
    """Null-vector stack of C1(λ0) generated by u0:
    A-blocks λ0^{d_A-k} A(λ0)^{-1} B u0 and D-blocks λ0^{d_D-k} u0, k = 1, 2, ...
    """
    x = np.linalg.solve(evaluate(sys.A, lam0), sys.B @ u0)
    a = [lam0 ** (sys.dA - k) * x for k in range(1, sys.dA + 1)]
    d = [lam0 ** (sys.dD - k) * u0 for k in range(1, sys.dD + 1)]
    return np.concatenate(a + d)


def _finish(sys, lam0, w, x0, u0):
    a = evaluate(sys.A, lam0)
    cond = float(np.linalg.cond(a))
    try:
        R = eval_R(sys, lam0)
    except SingularAtPoint as exc:
        raise PoleAtEigenvalue(f"A(λ0) numerically singular at λ0={lam0}: {exc}") from None
    z = np.concatenate([x0, u0])
    scale = np.linalg.norm(z)
    if scale == 0:
        raise PoleAtEigenvalue(f"null vector carries no system component at λ0={lam0}")
    x0, u0 = x0 / scale, u0 / scale
    z = z / scale
    res_S = _relative(eval_S(sys, lam0), z)
    res_R = _relative(R, u0) if np.linalg.norm(u0) > 0 else 0.0
    return RecoveredEigenvector(complex(lam0), w, x0, u0, res_S, res_R, cond_A=cond)


def recover_eigenvector(sys, lam0, v_pencil):
    """Read [x0; u0] off a null vector w of the first companion form at λ0.

    x0 is the last A-block of w and u0 the last D-block.
    """
    w = np.asarray(v_pencil, dtype=np.complex128)
    n, m, nA = sys.n, sys.m, sys.n * sys.dA
    if w.shape != (sys.pencil_size,):
        raise ValueError(f"pencil vector must have length {sys.pencil_size}")
    x0 = w[nA - n:nA].copy()
    u0 = w[w.size - m:].copy()
    out = _finish(sys, lam0, w, x0, u0)
    out.alignment = _alignment(predicted_w(sys, lam0, u0), w)
    return out


def recover_eigenvector_certified(sys, sigma, lam0, v_pencil, cert=None):
    """Recovery for an arbitrary Fiedler pencil through its equivalence certificate.

    With U L_σ V = L^(d) and left·L^(d)·right = I ⊕ S ⊕ I, a null vector w of L_σ(λ0)
    maps to (V(λ0)·right)^{-1} w = [0; x0; u0; 0]. Depends on the certificate.
    """
    from .equivalence import certify, final_transform

    cert = certify(sys, sigma) if cert is None else cert
    _, right = final_transform(sys)
    w = np.asarray(v_pencil, dtype=np.complex128)
    z = np.linalg.solve(evaluate(cert.V, lam0) @ right, w)
    k = (sys.dA - 1) * sys.n
    x0 = z[k:k + sys.n].copy()
    u0 = z[k + sys.n:k + sys.n + sys.m].copy()
    out = _finish(sys, lam0, w, x0, u0)
    out.alignment = _alignment(z[k:k + sys.n + sys.m], np.concatenate([x0, u0]))
    return out


def simple_eigenvectors(sys, eigenvalues=None, gap=SIMPLE_GAP):
    """Recover eigenvectors at every simple, pole-free eigenvalue via C1.

    An eigenvalue counts as simple when the second-smallest singular value of
    C1(λ0) exceeds ``gap``. Returns (recovered, skipped) lists.
    """
    c1 = companion_first(sys)
    if eigenvalues is None:
        eigenvalues = pencil_eigenvalues(c1).eigenvalues
    recovered, skipped = [], []
    for lam0 in eigenvalues:
        v, _, second = null_vector(c1.value(lam0))
        if second <= gap:
            skipped.append((complex(lam0), "multiple"))
            continue
        try:
            recovered.append(recover_eigenvector(sys, lam0, v))
        except PoleAtEigenvalue:
            skipped.append((complex(lam0), "pole"))
    return recovered, skipped
