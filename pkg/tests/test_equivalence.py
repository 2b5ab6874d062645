import numpy as np
import pytest

from rosenfied.errors import CertificationFailure, RelationViolation, StepMismatch
from rosenfied.equivalence import (build_auxiliary, build_UV, certify, chain_pencil,
                                   check_aux_relations, det_ratio_spread, final_transform,
                                   reduce_step, side_family, target_form)
from rosenfied.fiedler import Bijection, all_bijections, build_MM, fiedler_pencil, random_bijection
from rosenfied.matpoly import MatrixPolynomial, is_unimodular
from rosenfied.rosenbrock import random_system

from conftest import corpus


def test_side_family_shapes(rng):
    sys = random_system(2, 1, 4, 2, rng, integer=True)
    fam = side_family(sys.A)
    assert sorted(fam.Q) == [1, 2, 3] and sorted(fam.D) == [1, 2, 3, 4]
    for i in fam.Q:
        assert fam.Q[i].size == 8 and is_unimodular(fam.Q[i]) and is_unimodular(fam.R[i])
    # D_k carries the degree-(k-1) Horner shift in its last block
    assert np.array_equal(fam.D[4][:, 6:, 6:], sys.A.coeffs[1:])


def test_chain_starts_at_pencil(rng):
    for sys in corpus(9, 4):
        ms = build_MM(sys)
        fam = build_auxiliary(sys)
        sigma = random_bijection(sys.d, rng)
        L = fiedler_pencil(sys, sigma, ms).as_matpoly()
        assert chain_pencil(fam, ms, sigma, 1) == L


def test_relations_hold():
    for sys in corpus(12, 8):
        rep = check_aux_relations(build_auxiliary(sys), build_MM(sys), strict=True)
        assert rep.ok and rep.checked > 0 and rep.max_deviation == 0


def test_relations_fail_with_negated_identity():
    sys = random_system(2, 1, 2, 2, np.random.default_rng(5), integer=True)
    fam = build_auxiliary(sys, r_sign=-1.0)
    rep = check_aux_relations(fam, build_MM(sys))
    assert not rep.ok
    with pytest.raises(RelationViolation):
        check_aux_relations(fam, build_MM(sys), strict=True)


def test_steps_match_direct_construction(rng):
    sys = random_system(2, 2, 4, 3, rng, integer=True)
    ms, fam = build_MM(sys), build_auxiliary(sys)
    for sigma in all_bijections(4):
        L = chain_pencil(fam, ms, sigma, 1)
        for i in range(1, sys.d):
            L = reduce_step(L, fam, sigma, i, ms, atol=0.0)
        assert L == chain_pencil(fam, ms, sigma, sys.d)


def test_step_mismatch_detected(rng):
    sys = random_system(1, 1, 3, 3, rng, integer=True)
    ms, fam = build_MM(sys), build_auxiliary(sys)
    sigma = Bijection((1, 3, 2))
    wrong = chain_pencil(fam, ms, sigma, 1) + MatrixPolynomial.identity(6)
    with pytest.raises(StepMismatch):
        reduce_step(wrong, fam, sigma, 1, ms, atol=0.0)


def test_final_form_is_system_matrix(rng):
    for sys in corpus(9, 13):
        ms, fam = build_MM(sys), build_auxiliary(sys)
        left, right = final_transform(sys)
        L = chain_pencil(fam, ms, Bijection.descending(sys.d), sys.d)
        assert left @ L @ right == target_form(sys)


def test_certificate_integer(rng):
    for sys in corpus(9, 21):
        for _ in range(3):
            sigma = random_bijection(sys.d, rng)
            cert = certify(sys, sigma)
            assert cert.uv_residual == 0 and cert.target_residual == 0
            assert all(s.residual == 0 for s in cert.steps)
            assert cert.block_diagonal
            assert abs(cert.det_U) > 1e-10 and abs(cert.det_V) > 1e-10
            assert cert.det_ratio_spread <= 1e-8
            doc = cert.to_dict()
            assert doc["sigma"] == list(sigma.images) and len(doc["steps"]) == sys.d - 1


def test_certificate_real_valued(rng):
    sys = random_system(2, 2, 3, 2, rng)
    cert = certify(sys, Bijection((2, 1, 3)))
    assert cert.uv_residual < 1e-10


def test_uv_unimodular_and_block_diagonal(rng):
    sys = random_system(2, 1, 2, 4, rng, integer=True)
    U, V = build_UV(sys, Bijection((3, 1, 4, 2)))
    assert is_unimodular(U) and is_unimodular(V)
    nA = sys.n * sys.dA
    assert not np.any(U.coeffs[:, :nA, nA:]) and not np.any(V.coeffs[:, nA:, :nA])


def test_certificate_rejects_typo(rng):
    sys = random_system(1, 2, 3, 2, rng, integer=True)
    with pytest.raises(CertificationFailure):
        certify(sys, Bijection((1, 3, 2)), build_MM(sys, inject_typo=True))


def test_det_ratio_constant(rng):
    sys = random_system(2, 2, 3, 3, rng)
    pencil = fiedler_pencil(sys, random_bijection(3, rng)).as_matpoly()
    assert det_ratio_spread(sys, pencil) < 1e-8
