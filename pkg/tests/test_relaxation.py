import math
from fractions import Fraction

import numpy as np
import pytest

from latent_homophily.model import constraint_polys, joint_observable_polys
from latent_homophily.polynomial import Polynomial
from latent_homophily.relaxation import (RelaxationLevelError, SosCertificate, Tolerances, build_moment_feasibility,
                                         extract_certificate, identity_residual, minimum_level, monomial_basis,
                                         point_moments, validate_certificate)
from latent_homophily.sdp import INFEASIBLE

from oracles import hand_certificate_1d

OBS3 = joint_observable_polys(3)
RELAX3 = build_moment_feasibility(np.full(64, 1 / 64), OBS3, level=3)


@pytest.mark.parametrize("d, size", [(0, 1), (2, 28), (3, 84), (6, 924)])
def test_basis_sizes(d, size):
    b = monomial_basis(d)
    assert len(b) == size == math.comb(6 + d, 6)
    assert b[0] == (0,) * 6


def test_basis_graded_and_bijective():
    b = monomial_basis(4)
    degrees = [sum(e) for e in b]
    assert degrees == sorted(degrees)
    assert all(b.index_of(b.monomial_at(i)) == i for i in range(len(b)))
    assert len(set(b)) == len(b)


def test_level3_dimensions():
    p = RELAX3.problem
    assert p.block_structure == [("moment", 84)] + [(f"localizing_{k}", 28) for k in range(1, 7)]
    assert p.n_equalities == 65 and p.n_vars == 924
    assert p.eq_labels[0] == "normalization" and p.eq_labels[64] == "outcome_63"


def test_t2_level2_dimensions():
    y = np.full(16, 1 / 16)
    p = build_moment_feasibility(y, joint_observable_polys(2), level=2).problem
    assert [s for _, s in p.block_structure] == [28] + [7] * 6
    assert p.n_equalities == 17


def test_level_too_low_names_the_minimum():
    assert minimum_level(OBS3.polys, constraint_polys()) == 3
    with pytest.raises(RelaxationLevelError, match=">= 3"):
        build_moment_feasibility(np.full(64, 1 / 64), OBS3, level=2)


def test_epsilon_uses_interval_block():
    p = build_moment_feasibility(np.full(64, 1 / 64), OBS3, level=3, epsilon=0.01).problem
    assert p.n_equalities == 1
    assert p.block("observables").kind == "diag" and p.block("observables").size == 128


def test_moment_matrix_symmetry():
    blk = RELAX3.problem.block("moment")
    basis = RELAX3.moment_basis
    for m, i, j in zip(blk.mat, blk.row, blk.col):
        uv = tuple(a + b for a, b in zip(basis[i], basis[j]))
        assert RELAX3.variables.index_of(uv) == m - 1
    y = np.random.default_rng(0).random(924)
    M = blk.evaluate(y)
    assert np.array_equal(M, M.T)


def _feasible(relax, y, tol=1e-9):
    p = relax.problem
    return np.max(np.abs(p.equality_residual(y))) <= tol and min(p.min_eigenvalues(y)) >= -tol


def test_point_mass_moments_feasible():
    rng = np.random.default_rng(1)
    for x in rng.random((100, 6)):
        relax = build_moment_feasibility(OBS3.evaluate(x), OBS3, level=3)
        assert _feasible(relax, point_moments(relax, x))


def test_point_mass_feasible_at_level_four():
    x = np.random.default_rng(4).random(6)
    relax = build_moment_feasibility(OBS3.evaluate(x), OBS3, level=4)
    assert _feasible(relax, point_moments(relax, x))


def test_mixture_closure():
    rng = np.random.default_rng(2)
    for _ in range(10):
        pts, w = rng.random((2, 6)), rng.dirichlet([1, 1])
        relax = build_moment_feasibility(OBS3.moments(w, pts), OBS3, level=3)
        assert _feasible(relax, point_moments(relax, pts, w))


def _hand_case():
    x = Polynomial.variable(0, nvars=1)
    b, grams = hand_certificate_1d()
    cert = SosCertificate(b, grams, level=1, nvars=1, margin=0.5)
    return cert, [x], [x - x * x]


def test_hand_certificate_valid():
    cert, obs, cons = _hand_case()
    check = validate_certificate(cert, [1.5], obs, cons)
    assert check.valid and check.identity_residual == 0 and check.margin == pytest.approx(0.5)


def test_hand_certificate_does_not_reject_feasible_mean():
    cert, obs, cons = _hand_case()
    check = validate_certificate(cert, [0.7], obs, cons)
    assert not check.valid and check.reason == "margin"


def test_trivial_certificate_fails_margin():
    grams = [np.zeros((84, 84))] + [np.zeros((28, 28))] * 6
    grams[0][0, 0] = 1.0
    cert = SosCertificate(np.zeros(64), tuple(grams), 3, 6, -1.0)
    check = validate_certificate(cert, np.full(64, 1 / 64), OBS3)
    assert check.identity_residual == 0 and check.margin == -1.0
    assert not check.valid and check.reason == "margin"


def test_perturbed_identity_rejected():
    cert, obs, cons = _hand_case()
    tol = Tolerances()
    Q0 = cert.grams[0].copy()
    Q0[0, 0] += 10 * tol.identity
    bad = SosCertificate(cert.b, (Q0, cert.grams[1]), 1, 1, cert.margin)
    check = validate_certificate(bad, [1.5], obs, cons, tol)
    assert check.reason == "identity" and check.identity_residual == pytest.approx(1e-7)


def test_negative_gram_eigenvalue_rejected():
    cert, obs, cons = _hand_case()
    bad = SosCertificate(cert.b, (cert.grams[0], np.array([[-1e-3]])), 1, 1, cert.margin)
    assert validate_certificate(bad, [1.5], obs, cons).reason == "psd"


def test_wrong_structure_rejected():
    cert, obs, cons = _hand_case()
    bad = SosCertificate(cert.b, (cert.grams[0],), 1, 1, cert.margin)
    assert validate_certificate(bad, [1.5], obs, cons).reason == "structure"
    bad = SosCertificate(cert.b, (np.eye(3), cert.grams[1]), 1, 1, cert.margin)
    assert validate_certificate(bad, [1.5], obs, cons).reason == "structure"


def test_exact_and_float_residuals_agree():
    cert, obs, cons = _hand_case()
    assert identity_residual(cert, obs, cons, exact=True) == identity_residual(cert, obs, cons, exact=False) == 0


def test_certificate_json_round_trip():
    cert, obs, cons = _hand_case()
    back = SosCertificate.from_json(cert.to_json())
    assert np.array_equal(back.b, cert.b) and all(np.array_equal(a, b) for a, b in zip(back.grams, cert.grams))
    assert validate_certificate(back, [1.5], obs, cons).valid


def test_extracted_certificate_sound(point_mass):
    relax, out = point_mass
    assert out.status == INFEASIBLE
    cert = extract_certificate(relax, out)
    check = validate_certificate(cert, relax.y_hat, OBS3)
    assert check.valid, check
    # a valid certificate bounds b.f by 1 everywhere on the box
    pts = np.random.default_rng(6).random((100_000, 6))
    values = OBS3.evaluate_many(pts) @ cert.b
    assert values.max() <= 1 + Tolerances().identity
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * 6)).reshape(6, -1).T
    assert (OBS3.evaluate_many(corners) @ cert.b).max() <= 1 + Tolerances().identity


def test_certificate_survives_json(point_mass):
    relax, out = point_mass
    cert = extract_certificate(relax, out)
    back = SosCertificate.from_json(cert.to_json())
    assert validate_certificate(back, relax.y_hat, OBS3).valid
