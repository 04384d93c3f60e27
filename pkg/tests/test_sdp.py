import numpy as np
import pytest

from latent_homophily.model import joint_observable_polys
from latent_homophily.relaxation import build_moment_feasibility, extract_certificate, validate_certificate
from latent_homophily.sdp import (FEASIBLE, INFEASIBLE, UNKNOWN, SdpProblem, SolverOptions, make_block, solve)
from latent_homophily.sdp.solver import witness_residuals

OBS3 = joint_observable_polys(3)


def scalar(rhs):
    """Find y >= 0 with y = rhs."""
    return SdpProblem(1, (make_block("y", 1, [(1, 0, 0, 1.0)]),), [0], [0], [1.0], [rhs])


def corr(rhs):
    """[[1, y], [y, 1]] PSD with y = rhs; feasible iff |rhs| <= 1."""
    blk = make_block("corr", 2, [(0, 0, 0, 1.0), (0, 1, 1, 1.0), (1, 0, 1, 1.0)])
    return SdpProblem(1, (blk,), [0], [0], [1.0], [rhs])


def test_scalar_feasible():
    out = solve(scalar(1.0))
    assert out.status == FEASIBLE and out.y[0] == pytest.approx(1.0, abs=1e-8)


def test_scalar_infeasible_ray():
    out = solve(scalar(-1.0))
    assert out.status == INFEASIBLE
    assert out.ray.margin > 0 and out.ray.min_eigenvalue >= -1e-9


@pytest.mark.parametrize("rhs, status", [(0.5, FEASIBLE), (-0.9, FEASIBLE), (2.0, INFEASIBLE), (-1.5, INFEASIBLE)])
def test_correlation_matrix(rhs, status):
    out = solve(corr(rhs))
    assert out.status == status
    if status == FEASIBLE:
        eq, eig = witness_residuals(corr(rhs), out.y)
        assert eq <= 1e-7 and eig >= -1e-7
    else:
        assert out.ray.margin > 0


def test_inconsistent_equalities():
    p = SdpProblem(1, (make_block("y", 1, [(1, 0, 0, 1.0)]),), [0, 1], [0, 0], [1.0, 1.0], [1.0, 2.0])
    out = solve(p)
    assert out.status == INFEASIBLE and out.ray.margin > 0


def test_deterministic():
    a, b = solve(corr(0.3)), solve(corr(0.3))
    assert a.status == b.status and np.array_equal(a.y, b.y)


def test_mixture_relaxation_feasible():
    rng = np.random.default_rng(21)
    pts = rng.random((2, 6))
    relax = build_moment_feasibility(OBS3.moments([0.5, 0.5], pts), OBS3, level=3)
    out = solve(relax.problem)
    assert out.status == FEASIBLE and out.ray is None
    eq, eig = witness_residuals(relax.problem, out.y)
    assert eq <= 1e-7 and eig >= -1e-7


def test_iteration_cap_is_unknown():
    pts = np.random.default_rng(3).random((2, 6))
    relax = build_moment_feasibility(OBS3.moments([0.5, 0.5], pts), OBS3, level=3)
    out = solve(relax.problem, SolverOptions(max_iterations=1))
    assert out.status == UNKNOWN
    assert {"equality", "min_eigenvalue"} <= set(out.residuals)


def test_status_exclusive(point_mass):
    relax, out = point_mass
    assert out.status == INFEASIBLE
    if out.y is not None:
        eq, eig = witness_residuals(relax.problem, out.y)
        assert eq > 1e-7 or eig < -1e-7
    assert validate_certificate(extract_certificate(relax, out), relax.y_hat, OBS3).valid
