from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import linprog

from conefract import cones, ipm
from conefract.cones import nonneg, product, psd, soc, svec
from conefract.ipm import IPMSettings, solve


def interior_pair(rng, block):
    ident = cones.block_identity(block)
    x = ident + 0.3 * rng.standard_normal(block.size)
    s = ident + 0.3 * rng.standard_normal(block.size)
    # project back inside if the noise went too far
    for v in (x, s):
        _, margin = cones.part_face_membership(block, cones.full_face_of(block), v)
        if margin <= 0.05:
            v += (0.1 - margin) * ident
    return x, s


@pytest.mark.parametrize("block", [nonneg(4), soc(3), soc(5), psd(2), psd(3)])
def test_nt_scaling_identities(block):
    rng = np.random.default_rng(hash(block.kind) % 1000 + block.size)
    x, s = interior_pair(rng, block)
    sc = ipm._Scaling(block, x, s)
    lam_from_s = sc.W @ s
    lam_from_x = np.linalg.solve(sc.W.T, x)
    assert np.allclose(lam_from_s, lam_from_x, atol=1e-9)
    assert np.allclose(lam_from_s, sc.lam, atol=1e-9)
    assert np.allclose(sc.W @ sc.Winv, np.eye(block.size), atol=1e-9)


@pytest.mark.parametrize("block", [nonneg(3), soc(4), psd(3)])
def test_jordan_division_inverts_product(block):
    rng = np.random.default_rng(3 + block.size)
    lam, _ = interior_pair(rng, block)
    r = rng.standard_normal(block.size)
    u = ipm._jdiv(block, lam, r)
    assert np.allclose(ipm._jprod(block, lam, u), r, atol=1e-9)


def test_step_to_boundary_soc():
    block = soc(3)
    x = np.array([2.0, 0.0, 0.0])
    d = np.array([-1.0, 0.0, 0.0])
    assert math.isclose(ipm._step_to_boundary(block, x, d), 2.0)
    d2 = np.array([0.0, 1.0, 0.0])
    assert math.isclose(ipm._step_to_boundary(block, x, d2), 2.0)
    d3 = np.array([1.0, 0.5, 0.0])
    assert ipm._step_to_boundary(block, x, d3) == math.inf


def test_step_to_boundary_psd():
    block = psd(2)
    x = svec(np.eye(2))
    d = svec(np.diag([-1.0, -0.5]))
    assert math.isclose(ipm._step_to_boundary(block, x, d), 1.0, rel_tol=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_lp_against_scipy(seed):
    rng = np.random.default_rng(200 + seed)
    m, n = int(rng.integers(1, 4)), int(rng.integers(3, 8))
    A = rng.standard_normal((m, n))
    b = A @ rng.uniform(0.2, 1.0, n)
    c = rng.standard_normal(n)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
    res = solve(A, b, c, product(nonneg(n)))
    if ref.status == 0:
        assert res.status == "optimal"
        assert abs(float(c @ res.x) - ref.fun) < 1e-6 * (1 + abs(ref.fun))
        assert np.linalg.norm(A @ res.x - b) < 1e-6
        assert res.x.min() > -1e-9
    else:
        assert res.status != "optimal" or res.gap > 1e-9


def test_soc_analytic_optimum():
    # minimize x0 with the tail pinned to (3, 4): optimum on the boundary
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    b = np.array([3.0, 4.0])
    c = np.array([1.0, 0.0, 0.0])
    res = solve(A, b, c, product(soc(3)))
    assert res.status == "optimal"
    assert abs(res.x[0] - 5.0) < 1e-6
    # dual: y = -(3,4)/5, slack = (1, 3/5, 4/5)
    assert abs(float(b @ res.y) - 5.0) < 1e-6


def test_psd_analytic_optimum():
    # minimize trace X with X12 fixed to 1; the off-diagonal coordinate
    # carries a sqrt(2) factor, so the row is [0,1,0] against b = sqrt(2)
    A = np.array([[0.0, 1.0, 0.0]])
    b = np.array([math.sqrt(2.0)])
    c = svec(np.eye(2))
    res = solve(A, b, c, product(psd(2)))
    assert res.status == "optimal"
    assert abs(float(c @ res.x) - 2.0) < 1e-6
    xm = cones.smat(res.x, 2)
    assert abs(xm[0, 1] - 1.0) < 1e-6
    assert abs(xm[0, 0] - 1.0) < 1e-4 and abs(xm[1, 1] - 1.0) < 1e-4


def test_mixed_cone_problem():
    # orthant + second-order + matrix block, value assembled from the
    # analytic single-block answers because the blocks are uncoupled
    k = product(nonneg(2), soc(3), psd(2))
    n = k.dim
    A = np.zeros((4, n))
    A[0, 0] = 1.0  # x_lp[0] = 1
    A[1, 3] = 1.0  # soc tail
    A[2, 4] = 1.0
    A[3, 6] = 1.0  # psd off-diagonal = 1 (svec coordinate is sqrt(2) X12)
    b = np.array([1.0, 3.0, 4.0, math.sqrt(2.0)])
    c = np.concatenate([[2.0, 1.0], [1.0, 0.0, 0.0], svec(np.eye(2))])
    res = solve(A, b, c, k)
    assert res.status == "optimal"
    assert abs(float(c @ res.x) - (2.0 + 5.0 + 2.0)) < 1e-5


def test_degenerate_face_limit_is_interior():
    # zero cost over a segment: path following converges to the analytic
    # center rather than an endpoint
    A = np.array([[1.0, 1.0]])
    b = np.array([1.0])
    c = np.zeros(2)
    res = solve(A, b, c, product(nonneg(2)))
    assert res.status == "optimal"
    assert res.x[0] > 0.3 and res.x[1] > 0.3


def test_warm_start_converges_quickly():
    # both sides built strictly feasible so the optimum exists and the
    # supplied interior point is genuinely usable
    rng = np.random.default_rng(5)
    n = 6
    A = rng.standard_normal((2, n))
    x0 = rng.uniform(0.5, 1.0, n)
    b = A @ x0
    y0 = rng.standard_normal(2)
    s0 = rng.uniform(0.5, 1.5, n)
    c = A.T @ y0 + s0
    cold = solve(A, b, c, product(nonneg(n)))
    warm = solve(A, b, c, product(nonneg(n)), warm=(x0, y0, s0))
    assert cold.status == "optimal" and warm.status == "optimal"
    assert abs(float(c @ warm.x) - float(c @ cold.x)) < 1e-6
    assert warm.iterations <= cold.iterations + 2


def test_unbounded_problem_returns_ray():
    # min -x0 with x0 - x1 = 0 on the positive quadrant runs off along the
    # diagonal; the solver should hand back that improving ray
    A = np.array([[1.0, -1.0]])
    b = np.array([0.0])
    c = np.array([-1.0, 0.0])
    res = solve(A, b, c, product(nonneg(2)))
    assert res.status == "unbounded"
    assert np.abs(A @ res.x).max() < 1e-6
    assert float(c @ res.x) < -0.5
    assert res.x.min() > -1e-9


def test_infeasible_problem_returns_dual_certificate():
    # x0 + x1 = -1 cannot hold on the quadrant; expect a Farkas pair
    A = np.array([[1.0, 1.0]])
    b = np.array([-1.0])
    c = np.array([1.0, 1.0])
    res = solve(A, b, c, product(nonneg(2)))
    assert res.status == "infeasible"
    assert float(b @ res.y) > 0.5
    assert np.abs(A.T @ res.y + res.s).max() < 1e-6
    assert res.s.min() > -1e-9


def test_boundary_optimum_with_boundary_dual():
    # minimize x2 over the ice cream cone with the head pinned at 1; the
    # optimum sits at (1, 0, -1) and the dual slack (1, 0, 1) is also on
    # the boundary, so both sequences approach faces rather than interiors
    A = np.array([[1.0, 0.0, 0.0]])
    b = np.array([1.0])
    c = np.array([0.0, 0.0, 1.0])
    res = solve(A, b, c, product(soc(3)), IPMSettings(max_iters=100))
    assert res.status == "optimal"
    assert abs(float(c @ res.x) + 1.0) < 1e-6
    assert np.abs(res.x - np.array([1.0, 0.0, -1.0])).max() < 1e-5


def test_unattained_value_still_converges_in_gap():
    # minimize x0 - x2 with x1 pinned at 1: along the cone boundary the
    # objective tends to 0 but no feasible point reaches it, so iterates
    # run off to infinity while the value converges; the solver cannot
    # certify optimality to tight tolerances, but the best iterate must
    # carry the value essentially to the infimum while staying feasible
    A = np.array([[0.0, 1.0, 0.0]])
    b = np.array([1.0])
    c = np.array([1.0, 0.0, -1.0])
    res = solve(A, b, c, product(soc(3)), IPMSettings(max_iters=100))
    assert res.primal_res < 1e-6
    assert abs(float(c @ res.x)) < 1e-3
    # the blow up of the iterate is the signature of unattainment
    assert np.linalg.norm(res.x) > 1e3
