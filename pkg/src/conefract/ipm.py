"""Interior-point solver for the conic subproblems.

This is a homogeneous self-dual embedding solved by primal-dual path
following with Nesterov-Todd scaling and a Mehrotra predictor-corrector
step.  The embedding searches ``(x, y, s, tau, kappa)`` with

    A x            = tau * b
    A^T y + s      = tau * c
    c^T x - b^T y  = -kappa

together with ``x, s`` in the cone and ``tau, kappa >= 0``; solutions with
``tau > 0`` dehomogenize to an optimal primal-dual pair.  The problems fed
to it here are always solvable with zero gap and come with interior warm
starts, so the embedding mostly serves as insurance against the wild
geometry of nearly degenerate instances.

Sizes in this package are tiny, so every linear map is a dense matrix and
the normal equations are formed explicitly.  When they go numerically
singular the step falls back to a least-squares solve; there is no
regularization and no presolve, degeneracy is the object of study here, not
something to paper over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import cones
from .cones import ConeBlock, ConeProduct


@dataclass
class IPMSettings:
    max_iters: int = 200
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    step_fraction: float = 0.98


@dataclass
class IPMResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    iterations: int
    primal_res: float
    dual_res: float
    gap: float
    tau: float
    kappa: float


def cone_degree(cone: ConeProduct) -> int:
    deg = 0
    for b in cone.blocks:
        if b.kind == cones.NONNEG:
            deg += b.size
        elif b.kind == cones.SOC:
            deg += 1
        else:
            deg += b.side
    return deg


# ---------------------------------------------------------------------------
# Jordan-algebra helpers, per block
# ---------------------------------------------------------------------------


def _jprod(block: ConeBlock, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if block.kind == cones.NONNEG:
        return u * v
    if block.kind == cones.SOC:
        out = np.empty_like(u)
        out[0] = float(u @ v)
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out
    mu, mv = cones.smat(u, block.side), cones.smat(v, block.side)
    return cones.svec(0.5 * (mu @ mv + mv @ mu))


def _jdiv(block: ConeBlock, lam: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Solve ``lam o u = r`` for ``u``."""
    if block.kind == cones.NONNEG:
        return r / lam
    if block.kind == cones.SOC:
        l0, lbar = lam[0], lam[1:]
        det = l0 * l0 - float(lbar @ lbar)
        u0 = (l0 * r[0] - float(lbar @ r[1:])) / det
        ubar = (r[1:] - u0 * lbar) / l0
        return np.concatenate(([u0], ubar))
    lmat = cones.smat(lam, block.side)
    vals, vecs = np.linalg.eigh(lmat)
    rmat = vecs.T @ cones.smat(r, block.side) @ vecs
    denom = 0.5 * (vals[:, None] + vals[None, :])
    umat = rmat / denom
    return cones.svec(vecs @ umat @ vecs.T)


def _soc_jmat(size: int) -> np.ndarray:
    return np.diag(np.concatenate(([1.0], -np.ones(size - 1))))


def _soc_sqrt(u: np.ndarray) -> np.ndarray:
    """Jordan square root via the spectral decomposition of the cone."""
    u0, ub = u[0], u[1:]
    nb = float(np.linalg.norm(ub))
    l1, l2 = u0 + nb, u0 - nb
    if l2 <= 0:
        raise FloatingPointError("square root outside the cone")
    if nb < 1e-300:
        return np.concatenate(([math.sqrt(u0)], np.zeros_like(ub)))
    unit = ub / nb
    r1, r2 = math.sqrt(l1), math.sqrt(l2)
    return np.concatenate(([(r1 + r2) / 2.0], (r1 - r2) / 2.0 * unit))


def _soc_inv(u: np.ndarray) -> np.ndarray:
    det = u[0] * u[0] - float(u[1:] @ u[1:])
    out = -u.copy()
    out[0] = u[0]
    return out / det


def _soc_quad_rep(u: np.ndarray) -> np.ndarray:
    det = u[0] * u[0] - float(u[1:] @ u[1:])
    return 2.0 * np.outer(u, u) - det * _soc_jmat(u.size)


def _svec_congruence(p: np.ndarray) -> np.ndarray:
    """Dense matrix of the map ``M -> P^T M P`` in svec coordinates."""
    side = p.shape[0]
    d = cones.svec_dim(side)
    out = np.empty((d, d))
    for k, (i, j) in enumerate(cones.svec_indices(side)):
        m = np.zeros((side, side))
        if i == j:
            m[i, j] = 1.0
        else:
            m[i, j] = m[j, i] = 1.0 / math.sqrt(2.0)
        out[:, k] = cones.svec(p.T @ m @ p)
    return out


class _Scaling:
    """Nesterov-Todd scaling of one block: matrices ``W`` and ``W^{-1}``
    with ``lam = W s = W^{-T} x`` at the current iterate."""

    def __init__(self, block: ConeBlock, x: np.ndarray, s: np.ndarray):
        self.block = block
        if block.kind == cones.NONNEG:
            w = np.sqrt(x / s)
            self.W = np.diag(w)
            self.Winv = np.diag(1.0 / w)
            self.lam = np.sqrt(x * s)
            return
        if block.kind == cones.SOC:
            # the scaling point w satisfies Q_w s = x; W is the quadratic
            # representation of its square root, a symmetric matrix with
            # W s = W^{-1} x
            xr = _soc_sqrt(x)
            qxr = _soc_quad_rep(xr)
            t = qxr @ s
            if t[0] <= float(np.linalg.norm(t[1:])):
                raise FloatingPointError("iterate left the cone")
            w = qxr @ _soc_inv(_soc_sqrt(t))
            wr = _soc_sqrt(w)
            self.W = _soc_quad_rep(wr)
            self.Winv = _soc_quad_rep(_soc_inv(wr))
            self.lam = self.W @ s
            return
        xm = cones.smat(x, block.side)
        sm = cones.smat(s, block.side)
        lx = np.linalg.cholesky(xm)
        ls = np.linalg.cholesky(sm)
        u, sig, vt = np.linalg.svd(ls.T @ lx)
        if sig.min() <= 0:
            raise FloatingPointError("iterate left the cone")
        r = lx @ vt.T @ np.diag(1.0 / np.sqrt(sig))
        self.W = _svec_congruence(r)
        self.Winv = _svec_congruence(np.linalg.inv(r))
        self.lam = cones.svec(np.diag(sig))


def _step_to_boundary(block: ConeBlock, x: np.ndarray, d: np.ndarray) -> float:
    if block.kind == cones.NONNEG:
        neg = d < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-x[neg] / d[neg]))
    if block.kind == cones.SOC:
        a = d[0] * d[0] - float(d[1:] @ d[1:])
        b = 2.0 * (x[0] * d[0] - float(x[1:] @ d[1:]))
        c = x[0] * x[0] - float(x[1:] @ x[1:])
        best = math.inf
        if d[0] < 0:
            best = -x[0] / d[0]
        if abs(a) < 1e-300:
            if b < 0:
                best = min(best, -c / b)
            return best
        disc = b * b - 4.0 * a * c
        if disc < 0:
            return best
        sq = math.sqrt(disc)
        r1 = (-b - sq) / (2.0 * a)
        r2 = (-b + sq) / (2.0 * a)
        if a < 0:
            # parabola opens down, the membership stays valid up to the
            # larger root
            r = max(r1, r2)
            if r > 0:
                best = min(best, r)
        else:
            lo = min(r1, r2)
            if lo > 0:
                best = min(best, lo)
        return best
    xm = cones.smat(x, block.side)
    dm = cones.smat(d, block.side)
    l = np.linalg.cholesky(xm)
    inner = sla.solve_triangular(l, dm, lower=True)
    inner = sla.solve_triangular(l, inner.T, lower=True)
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    lo = float(vals.min())
    if lo >= 0:
        return math.inf
    return -1.0 / lo


def max_step(cone: ConeProduct, x: np.ndarray, d: np.ndarray) -> float:
    best = math.inf
    for block, xb, db in zip(cone.blocks, cone.split(x), cone.split(d)):
        best = min(best, _step_to_boundary(block, xb, db))
    return best


def _interiorize(cone: ConeProduct, s: np.ndarray) -> np.ndarray:
    """Push a boundary point strictly inside by adding identity as needed."""
    out = []
    for block, sb in zip(cone.blocks, cone.split(s)):
        ident = cones.block_identity(block)
        _, margin = cones.part_face_membership(
            block, cones.full_face_of(block), sb
        )
        if margin < 0.1:
            sb = sb + (0.1 - margin) * ident
        out.append(sb)
    return cone.join(out) if out else np.zeros(0)


def solve(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    cone: ConeProduct,
    settings: IPMSettings | None = None,
    warm: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> IPMResult:
    """Minimize ``c @ x`` over ``A x = b``, ``x`` in the cone."""
    settings = settings or IPMSettings()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    m, n = A.shape
    if cone.dim != n:
        raise ValueError("cone does not match the data")

    if warm is not None:
        x = _interiorize(cone, np.asarray(warm[0], dtype=float))
        y = np.asarray(warm[1], dtype=float).copy()
        s = _interiorize(cone, np.asarray(warm[2], dtype=float))
    else:
        x = cone.identity()
        y = np.zeros(m)
        s = cone.identity()
    tau, kappa = 1.0, 1.0
    nu = cone_degree(cone) + 1

    blocks = cone.blocks
    splits = cone.offsets + (n,)

    def split(v):
        return [v[splits[i] : splits[i + 1]] for i in range(len(blocks))]

    best = None
    hit_limit = False
    for it in range(settings.max_iters):
        xh, yh, sh = x / tau, y / tau, s / tau
        pres = np.linalg.norm(A @ xh - b) / (1.0 + np.linalg.norm(b))
        dres = np.linalg.norm(A.T @ yh + sh - c) / (1.0 + np.linalg.norm(c))
        pobj, dobj = float(c @ xh), float(b @ yh)
        gap = float(xh @ sh)
        relgap = gap / max(1.0, abs(pobj), abs(dobj))
        if best is None or pres + dres + relgap < best[0]:
            best = (pres + dres + relgap, xh.copy(), yh.copy(), sh.copy(), it, pres, dres, gap)
        if pres <= settings.feas_tol and dres <= settings.feas_tol and relgap <= settings.gap_tol:
            return IPMResult("optimal", xh, yh, sh, it, pres, dres, gap, tau, kappa)
        if tau < 1e-12 * max(1.0, kappa):
            # the homogenization collapsed; the raw iterate is then a ray
            # certificate of unboundedness or infeasibility when clean
            anorm = 1.0 + np.linalg.norm(A)
            ctx, bty = float(c @ x), float(b @ y)
            if ctx < 0 and np.linalg.norm(A @ x) <= 1e-7 * anorm * np.linalg.norm(x):
                z = x / (-ctx)
                return IPMResult(
                    "unbounded", z, yh, sh, it,
                    float(np.linalg.norm(A @ z)), dres, gap, tau, kappa,
                )
            certn = np.linalg.norm(y) + np.linalg.norm(s)
            if bty > 0 and np.linalg.norm(A.T @ y + s) <= 1e-7 * anorm * certn:
                return IPMResult(
                    "infeasible", xh, y / bty, s / bty, it,
                    pres, float(np.linalg.norm(A.T @ y + s) / bty), gap, tau, kappa,
                )
            break

        try:
            scalings = [
                _Scaling(blk, xb, sb)
                for blk, xb, sb in zip(blocks, split(x), split(s))
            ]
        except (np.linalg.LinAlgError, FloatingPointError):
            break
        W = sla.block_diag(*[sc.W for sc in scalings]) if blocks else np.zeros((0, 0))
        Winv = (
            sla.block_diag(*[sc.Winv for sc in scalings])
            if blocks
            else np.zeros((0, 0))
        )
        lam = np.concatenate([sc.lam for sc in scalings]) if blocks else np.zeros(0)
        H = W.T @ W

        rp = A @ x - tau * b
        rd = A.T @ y + s - tau * c
        rg = float(c @ x) - float(b @ y) + kappa
        mu = (float(x @ s) + tau * kappa) / nu

        K = A @ H @ A.T
        solve_K = _make_kernel_solver(K)

        u1 = solve_K(b + A @ (H @ c))
        v1 = H @ (A.T @ u1 - c)

        def newton(eta, dvec, dk_rhs):
            g = eta * rd + Winv @ dvec
            u2 = solve_K(-eta * rp - A @ (H @ g))
            v2 = H @ (A.T @ u2 + g)
            denom = float(c @ v1) - float(b @ u1) - kappa / tau
            num = -eta * rg - float(c @ v2) + float(b @ u2) - dk_rhs / tau
            dtau = num / denom
            dy = dtau * u1 + u2
            dx = dtau * v1 + v2
            # recover ds from the dual equation rather than the scaled
            # complementarity: near the boundary the latter squares the
            # conditioning of the scaling and destroys dual feasibility
            ds = -eta * rd - A.T @ dy + c * dtau
            dkappa = (dk_rhs - kappa * dtau) / tau
            return dx, dy, ds, dtau, dkappa

        # predictor
        dxa, dya, dsa, dta, dka = newton(1.0, -lam, -tau * kappa)
        alpha_a = min(
            max_step(cone, x, dxa),
            max_step(cone, s, dsa),
            -tau / dta if dta < 0 else math.inf,
            -kappa / dka if dka < 0 else math.inf,
        )
        alpha_a = min(1.0, alpha_a)
        mu_aff = (
            float((x + alpha_a * dxa) @ (s + alpha_a * dsa))
            + (tau + alpha_a * dta) * (kappa + alpha_a * dka)
        ) / nu
        gamma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        corr_parts = []
        for blk, sc, dxb, dsb in zip(
            blocks, scalings, split(dxa), split(dsa)
        ):
            left = np.linalg.solve(sc.W.T, dxb)
            right = sc.W @ dsb
            corr_parts.append(_jprod(blk, left, right))
        rhs_parts = []
        for blk, sc, cb in zip(blocks, scalings, corr_parts):
            e = cones.block_identity(blk)
            r = -_jprod(blk, sc.lam, sc.lam) + gamma * mu * e - cb
            rhs_parts.append(_jdiv(blk, sc.lam, r))
        dvec = np.concatenate(rhs_parts) if rhs_parts else np.zeros(0)
        dk_rhs = -tau * kappa + gamma * mu - dta * dka

        dx, dy, ds, dt, dk = newton(1.0 - gamma, dvec, dk_rhs)
        alpha = min(
            max_step(cone, x, dx),
            max_step(cone, s, ds),
            -tau / dt if dt < 0 else math.inf,
            -kappa / dk if dk < 0 else math.inf,
        )
        alpha = min(1.0, settings.step_fraction * alpha)
        if not math.isfinite(alpha) or alpha <= 0:
            break
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        tau += alpha * dt
        kappa += alpha * dk
    else:
        hit_limit = True

    _, xb, yb, sb, itb, presb, dresb, gapb = best
    status = "iteration_limit" if hit_limit else "numerical"
    if (
        presb <= settings.feas_tol * 100
        and dresb <= settings.feas_tol * 100
        and gapb <= settings.gap_tol * 100 * max(1.0, abs(float(c @ xb)))
    ):
        status = "optimal"
    return IPMResult(status, xb, yb, sb, itb, presb, dresb, gapb, tau, kappa)


def _make_kernel_solver(K: np.ndarray):
    try:
        factor = sla.cho_factor(K)

        def solve_chol(rhs):
            u = sla.cho_solve(factor, rhs)
            # one round of iterative refinement; the normal-equation matrix
            # gets badly conditioned near convergence and this buys back a
            # few digits at negligible cost
            resid = rhs - K @ u
            u = u + sla.cho_solve(factor, resid)
            return u

        return solve_chol
    except (np.linalg.LinAlgError, ValueError):
        def solve_lstsq(rhs):
            return np.linalg.lstsq(K, rhs, rcond=None)[0]

        return solve_lstsq
