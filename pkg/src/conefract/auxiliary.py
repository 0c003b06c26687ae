"""The self-correcting auxiliary pair behind every reduction step.

Given the current face ``F`` of the cone, one step has to decide: does a
dual slack exist with the right amount of interiority, or is there a
direction that cuts ``F`` down further (or even proves the problem
infeasible)?  Both questions are answered by one small conic program built
here.  Its variables are ``(x, q, t, w)`` where ``x`` carries the conic
coordinates of the search space, ``q`` the flat ones, and ``t, w`` are
nonnegative scalars:

    minimize    t
    subject to  -<c, x_amb> + t * (1 + <c, e_star>) - w = 0
                <e, x_amb> + w = 1
                A x_amb - t * (A e_star) = 0
                x in C,  q free,  t >= 0,  w >= 0

with ``x_amb = phi x + perp q``.  The pair is self-correcting in the sense
that it is always solvable with zero duality gap and a known interior
starting point, no matter how degenerate the problem being reduced is.

Reading off the answer: value zero yields a direction (a further cut, or an
infeasibility witness if it pairs negatively with ``c``), while a positive
value yields a slack with the interiority the chosen variant asked for.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import cones
from .cones import ConeProduct, Face
from .embedding import FaceEmbedding, build_embedding
from .model import ConicLP


class AuxVariant(enum.Enum):
    """Which interiority the positive-value branch certifies.

    GENERIC asks for a slack in the relative interior of the face.  PHASE1
    drops the interiority requirement on polyhedral parts (their normalizing
    vector is zeroed), certifying the partial polyhedral Slater condition.
    PHASE2 replaces nonpolyhedral parts by their spans altogether.
    """

    GENERIC = "generic"
    PHASE1 = "phase1"
    PHASE2 = "phase2"


@dataclass
class AuxPair:
    prob: ConicLP
    face: Face
    variant: AuxVariant
    embedding: FaceEmbedding
    A_hat: np.ndarray
    b_hat: np.ndarray
    c_hat: np.ndarray
    sym_cone: ConeProduct
    e_red: np.ndarray
    e_star_red: np.ndarray
    e_amb: np.ndarray
    e_star_amb: np.ndarray
    warm_primal: np.ndarray
    warm_dual: np.ndarray

    # variable layout: [x_sym | q | t | w]
    @property
    def n_sym(self) -> int:
        return self.embedding.n_sym

    @property
    def n_free(self) -> int:
        return self.embedding.n_perp

    @property
    def t_index(self) -> int:
        return self.n_sym + self.n_free

    @property
    def w_index(self) -> int:
        return self.n_sym + self.n_free + 1

    def ambient_x(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        q = z[self.n_sym : self.n_sym + self.n_free] if self.n_free else None
        return self.embedding.to_ambient(z[: self.n_sym], q)


def _snap(arr: np.ndarray, scale: float, rel: float = 1e-5) -> np.ndarray:
    """Zero entries that are projection noise rather than data.

    Embedded data like ``phi.T @ c`` inherits the error of the face
    descriptors.  A face read off a path-following solve carries the
    identification error of that solve, which scales like the square root
    of its final gap, so around 1e-7 at best; kept, such an entry hands the
    next solve an escape ray of magnitude one over the noise.  The
    threshold sits well above that error and well below honestly scaled
    data.  Everything read off the pair is revalidated against the
    unperturbed problem anyway, so an over-eager snap can only stall the
    loop, never falsify a certificate.
    """
    if scale <= 0.0 or arr.size == 0:
        return arr
    out = np.array(arr, dtype=float)
    out[np.abs(out) <= rel * scale] = 0.0
    return out


def _normalizer(sym_cone: ConeProduct, variant: AuxVariant) -> np.ndarray:
    """The vector ``e`` in reduced coordinates."""
    parts = []
    for block in sym_cone.blocks:
        full = cones.full_face_of(block)
        poly = cones.part_is_polyhedral(block, full)
        if variant is AuxVariant.PHASE1 and poly:
            parts.append(np.zeros(block.size))
        else:
            parts.append(cones.block_identity(block))
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)


def build_aux_pair(
    prob: ConicLP, face: Face, variant: AuxVariant = AuxVariant.GENERIC
) -> AuxPair:
    emb = build_embedding(face, relax_nonpoly=(variant is AuxVariant.PHASE2))
    sym = emb.sym_cone
    n_sym, n_free = emb.n_sym, emb.n_perp
    m = prob.m

    e_red = _normalizer(sym, variant)
    e_star_red = sym.identity() if n_sym else np.zeros(0)
    e_amb = emb.phi @ e_red if n_sym else np.zeros(prob.n)
    e_star_amb = emb.phi @ e_star_red if n_sym else np.zeros(prob.n)

    ncols = n_sym + n_free + 2
    A_hat = np.zeros((m + 2, ncols))
    b_hat = np.zeros(m + 2)
    c_hat = np.zeros(ncols)

    c_scale = float(np.abs(prob.c).max()) if prob.n else 0.0
    c_sym = _snap(emb.phi.T @ prob.c, c_scale)
    c_free = _snap(emb.perp.T @ prob.c, c_scale) if n_free else np.zeros(0)

    # objective-link row
    A_hat[0, :n_sym] = -c_sym
    A_hat[0, n_sym : n_sym + n_free] = -c_free
    A_hat[0, n_sym + n_free] = 1.0 + float(prob.c @ e_star_amb)
    A_hat[0, n_sym + n_free + 1] = -1.0
    # normalization row (the flat coordinates never meet ``e``)
    A_hat[1, :n_sym] = e_red
    A_hat[1, n_sym + n_free + 1] = 1.0
    b_hat[1] = 1.0
    # kernel-coupling rows
    if m:
        row_scale = np.abs(prob.A).max(axis=1)
        A_hat[2:, :n_sym] = prob.A @ emb.phi
        if n_free:
            A_hat[2:, n_sym : n_sym + n_free] = prob.A @ emb.perp
        A_hat[2:, n_sym + n_free] = -(prob.A @ e_star_amb)
        for i in range(m):
            A_hat[2 + i, :] = _snap(A_hat[2 + i, :], float(row_scale[i]))
    c_hat[n_sym + n_free] = 1.0

    gamma = float(e_red @ e_star_red) + 1.0
    warm_primal = np.zeros(ncols)
    if n_sym:
        warm_primal[:n_sym] = e_star_red / gamma
    warm_primal[n_sym + n_free] = 1.0 / gamma
    warm_primal[n_sym + n_free + 1] = 1.0 / gamma
    warm_dual = np.zeros(m + 2)
    warm_dual[1] = -1.0

    return AuxPair(
        prob=prob,
        face=face,
        variant=variant,
        embedding=emb,
        A_hat=A_hat,
        b_hat=b_hat,
        c_hat=c_hat,
        sym_cone=sym,
        e_red=e_red,
        e_star_red=e_star_red,
        e_amb=e_amb,
        e_star_amb=e_star_amb,
        warm_primal=warm_primal,
        warm_dual=warm_dual,
    )


class OutcomeKind(enum.Enum):
    REDUCE = "reduce"
    INFEASIBLE = "infeasible"
    PPS = "pps"
    AMBIGUOUS = "ambiguous"


@dataclass
class AuxOutcome:
    kind: OutcomeKind
    t_star: float
    direction: np.ndarray | None = None
    cost_pairing: float | None = None
    slack: np.ndarray | None = None
    y_ratio: np.ndarray | None = None
    reason: str = ""
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None


def _solution_residuals(aux: AuxPair, z: np.ndarray, y: np.ndarray) -> dict[str, float]:
    prim = float(np.linalg.norm(aux.A_hat @ z - aux.b_hat))
    slack = aux.c_hat - aux.A_hat.T @ y
    n_sym, n_free = aux.n_sym, aux.n_free
    free_slack = (
        float(np.linalg.norm(slack[n_sym : n_sym + n_free])) if n_free else 0.0
    )
    cone_violation = 0.0
    if n_sym:
        for block, piece in zip(aux.sym_cone.blocks, aux.sym_cone.split(z[:n_sym])):
            cone_violation = max(cone_violation, _block_violation(block, piece))
        for block, piece in zip(
            aux.sym_cone.blocks, aux.sym_cone.split(slack[:n_sym])
        ):
            cone_violation = max(cone_violation, _block_violation(block, piece))
    tw_violation = max(0.0, -float(min(z[aux.t_index], z[aux.w_index])))
    dual_tw = max(0.0, -float(min(slack[aux.t_index], slack[aux.w_index])))
    gap = abs(float(aux.c_hat @ z) - float(aux.b_hat @ y))
    return {
        "primal": prim,
        "free_slack": free_slack,
        "cone": max(cone_violation, tw_violation, dual_tw),
        "gap": gap,
    }


def _block_violation(block, piece) -> float:
    if block.kind == cones.NONNEG:
        return max(0.0, -float(piece.min(initial=0.0)))
    if block.kind == cones.SOC:
        return max(0.0, float(np.linalg.norm(piece[1:]) - piece[0]))
    eigs = np.linalg.eigvalsh(cones.smat(piece, block.side))
    return max(0.0, -float(eigs.min(initial=0.0)))


def interpret(
    aux: AuxPair, primal: np.ndarray, dual: np.ndarray, tol: float = 1e-8
) -> AuxOutcome:
    """Classify a solved auxiliary pair.

    The trichotomy is deliberate: values in the gray zone just above ``tol``
    are reported as ambiguous rather than silently rounded either way, so
    the caller can retry at tighter tolerances or give up loudly.
    """
    z = np.asarray(primal, dtype=float)
    y = np.asarray(dual, dtype=float)
    res = _solution_residuals(aux, z, y)
    pre_tol = 100.0 * tol
    for name in ("primal", "free_slack", "cone", "gap"):
        if res[name] > pre_tol:
            return AuxOutcome(
                OutcomeKind.AMBIGUOUS,
                float(z[aux.t_index]),
                reason=f"solution quality: {name} residual {res[name]:.3e}",
                primal=z,
                dual=y,
            )

    t_star = float(z[aux.t_index])
    if t_star <= tol:
        x_amb = aux.ambient_x(z)
        cx = float(aux.prob.c @ x_amb)
        scale = tol * max(1.0, float(np.linalg.norm(aux.prob.c)) * float(np.linalg.norm(x_amb)))
        if cx < -scale:
            kind = OutcomeKind.INFEASIBLE
        elif cx <= scale:
            kind = OutcomeKind.REDUCE
        else:
            return AuxOutcome(
                OutcomeKind.AMBIGUOUS,
                t_star,
                reason=f"value zero but positive cost pairing {cx:.3e}",
                primal=z,
                dual=y,
            )
        return AuxOutcome(
            kind,
            t_star,
            direction=x_amb,
            cost_pairing=cx,
            primal=z,
            dual=y,
        )
    if t_star <= 10.0 * tol:
        return AuxOutcome(
            OutcomeKind.AMBIGUOUS,
            t_star,
            reason=f"value {t_star:.3e} in the gray zone",
            primal=z,
            dual=y,
        )
    y1 = float(y[0])
    if y1 <= tol:
        return AuxOutcome(
            OutcomeKind.AMBIGUOUS,
            t_star,
            reason=f"positive value but first multiplier {y1:.3e} not positive",
            primal=z,
            dual=y,
        )
    ratio = y[2:] / y1
    slack = aux.prob.c - aux.prob.A.T @ ratio if aux.prob.m else np.array(aux.prob.c)
    return AuxOutcome(
        OutcomeKind.PPS,
        t_star,
        slack=slack,
        y_ratio=ratio,
        primal=z,
        dual=y,
    )
