"""Problem generators with known ground truth.

Three families live here.  The forced family realizes the worst case for
the classical reduction: its kernel subspace is spanned by hand-picked
unit generators that chain the blocks together, so every run must peel
them off one at a time, in order.  The worked two-block example is the
small problem used throughout the narrative tests.  The planted
generators produce randomized instances whose feasibility status and
minimal face are known by construction: feasible slacks are confined to
a chosen face by building the constraint range inside the orthogonal
complement of an exposing vector, and infeasible instances carry an
explicit ray certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import cones
from .cones import (
    Face,
    ConeProduct,
    NonNegFace,
    PSDFace,
    SOCFace,
    SOC_FULL,
    SOC_RAY,
    SOC_ZERO,
    nonneg,
    product,
    psd,
    soc,
    svec,
    svec_dim,
)
from .intersect import FacePair, dnn_problem
from .model import ConicLP

__all__ = [
    "STRONGLY_FEASIBLE",
    "WEAKLY_FEASIBLE",
    "STRONGLY_INFEASIBLE",
    "WorstCaseInstance",
    "WorkedExample",
    "PlantedInstance",
    "PlantedDNN",
    "gen_worst_case",
    "gen_appendix_example",
    "gen_planted",
    "gen_planted_dnn",
    "gen_random_face",
    "gen_separation_basis",
    "gen_weakly_infeasible_toys",
    "exposing_vector",
    "random_face_point",
]

STRONGLY_FEASIBLE = "strongly_feasible"
WEAKLY_FEASIBLE = "weakly_feasible"
STRONGLY_INFEASIBLE = "strongly_infeasible"


# ---------------------------------------------------------------------------
# Unit generators on a product cone
# ---------------------------------------------------------------------------


def _vector_unit(cone: ConeProduct, block: int, i: int) -> np.ndarray:
    v = np.zeros(cone.dim)
    v[cone.offsets[block] + i] = 1.0
    return v


def _matrix_unit(cone: ConeProduct, block: int, i: int, k: int) -> np.ndarray:
    side = cone.blocks[block].side
    m = np.zeros((side, side))
    m[i, k] = m[k, i] = 1.0
    v = np.zeros(cone.dim)
    off = cone.offsets[block]
    v[off : off + svec_dim(side)] = svec(m)
    return v


# ---------------------------------------------------------------------------
# The forced worst-case family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorstCaseInstance:
    """A problem whose classical reduction is forced step by step."""

    problem: ConicLP
    script: list
    expected_steps: int
    minimal_face: Face
    soc_dims: tuple
    psd_sides: tuple

    def metadata(self) -> dict:
        return {
            "family": "worst_case",
            "soc_dims": list(self.soc_dims),
            "psd_sides": list(self.psd_sides),
            "expected_steps": self.expected_steps,
        }


def gen_worst_case(soc_dims, psd_sides) -> WorstCaseInstance:
    """Chain second-order and semidefinite blocks into a forced reduction.

    The kernel subspace is spanned by one generator per forced step.  Each
    second-order generator ties the third coordinate of one block to the
    first two coordinates of the next, so the blocks collapse to boundary
    rays one at a time.  Each semidefinite generator ties a diagonal entry
    to an off-diagonal entry one row up, so rows can only be eliminated
    top to bottom; the entry just above the last diagonal bridges into the
    next block.  The reduction therefore needs exactly one step per
    second-order block plus (side - 1) steps per semidefinite block, and
    the scripted directions are the generators themselves, in order.
    """
    soc_dims = tuple(int(t) for t in soc_dims)
    psd_sides = tuple(int(n) for n in psd_sides)
    r1, r2 = len(soc_dims), len(psd_sides)
    if r1 + r2 == 0:
        raise ValueError("need at least one block")
    if any(t < 3 for t in soc_dims):
        raise ValueError("second-order blocks need dimension at least 3")
    if any(n < 3 for n in psd_sides):
        raise ValueError("semidefinite blocks need side at least 3")

    cone = product(*(soc(t) for t in soc_dims), *(psd(n) for n in psd_sides))
    gens: list[np.ndarray] = []

    for j in range(r1):
        g = _vector_unit(cone, j, 0) + _vector_unit(cone, j, 1)
        if j > 0:
            g = g + _vector_unit(cone, j - 1, 2)
        gens.append(g)

    for j in range(r2):
        b = r1 + j
        bridge = _matrix_unit(cone, b, 0, 0)
        if j > 0:
            prev = psd_sides[j - 1]
            bridge = bridge + _matrix_unit(cone, b - 1, prev - 2, prev - 1)
        elif r1 > 0:
            bridge = bridge + _vector_unit(cone, r1 - 1, 2)
        gens.append(bridge)
        for i in range(1, psd_sides[j] - 1):
            gens.append(
                _matrix_unit(cone, b, i, i) + _matrix_unit(cone, b, i - 1, i + 1)
            )

    stack = np.vstack(gens)
    A = scipy.linalg.null_space(stack).T
    n = cone.dim
    prob = ConicLP(A, np.zeros(A.shape[0]), np.zeros(n), cone)

    parts = []
    for t in soc_dims:
        ray = np.zeros(t)
        ray[0] = 1.0 / np.sqrt(2.0)
        ray[1] = -1.0 / np.sqrt(2.0)
        parts.append(SOCFace(SOC_RAY, ray))
    for nj in psd_sides:
        basis = np.zeros((nj, 1))
        basis[nj - 1, 0] = 1.0
        parts.append(PSDFace(basis))

    steps = r1 + sum(nj - 1 for nj in psd_sides)
    return WorstCaseInstance(
        problem=prob,
        script=gens,
        expected_steps=steps,
        minimal_face=Face(cone, tuple(parts)),
        soc_dims=soc_dims,
        psd_sides=psd_sides,
    )


# ---------------------------------------------------------------------------
# The worked two-block example
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorkedExample:
    """Slack (y1, -y1) alongside [[y1, y2], [y2, y3]].

    Feasibility forces y1 = 0, then y2 = 0, so the minimal face is the
    zero face on the orthant block and the trailing diagonal ray on the
    matrix block.  Two scripted openings are kept: ``script_direct``
    reaches the minimal face in its single step, while ``script_detour``
    starts with a direction that leaves the first orthant coordinate
    alive and therefore needs a second, polyhedral step.
    """

    problem: ConicLP
    script_direct: list
    script_detour: list
    minimal_face: Face


def gen_appendix_example() -> WorkedExample:
    root2 = np.sqrt(2.0)
    M = np.array(
        [
            [1.0, -1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, root2, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )
    cone = product(nonneg(2), psd(2))
    prob = ConicLP(-M, np.zeros(3), np.zeros(5), cone)
    direct = [np.array([1.0, 2.0, 1.0, 0.0, 0.0])]
    detour = [
        np.array([0.0, 1.0, 1.0, 0.0, 0.0]),
        np.array([1.0, 0.0, -1.0, 0.0, 0.0]),
    ]
    minimal = Face(cone, (NonNegFace(()), PSDFace(np.array([[0.0], [1.0]]))))
    return WorkedExample(prob, direct, detour, minimal)


# ---------------------------------------------------------------------------
# Planted instances
# ---------------------------------------------------------------------------


def exposing_vector(face: Face) -> np.ndarray:
    """A dual-cone vector whose orthogonal slice of the cone is the face.

    Blockwise: the complement indicator for an orthant support, the
    reflected ray for a boundary ray, an interior point for a zero block,
    and the complementary projector for a semidefinite face.  Full blocks
    contribute zero.  Pairings with cone points are sums of nonnegative
    block terms, so a cone point annihilates the vector exactly when every
    block lands in its face part.
    """
    pieces = []
    for block, part in face.items():
        if isinstance(part, NonNegFace):
            w = np.ones(block.size)
            w[list(part.support)] = 0.0
            pieces.append(w)
        elif isinstance(part, SOCFace):
            if part.kind == SOC_FULL:
                pieces.append(np.zeros(block.size))
            elif part.kind == SOC_RAY:
                w = part.ray.copy()
                w[1:] = -w[1:]
                pieces.append(w)
            else:
                w = np.zeros(block.size)
                w[0] = 1.0
                pieces.append(w)
        else:
            u = part.basis
            proj = np.eye(block.side) - u @ u.T
            pieces.append(svec(proj))
    return np.concatenate(pieces)


def random_face_point(face: Face, rng) -> np.ndarray:
    """A generic point of the face's relative interior."""
    pieces = []
    for block, part in face.items():
        if isinstance(part, NonNegFace):
            x = np.zeros(block.size)
            if part.support:
                x[list(part.support)] = rng.uniform(0.5, 2.0, len(part.support))
            pieces.append(x)
        elif isinstance(part, SOCFace):
            if part.kind == SOC_FULL:
                tail = rng.standard_normal(block.size - 1)
                head = float(np.linalg.norm(tail)) * rng.uniform(1.3, 2.5) + 0.2
                pieces.append(np.concatenate(([head], tail)))
            elif part.kind == SOC_RAY:
                pieces.append(rng.uniform(0.5, 2.0) * part.ray)
            else:
                pieces.append(np.zeros(block.size))
        else:
            r = part.rank
            if r == 0:
                pieces.append(np.zeros(svec_dim(block.side)))
            else:
                b = rng.standard_normal((r, r))
                s = b @ b.T + 0.3 * np.eye(r)
                pieces.append(svec(part.basis @ s @ part.basis.T))
    return np.concatenate(pieces)


def _rows_orthogonal_to(dim: int, m: int, drop: np.ndarray | None, rng) -> np.ndarray:
    """Orthonormal rows spanning a random subspace inside {drop}^perp."""
    g = rng.standard_normal((dim, m))
    if drop is not None:
        nd = float(drop @ drop)
        if nd > 0:
            g = g - np.outer(drop, drop @ g) / nd
    q = scipy.linalg.orth(g)
    return q.T


@dataclass(frozen=True)
class PlantedInstance:
    problem: ConicLP
    status: str
    face: Face | None
    witness: np.ndarray
    seed: int

    def metadata(self) -> dict:
        return {"family": "planted", "status": self.status, "seed": self.seed}


def gen_planted(
    cone: ConeProduct,
    target_face: Face | None,
    status: str,
    seed: int = 0,
    m: int | None = None,
) -> PlantedInstance:
    """A problem whose feasibility status and minimal face are chosen.

    Strong feasibility plants an interior slack directly.  Weak
    feasibility confines every feasible slack to the target face: the
    constraint range is drawn inside the orthogonal complement of the
    face's exposing vector, so any slack in the cone annihilates the
    exposing vector and lands in the face, while the planted slack sits
    in the face's relative interior.  Strong infeasibility plants an
    interior ray of the dual cone inside the kernel, priced to minus one.
    """
    rng = np.random.default_rng(seed)
    dim = cone.dim
    if m is None:
        m = max(1, dim // 2)
    m = min(m, dim - 1)

    if status == STRONGLY_FEASIBLE:
        if target_face is not None and not cones.faces_equal(
            target_face, cone.full_face()
        ):
            raise ValueError("a strongly feasible plant fills the whole cone")
        A = _rows_orthogonal_to(dim, m, None, rng)
        full = cone.full_face()
        s = random_face_point(full, rng)
        y = rng.standard_normal(A.shape[0])
        prob = ConicLP(A, rng.standard_normal(A.shape[0]), A.T @ y + s, cone)
        return PlantedInstance(prob, status, full, y, seed)

    if status == WEAKLY_FEASIBLE:
        if target_face is None:
            raise ValueError("a weakly feasible plant needs a target face")
        if cones.faces_equal(target_face, cone.full_face()):
            raise ValueError("the target of a weak plant must be a proper face")
        w = exposing_vector(target_face)
        A = _rows_orthogonal_to(dim, m, w, rng)
        s = random_face_point(target_face, rng)
        y = rng.standard_normal(A.shape[0])
        prob = ConicLP(A, rng.standard_normal(A.shape[0]), A.T @ y + s, cone)
        return PlantedInstance(prob, status, target_face, y, seed)

    if status == STRONGLY_INFEASIBLE:
        if target_face is not None:
            raise ValueError("an infeasible plant has no minimal face to target")
        x_bar = random_face_point(cone.full_face(), rng)
        A = _rows_orthogonal_to(dim, m, x_bar, rng)
        c0 = rng.standard_normal(dim)
        shift = (float(c0 @ x_bar) + 1.0) / float(x_bar @ x_bar)
        c = c0 - shift * x_bar
        prob = ConicLP(A, rng.standard_normal(A.shape[0]), c, cone)
        return PlantedInstance(prob, status, None, x_bar, seed)

    raise ValueError(f"unknown status {status!r}")


def gen_random_face(cone: ConeProduct, seed: int = 0) -> Face:
    """A random proper face, for feeding the weak planting path."""
    rng = np.random.default_rng(seed)
    while True:
        parts = []
        proper = False
        for block in cone.blocks:
            if block.kind == cones.NONNEG:
                keep = rng.random(block.size) < 0.6
                support = tuple(int(i) for i in np.flatnonzero(keep))
                proper = proper or len(support) < block.size
                parts.append(NonNegFace(support))
            elif block.kind == cones.SOC:
                pick = rng.random()
                if pick < 0.4:
                    parts.append(SOCFace(SOC_FULL))
                elif pick < 0.85:
                    tail = rng.uniform(0.3, 1.5, block.size - 1)
                    tail *= rng.choice([-1.0, 1.0], block.size - 1)
                    head = float(np.linalg.norm(tail))
                    ray = np.concatenate(([head], tail)) / (np.sqrt(2.0) * head)
                    parts.append(SOCFace(SOC_RAY, ray))
                    proper = True
                else:
                    parts.append(SOCFace(SOC_ZERO))
                    proper = True
            else:
                r = int(rng.integers(0, block.side + 1))
                if r == block.side:
                    parts.append(cones.full_face_of(block))
                elif r == 0:
                    parts.append(PSDFace(np.zeros((block.side, 0))))
                    proper = True
                else:
                    b = rng.standard_normal((block.side, r))
                    parts.append(PSDFace(scipy.linalg.orth(b)))
                    proper = True
        if proper:
            return Face(cone, tuple(parts))


# ---------------------------------------------------------------------------
# Planted doubly nonnegative instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedDNN:
    problem: ConicLP
    pair: FacePair
    slack: np.ndarray
    witness: np.ndarray
    seed: int
    side: int
    rank: int

    def metadata(self) -> dict:
        return {
            "family": "planted_dnn",
            "side": self.side,
            "rank": self.rank,
            "seed": self.seed,
        }


def gen_planted_dnn(side: int, seed: int = 0, m: int | None = None) -> PlantedDNN:
    """A doubly nonnegative instance whose minimal face pair is planted.

    The planted slack is B B^T for an entrywise nonnegative B supported on
    a random subset of rows, so it is positive semidefinite, entrywise
    nonnegative, dense and positive on its row block, and zero elsewhere.
    The exposing argument runs once with the sum of the two factors'
    exposing vectors: the complementary projector for the semidefinite
    factor plus the zero-entry indicator for the orthant factor.
    """
    if side < 2:
        raise ValueError("need side at least 2")
    rng = np.random.default_rng(seed)
    nsym = svec_dim(side)
    keep = int(rng.integers(1, side))
    rows = np.sort(rng.choice(side, size=keep, replace=False))
    rank = int(rng.integers(1, min(2, keep) + 1))
    B = np.zeros((side, rank))
    B[rows] = rng.uniform(0.4, 1.6, (keep, rank))
    z = B @ B.T
    u = scipy.linalg.orth(B)

    support = []
    k = 0
    for j in range(side):
        for i in range(j + 1):
            if z[i, j] > 0.0:
                support.append(k)
            k += 1
    w_psd = svec(np.eye(side) - u @ u.T)
    w_orth = np.ones(nsym)
    w_orth[support] = 0.0
    w = w_psd + w_orth

    if m is None:
        m = max(1, int(rng.integers(1, nsym)))
    A = _rows_orthogonal_to(nsym, min(m, nsym - 1), w, rng)
    y = rng.standard_normal(A.shape[0])
    c = A.T @ y + svec(z)
    prob = dnn_problem(A, rng.standard_normal(A.shape[0]), c, side)
    pair = FacePair(
        Face(prob.cone, (PSDFace(u),)),
        Face(prob.intersection, (NonNegFace(tuple(support)),)),
    )
    return PlantedDNN(prob, pair, svec(z), y, seed, side, rank)


# ---------------------------------------------------------------------------
# Subspace draws for the separation alternative
# ---------------------------------------------------------------------------


def gen_separation_basis(seed: int = 0):
    """A random cone and subspace basis for the two-sided alternative."""
    rng = np.random.default_rng(seed)
    menu = [
        product(nonneg(int(rng.integers(2, 6)))),
        product(soc(int(rng.integers(3, 6)))),
        product(psd(int(rng.integers(2, 4)))),
        product(soc(3), nonneg(int(rng.integers(1, 4)))),
        product(psd(2), nonneg(2)),
        product(soc(3), psd(2)),
    ]
    cone = menu[int(rng.integers(0, len(menu)))]
    k = int(rng.integers(1, cone.dim))
    basis = rng.standard_normal((cone.dim, k))
    return cone, basis


# ---------------------------------------------------------------------------
# Weakly infeasible toys
# ---------------------------------------------------------------------------


def gen_weakly_infeasible_toys() -> dict[str, ConicLP]:
    """Two classic problems that are infeasible with zero distance.

    The matrix toy asks for [[y, 1], [1, 0]] to be positive semidefinite:
    the determinant is stuck at minus one, but scaling y up pushes the
    slack arbitrarily close to the cone.  The second-order toy asks for
    (y, y, 1): the head always trails the tail norm, with vanishing gap
    as y grows.  Neither admits a ray certificate, so only the weak
    analysis applies.
    """
    root2 = np.sqrt(2.0)
    psd_toy = ConicLP(
        np.array([[-1.0, 0.0, 0.0]]),
        np.zeros(1),
        np.array([0.0, root2, 0.0]),
        product(psd(2)),
    )
    soc_toy = ConicLP(
        np.array([[-1.0, -1.0, 0.0]]),
        np.zeros(1),
        np.array([0.0, 0.0, 1.0]),
        product(soc(3)),
    )
    return {"psd": psd_toy, "soc": soc_toy}
