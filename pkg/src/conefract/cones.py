"""Cones, faces and the symmetric-matrix vectorization used throughout.

A problem cone is a product of blocks, each one of

* ``NonNeg(k)``, the nonnegative orthant of dimension ``k``,
* ``SOC(k)``, the second-order cone ``{x : x[0] >= ||x[1:]||}``,
* ``PSD(s)``, the ``s x s`` positive semidefinite matrices stored in
  ``svec`` coordinates (length ``s*(s+1)//2``).

All three are self-dual for the inner products we use: the Euclidean one on
orthant and second-order blocks, and ``trace(X @ Y)`` on matrix blocks, which
``svec`` turns into the Euclidean product as well.  Faces of each block get a
small explicit descriptor; a face of the product is just one descriptor per
block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

NONNEG = "nonneg"
SOC = "soc"
PSD = "psd"

_SQRT2 = math.sqrt(2.0)


def svec_dim(side: int) -> int:
    """Length of the vectorization of a symmetric ``side x side`` matrix."""
    return side * (side + 1) // 2


def svec_indices(side: int) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` with ``i <= j`` in column-major order."""
    return [(i, j) for j in range(side) for i in range(j + 1)]


def svec(mat: np.ndarray) -> np.ndarray:
    """Vectorize a symmetric matrix, scaling off-diagonal entries by sqrt(2).

    The scaling makes the map an isometry: ``svec(X) @ svec(Y)`` equals
    ``trace(X @ Y)`` for symmetric ``X`` and ``Y``.
    """
    mat = np.asarray(mat, dtype=float)
    side = mat.shape[0]
    out = np.empty(svec_dim(side))
    k = 0
    for j in range(side):
        for i in range(j + 1):
            out[k] = mat[i, j] if i == j else _SQRT2 * mat[i, j]
            k += 1
    return out


def smat(vec: np.ndarray, side: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    vec = np.asarray(vec, dtype=float)
    out = np.zeros((side, side))
    k = 0
    for j in range(side):
        for i in range(j + 1):
            if i == j:
                out[i, j] = vec[k]
            else:
                out[i, j] = out[j, i] = vec[k] / _SQRT2
            k += 1
    return out


@dataclass(frozen=True)
class ConeBlock:
    """One factor of the product cone.

    ``size`` is the length of the block in the ambient vector; for matrix
    blocks that is ``side*(side+1)//2`` and ``side`` records the matrix
    dimension.
    """

    kind: str
    size: int
    side: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (NONNEG, SOC, PSD):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == PSD and svec_dim(self.side) != self.size:
            raise ValueError("psd block size does not match its side")
        if self.kind == SOC and self.size < 2:
            raise ValueError("second-order blocks need dimension >= 2")
        if self.size < 0 or (self.kind != PSD and self.size == 0):
            raise ValueError("empty block")


def nonneg(dim: int) -> ConeBlock:
    return ConeBlock(NONNEG, dim)


def soc(dim: int) -> ConeBlock:
    """Second-order cone block; dimension 1 degenerates to an orthant ray."""
    if dim == 1:
        return nonneg(1)
    return ConeBlock(SOC, dim)


def psd(side: int) -> ConeBlock:
    return ConeBlock(PSD, svec_dim(side), side)


@dataclass(frozen=True)
class ConeProduct:
    blocks: tuple[ConeBlock, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @cached_property
    def dim(self) -> int:
        return sum(b.size for b in self.blocks)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        off, acc = [], 0
        for b in self.blocks:
            off.append(acc)
            acc += b.size
        return tuple(off)

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [
            x[o : o + b.size] for o, b in zip(self.offsets, self.blocks)
        ]

    def join(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def full_face(self) -> "Face":
        return Face(self, tuple(full_face_of(b) for b in self.blocks))

    def identity(self) -> np.ndarray:
        """The canonical interior point: ones, (1,0,...), svec of I."""
        return self.join([block_identity(b) for b in self.blocks])

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return all(
            block_contains(b, part, tol)
            for b, part in zip(self.blocks, self.split(x))
        )


def product(*blocks: ConeBlock) -> ConeProduct:
    return ConeProduct(tuple(blocks))


def block_identity(block: ConeBlock) -> np.ndarray:
    if block.kind == NONNEG:
        return np.ones(block.size)
    if block.kind == SOC:
        e = np.zeros(block.size)
        e[0] = 1.0
        return e
    return svec(np.eye(block.side))


def block_contains(block: ConeBlock, x: np.ndarray, tol: float = 0.0) -> bool:
    x = np.asarray(x, dtype=float)
    if block.kind == NONNEG:
        return bool(np.all(x >= -tol))
    if block.kind == SOC:
        return bool(x[0] >= np.linalg.norm(x[1:]) - tol)
    eigs = np.linalg.eigvalsh(smat(x, block.side))
    return bool(eigs.min(initial=0.0) >= -tol)


# ---------------------------------------------------------------------------
# Face descriptors
# ---------------------------------------------------------------------------

SOC_FULL = "full"
SOC_RAY = "ray"
SOC_ZERO = "zero"


@dataclass(frozen=True)
class NonNegFace:
    """Coordinate support of a face of the orthant."""

    support: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", tuple(sorted(self.support)))


@dataclass(frozen=True, eq=False)
class SOCFace:
    """Face of a second-order cone: the cone itself, one boundary ray,
    or the origin.  ``ray`` holds a unit vector for the ray case."""

    kind: str
    ray: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in (SOC_FULL, SOC_RAY, SOC_ZERO):
            raise ValueError(f"bad SOC face kind {self.kind!r}")
        if (self.kind == SOC_RAY) != (self.ray is not None):
            raise ValueError("ray faces carry a direction, others do not")
        if self.ray is not None:
            r = np.asarray(self.ray, dtype=float)
            nrm = np.linalg.norm(r)
            if nrm == 0:
                raise ValueError("zero ray")
            object.__setattr__(self, "ray", r / nrm)


@dataclass(frozen=True, eq=False)
class PSDFace:
    """Face of the semidefinite cone: matrices supported on ``range(basis)``.

    ``basis`` has orthonormal columns; zero columns means the origin face.
    """

    basis: np.ndarray

    def __post_init__(self) -> None:
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.shape[1] > 0:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-10):
                raise ValueError("face basis must have orthonormal columns")
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


FacePart = NonNegFace | SOCFace | PSDFace


def full_face_of(block: ConeBlock) -> FacePart:
    if block.kind == NONNEG:
        return NonNegFace(tuple(range(block.size)))
    if block.kind == SOC:
        return SOCFace(SOC_FULL)
    return PSDFace(np.eye(block.side))


@dataclass(frozen=True, eq=False)
class Face:
    """A face of a product cone, one descriptor per block."""

    cone: ConeProduct
    parts: tuple[FacePart, ...]

    def __post_init__(self) -> None:
        if len(self.parts) != len(self.cone.blocks):
            raise ValueError("one face part per block required")
        object.__setattr__(self, "parts", tuple(self.parts))

    def items(self) -> Iterable[tuple[ConeBlock, FacePart]]:
        return zip(self.cone.blocks, self.parts)

    def dim(self) -> int:
        """Dimension of the linear span of the face."""
        return sum(part_span_dim(b, p) for b, p in self.items())

    def is_zero(self) -> bool:
        return self.dim() == 0


def part_span_dim(block: ConeBlock, part: FacePart) -> int:
    if isinstance(part, NonNegFace):
        return len(part.support)
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            return block.size
        return 1 if part.kind == SOC_RAY else 0
    return svec_dim(part.rank)


def part_is_polyhedral(block: ConeBlock, part: FacePart) -> bool:
    if isinstance(part, NonNegFace):
        return True
    if isinstance(part, SOCFace):
        return part.kind != SOC_FULL or block.size <= 2
    return part.rank <= 1


def part_poly_distance(block: ConeBlock, part: FacePart) -> int:
    """Length of the longest chain of strictly nonpolyhedral faces that can
    start at this face, the per-block quantity behind the short bound."""
    if isinstance(part, NonNegFace):
        return 0
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL and block.size >= 3:
            return 1
        return 0
    return max(part.rank - 1, 0)


def block_poly_distance(block: ConeBlock) -> int:
    return part_poly_distance(block, full_face_of(block))


def block_chain_length(block: ConeBlock) -> int:
    """Length of the longest chain of faces of the block, counting both the
    cone itself and the origin."""
    if block.kind == NONNEG:
        return block.size + 1
    if block.kind == SOC:
        # full > ray > origin, for every dimension >= 2
        return 3
    return block.side + 1


def poly_distance(cone: ConeProduct) -> int:
    return sum(block_poly_distance(b) for b in cone.blocks)


def chain_length(cone: ConeProduct) -> int:
    """Longest chain of faces of the product: block chains combine additively
    apart from the shared top and bottom."""
    if not cone.blocks:
        return 1
    return 1 + sum(block_chain_length(b) - 1 for b in cone.blocks)


# ---------------------------------------------------------------------------
# Per-face geometry
# ---------------------------------------------------------------------------


def part_ri_point(block: ConeBlock, part: FacePart) -> np.ndarray:
    """A point in the relative interior of the face."""
    if isinstance(part, NonNegFace):
        x = np.zeros(block.size)
        x[list(part.support)] = 1.0
        return x
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            return block_identity(block)
        if part.kind == SOC_RAY:
            return np.array(part.ray, dtype=float)
        return np.zeros(block.size)
    u = part.basis
    if part.rank == 0:
        return np.zeros(block.size)
    return svec(u @ u.T)


def part_ri_dual_point(block: ConeBlock, part: FacePart) -> np.ndarray:
    """A point in the relative interior of the dual cone of the face,
    expressed in the ambient block coordinates."""
    if isinstance(part, NonNegFace):
        x = np.zeros(block.size)
        x[list(part.support)] = 1.0
        return x
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            return block_identity(block)
        if part.kind == SOC_RAY:
            return np.array(part.ray, dtype=float)
        return np.zeros(block.size)
    if part.rank == 0:
        return np.zeros(block.size)
    return svec(part.basis @ part.basis.T)


def part_dual_contains(
    block: ConeBlock, part: FacePart, x: np.ndarray, tol: float
) -> bool:
    """Membership of ``x`` in the dual cone of the face."""
    x = np.asarray(x, dtype=float)
    if isinstance(part, NonNegFace):
        if not part.support:
            return True
        return bool(np.all(x[list(part.support)] >= -tol))
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            return bool(x[0] >= np.linalg.norm(x[1:]) - tol)
        if part.kind == SOC_RAY:
            return bool(float(x @ part.ray) >= -tol * np.linalg.norm(x))
        return True
    if part.rank == 0:
        return True
    m = part.basis.T @ smat(x, block.side) @ part.basis
    m = 0.5 * (m + m.T)
    eigs = np.linalg.eigvalsh(m)
    return bool(eigs.min(initial=0.0) >= -tol)


def part_face_membership(
    block: ConeBlock, part: FacePart, x: np.ndarray
) -> tuple[float, float]:
    """Return ``(defect, margin)`` for ``x`` against the face.

    ``defect`` measures the component of ``x`` outside the span of the face
    together with any violation of the conic constraint inside the span;
    ``margin`` is how interior ``x`` sits within the face (``inf`` for the
    origin face).  ``x`` lies in the face iff ``defect`` is (numerically)
    zero and it lies in the relative interior iff ``margin`` is positive too.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(part, NonNegFace):
        sup = list(part.support)
        off = [i for i in range(block.size) if i not in part.support]
        defect = float(np.max(np.abs(x[off]))) if off else 0.0
        if sup:
            inside = float(np.min(x[sup]))
            defect = max(defect, -min(inside, 0.0))
            return defect, inside
        return defect, math.inf
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            margin = float(x[0] - np.linalg.norm(x[1:]))
            return max(-margin, 0.0), margin
        if part.kind == SOC_RAY:
            t = float(x @ part.ray)
            defect = float(np.linalg.norm(x - t * part.ray))
            defect = max(defect, -min(t, 0.0))
            return defect, t
        return float(np.linalg.norm(x)), math.inf
    mat = smat(x, block.side)
    if part.rank == 0:
        return float(np.linalg.norm(mat)), math.inf
    u = part.basis
    z = u.T @ mat @ u
    z = 0.5 * (z + z.T)
    defect = float(np.linalg.norm(mat - u @ z @ u.T))
    margin = float(np.linalg.eigvalsh(z).min())
    defect = max(defect, -min(margin, 0.0))
    return defect, margin


def face_membership(face: Face, x: np.ndarray) -> tuple[float, float]:
    """Aggregate ``(defect, margin)`` over all blocks."""
    defect, margin = 0.0, math.inf
    for (block, part), piece in zip(face.items(), face.cone.split(x)):
        d, m = part_face_membership(block, part, piece)
        defect = max(defect, d)
        margin = min(margin, m)
    return defect, margin


def face_contains(face: Face, x: np.ndarray, tol: float) -> bool:
    defect, _ = face_membership(face, x)
    return defect <= tol


def face_ri_point(face: Face) -> np.ndarray:
    return face.cone.join(
        [part_ri_point(b, p) for b, p in face.items()]
    )


def face_ri_dual_point(face: Face) -> np.ndarray:
    return face.cone.join(
        [part_ri_dual_point(b, p) for b, p in face.items()]
    )


def dual_face_contains(face: Face, x: np.ndarray, tol: float) -> bool:
    return all(
        part_dual_contains(b, p, piece, tol)
        for (b, p), piece in zip(face.items(), face.cone.split(x))
    )


def part_face_of_point(
    block: ConeBlock, x: np.ndarray, tol: float = 1e-9
) -> FacePart:
    """The smallest face of the block containing ``x``.

    Entries within ``tol`` (scaled by the magnitude of ``x``) of the boundary
    are treated as exactly on it.  Raises ``ValueError`` when ``x`` sits
    outside the block by more than that.
    """
    x = np.asarray(x, dtype=float)
    thr = tol * max(1.0, float(np.abs(x).max(initial=0.0)))
    if block.kind == NONNEG:
        if x.min(initial=0.0) < -thr:
            raise ValueError("point has negative entries")
        return NonNegFace(tuple(i for i in range(block.size) if x[i] > thr))
    if block.kind == SOC:
        head, tail_norm = float(x[0]), float(np.linalg.norm(x[1:]))
        if head < tail_norm - thr:
            raise ValueError("point is outside the second-order cone")
        if head <= thr:
            return SOCFace(SOC_ZERO)
        if head <= tail_norm + thr:
            return SOCFace(SOC_RAY, canonical_vector(x))
        return SOCFace(SOC_FULL)
    vals, vecs = np.linalg.eigh(smat(x, block.side))
    if vals.min(initial=0.0) < -thr:
        raise ValueError("point is not positive semidefinite")
    return PSDFace(canonical_basis(vecs[:, vals > thr]))


def face_of_point(cone: ConeProduct, x: np.ndarray, tol: float = 1e-9) -> Face:
    """The smallest face of the product cone containing ``x``.

    The point always lies in the relative interior of the result, which is
    what makes the face minimal.
    """
    parts = tuple(
        part_face_of_point(b, piece, tol)
        for b, piece in zip(cone.blocks, cone.split(x))
    )
    return Face(cone, parts)


# ---------------------------------------------------------------------------
# Face updates
# ---------------------------------------------------------------------------


_CANON_REL = 3e-6


def canonical_vector(v: np.ndarray, rel: float = _CANON_REL) -> np.ndarray:
    """Zero entries that sit below the identification error of the solves
    that produce directions, then keep the rest as given.

    Face descriptors read off iterative solves are only determined up to
    roughly the square root of the final duality gap; entries below that
    are noise.  Snapping them keeps honestly sparse structure exact and
    makes cut chains reproduce bit for bit on replay.
    """
    v = np.asarray(v, dtype=float)
    scale = float(np.abs(v).max(initial=0.0))
    if scale == 0.0:
        return v
    return np.where(np.abs(v) <= rel * scale, 0.0, v)


def canonical_basis(b: np.ndarray, rel: float = _CANON_REL) -> np.ndarray:
    """Snap near-zero basis entries, re-orthonormalize, fix column signs.

    Same rationale as :func:`canonical_vector`; the extra steps restore the
    orthonormal-columns invariant after snapping and pin the sign left free
    by the factorization, so equal spans give equal matrices.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if b.shape[1] == 0:
        return b
    scale = float(np.abs(b).max(initial=0.0))
    if scale == 0.0:
        return b
    snapped = np.where(np.abs(b) <= rel * scale, 0.0, b)
    q = np.linalg.qr(snapped)[0]
    for j in range(q.shape[1]):
        i = int(np.argmax(np.abs(q[:, j])))
        if q[i, j] < 0:
            q[:, j] = -q[:, j]
    return q


def part_intersect_hyperplane(
    block: ConeBlock, part: FacePart, d: np.ndarray, tol: float
) -> FacePart:
    """The face cut out by the hyperplane orthogonal to ``d``.

    ``d`` must lie in the dual cone of the face; the result is the set of
    face points orthogonal to ``d``.  The descriptors of curved results are
    canonicalized: the cut is deterministic in ``d``, so replaying a chain
    reproduces its faces exactly.
    """
    d = np.asarray(d, dtype=float)
    if isinstance(part, NonNegFace):
        keep = tuple(i for i in part.support if d[i] <= tol)
        return NonNegFace(keep)
    if isinstance(part, SOCFace):
        if part.kind == SOC_ZERO:
            return part
        if part.kind == SOC_RAY:
            if float(d @ part.ray) > tol:
                return SOCFace(SOC_ZERO)
            return part
        nrm = np.linalg.norm(d)
        if nrm <= tol:
            return part
        head, tail = d[0], d[1:]
        tail_norm = np.linalg.norm(tail)
        if head > tail_norm + tol * nrm:
            return SOCFace(SOC_ZERO)
        reflected = np.concatenate(([head], -tail))
        return SOCFace(SOC_RAY, canonical_vector(reflected))
    if part.rank == 0:
        return part
    u = part.basis
    m = u.T @ smat(d, block.side) @ u
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    scale = max(float(np.abs(vals).max(initial=0.0)), 1.0)
    if vals.min(initial=0.0) < -tol * scale:
        raise ValueError("direction is not in the dual cone of the face")
    keep = vecs[:, vals <= tol * scale]
    return PSDFace(canonical_basis(u @ keep))


def face_intersect_hyperplane(face: Face, d: np.ndarray, tol: float) -> Face:
    parts = tuple(
        part_intersect_hyperplane(b, p, piece, tol)
        for (b, p), piece in zip(face.items(), face.cone.split(d))
    )
    return Face(face.cone, parts)


# ---------------------------------------------------------------------------
# Equality and reduced blocks
# ---------------------------------------------------------------------------


def parts_equal(a: FacePart, b: FacePart, tol: float = 1e-9) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, NonNegFace):
        return a.support == b.support
    if isinstance(a, SOCFace):
        if a.kind != b.kind:
            return False
        if a.kind == SOC_RAY:
            return bool(np.linalg.norm(a.ray - b.ray) <= tol)
        return True
    if a.rank != b.rank:
        return False
    pa = a.basis @ a.basis.T
    pb = b.basis @ b.basis.T
    return bool(np.linalg.norm(pa - pb) <= tol)


def faces_equal(a: Face, b: Face, tol: float = 1e-9) -> bool:
    if len(a.parts) != len(b.parts):
        return False
    return all(parts_equal(p, q, tol) for p, q in zip(a.parts, b.parts))


def part_reduced_block(block: ConeBlock, part: FacePart) -> ConeBlock | None:
    """The block the face is isomorphic to, or ``None`` for the origin."""
    if isinstance(part, NonNegFace):
        if not part.support:
            return None
        return nonneg(len(part.support))
    if isinstance(part, SOCFace):
        if part.kind == SOC_FULL:
            return ConeBlock(SOC, block.size)
        if part.kind == SOC_RAY:
            return nonneg(1)
        return None
    if part.rank == 0:
        return None
    return psd(part.rank)
