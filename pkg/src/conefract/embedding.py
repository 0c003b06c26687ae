"""Isometric coordinates for a face of a product cone.

For a face ``F`` the ambient space of each block splits into the linear span
of the face part and its orthogonal complement.  ``FaceEmbedding`` collects

* ``phi``: an isometry from reduced coordinates onto the spans of the parts
  that stay conic, one reduced block per part, and
* ``perp``: an orthonormal basis of everything else.

Searches for reducing directions happen over ``range(phi) + range(perp)``,
with conic constraints only on the ``phi`` coordinates.  The ``perp`` part
matters: directions produced later in a reduction are free to leave the span
of the current face, and dropping those coordinates loses certificates.

With ``relax_nonpoly=True`` the nonpolyhedral parts are treated as their
spans instead of as cones: their reduced coordinates disappear from the
conic side entirely (the dual of a subspace meets it only at the origin) and
only their orthogonal complements remain searchable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import cones
from .cones import (
    ConeBlock,
    ConeProduct,
    Face,
    FacePart,
    NonNegFace,
    PSDFace,
    SOCFace,
)


def part_span_basis(block: ConeBlock, part: FacePart) -> np.ndarray:
    """Orthonormal basis of the linear span of the face part, as columns.

    For matrix faces the basis maps reduced ``svec`` coordinates to ambient
    ones, so a reduced matrix ``Z`` lands on ``U Z U^T``.
    """
    if isinstance(part, NonNegFace):
        cols = np.zeros((block.size, len(part.support)))
        for j, i in enumerate(part.support):
            cols[i, j] = 1.0
        return cols
    if isinstance(part, SOCFace):
        if part.kind == cones.SOC_FULL:
            return np.eye(block.size)
        if part.kind == cones.SOC_RAY:
            return part.ray.reshape(-1, 1)
        return np.zeros((block.size, 0))
    u = part.basis
    r = part.rank
    cols = np.zeros((block.size, cones.svec_dim(r)))
    for k, (i, j) in enumerate(cones.svec_indices(r)):
        unit = np.zeros(cones.svec_dim(r))
        unit[k] = 1.0
        cols[:, k] = cones.svec(u @ cones.smat(unit, r) @ u.T)
    return cols


def part_span_complement(block: ConeBlock, part: FacePart) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the span, within
    the block."""
    if isinstance(part, NonNegFace):
        off = [i for i in range(block.size) if i not in part.support]
        cols = np.zeros((block.size, len(off)))
        for j, i in enumerate(off):
            cols[i, j] = 1.0
        return cols
    if isinstance(part, SOCFace):
        if part.kind == cones.SOC_FULL:
            return np.zeros((block.size, 0))
        if part.kind == cones.SOC_RAY:
            return null_space(part.ray.reshape(1, -1))
        return np.eye(block.size)
    u = part.basis
    side, r = block.side, part.rank
    if r == side:
        return np.zeros((block.size, 0))
    v = null_space(u.T) if r > 0 else np.eye(side)
    w = np.hstack([u, v])
    cols = []
    for i, j in cones.svec_indices(side):
        if j < r:
            continue  # both indices inside the face span
        m = np.zeros((side, side))
        if i == j:
            m[i, j] = 1.0
        else:
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
        cols.append(cones.svec(w @ m @ w.T))
    if not cols:
        return np.zeros((block.size, 0))
    return np.column_stack(cols)


@dataclass
class FaceEmbedding:
    face: Face
    sym_cone: ConeProduct
    sym_block_index: tuple[int, ...]
    phi: np.ndarray
    perp: np.ndarray

    @property
    def n_sym(self) -> int:
        return self.phi.shape[1]

    @property
    def n_perp(self) -> int:
        return self.perp.shape[1]

    def to_ambient(self, x_sym: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
        out = self.phi @ np.asarray(x_sym, dtype=float)
        if q is not None and self.n_perp:
            out = out + self.perp @ np.asarray(q, dtype=float)
        return out

    def project_sym(self, x: np.ndarray) -> np.ndarray:
        return self.phi.T @ np.asarray(x, dtype=float)

    def project_perp(self, x: np.ndarray) -> np.ndarray:
        return self.perp.T @ np.asarray(x, dtype=float)


def build_embedding(face: Face, relax_nonpoly: bool = False) -> FaceEmbedding:
    n = face.cone.dim
    phi_cols: list[np.ndarray] = []
    perp_cols: list[np.ndarray] = []
    sym_blocks: list[ConeBlock] = []
    sym_index: list[int] = []
    for bi, ((block, part), offset) in enumerate(
        zip(face.items(), face.cone.offsets)
    ):
        span = part_span_basis(block, part)
        comp = part_span_complement(block, part)
        lift_span = np.zeros((n, span.shape[1]))
        lift_span[offset : offset + block.size, :] = span
        lift_comp = np.zeros((n, comp.shape[1]))
        lift_comp[offset : offset + block.size, :] = comp
        reduced = cones.part_reduced_block(block, part)
        keep_conic = reduced is not None and not (
            relax_nonpoly and not cones.part_is_polyhedral(block, part)
        )
        if keep_conic:
            phi_cols.append(lift_span)
            sym_blocks.append(reduced)
            sym_index.append(bi)
        perp_cols.append(lift_comp)
    phi = np.hstack(phi_cols) if phi_cols else np.zeros((n, 0))
    perp = np.hstack(perp_cols) if perp_cols else np.zeros((n, 0))
    return FaceEmbedding(
        face=face,
        sym_cone=ConeProduct(tuple(sym_blocks)),
        sym_block_index=tuple(sym_index),
        phi=phi,
        perp=perp,
    )


def reduced_problem_data(
    A: np.ndarray, c: np.ndarray, emb: FaceEmbedding
) -> tuple[np.ndarray, np.ndarray]:
    """Push the dual-side data through the face isometry: the problem whose
    slacks are the reduced coordinates of the original slacks."""
    return A @ emb.phi, emb.phi.T @ np.asarray(c, dtype=float)
