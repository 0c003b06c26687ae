from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conefract import cones
from conefract.cones import (
    Face,
    NonNegFace,
    PSDFace,
    SOCFace,
    nonneg,
    product,
    psd,
    smat,
    soc,
    svec,
)


def rand_sym(rng, side):
    m = rng.standard_normal((side, side))
    return 0.5 * (m + m.T)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_svec_roundtrip_and_isometry(side, seed):
    rng = np.random.default_rng(seed)
    x = rand_sym(rng, side)
    y = rand_sym(rng, side)
    assert np.allclose(smat(svec(x), side), x)
    assert math.isclose(
        float(svec(x) @ svec(y)), float(np.trace(x @ y)), rel_tol=1e-10, abs_tol=1e-10
    )


def test_svec_ordering():
    # column-major upper triangle with sqrt(2) off the diagonal
    m = np.array([[1.0, 2.0, 4.0], [2.0, 3.0, 5.0], [4.0, 5.0, 6.0]])
    s2 = math.sqrt(2.0)
    expect = [1.0, 2.0 * s2, 3.0, 4.0 * s2, 5.0 * s2, 6.0]
    assert np.allclose(svec(m), expect)


def test_block_constructors():
    assert soc(1) == nonneg(1)
    assert psd(3).size == 6
    with pytest.raises(ValueError):
        cones.ConeBlock("psd", 5, 3)
    with pytest.raises(ValueError):
        nonneg(0)


def test_product_layout():
    k = product(nonneg(2), soc(3), psd(2))
    assert k.dim == 2 + 3 + 3
    assert k.offsets == (0, 2, 5)
    x = np.arange(float(k.dim))
    parts = k.split(x)
    assert [len(p) for p in parts] == [2, 3, 3]
    assert np.allclose(k.join(parts), x)


def test_block_membership():
    assert cones.block_contains(nonneg(3), np.array([0.0, 1.0, 2.0]))
    assert not cones.block_contains(nonneg(3), np.array([0.0, -1e-6, 2.0]))
    assert cones.block_contains(soc(3), np.array([5.0, 3.0, 4.0]))
    assert not cones.block_contains(soc(3), np.array([4.9, 3.0, 4.0]))
    assert cones.block_contains(psd(2), svec(np.array([[1.0, 1.0], [1.0, 1.0]])))
    assert not cones.block_contains(psd(2), svec(np.array([[1.0, 2.0], [2.0, 1.0]])))


def test_chain_lengths_and_poly_distance():
    # worked out from the face lattices:
    # orthant chains drop one coordinate at a time, second-order cones
    # only pass through a boundary ray, matrix cones drop rank one by one.
    assert cones.block_chain_length(nonneg(3)) == 4
    assert cones.block_chain_length(soc(2)) == 3
    assert cones.block_chain_length(soc(9)) == 3
    assert cones.block_chain_length(psd(4)) == 5
    assert cones.block_poly_distance(nonneg(7)) == 0
    assert cones.block_poly_distance(soc(2)) == 0
    assert cones.block_poly_distance(soc(3)) == 1
    assert cones.block_poly_distance(psd(4)) == 3

    k = product(soc(3), soc(4), psd(3), nonneg(5))
    assert cones.chain_length(k) == 1 + 2 + 2 + 3 + 5
    assert cones.poly_distance(k) == 1 + 1 + 2 + 0


def test_full_face_geometry():
    k = product(nonneg(2), soc(3), psd(2))
    f = k.full_face()
    ri = cones.face_ri_point(f)
    assert k.contains(ri)
    defect, margin = cones.face_membership(f, ri)
    assert defect == 0.0 and margin > 0
    assert cones.dual_face_contains(f, cones.face_ri_dual_point(f), 0.0)


def test_orthant_face_update():
    block = nonneg(4)
    face = NonNegFace((0, 1, 2, 3))
    d = np.array([0.0, 2.0, 0.0, 1.0])
    cut = cones.part_intersect_hyperplane(block, face, d, 1e-9)
    assert cut == NonNegFace((0, 2))
    again = cones.part_intersect_hyperplane(block, cut, np.array([3.0, 0, 0, 0]), 1e-9)
    assert again == NonNegFace((2,))


def test_soc_face_update():
    block = soc(3)
    full = SOCFace(cones.SOC_FULL)
    # interior direction kills the block
    assert (
        cones.part_intersect_hyperplane(block, full, np.array([2.0, 1.0, 0.0]), 1e-9).kind
        == cones.SOC_ZERO
    )
    # boundary direction leaves the reflected ray
    cut = cones.part_intersect_hyperplane(block, full, np.array([5.0, 3.0, 4.0]), 1e-9)
    assert cut.kind == cones.SOC_RAY
    assert np.allclose(cut.ray * np.linalg.norm([5.0, 3.0, 4.0]), [5.0, -3.0, -4.0])
    # zero direction changes nothing
    assert (
        cones.part_intersect_hyperplane(block, full, np.zeros(3), 1e-9).kind
        == cones.SOC_FULL
    )
    # a ray face dies when the direction pairs strictly positively with it
    ray = SOCFace(cones.SOC_RAY, np.array([1.0, 1.0, 0.0]))
    hit = cones.part_intersect_hyperplane(block, ray, np.array([1.0, 1.0, 0.0]), 1e-9)
    assert hit.kind == cones.SOC_ZERO
    kept = cones.part_intersect_hyperplane(block, ray, np.array([1.0, -1.0, 0.0]), 1e-9)
    assert kept.kind == cones.SOC_RAY


def test_psd_face_update():
    block = psd(3)
    full = PSDFace(np.eye(3))
    d = svec(np.diag([1.0, 0.0, 0.0]))
    cut = cones.part_intersect_hyperplane(block, full, d, 1e-9)
    assert cut.rank == 2
    span = cut.basis @ cut.basis.T
    assert np.allclose(span, np.diag([0.0, 1.0, 1.0]))
    # rotate: cutting with v v^T must leave the orthogonal complement of v
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    v = q[:, 0]
    cut2 = cones.part_intersect_hyperplane(block, full, svec(np.outer(v, v)), 1e-9)
    assert cut2.rank == 2
    assert np.allclose(cut2.basis @ cut2.basis.T, np.eye(3) - np.outer(v, v))
    # direction outside the dual of the face is rejected
    with pytest.raises(ValueError):
        cones.part_intersect_hyperplane(block, full, svec(np.diag([1.0, -1.0, 0.0])), 1e-9)


def test_psd_face_update_respects_current_face():
    # cutting inside an already reduced face only sees the restricted matrix
    block = psd(3)
    face = PSDFace(np.eye(3)[:, :2])
    d = svec(np.diag([0.0, 0.0, -5.0]) + np.diag([1.0, 0.0, 0.0]))
    cut = cones.part_intersect_hyperplane(block, face, d, 1e-9)
    assert cut.rank == 1
    assert np.allclose(np.abs(cut.basis[:, 0]), [0.0, 1.0, 0.0])


def test_face_membership_ray_and_rank_one():
    k = product(soc(3), psd(2))
    ray = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
    face = Face(k, (SOCFace(cones.SOC_RAY, ray), PSDFace(np.eye(2)[:, :1])))
    x = k.join([2.0 * ray, svec(np.diag([3.0, 0.0]))])
    defect, margin = cones.face_membership(face, x)
    assert defect < 1e-12 and margin > 0
    y = k.join([2.0 * ray + np.array([0.0, 0.0, 0.5]), svec(np.diag([3.0, 0.0]))])
    defect, _ = cones.face_membership(face, y)
    assert defect > 0.4


def test_dual_face_contains_is_weaker_than_cone_membership():
    # after cutting, directions may leave the cone but stay dual feasible
    block = soc(3)
    ray = SOCFace(cones.SOC_RAY, np.array([1.0, 1.0, 0.0]))
    d = np.array([0.0, 0.0, -1.0])
    assert not cones.block_contains(block, d)
    assert cones.part_dual_contains(block, ray, d, 1e-9)


def test_faces_equal_up_to_basis_rotation():
    rng = np.random.default_rng(3)
    u = np.linalg.qr(rng.standard_normal((4, 2)))[0]
    theta = 0.3
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    a = PSDFace(u)
    b = PSDFace(u @ rot)
    assert cones.parts_equal(a, b)
    assert not cones.parts_equal(a, PSDFace(u[:, :1]))


@settings(max_examples=50)
@given(
    arrays(float, 3, elements=st.floats(-2, 2)),
    st.integers(0, 2**32 - 1),
)
def test_soc_update_is_a_face(d, seed):
    # property: whenever the direction is dual feasible, the update yields
    # a subset of the previous face orthogonal to the direction
    block = soc(3)
    full = SOCFace(cones.SOC_FULL)
    d = np.asarray(d)
    if d[0] < np.linalg.norm(d[1:]):
        return
    cut = cones.part_intersect_hyperplane(block, full, d, 1e-9)
    rng = np.random.default_rng(seed)
    if cut.kind == cones.SOC_RAY:
        x = float(rng.uniform(0, 3)) * cut.ray
        assert cones.block_contains(block, x, 1e-12)
        assert abs(float(x @ d)) <= 1e-9 * (1 + np.linalg.norm(d))


def test_reduced_blocks():
    assert cones.part_reduced_block(nonneg(5), NonNegFace((1, 3))) == nonneg(2)
    assert cones.part_reduced_block(nonneg(5), NonNegFace(())) is None
    assert cones.part_reduced_block(soc(4), SOCFace(cones.SOC_FULL)) == soc(4)
    r = cones.part_reduced_block(soc(4), SOCFace(cones.SOC_RAY, np.array([1, 1, 0, 0.0])))
    assert r == nonneg(1)
    assert cones.part_reduced_block(psd(3), PSDFace(np.eye(3)[:, :2])) == psd(2)
    assert cones.part_reduced_block(psd(3), PSDFace(np.zeros((3, 0)))) is None


def test_face_of_point_per_block():
    # orthant: support of the entries above tolerance
    p = cones.part_face_of_point(nonneg(4), np.array([1.0, 0.0, 3.0, 1e-12]))
    assert p == NonNegFace((0, 2))
    with pytest.raises(ValueError):
        cones.part_face_of_point(nonneg(2), np.array([1.0, -1.0]))
    # second-order: interior, boundary ray, origin
    full = cones.part_face_of_point(soc(3), np.array([2.0, 1.0, 0.0]))
    assert full.kind == cones.SOC_FULL
    r = cones.part_face_of_point(soc(3), np.array([5.0, 3.0, 4.0]))
    assert r.kind == cones.SOC_RAY
    assert np.allclose(r.ray, np.array([5.0, 3.0, 4.0]) / math.sqrt(50.0))
    assert cones.part_face_of_point(soc(3), np.zeros(3)).kind == cones.SOC_ZERO
    # psd: span of the eigenvectors with positive eigenvalue
    u = np.linalg.qr(np.random.default_rng(7).standard_normal((3, 2)))[0]
    x = svec(u @ np.diag([2.0, 0.5]) @ u.T)
    p = cones.part_face_of_point(psd(3), x)
    assert p.rank == 2
    assert np.allclose(p.basis @ p.basis.T, u @ u.T)
    with pytest.raises(ValueError):
        cones.part_face_of_point(psd(2), svec(np.diag([1.0, -1.0])))


def test_face_of_point_is_minimal():
    # the point must sit in the relative interior of its own face; that is
    # exactly what rules out any strictly smaller face
    k = product(soc(3), psd(2))
    x = k.join([np.array([1.0, 1.0, 0.0]), svec(np.diag([0.0, 2.0]))])
    face = cones.face_of_point(k, x)
    defect, margin = cones.face_membership(face, x)
    assert defect < 1e-9
    assert margin > 0
    assert face.dim() == 1 + 1
