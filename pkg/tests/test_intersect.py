from __future__ import annotations

import numpy as np
import pytest

from conefract import cones, fra, intersect, model
from conefract.cones import (
    Face,
    NonNegFace,
    PSDFace,
    nonneg,
    product,
    psd,
    smat,
    svec,
    svec_dim,
)
from conefract.intersect import (
    FacePair,
    dnn_chain,
    dnn_problem,
    duplicate,
    face_pairs_equal,
    recombine,
    reduce_intersection,
    verify_chain,
    verify_intersection_certificate,
)
from conefract.model import CertificateStatus


def sym_entry(side, i, j, value=1.0):
    m = np.zeros((side, side))
    m[i, j] = m[j, i] = value
    return m


def planted_dnn(side):
    """A dual-feasible problem whose slack set is a single doubly nonnegative
    rank-one point.

    The slack is z = x x^T for x = (1,...,1,0); the one constraint row moves
    the (side,side) diagonal entry up while moving an off-diagonal entry
    down, so nonnegativity pins the multiplier to zero and z is the only
    feasible slack.  The minimal face is then the face of z itself: the
    rank-one psd face spanned by x and the support of the nonzero entries.
    """
    x = np.ones(side)
    x[-1] = 0.0
    v = sym_entry(side, side - 1, side - 1) - sym_entry(side, 0, side - 1)
    A = svec(v)[None, :]
    c = svec(np.outer(x, x))
    prob = dnn_problem(A, [0.0], c, side)
    support = tuple(
        j * (j + 1) // 2 + i for j in range(side - 1) for i in range(j + 1)
    )
    want = FacePair(
        Face(prob.cone, (PSDFace((x / np.linalg.norm(x))[:, None]),)),
        Face(prob.intersection, (NonNegFace(support),)),
    )
    return prob, want, svec(np.outer(x, x))


def test_duplicate_layout():
    A = np.arange(6.0)[None, :]
    c = np.ones(6)
    prob = dnn_problem(A, [1.0], c, 3)
    mapping = duplicate(prob)
    dup = mapping.problem
    assert dup.n == 12
    assert np.array_equal(dup.A, np.hstack([A, A]))
    assert np.array_equal(dup.c, np.concatenate([c, c]))
    assert [b.kind for b in dup.cone.blocks] == [cones.PSD, cones.NONNEG]
    assert dup.intersection is None
    # a primal point rides along with its second half zeroed
    x1 = np.arange(6.0)
    assert np.allclose(dup.A @ np.concatenate([x1, np.zeros(6)]), A @ x1)

    plain = model.ConicLP(A, [1.0], c, product(psd(3)))
    with pytest.raises(ValueError):
        duplicate(plain)
    broken = dnn_problem(A, [1.0], c, 3)
    broken.intersection = product(nonneg(5))
    with pytest.raises(ValueError):
        duplicate(broken)


def test_duplicated_slack_is_two_copies():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((2, 6))
    prob = dnn_problem(A, rng.standard_normal(2), rng.standard_normal(6), 3)
    dup = duplicate(prob).problem
    y = rng.standard_normal(2)
    s = dup.slack(y)
    assert np.allclose(s[:6], prob.slack(y))
    assert np.allclose(s[6:], prob.slack(y))


def test_recombine_trivial_and_single_direction():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((1, 3))
    prob = dnn_problem(A, [0.0], rng.standard_normal(3), 2)
    mapping = duplicate(prob)
    dup = mapping.problem

    empty = model.ReductionCertificate(
        mode=model.ReductionMode.POLY,
        status=CertificateStatus.PARTIAL,
        directions=[],
        faces=[dup.cone.full_face()],
    )
    folded = recombine(mapping, empty)
    assert folded.steps == 0
    assert face_pairs_equal(
        folded.final_face,
        FacePair(prob.cone.full_face(), prob.intersection.full_face()),
    )

    # one direction living purely in the psd copy folds to itself
    d1 = svec(np.diag([0.0, 1.0]))
    d = np.concatenate([d1, np.zeros(3)])
    cut = cones.face_intersect_hyperplane(dup.cone.full_face(), d, 1e-9)
    one = model.ReductionCertificate(
        mode=model.ReductionMode.POLY,
        status=CertificateStatus.PARTIAL,
        directions=[d],
        faces=[dup.cone.full_face(), cut],
    )
    folded = recombine(mapping, one)
    assert np.allclose(folded.directions[0], d1)
    got1, got2 = folded.splits[0]
    assert np.allclose(got1, d1) and np.allclose(got2, 0.0)
    assert folded.faces[1].first.parts[0].rank == 1
    assert folded.faces[1].second.parts[0].support == (0, 1, 2)


def _orthogonal_instruments(rng, side):
    """A doubly nonnegative z with matching annihilators.

    z = x x^T for an entrywise nonnegative x with a forced zero; y lives on
    the zero set of x, so y y^T pairs to zero with z exactly, and the
    entrywise certificate charges the entries where x_i x_j vanishes.
    """
    x = rng.uniform(0.5, 2.0, size=side)
    zeros = rng.choice(side, size=rng.integers(1, side), replace=False)
    x[zeros] = 0.0
    z = np.outer(x, x)
    y = np.zeros(side)
    y[zeros] = rng.uniform(0.5, 2.0, size=len(zeros))
    d1 = np.outer(y, y)
    d2 = np.zeros(svec_dim(side))
    k = 0
    for j in range(side):
        for i in range(j + 1):
            if x[i] * x[j] == 0.0:
                d2[k] = rng.uniform(0.5, 2.0)
            k += 1
    return x, z, y, d1, d2


def _in_psd(vec, side, tol=1e-9):
    return bool(np.linalg.eigvalsh(smat(vec, side)).min() >= -tol)


def test_orthogonality_splits_blockwise():
    # membership in the cut product face is the conjunction of the two
    # block conditions: with both halves in their cones, the pairings are
    # nonnegative, so the sum vanishes exactly when each term does
    rng = np.random.default_rng(23)
    side, tol = 3, 1e-9
    both, hits = 0, 0
    for _ in range(1000):
        x, z, y, d1, d2 = _orthogonal_instruments(rng, side)
        z1 = svec(z)
        z2 = svec(z)
        kind = rng.integers(0, 3)
        if kind == 1:
            z1 = z1 + 0.7 * svec(np.outer(y, y))
        elif kind == 2:
            i, j = rng.choice(side, size=2, replace=False)
            z2 = z2 + 0.7 * svec(sym_entry(side, i, j))
        pair1 = float(svec(d1) @ z1)
        pair2 = float(d2 @ z2)
        in_product = (
            _in_psd(z1, side)
            and bool(np.min(z2) >= -tol)
            and abs(pair1 + pair2) <= tol
        )
        per_block = (
            _in_psd(z1, side)
            and abs(pair1) <= tol
            and bool(np.min(z2) >= -tol)
            and abs(pair2) <= tol
        )
        both += 1
        hits += int(in_product)
        assert in_product == per_block
    assert both == 1000
    assert hits > 200  # the equivalence is exercised, not vacuous


def test_sum_cut_equals_pair_cut():
    # cutting the intersection with d1 + d2 kills the same points as
    # cutting with d1 and d2 separately, for d1, d2 dual to the factors
    rng = np.random.default_rng(29)
    side, tol = 3, 1e-9
    hits = 0
    for _ in range(1000):
        x, z, y, d1, d2 = _orthogonal_instruments(rng, side)
        zv = svec(z)
        kind = rng.integers(0, 3)
        if kind == 1:
            zv = zv + 0.7 * svec(np.outer(y, y))
        elif kind == 2:
            i, j = rng.choice(side, size=2, replace=False)
            zv = zv + 0.7 * svec(sym_entry(side, i, j))
        in_dnn = _in_psd(zv, side) and bool(np.min(zv) >= -tol)
        lhs = (
            in_dnn
            and abs(float(svec(d1) @ zv)) <= tol
            and abs(float(d2 @ zv)) <= tol
        )
        rhs = in_dnn and abs(float((svec(d1) + d2) @ zv)) <= tol
        hits += int(lhs)
        assert lhs == rhs
    assert hits > 200


def test_dnn_chain_counts_and_order():
    for side in (2, 3, 4):
        links = dnn_chain(side)
        assert len(links) == svec_dim(side) + 1
    links = dnn_chain(3)
    patterns = [l.pattern for l in links]
    assert patterns[0] == ()
    assert patterns[1] == ((0, 0),)
    assert patterns[3] == ((0, 0), (1, 1), (2, 2))
    # off-diagonals arrive row by row below the diagonal
    assert patterns[4][-1] == (1, 0)
    assert patterns[5][-1] == (2, 0)
    assert patterns[6][-1] == (2, 1)


def test_dnn_chain_witnesses_make_inclusions_strict():
    for side in (2, 3):
        links = dnn_chain(side)
        assert verify_chain(links)
        assert links[0].witness is None
        for prev, cur in zip(links, links[1:]):
            defect, _ = cur.face.membership(cur.witness)
            bad, _ = prev.face.membership(cur.witness)
            assert defect <= 1e-12
            assert bad > 0.5
    # a shuffled chain is rejected
    links = dnn_chain(2)
    assert not verify_chain(list(reversed(links)))


def test_planted_dnn_recovers_plant():
    for side in (2, 3):
        prob, want, z = planted_dnn(side)
        res = reduce_intersection(prob)
        cert = res.certificate
        assert cert.status is CertificateStatus.MINIMAL_FACE_FOUND
        assert cert.steps <= side
        assert face_pairs_equal(cert.final_face, want, 1e-6)
        assert np.allclose(cert.slack_interior, z, atol=1e-6)
        rep = verify_intersection_certificate(prob, cert, 1e-6)
        assert rep.passed, rep.failures
        # the duplicated run's own certificate stands on its own
        dup_rep = model.verify_certificate(
            res.mapping.problem, res.run.certificate, 1e-6
        )
        assert dup_rep.passed, dup_rep.failures


def test_tampered_intersection_certificate_fails():
    prob, _, _ = planted_dnn(3)
    res = reduce_intersection(prob)
    cert = res.certificate
    d1, d2 = cert.splits[0]
    cert.splits[0] = (-d1, d2)
    rep = verify_intersection_certificate(prob, cert, 1e-6)
    assert not rep.passed
    assert any("split" in f or "dual" in f for f in rep.failures)


def test_bounds_agree_between_views():
    for side in (2, 3, 4):
        prob, _, _ = planted_dnn(side)
        direct = fra.bounds_report(prob)
        assert direct.intersected
        assert direct.poly_bound == side
        assert direct.classic_bound == 1 + svec_dim(side)
        dup = fra.bounds_report(duplicate(prob).problem)
        # the duplicated product sees the same curved depth
        assert dup.poly_bound == side


def test_drivers_insist_on_duplication():
    prob, _, _ = planted_dnn(3)
    with pytest.raises(ValueError):
        fra.fra_poly(prob)
    with pytest.raises(ValueError):
        fra.generic_fra(prob)
    with pytest.raises(ValueError):
        fra.analyze_not_strongly_infeasible(prob)
