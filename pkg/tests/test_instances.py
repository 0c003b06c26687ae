from __future__ import annotations

import numpy as np
import pytest

from conefract import cones, fra, instances, intersect, model
from conefract.cones import faces_equal, smat, svec_dim
from conefract.model import CertificateStatus
from conefract.solvers import FinderError, ScriptedFinder


def test_worst_case_shapes_and_kernel():
    inst = instances.gen_worst_case((3, 3), (3, 3))
    prob = inst.problem
    assert prob.n == 6 + 12
    assert inst.expected_steps == 6
    assert len(inst.script) == 6
    assert not prob.c.any() and not prob.b.any()
    # rows are orthonormal and annihilate every scripted direction
    assert np.allclose(prob.A @ prob.A.T, np.eye(prob.A.shape[0]), atol=1e-12)
    for d in inst.script:
        assert np.linalg.norm(prob.A @ d) <= 1e-12
    assert prob.A.shape[0] == prob.n - 6

    with pytest.raises(ValueError):
        instances.gen_worst_case((), ())
    with pytest.raises(ValueError):
        instances.gen_worst_case((2,), ())
    with pytest.raises(ValueError):
        instances.gen_worst_case((), (2,))


def test_worst_case_scripted_run_is_forced():
    for soc_dims, psd_sides in [((3,), ()), ((), (3,)), ((3, 3), (3, 3))]:
        inst = instances.gen_worst_case(soc_dims, psd_sides)
        run = fra.generic_fra(inst.problem, ScriptedFinder(inst.script))
        cert = run.certificate
        assert cert.status is CertificateStatus.MINIMAL_FACE_FOUND
        assert cert.steps == inst.expected_steps
        assert faces_equal(cert.final_face, inst.minimal_face, 1e-7)
        rep = model.verify_certificate(inst.problem, cert, 1e-7)
        assert rep.passed, rep.failures


def test_worst_case_psd_only_first_direction():
    inst = instances.gen_worst_case((), (3,))
    assert inst.expected_steps == 2
    first = inst.script[0]
    want = np.zeros(6)
    want[0] = 1.0  # the leading diagonal entry
    assert np.allclose(first, want)


def test_worst_case_skipping_a_step_is_rejected():
    inst = instances.gen_worst_case((3, 3), (3, 3))
    # out of order, the next scripted direction is invalid for the current
    # face; the driver degrades to a partial certificate with zero cuts
    run = fra.generic_fra(inst.problem, ScriptedFinder(inst.script[1:]))
    assert run.certificate.status is CertificateStatus.PARTIAL
    assert run.certificate.steps == 0
    assert any("rejected" in n for n in run.certificate.notes)

    # a forged certificate that omits the first cut fails verification
    honest = fra.generic_fra(inst.problem, ScriptedFinder(inst.script))
    cert = honest.certificate
    forged = model.ReductionCertificate(
        mode=cert.mode,
        status=CertificateStatus.PARTIAL,
        directions=cert.directions[1:],
        faces=[cert.faces[0]] + cert.faces[2:],
        notes=[],
    )
    rep = model.verify_certificate(inst.problem, forged, 1e-7)
    assert not rep.passed


def test_worst_case_numeric_finder_within_poly_bound():
    inst = instances.gen_worst_case((3, 3), (3, 3))
    run = fra.fra_poly(inst.problem)
    cert = run.certificate
    assert cert.status is CertificateStatus.MINIMAL_FACE_FOUND
    assert cert.steps <= 1 + cones.poly_distance(inst.problem.cone)
    assert faces_equal(cert.final_face, inst.minimal_face, 1e-6)
    rep = model.verify_certificate(inst.problem, cert, 1e-6)
    assert rep.passed, rep.failures


def test_worked_example_scripts():
    ex = instances.gen_appendix_example()
    s = ex.problem.slack(np.array([2.0, -1.0, 5.0]))
    assert np.allclose(s[:2], [2.0, -2.0])
    assert np.allclose(smat(s[2:], 2), [[2.0, -1.0], [-1.0, 5.0]])

    run = fra.generic_fra(ex.problem, ScriptedFinder(ex.script_direct))
    assert run.certificate.steps == 1
    assert faces_equal(run.certificate.final_face, ex.minimal_face, 1e-9)

    run = fra.generic_fra(ex.problem, ScriptedFinder(ex.script_detour))
    assert run.certificate.steps == 2
    assert faces_equal(run.certificate.final_face, ex.minimal_face, 1e-9)

    # the two-phase driver respects the one-plus-distance budget
    run = fra.fra_poly(ex.problem)
    assert run.certificate.status is CertificateStatus.MINIMAL_FACE_FOUND
    assert run.certificate.steps <= 2
    assert faces_equal(run.certificate.final_face, ex.minimal_face, 1e-6)


def test_exposing_vector_cuts_to_the_face():
    for seed in range(12):
        cone = instances.gen_separation_basis(seed)[0]
        face = instances.gen_random_face(cone, seed)
        w = instances.exposing_vector(face)
        assert cones.dual_face_contains(cone.full_face(), w, 1e-9)
        cut = cones.face_intersect_hyperplane(cone.full_face(), w, 1e-9)
        assert faces_equal(cut, face, 1e-7)
        s = instances.random_face_point(face, np.random.default_rng(seed))
        defect, _ = cones.face_membership(face, s)
        assert defect <= 1e-9
        assert abs(float(w @ s)) <= 1e-9 * (1.0 + float(np.linalg.norm(s)))


def test_planted_strongly_feasible():
    cone = cones.product(cones.nonneg(3), cones.soc(3), cones.psd(2))
    inst = instances.gen_planted(cone, None, instances.STRONGLY_FEASIBLE, seed=4)
    s = inst.problem.slack(inst.witness)
    _, margin = cones.face_membership(cone.full_face(), s)
    assert margin > 1e-6
    run = fra.fra_poly(inst.problem)
    assert run.certificate.status is CertificateStatus.MINIMAL_FACE_FOUND
    assert run.certificate.steps == 0
    assert faces_equal(run.certificate.final_face, cone.full_face())


def test_planted_weakly_feasible_recovers_plant():
    cone = cones.product(cones.nonneg(3), cones.soc(3), cones.psd(3))
    for seed in (0, 1, 2, 3):
        face = instances.gen_random_face(cone, seed)
        inst = instances.gen_planted(
            cone, face, instances.WEAKLY_FEASIBLE, seed=seed
        )
        s = inst.problem.slack(inst.witness)
        defect, _ = cones.face_membership(face, s)
        assert defect <= 1e-9
        run = fra.fra_poly(inst.problem)
        cert = run.certificate
        assert cert.status is CertificateStatus.MINIMAL_FACE_FOUND, cert.notes
        assert faces_equal(cert.final_face, face, 1e-6)
        rep = model.verify_certificate(inst.problem, cert, 1e-6)
        assert rep.passed, rep.failures


def test_planted_strongly_infeasible():
    cone = cones.product(cones.nonneg(2), cones.psd(2))
    for seed in (0, 5):
        inst = instances.gen_planted(
            cone, None, instances.STRONGLY_INFEASIBLE, seed=seed
        )
        x = inst.witness
        assert np.linalg.norm(inst.problem.A @ x) <= 1e-9
        assert abs(float(inst.problem.c @ x) + 1.0) <= 1e-9
        run = fra.fra_poly(inst.problem)
        assert run.certificate.status is CertificateStatus.INFEASIBLE_STRONG
        rep = model.verify_certificate(inst.problem, run.certificate, 1e-6)
        assert rep.passed, rep.failures


def test_planted_rejects_mismatched_requests():
    cone = cones.product(cones.nonneg(3))
    face = instances.gen_random_face(cone, 0)
    with pytest.raises(ValueError):
        instances.gen_planted(cone, face, instances.STRONGLY_FEASIBLE)
    with pytest.raises(ValueError):
        instances.gen_planted(cone, None, instances.WEAKLY_FEASIBLE)
    with pytest.raises(ValueError):
        instances.gen_planted(
            cone, cone.full_face(), instances.WEAKLY_FEASIBLE
        )
    with pytest.raises(ValueError):
        instances.gen_planted(cone, face, instances.STRONGLY_INFEASIBLE)
    with pytest.raises(ValueError):
        instances.gen_planted(cone, None, "maybe_feasible")


def test_planted_dnn_roundtrip():
    for seed in (1, 2):
        inst = instances.gen_planted_dnn(3, seed=seed)
        s = inst.problem.slack(inst.witness)
        assert np.allclose(s, inst.slack, atol=1e-9)
        assert inst.pair.contains(inst.slack, 1e-9)
        res = intersect.reduce_intersection(inst.problem)
        cert = res.certificate
        assert cert.status is CertificateStatus.MINIMAL_FACE_FOUND, cert.notes
        assert cert.steps <= inst.side
        assert intersect.face_pairs_equal(cert.final_face, inst.pair, 1e-6)


def test_generators_are_reproducible():
    a = instances.gen_planted_dnn(4, seed=9)
    b = instances.gen_planted_dnn(4, seed=9)
    assert np.array_equal(a.problem.A, b.problem.A)
    assert np.array_equal(a.problem.c, b.problem.c)
    cone = cones.product(cones.soc(4), cones.psd(2))
    f1 = instances.gen_random_face(cone, 7)
    f2 = instances.gen_random_face(cone, 7)
    assert faces_equal(f1, f2)


def test_weakly_infeasible_toys_shape():
    toys = instances.gen_weakly_infeasible_toys()
    m = toys["psd"]
    s = m.slack(np.array([50.0]))
    assert np.allclose(smat(s, 2), [[50.0, 1.0], [1.0, 0.0]])
    # infeasible at every y, with vanishing violation as y grows
    worst = min(
        np.linalg.eigvalsh(smat(m.slack(np.array([t])), 2)).min()
        for t in (1.0, 10.0, 1e4)
    )
    assert worst < 0
    near = np.linalg.eigvalsh(smat(m.slack(np.array([1e8])), 2)).min()
    assert -1e-7 < near < 0

    q = toys["soc"]
    s = q.slack(np.array([3.0]))
    assert np.allclose(s, [3.0, 3.0, 1.0])
    assert s[0] < np.linalg.norm(s[1:])
    far = q.slack(np.array([1e8]))
    assert np.linalg.norm(far[1:]) - far[0] < 1e-7
