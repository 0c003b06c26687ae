"""Reduction drivers built on the auxiliary pair.

Two loops turn reducing directions into certificates.  The classical loop
insists on a fully interior slack before it stops, which can take one cut
per face of the cone.  The two-phase loop first settles for interiority on
the curved blocks only, which needs far fewer cuts, and then closes the
remaining polyhedral gap with a single exact rational solve.  Around them
sit the strict-complementarity shortcut, the worst-case bound report, the
subspace-versus-cone alternative, and an analyzer that separates strong
infeasibility from the marginal kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import cones, simplex
from .auxiliary import (
    AuxOutcome,
    AuxPair,
    AuxVariant,
    OutcomeKind,
    build_aux_pair,
    interpret,
)
from .cones import ConeProduct, Face
from .embedding import FaceEmbedding, build_embedding, reduced_problem_data
from .ipm import solve as ipm_solve
from .model import (
    CertificateStatus,
    ConicLP,
    ReductionCertificate,
    ReductionMode,
    check_reducing_direction,
)
from .solvers import ExactSimplexFinder, Finder, FinderError, InteriorPointFinder

__all__ = [
    "BoundsReport",
    "DriverSettings",
    "FaceEmbedding",
    "FraError",
    "FraRun",
    "InfeasibilityAnalysis",
    "Phase1Result",
    "Phase2Result",
    "SeparationResult",
    "analyze_not_strongly_infeasible",
    "bounds_report",
    "build_embedding",
    "fra_poly",
    "fra_poly_phase1",
    "fra_poly_phase2",
    "generic_fra",
    "phase1_certificate",
    "separation_alternative",
    "strict_comp_shortcut",
]


class FraError(RuntimeError):
    """A driver could not finish; ``certificate`` holds any partial progress."""

    def __init__(self, message: str, certificate: ReductionCertificate | None = None):
        super().__init__(message)
        self.certificate = certificate


@dataclass
class DriverSettings:
    """Numeric policy shared by the drivers.

    ``tol`` classifies auxiliary-pair outcomes, ``check_tol`` revalidates
    directions and slacks against the original data, ``cut_tol`` decides
    which coordinates and eigenvalues a hyperplane cut kills, and
    ``ri_tol`` is the strict-interiority threshold of the convex
    combination search in the second phase.

    ``cut_tol`` sits above the identification error of a path-following
    solve, the square root of its final gap.  A tighter threshold makes the
    cut read that error as signal: it drops eigendirections whose true
    eigenvalue is zero, which silently removes feasible slacks from the
    face and later turns a feasible problem into a claimed infeasible one.
    Keeping a borderline direction merely leaves the face larger, which at
    worst stalls a later check; that asymmetry decides the default.
    """

    tol: float = 1e-8
    check_tol: float = 1e-6
    cut_tol: float = 3e-6
    ri_tol: float = 1e-9


def _unit(d: np.ndarray) -> np.ndarray:
    return np.asarray(d, dtype=float) / float(np.linalg.norm(d))


def _clean_direction(d: np.ndarray, rel: float = 1e-9) -> np.ndarray | None:
    """Snap solver noise to exact zeros, then normalize.

    Entries tiny relative to the largest one are artifacts of an iterative
    solve; left in place they contaminate the face descriptors and every
    embedding built from them downstream.  The cleaned direction is always
    revalidated against the original data, so snapping can only cost a
    stall, never a wrong certificate.  Returns ``None`` for a zero vector.
    """
    d = np.asarray(d, dtype=float)
    scale = float(np.abs(d).max()) if d.size else 0.0
    if scale == 0.0:
        return None
    d = np.where(np.abs(d) <= rel * scale, 0.0, d)
    return d / float(np.linalg.norm(d))


def _solve_round(aux: AuxPair, finder: Finder, st: DriverSettings) -> AuxOutcome:
    """One solve of the pair, with a single tighter retry when ambiguous."""
    rep = finder.find(aux)
    out = interpret(aux, rep.primal, rep.dual, st.tol)
    if out.kind is OutcomeKind.AMBIGUOUS:
        retry = finder.tighter()
        if retry is not None:
            rep = retry.find(aux)
            out = interpret(aux, rep.primal, rep.dual, st.tol)
    return out


def _certificate_consistent(prob: ConicLP, chk) -> bool:
    """An infeasibility witness must not buy its negative pairing with a
    kernel violation.

    Near a marginally infeasible problem the solver can return a direction
    whose pairing is negative at the square root of its kernel residual;
    such a direction only rules out multipliers up to the inverse ratio and
    proves nothing about the problem itself.  Demand the residual be
    essentially zero or negligible against the pairing.
    """
    a_scale = 1.0 + float(np.linalg.norm(prob.A, 2)) if prob.m else 1.0
    kernel_rel = chk.kernel_residual / a_scale
    c_norm = float(np.linalg.norm(prob.c))
    pair_rel = abs(chk.cost_pairing) / c_norm if c_norm else 0.0
    return kernel_rel <= max(1e-12, 1e-6 * pair_rel)


_SNAP_LADDER = (1e-4, 3e-6, 1e-9)


def _direction_step(
    prob: ConicLP, face: Face, out: AuxOutcome, st: DriverSettings
) -> tuple[str, np.ndarray | None, Face | None, str]:
    """Clean, validate, and classify a direction returned by the pair.

    Returns ``(kind, d, new_face, note)`` with ``kind`` one of
    ``"infeasible"`` (strict certificate, face cut but not required to
    shrink), ``"reduce"`` (plain cut, must shrink), or ``"stall"``.

    Identification error in a converged iterative solve scales like the
    square root of the final gap, which can leave junk entries at 1e-5 of
    the leading ones; carried into a cut they wrongly chop the
    eigendirections of a neighboring block.  So cleaning walks a ladder
    from coarse to fine and keeps the coarsest snap whose direction still
    passes revalidation against the original data and still cuts
    something.  Honest small entries are load bearing for the kernel or
    dual conditions, so removing them fails revalidation and the ladder
    backs off; noise is load bearing for nothing and disappears.  A
    claimed-strict direction additionally gets a level at the
    identification error implied by its own optimal value; if strictness
    evaporates under cleaning or fails the consistency check, the step
    demotes to a plain cut and the loop continues; the honest
    certificate, if one exists, reappears at a smaller face with exact
    structure.
    """
    strict_claim = out.kind is OutcomeKind.INFEASIBLE
    levels = set(_SNAP_LADDER)
    if strict_claim:
        levels.add(max(1e-9, 3.0 * math.sqrt(max(out.t_star, 0.0))))
    reason = "zero direction returned"
    chosen = None
    for rel in sorted(levels, reverse=True):
        d = _clean_direction(out.direction, rel)
        if d is None:
            continue
        chk = check_reducing_direction(prob, face, d, st.check_tol)
        if not chk.valid:
            reason = f"direction rejected: {chk.reason}"
            continue
        try:
            cut = cones.face_intersect_hyperplane(face, d, st.cut_tol)
        except ValueError as exc:
            reason = f"direction too rough to cut with: {exc}"
            continue
        if not strict_claim and cones.faces_equal(cut, face):
            # the cutting power may live in entries this level removed
            reason = "direction cuts nothing off the face"
            continue
        chosen = (d, chk, cut)
        break
    if chosen is None:
        return "stall", None, None, reason
    d, chk, cut = chosen
    if strict_claim:
        if chk.strict and _certificate_consistent(prob, chk):
            return "infeasible", d, cut, ""
        if cones.faces_equal(cut, face):
            return "stall", None, None, "demoted direction cuts nothing off the face"
        return "reduce", d, cut, "strict pairing was within solver noise; kept as a plain cut"
    return "reduce", d, cut, ""


def _pps_slack_ok(face: Face, s: np.ndarray, st: DriverSettings) -> tuple[bool, str]:
    """Membership on every block, strict interiority on the curved ones.

    The defect is judged relative to the size of the slack: a large slack
    against a face descriptor known only to solver accuracy shows a defect
    proportional to its own norm, and that is not evidence against it.
    """
    for (block, part), piece in zip(face.items(), face.cone.split(s)):
        defect, margin = cones.part_face_membership(block, part, piece)
        if defect > st.check_tol * (1.0 + float(np.linalg.norm(piece))):
            return False, f"slack leaves the face (defect {defect:.3e})"
        if not cones.part_is_polyhedral(block, part) and margin <= st.tol:
            return False, f"slack not interior on a curved block (margin {margin:.3e})"
    return True, ""


# ---------------------------------------------------------------------------
# Phase 1: interiority on the curved blocks
# ---------------------------------------------------------------------------


@dataclass
class Phase1Result:
    """Chain of cuts ending in interiority on the curved blocks.

    ``outcome`` is ``"pps"`` (the slack ``slack_pps`` given by multiplier
    ``y_pps`` is interior on every curved block of the final face),
    ``"infeasible"`` (the last direction pairs strictly negatively with the
    cost), or ``"stalled"`` (``failure`` says why no exit was reached).
    """

    outcome: str
    faces: list[Face]
    directions: list[np.ndarray]
    outcomes: list[AuxOutcome]
    slack_pps: np.ndarray | None = None
    y_pps: np.ndarray | None = None
    failure: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def final_face(self) -> Face:
        return self.faces[-1]

    @property
    def steps(self) -> int:
        return len(self.directions)


def _reject_intersection(prob: ConicLP) -> None:
    if prob.intersection is not None:
        raise ValueError(
            "problems with an intersection cone must be duplicated first"
        )


def fra_poly_phase1(
    prob: ConicLP,
    finder: Finder | None = None,
    settings: DriverSettings | None = None,
) -> Phase1Result:
    """Cut faces until every curved block holds an interior slack.

    Each round solves one auxiliary pair on the current face, with the
    normalizing vector zeroed on polyhedral blocks.  A zero value with zero
    cost pairing yields a cut, a zero value with negative pairing proves
    infeasibility, and a positive value certifies that the curved blocks
    are as small as they will get.  The round budget is one above the sum
    of the curved-chain depths of the blocks; running past it means the
    backend is returning junk, and the loop stops loudly instead.
    """
    _reject_intersection(prob)
    finder = finder or InteriorPointFinder()
    st = settings or DriverSettings()
    face = prob.cone.full_face()
    faces: list[Face] = [face]
    directions: list[np.ndarray] = []
    outs: list[AuxOutcome] = []
    step_notes: list[str] = []
    cap = 2 + cones.poly_distance(prob.cone)

    def stalled(reason: str) -> Phase1Result:
        return Phase1Result(
            "stalled", faces, directions, outs, failure=reason, notes=step_notes
        )

    for _ in range(cap):
        aux = build_aux_pair(prob, face, AuxVariant.PHASE1)
        try:
            out = _solve_round(aux, finder, st)
        except FinderError as exc:
            return stalled(f"backend failure: {exc}")
        outs.append(out)
        if out.kind is OutcomeKind.AMBIGUOUS:
            return stalled(f"ambiguous after retry: {out.reason}")
        if out.kind is OutcomeKind.PPS:
            ok, why = _pps_slack_ok(face, out.slack, st)
            if not ok:
                return stalled(why)
            return Phase1Result(
                "pps",
                faces,
                directions,
                outs,
                slack_pps=out.slack,
                y_pps=out.y_ratio,
                notes=step_notes,
            )
        kind, d, new_face, note = _direction_step(prob, face, out, st)
        if kind == "stall":
            return stalled(note)
        if note:
            step_notes.append(note)
        directions.append(d)
        faces.append(new_face)
        face = new_face
        if kind == "infeasible":
            return Phase1Result(
                "infeasible", faces, directions, outs, notes=step_notes
            )
    return stalled(f"no exit within {cap} rounds; solver precision suspect")


# ---------------------------------------------------------------------------
# Phase 2: close the polyhedral gap exactly
# ---------------------------------------------------------------------------


@dataclass
class Phase2Result:
    """Outcome of the exact polyhedral finish.

    ``face`` is the final face, ``slack_interior`` a point of its relative
    interior reached by the multiplier ``y_hat``, and ``direction`` the one
    extra cut when the exact optimal value hit zero (``None`` otherwise).
    """

    face: Face
    slack_interior: np.ndarray
    y_hat: np.ndarray
    direction: np.ndarray | None
    beta: float
    notes: list[str] = field(default_factory=list)


def _combine_slacks(
    face: Face,
    s_prime: np.ndarray,
    y_prime: np.ndarray,
    s_tilde: np.ndarray,
    y_tilde: np.ndarray,
    st: DriverSettings,
) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Walk the combination toward the curved-interior slack until the mix
    is interior on every block of the face."""
    for k in range(1, 61):
        beta = 1.0 - 0.5**k
        z = beta * s_prime + (1.0 - beta) * s_tilde
        defect, margin = cones.face_membership(face, z)
        s_scale = 1.0 + float(np.linalg.norm(z))
        if defect <= st.check_tol * s_scale and margin > st.ri_tol:
            return beta, z, beta * y_prime + (1.0 - beta) * y_tilde
    return 0.0, None, None


def fra_poly_phase2(
    prob: ConicLP,
    phase1: Phase1Result,
    settings: DriverSettings | None = None,
) -> Phase2Result:
    """Finish a completed first phase with one exact rational solve.

    On the final face the curved blocks are replaced by their spans, which
    leaves a pair the exact simplex can solve with a strictly complementary
    answer.  A zero optimal value yields one final cut that only touches
    polyhedral blocks; either way, a convex combination of the two slacks
    at hand lands in the relative interior of the resulting face.
    """
    st = settings or DriverSettings()
    if phase1.outcome != "pps":
        raise FraError("the exact finish needs a first phase that ended interior")
    face = phase1.final_face
    s_prime = np.asarray(phase1.slack_pps, dtype=float)
    y_prime = np.asarray(phase1.y_pps, dtype=float)
    aux = build_aux_pair(prob, face, AuxVariant.PHASE2)
    rep = ExactSimplexFinder(strict=True).find(aux)
    notes: list[str] = []

    direction = None
    final = face
    if rep.exact_primal[aux.t_index] == 0:
        d = _unit(aux.ambient_x(rep.primal))
        chk = check_reducing_direction(prob, face, d, st.check_tol)
        if not chk.valid:
            raise FraError(f"exact direction rejected: {chk.reason}")
        if chk.strict:
            raise FraError(
                "exact solve found a strictly negative pairing after the first "
                "phase reported feasibility"
            )
        final = cones.face_intersect_hyperplane(face, d, st.cut_tol)
        direction = d
        notes.append("exact value zero: one polyhedral cut taken")
    else:
        notes.append("exact value positive: the face was already minimal")

    y0 = float(rep.dual[0])
    if y0 <= st.tol:
        raise FraError("first multiplier vanished; strict complementarity lost")
    y_tilde = rep.dual[2:] / y0
    s_tilde = prob.c - prob.A.T @ y_tilde if prob.m else np.array(prob.c, dtype=float)
    beta, z, y_hat = _combine_slacks(final, s_prime, y_prime, s_tilde, y_tilde, st)
    if z is None:
        raise FraError("no convex combination reached the relative interior")
    return Phase2Result(final, z, y_hat, direction, beta, notes)


# ---------------------------------------------------------------------------
# Full drivers
# ---------------------------------------------------------------------------


@dataclass
class FraRun:
    """A finished driver run: the certificate plus everything learned."""

    certificate: ReductionCertificate
    y_hat: np.ndarray | None = None
    phase1: Phase1Result | None = None
    phase2: Phase2Result | None = None
    analysis: "InfeasibilityAnalysis | None" = None

    @property
    def final_face(self) -> Face:
        return self.certificate.final_face


def phase1_certificate(phase1: Phase1Result) -> ReductionCertificate:
    """Package a finished first phase as a standalone certificate.

    Useful when the cheap half of the pipeline is all a caller wants: the
    returned certificate witnesses interiority on the curved blocks
    (``pps_restored``), an untyped infeasibility, or partial progress, and
    replays under the same verifier as the full runs.
    """
    if phase1.outcome == "pps":
        status = CertificateStatus.PPS_RESTORED
        notes = list(phase1.notes)
    elif phase1.outcome == "infeasible":
        status = CertificateStatus.INFEASIBLE_WEAK
        notes = phase1.notes + ["infeasible; strength not analyzed"]
    else:
        status = CertificateStatus.PARTIAL
        notes = phase1.notes + [phase1.failure]
    return ReductionCertificate(
        mode=ReductionMode.POLY,
        status=status,
        directions=list(phase1.directions),
        faces=list(phase1.faces),
        slack_pps=phase1.slack_pps,
        phase1_steps=phase1.steps,
        notes=notes,
    )


def fra_poly(
    prob: ConicLP,
    finder: Finder | None = None,
    settings: DriverSettings | None = None,
    escalate: bool = True,
) -> FraRun:
    """Two-phase reduction to the smallest face holding every dual slack.

    The returned certificate replays independently of this code path.  When
    the run proves infeasibility, ``escalate`` controls whether the extra
    kernel analysis runs to split the strong and marginal cases; callers
    that only need feasible-versus-infeasible can turn it off.
    """
    finder = finder or InteriorPointFinder()
    st = settings or DriverSettings()
    p1 = fra_poly_phase1(prob, finder, st)
    if p1.outcome == "stalled":
        cert = ReductionCertificate(
            mode=ReductionMode.POLY,
            status=CertificateStatus.PARTIAL,
            directions=list(p1.directions),
            faces=list(p1.faces),
            phase1_steps=p1.steps,
            notes=p1.notes + [p1.failure],
        )
        return FraRun(cert, phase1=p1)
    if p1.outcome == "infeasible":
        status, faces, dirs, analysis, notes = _classify_infeasibility(
            prob, list(p1.faces), list(p1.directions), finder, st, escalate
        )
        cert = ReductionCertificate(
            mode=ReductionMode.POLY,
            status=status,
            directions=dirs,
            faces=faces,
            phase1_steps=p1.steps,
            notes=p1.notes + notes,
        )
        return FraRun(cert, phase1=p1, analysis=analysis)
    try:
        p2 = fra_poly_phase2(prob, p1, st)
    except (FraError, FinderError, ValueError) as exc:
        cert = ReductionCertificate(
            mode=ReductionMode.POLY,
            status=CertificateStatus.PARTIAL,
            directions=list(p1.directions),
            faces=list(p1.faces),
            slack_pps=p1.slack_pps,
            phase1_steps=p1.steps,
            notes=p1.notes + [f"exact finish failed: {exc}"],
        )
        return FraRun(cert, phase1=p1)
    faces = list(p1.faces)
    dirs = [np.array(d) for d in p1.directions]
    if p2.direction is not None:
        dirs.append(p2.direction)
        faces.append(p2.face)
    cert = ReductionCertificate(
        mode=ReductionMode.POLY,
        status=CertificateStatus.MINIMAL_FACE_FOUND,
        directions=dirs,
        faces=faces,
        slack_interior=p2.slack_interior,
        slack_pps=p1.slack_pps,
        phase1_steps=p1.steps,
        notes=p1.notes + p2.notes,
    )
    return FraRun(cert, y_hat=p2.y_hat, phase1=p1, phase2=p2)


def generic_fra(
    prob: ConicLP,
    finder: Finder | None = None,
    settings: DriverSettings | None = None,
    escalate: bool = True,
) -> FraRun:
    """Classical one-phase loop insisting on a fully interior slack.

    Slower than the two-phase driver by up to the chain length of the cone;
    kept as the step-count baseline and as the decision engine for the
    subproblems of the analyzers.
    """
    _reject_intersection(prob)
    finder = finder or InteriorPointFinder()
    st = settings or DriverSettings()
    face = prob.cone.full_face()
    faces: list[Face] = [face]
    dirs: list[np.ndarray] = []
    run_notes: list[str] = []
    cap = 1 + cones.chain_length(prob.cone)

    def partial(reason: str) -> FraRun:
        cert = ReductionCertificate(
            mode=ReductionMode.CLASSIC,
            status=CertificateStatus.PARTIAL,
            directions=list(dirs),
            faces=list(faces),
            notes=run_notes + [reason],
        )
        return FraRun(cert)

    for _ in range(cap):
        aux = build_aux_pair(prob, face, AuxVariant.GENERIC)
        try:
            out = _solve_round(aux, finder, st)
        except FinderError as exc:
            return partial(f"backend failure: {exc}")
        if out.kind is OutcomeKind.AMBIGUOUS:
            return partial(f"ambiguous after retry: {out.reason}")
        if out.kind is OutcomeKind.PPS:
            defect, margin = cones.face_membership(face, out.slack)
            s_scale = 1.0 + float(np.linalg.norm(out.slack))
            if defect > st.check_tol * s_scale or margin <= st.tol:
                return partial(
                    f"terminal slack rejected (defect {defect:.3e}, "
                    f"margin {margin:.3e})"
                )
            cert = ReductionCertificate(
                mode=ReductionMode.CLASSIC,
                status=CertificateStatus.MINIMAL_FACE_FOUND,
                directions=list(dirs),
                faces=list(faces),
                slack_interior=out.slack,
                notes=list(run_notes),
            )
            return FraRun(cert, y_hat=out.y_ratio)
        kind, d, new_face, note = _direction_step(prob, face, out, st)
        if kind == "stall":
            return partial(note)
        if note:
            run_notes.append(note)
        dirs.append(d)
        faces.append(new_face)
        face = new_face
        if kind == "infeasible":
            status, faces2, dirs2, analysis, notes = _classify_infeasibility(
                prob, faces, dirs, finder, st, escalate
            )
            cert = ReductionCertificate(
                mode=ReductionMode.CLASSIC,
                status=status,
                directions=dirs2,
                faces=faces2,
                notes=run_notes + notes,
            )
            return FraRun(cert, analysis=analysis)
    return partial(f"no exit within {cap} rounds; solver precision suspect")


def _classify_infeasibility(
    prob: ConicLP,
    faces: list[Face],
    dirs: list[np.ndarray],
    finder: Finder,
    st: DriverSettings,
    escalate: bool,
) -> tuple[
    CertificateStatus,
    list[Face],
    list[np.ndarray],
    "InfeasibilityAnalysis | None",
    list[str],
]:
    """Split a proven infeasibility into strong, marginal, or undecided."""
    d_last = dirs[-1]
    full = prob.cone.full_face()
    notes: list[str] = []
    if cones.dual_face_contains(full, d_last, st.check_tol * float(np.linalg.norm(d_last))):
        notes.append("final direction lies in the dual of the whole cone")
        return CertificateStatus.INFEASIBLE_STRONG, faces, dirs, None, notes
    if not escalate:
        notes.append("infeasible; strength not analyzed")
        return CertificateStatus.INFEASIBLE_WEAK, faces, dirs, None, notes
    analysis = analyze_not_strongly_infeasible(prob, finder, st)
    if analysis.strongly_infeasible and analysis.witness is not None:
        w = _unit(analysis.witness)
        chk = check_reducing_direction(prob, faces[-1], w, st.check_tol)
        if chk.valid and chk.strict:
            try:
                cut = cones.face_intersect_hyperplane(faces[-1], w, st.cut_tol)
            except ValueError:
                notes.append("kernel witness too rough to cut with; left undecided")
                return CertificateStatus.PARTIAL, faces, dirs, analysis, notes
            dirs = dirs + [w]
            faces = faces + [cut]
            notes.append(
                "appended a kernel point of the cone with negative cost pairing"
            )
            return CertificateStatus.INFEASIBLE_STRONG, faces, dirs, analysis, notes
        notes.append("kernel witness failed revalidation; strength left undecided")
        return CertificateStatus.PARTIAL, faces, dirs, analysis, notes
    if analysis.strongly_infeasible:
        notes.append("strong by elimination, but the witness solve failed")
        return CertificateStatus.PARTIAL, faces, dirs, analysis, notes
    if analysis.strongly_infeasible is False:
        notes.append(
            "no feasible slack, yet an affine set of dimension "
            f"{analysis.subspace_dim} approaches the cone"
        )
        return CertificateStatus.INFEASIBLE_WEAK, faces, dirs, analysis, notes
    notes.append("infeasibility strength analysis was inconclusive")
    return CertificateStatus.PARTIAL, faces, dirs, analysis, notes


# ---------------------------------------------------------------------------
# Strict-complementarity shortcut
# ---------------------------------------------------------------------------


def strict_comp_shortcut(
    prob: ConicLP,
    aux: AuxPair,
    primal: np.ndarray,
    dual: np.ndarray,
    tol: float = 1e-8,
) -> tuple[Face, np.ndarray] | None:
    """One-step minimal face from a strictly complementary pair solution.

    Fires only when the optimal value and the budget coordinate both
    vanish, the first multiplier is positive, and three margins hold
    strictly: the rebuilt slack is interior to the cut face, and the dual
    slacks of the pair at the value and budget coordinates are positive.
    Returns the face and the interior slack, or ``None`` when any margin is
    missing; a miss is not an error, just no shortcut.
    """
    z = np.asarray(primal, dtype=float)
    y = np.asarray(dual, dtype=float)
    t_star = float(z[aux.t_index])
    w_star = float(z[aux.w_index])
    gap = abs(float(aux.c_hat @ z) - float(aux.b_hat @ y))
    y0 = float(y[0])
    if t_star > tol or w_star > tol or gap > tol or y0 <= tol:
        return None
    x_star = aux.ambient_x(z)
    if float(np.linalg.norm(x_star)) == 0.0:
        return None
    d = _unit(x_star)
    if not cones.dual_face_contains(aux.face, d, tol):
        return None
    cut = cones.face_intersect_hyperplane(aux.face, d, max(tol, 1e-7))
    ratio = y[2:] / y0
    s = prob.c - prob.A.T @ ratio if prob.m else np.array(prob.c, dtype=float)
    defect, margin = cones.face_membership(cut, s)
    if defect > tol or margin <= tol:
        return None
    dual_slack = aux.c_hat - aux.A_hat.T @ y
    if dual_slack[aux.t_index] <= tol or dual_slack[aux.w_index] <= tol:
        return None
    return cut, s


# ---------------------------------------------------------------------------
# Bound report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsReport:
    """Worst-case step budgets for an instance, both driver flavors.

    ``block_lengths`` holds each block's longest face chain and
    ``block_poly_distances`` its curved-chain depth.  ``steps_taken``
    compares a finished run against the budgets; the two-phase driver must
    never exceed ``poly_bound``.
    """

    block_lengths: tuple[int, ...]
    block_poly_distances: tuple[int, ...]
    classic_bound: int
    poly_bound: int
    steps_taken: int | None = None
    intersected: bool = False


def bounds_report(
    prob: ConicLP, cert: ReductionCertificate | None = None
) -> BoundsReport:
    """Compute both step budgets for the instance's cone.

    For a plain product, the classical budget is the longest face chain of
    the product and the two-phase budget is one more than the sum of the
    blocks' curved depths.  For an intersection pair, the classical budget
    is one more than the ambient dimension, while the two-phase budget adds
    the curved depths of both cones.
    """
    steps = cert.steps if cert is not None else None
    if prob.intersection is not None:
        blocks = tuple(prob.cone.blocks) + tuple(prob.intersection.blocks)
        return BoundsReport(
            block_lengths=tuple(cones.block_chain_length(b) for b in blocks),
            block_poly_distances=tuple(cones.block_poly_distance(b) for b in blocks),
            classic_bound=1 + prob.n,
            poly_bound=1
            + cones.poly_distance(prob.cone)
            + cones.poly_distance(prob.intersection),
            steps_taken=steps,
            intersected=True,
        )
    return BoundsReport(
        block_lengths=tuple(
            cones.block_chain_length(b) for b in prob.cone.blocks
        ),
        block_poly_distances=tuple(
            cones.block_poly_distance(b) for b in prob.cone.blocks
        ),
        classic_bound=cones.chain_length(prob.cone),
        poly_bound=1 + cones.poly_distance(prob.cone),
        steps_taken=steps,
    )


# ---------------------------------------------------------------------------
# Strong-versus-marginal infeasibility
# ---------------------------------------------------------------------------


@dataclass
class InfeasibilityAnalysis:
    """What the kernel-side reduction says about strong infeasibility.

    ``strongly_infeasible`` is three-valued.  ``False`` comes with an
    affine certificate: every point of ``s_hat`` plus the span of
    ``directions`` pairs nonnegatively with the whole kernel-cone slice, so
    no strongly separating witness exists; its dimension ``subspace_dim``
    never exceeds ``dim_bound``.  ``True`` comes with ``witness``, a kernel
    point of the cone with negative cost pairing (``None`` only when the
    witness solve itself failed).  ``None`` means some subproblem was
    undecided and nothing is claimed.
    """

    strongly_infeasible: bool | None
    s_hat: np.ndarray | None = None
    y_hat: np.ndarray | None = None
    directions: list[np.ndarray] = field(default_factory=list)
    faces: list[Face] = field(default_factory=list)
    subspace_dim: int | None = None
    dim_bound: int = 0
    witness: np.ndarray | None = None
    minimal_prefix: bool = True
    notes: list[str] = field(default_factory=list)


def _strong_witness(
    prob: ConicLP, st: DriverSettings
) -> tuple[np.ndarray | None, str]:
    """Solve for a normalized kernel point of the cone with negative cost."""
    e = prob.cone.identity()
    rows = [prob.A] if prob.m else []
    rows.append(e[None, :])
    A_w = np.vstack(rows)
    b_w = np.concatenate([np.zeros(prob.m), [1.0]])
    if all(blk.kind == cones.NONNEG for blk in prob.cone.blocks):
        res = simplex.solve_lp(A_w, b_w, prob.c)
        if res.status != "optimal":
            return None, f"witness solve ended {res.status}"
        if res.value >= 0:
            return None, "witness solve found a nonnegative optimum"
        return np.array([float(v) for v in res.x]), ""
    result = ipm_solve(A_w, b_w, prob.c, prob.cone)
    if result.status != "optimal":
        return None, f"witness solve ended {result.status}"
    x = np.asarray(result.x, dtype=float)
    defect, _ = cones.face_membership(prob.cone.full_face(), x)
    if float(prob.c @ x) >= -st.check_tol or defect > st.check_tol:
        return None, "witness candidate failed revalidation"
    return x, ""


def analyze_not_strongly_infeasible(
    prob: ConicLP,
    finder: Finder | None = None,
    settings: DriverSettings | None = None,
) -> InfeasibilityAnalysis:
    """Decide whether the dual slack set stays boundedly far from the cone.

    The kernel of ``A`` is reduced against the cone first; the chain's
    faces are then probed in order for a multiplier whose slack lands in
    the dual cone of the face.  The first hit yields the affine
    certificate.  If every face conclusively refuses, a normalized kernel
    point of the cone with negative cost pairing must exist, and the final
    solve produces it.  ``b`` plays no role; only the slack geometry does.
    Problems with an intersection cone must be duplicated before analysis.
    """
    _reject_intersection(prob)
    finder = finder or InteriorPointFinder()
    st = settings or DriverSettings()
    n = prob.n
    kernel = scipy.linalg.null_space(prob.A) if prob.m else np.eye(n)
    probe = ConicLP(
        A=kernel.T,
        b=np.zeros(kernel.shape[1]),
        c=np.zeros(n),
        cone=prob.cone,
    )
    bound = cones.poly_distance(prob.cone)
    p1 = fra_poly_phase1(probe, finder, st)
    if p1.outcome != "pps":
        return InfeasibilityAnalysis(
            None,
            dim_bound=bound,
            notes=[f"kernel reduction stalled: {p1.failure}"],
        )
    notes: list[str] = []
    undecided = False
    for k, face in enumerate(p1.faces):
        emb = build_embedding(face)
        if emb.n_sym == 0:
            y_hat = np.zeros(prob.m)
            s_hat = np.array(prob.c, dtype=float)
        else:
            A_k, c_k = reduced_problem_data(prob.A, prob.c, emb)
            sub = ConicLP(A=A_k, b=prob.b, c=c_k, cone=emb.sym_cone)
            run = generic_fra(sub, finder, st, escalate=False)
            status = run.certificate.status
            if status is CertificateStatus.PARTIAL:
                undecided = True
                why = run.certificate.notes[0] if run.certificate.notes else ""
                notes.append(f"prefix {k} undecided: {why}")
                continue
            if status is not CertificateStatus.MINIMAL_FACE_FOUND:
                continue
            y_hat = np.asarray(run.y_hat, dtype=float)
            s_hat = prob.c - prob.A.T @ y_hat if prob.m else np.array(prob.c)
            scale = st.check_tol * (1.0 + float(np.linalg.norm(s_hat)))
            if not cones.dual_face_contains(face, s_hat, scale):
                undecided = True
                notes.append(f"prefix {k}: multiplier slack failed revalidation")
                continue
        dirs = [np.array(d) for d in p1.directions[:k]]
        dim = int(np.linalg.matrix_rank(np.stack(dirs))) if dirs else 0
        return InfeasibilityAnalysis(
            False,
            s_hat=s_hat,
            y_hat=y_hat,
            directions=dirs,
            faces=list(p1.faces[: k + 1]),
            subspace_dim=dim,
            dim_bound=bound,
            minimal_prefix=not undecided,
            notes=notes,
        )
    if undecided:
        return InfeasibilityAnalysis(
            None,
            faces=list(p1.faces),
            dim_bound=bound,
            notes=notes + ["some prefixes were undecided; nothing is claimed"],
        )
    witness, why = _strong_witness(prob, st)
    if why:
        notes.append(why)
    return InfeasibilityAnalysis(
        True,
        faces=list(p1.faces),
        directions=[np.array(d) for d in p1.directions],
        dim_bound=bound,
        witness=witness,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Subspace-versus-cone alternative
# ---------------------------------------------------------------------------


@dataclass
class SeparationResult:
    """Exactly one side of the subspace-versus-cone alternative.

    ``kind`` is ``"interior_meets"`` (``witness`` is a point of the
    subspace inside the cone and strictly inside every curved block) or
    ``"separator"`` (``witness`` is a dual-cone point orthogonal to the
    subspace with a nonzero component on some curved block).  ``margin``
    is the active side's strictness: least curved-block interiority for
    the first kind, largest curved-block norm for the second.
    """

    kind: str
    witness: np.ndarray
    margin: float
    y: np.ndarray | None = None


def separation_alternative(
    cone: ConeProduct,
    basis: np.ndarray,
    finder: Finder | None = None,
    tol: float = 1e-7,
    settings: DriverSettings | None = None,
) -> SeparationResult:
    """Decide which side of the alternative holds for span(``basis``).

    Either the subspace contains a point of the cone that is strictly
    interior on every curved block, or its orthogonal complement contains a
    dual-cone point with a nonzero curved component; never both, and the
    single auxiliary pair solved here says which.  Polyhedral blocks need
    no interiority on the first side, which is exactly what the zeroed
    normalizer certifies.
    """
    st = settings or DriverSettings()
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[0] != cone.dim:
        raise ValueError("basis rows must match the cone dimension")
    prob = ConicLP(
        A=basis.T,
        b=np.zeros(basis.shape[1]),
        c=np.zeros(cone.dim),
        cone=cone,
    )
    full = cone.full_face()
    if finder is None:
        all_poly = all(
            cones.part_is_polyhedral(b, p) for b, p in full.items()
        )
        finder = ExactSimplexFinder(strict=True) if all_poly else InteriorPointFinder()
    aux = build_aux_pair(prob, full, AuxVariant.PHASE1)
    out = _solve_round(aux, finder, st)
    if out.kind is OutcomeKind.PPS:
        s = out.slack
        margin = np.inf
        for (block, part), piece in zip(full.items(), cone.split(s)):
            defect, part_margin = cones.part_face_membership(block, part, piece)
            if defect > tol:
                raise FraError(f"meeting point leaves the cone (defect {defect:.3e})")
            if not cones.part_is_polyhedral(block, part):
                if part_margin <= tol:
                    raise FraError(
                        f"meeting point not interior on a curved block "
                        f"(margin {part_margin:.3e})"
                    )
                margin = min(margin, part_margin)
        return SeparationResult("interior_meets", s, float(margin), y=out.y_ratio)
    if out.kind is OutcomeKind.REDUCE:
        d = _unit(out.direction)
        if not cones.dual_face_contains(full, d, tol):
            raise FraError("separator left the dual cone")
        resid = float(np.linalg.norm(basis.T @ d))
        if resid > tol * (1.0 + float(np.linalg.norm(basis))):
            raise FraError(f"separator not orthogonal to the subspace ({resid:.3e})")
        curved = 0.0
        for (block, part), piece in zip(full.items(), cone.split(d)):
            if not cones.part_is_polyhedral(block, part):
                curved = max(curved, float(np.linalg.norm(piece)))
        if curved <= tol:
            raise FraError("separator vanishes on every curved block")
        return SeparationResult("separator", d, curved)
    raise FraError(f"alternative undecided: {out.reason or out.kind.value}")
