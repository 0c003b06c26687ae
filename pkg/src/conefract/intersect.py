"""Intersections of two cones on shared coordinates, handled by duplication.

A dual constraint ``c - A^T y in K1 cap K2`` becomes a constraint over the
product ``K1 x K2`` after splitting the variable into a sum: the duplicated
problem has data ``[A | A]`` and ``(c, c)``, and its dual slack is the pair
``(c - A^T y, c - A^T y)``, both copies identical.  The reduction machinery
then runs on the product, where every block is a plain symmetric cone, and
the output folds back here.

Faces of the intersection are kept as pairs, one face per factor.  Every
face of ``K1 cap K2`` arises as such an intersection, and the pair keeps
membership tests inside the factor cones, where they are cheap and exact.
The flagship intersection is the doubly nonnegative cone: psd matrices with
entrywise nonnegative entries, for which this module also builds the longest
possible chain of faces explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cones, fra
from .cones import (
    ConeProduct,
    Face,
    NonNegFace,
    nonneg,
    product,
    psd,
    svec,
    svec_dim,
)
from .model import (
    CertificateStatus,
    ConicLP,
    ReductionCertificate,
    VerificationReport,
    _nonpoly_interior_ok,
    _range_residual,
)

__all__ = [
    "DupMapping",
    "FacePair",
    "face_pairs_equal",
    "duplicate",
    "IntersectionCertificate",
    "recombine",
    "verify_intersection_certificate",
    "IntersectionRun",
    "reduce_intersection",
    "dnn_problem",
    "ChainLink",
    "dnn_chain",
    "verify_chain",
]


@dataclass(frozen=True)
class FacePair:
    """A face of ``K1 cap K2``, stored as one face per factor.

    The set it describes is ``first cap second``; membership is the
    conjunction of the factor memberships, so ``defect`` is the larger of
    the two defects and ``margin`` the smaller of the margins.
    """

    first: Face
    second: Face

    def membership(self, x: np.ndarray) -> tuple[float, float]:
        d1, m1 = cones.face_membership(self.first, x)
        d2, m2 = cones.face_membership(self.second, x)
        return max(d1, d2), min(m1, m2)

    def contains(self, x: np.ndarray, tol: float) -> bool:
        return self.membership(x)[0] <= tol


def face_pairs_equal(a: FacePair, b: FacePair, tol: float = 1e-9) -> bool:
    return cones.faces_equal(a.first, b.first, tol) and cones.faces_equal(
        a.second, b.second, tol
    )


@dataclass(frozen=True)
class DupMapping:
    """How a problem over ``K1 cap K2`` maps onto its duplicated form.

    ``problem`` is the product formulation: variables ``(x1, x2)`` standing
    for ``x = x1 + x2``, matrix ``[A | A]``, cost ``(c, c)``, cone
    ``K1 x K2``.  The mapping also provides the backward maps: directions
    fold by summing the halves, faces fold into pairs.
    """

    original: ConicLP
    problem: ConicLP

    @property
    def n(self) -> int:
        return self.original.n

    def split_direction(self, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = np.asarray(d, dtype=float)
        return d[: self.n].copy(), d[self.n :].copy()

    def fold_direction(self, d: np.ndarray) -> np.ndarray:
        d1, d2 = self.split_direction(d)
        return d1 + d2

    def split_face(self, face: Face) -> FacePair:
        k = len(self.original.cone.blocks)
        first = Face(self.original.cone, face.parts[:k])
        second = Face(self.original.intersection, face.parts[k:])
        return FacePair(first, second)


def duplicate(prob: ConicLP) -> DupMapping:
    """Rewrite a problem with an intersection cone over the product.

    Requires both cones to live on identical coordinates.  For the doubly
    nonnegative case that holds in svec coordinates: scaling off-diagonal
    entries by a positive constant preserves their sign, so entrywise
    nonnegativity of the matrix and of its vectorization agree.
    """
    if prob.intersection is None:
        raise ValueError("problem has no intersection cone to duplicate")
    if prob.intersection.dim != prob.cone.dim:
        raise ValueError("the two cones do not share coordinates")
    dup = ConicLP(
        np.hstack([prob.A, prob.A]),
        prob.b,
        np.concatenate([prob.c, prob.c]),
        product(*(tuple(prob.cone.blocks) + tuple(prob.intersection.blocks))),
    )
    return DupMapping(original=prob, problem=dup)


@dataclass
class IntersectionCertificate:
    """A reduction certificate folded back to the intersection.

    ``directions[i]`` equals ``splits[i][0] + splits[i][1]``.  The split is
    kept because the dual cone of a face pair is a closed sum with no direct
    membership test; each piece checks against its own factor instead.
    ``faces`` are pairs, one more than the directions, and the terminal pair
    intersects to the minimal face of the original problem.
    """

    status: CertificateStatus
    directions: list[np.ndarray]
    splits: list[tuple[np.ndarray, np.ndarray]]
    faces: list[FacePair]
    slack_interior: np.ndarray | None = None
    slack_pps: np.ndarray | None = None
    phase1_steps: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.directions)

    @property
    def final_face(self) -> FacePair:
        return self.faces[-1]


def _fold_slack(mapping: DupMapping, s: np.ndarray, notes: list[str]) -> np.ndarray:
    s1, s2 = mapping.split_direction(s)
    drift = float(np.linalg.norm(s1 - s2))
    if drift > 1e-6 * (1.0 + float(np.linalg.norm(s1))):
        notes.append(
            f"duplicated slack halves differ by {drift:.2e}; they should be copies"
        )
    return 0.5 * (s1 + s2)


def recombine(
    mapping: DupMapping, cert: ReductionCertificate
) -> IntersectionCertificate:
    """Fold a certificate for the duplicated problem back to the original.

    Each duplicated direction ``(d1, d2)`` becomes the single direction
    ``d1 + d2``, and the per-factor cuts track the face chain of the
    intersection: a point of both factor faces pairs to zero with the sum
    exactly when it pairs to zero with each half, the halves being dual to
    their factors.
    """
    splits = [mapping.split_direction(d) for d in cert.directions]
    notes = list(cert.notes)
    out = IntersectionCertificate(
        status=cert.status,
        directions=[d1 + d2 for d1, d2 in splits],
        splits=splits,
        faces=[mapping.split_face(f) for f in cert.faces],
        phase1_steps=cert.phase1_steps,
        notes=notes,
    )
    if cert.slack_interior is not None:
        out.slack_interior = _fold_slack(mapping, cert.slack_interior, notes)
    if cert.slack_pps is not None:
        out.slack_pps = _fold_slack(mapping, cert.slack_pps, notes)
    return out


def verify_intersection_certificate(
    prob: ConicLP, cert: IntersectionCertificate, tol: float = 1e-8
) -> VerificationReport:
    """Replay a folded certificate against the original problem data.

    Mirrors the product-cone verifier: chain shape, per-step kernel and cost
    conditions on the summed direction, dual membership checked piecewise
    through the stored split, face cuts replayed per factor, and the slack
    obligations of the claimed status against the terminal pair.
    """
    failures: list[str] = []
    margins: dict[str, float] = {}
    if prob.intersection is None:
        return VerificationReport(False, ["problem has no intersection cone"], margins)
    if len(cert.faces) != len(cert.directions) + 1:
        failures.append("face chain length does not match direction count")
        return VerificationReport(False, failures, margins)
    if len(cert.splits) != len(cert.directions):
        failures.append("one split pair per direction required")
        return VerificationReport(False, failures, margins)

    full = FacePair(prob.cone.full_face(), prob.intersection.full_face())
    if not face_pairs_equal(cert.faces[0], full):
        failures.append("chain does not start at the full pair")

    a_norm = float(np.linalg.norm(prob.A, 2)) if prob.A.size else 0.0
    c_norm = float(np.linalg.norm(prob.c))
    infeasible = cert.status in (
        CertificateStatus.INFEASIBLE_STRONG,
        CertificateStatus.INFEASIBLE_WEAK,
    )
    for i, (d, (d1, d2)) in enumerate(zip(cert.directions, cert.splits)):
        nd = float(np.linalg.norm(d))
        if nd == 0.0:
            failures.append(f"direction {i} is zero")
            continue
        if float(np.linalg.norm(d - (d1 + d2))) > tol * (1.0 + nd):
            failures.append(f"direction {i} does not equal the sum of its split")
        kres = float(np.linalg.norm(prob.A @ d)) if prob.A.size else 0.0
        if kres > tol * (1.0 + a_norm) * nd:
            failures.append(f"direction {i}: A d residual {kres:.3e} too large")
        if not cones.dual_face_contains(cert.faces[i].first, d1, tol * nd):
            failures.append(f"direction {i}: first half leaves its dual face")
        if not cones.dual_face_contains(cert.faces[i].second, d2, tol * nd):
            failures.append(f"direction {i}: second half leaves its dual face")
        cpair = float(prob.c @ d)
        if cpair > tol * c_norm * nd:
            failures.append(f"direction {i}: cost pairing {cpair:.3e} is positive")
        if infeasible and i == len(cert.directions) - 1:
            if cpair >= -tol * c_norm * nd:
                failures.append(
                    f"direction {i}: infeasibility claimed but cost pairing "
                    f"{cpair:.3e} is not strictly negative"
                )
            if cert.status is CertificateStatus.INFEASIBLE_STRONG:
                if not (
                    cones.dual_face_contains(full.first, d1, tol * nd)
                    and cones.dual_face_contains(full.second, d2, tol * nd)
                ):
                    failures.append(
                        f"direction {i}: strong infeasibility needs both halves "
                        "in their full dual cones"
                    )
        try:
            cut1 = cones.face_intersect_hyperplane(cert.faces[i].first, d1, tol)
            cut2 = cones.face_intersect_hyperplane(cert.faces[i].second, d2, tol)
        except ValueError as exc:
            failures.append(f"direction {i}: {exc}")
            continue
        replay = FacePair(cut1, cut2)
        if not face_pairs_equal(replay, cert.faces[i + 1], max(tol, 1e-7)):
            failures.append(f"face pair {i + 1} does not match the recorded cuts")

    final = cert.final_face
    if cert.status is CertificateStatus.MINIMAL_FACE_FOUND:
        if cert.slack_interior is None:
            failures.append("minimal face claimed without an interior slack")
        else:
            s = cert.slack_interior
            res = _range_residual(prob, s)
            margins["slack_range_residual"] = res
            if res > tol * (1.0 + float(np.linalg.norm(s))):
                failures.append("interior slack is not of the form c - A^T y")
            defect, margin = final.membership(s)
            margins["slack_face_defect"] = defect
            margins["slack_interior_margin"] = margin
            if defect > tol * (1.0 + float(np.linalg.norm(s))):
                failures.append("interior slack leaves the terminal pair")
            if margin < tol:
                failures.append("interior slack has no interior margin")
    elif cert.status is CertificateStatus.PPS_RESTORED:
        if cert.slack_pps is None:
            failures.append("pps claimed without a witness slack")
        else:
            s = cert.slack_pps
            res = _range_residual(prob, s)
            margins["pps_range_residual"] = res
            if res > tol * (1.0 + float(np.linalg.norm(s))):
                failures.append("pps slack is not of the form c - A^T y")
            ok1, m1 = _nonpoly_interior_ok(final.first, s, tol)
            ok2, m2 = _nonpoly_interior_ok(final.second, s, tol)
            margins["pps_margin"] = min(m1, m2)
            if not (ok1 and ok2):
                failures.append(
                    "pps slack is not interior on the nonpolyhedral blocks"
                )
    elif infeasible and not cert.directions:
        failures.append("infeasibility claimed with no directions")
    return VerificationReport(not failures, failures, margins)


@dataclass
class IntersectionRun:
    mapping: DupMapping
    run: fra.FraRun
    certificate: IntersectionCertificate


def reduce_intersection(
    prob: ConicLP,
    finder=None,
    settings: fra.DriverSettings | None = None,
    escalate: bool = True,
) -> IntersectionRun:
    """Duplicate, run the two-stage reduction on the product, fold back."""
    mapping = duplicate(prob)
    run = fra.fra_poly(mapping.problem, finder=finder, settings=settings, escalate=escalate)
    return IntersectionRun(mapping, run, recombine(mapping, run.certificate))


# ---------------------------------------------------------------------------
# The doubly nonnegative cone
# ---------------------------------------------------------------------------


def dnn_problem(A, b, c, side: int) -> ConicLP:
    """A problem whose dual slack must be psd with nonnegative entries.

    Both cones live on the svec coordinates of ``side x side`` symmetric
    matrices; the nonnegativity factor is an orthant there.
    """
    return ConicLP(
        A,
        b,
        c,
        product(psd(side)),
        intersection=product(nonneg(svec_dim(side))),
    )


def _svec_index(i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return j * (j + 1) // 2 + i


@dataclass(frozen=True)
class ChainLink:
    """One face in the explicit longest chain of the doubly nonnegative cone.

    ``pattern`` lists the matrix entries allowed to be nonzero, as 0-based
    ``(row, col)`` with ``row >= col``.  ``witness`` is an svec point lying
    in this face but not in the previous link's face; the first link has
    none.
    """

    pattern: tuple[tuple[int, int], ...]
    face: FacePair
    witness: np.ndarray | None


def dnn_chain(side: int) -> list[ChainLink]:
    """The longest chain of faces of the doubly nonnegative cone.

    Starts at the all-zero pattern, then allows one diagonal entry at a
    time, then one off-diagonal entry at a time, row by row.  Diagonal
    stages are witnessed by 0/1 diagonal matrices; off-diagonal stages by a
    0/1 pattern matrix plus a large multiple of the identity, which is
    diagonally dominant and hence psd while keeping every entry nonnegative.
    With one new entry per link the chain has ``side*(side+1)/2 + 1`` faces,
    the most any chain inside the symmetric matrices can have.
    """
    k1 = product(psd(side))
    k2 = product(nonneg(svec_dim(side)))
    psd_full = k1.full_face()
    pattern: list[tuple[int, int]] = []
    links: list[ChainLink] = []

    def add_link(witness_mat: np.ndarray | None) -> None:
        support = tuple(sorted(_svec_index(i, j) for i, j in pattern))
        pair = FacePair(psd_full, Face(k2, (NonNegFace(support),)))
        w = svec(witness_mat) if witness_mat is not None else None
        links.append(ChainLink(tuple(pattern), pair, w))

    add_link(None)
    for i in range(side):
        pattern.append((i, i))
        add_link(np.diag([1.0] * (i + 1) + [0.0] * (side - i - 1)))
    for i in range(1, side):
        for j in range(i):
            pattern.append((i, j))
            x = np.eye(side)
            for p, q in pattern:
                if p != q:
                    x[p, q] = x[q, p] = 1.0
            add_link(x + side * np.eye(side))
    return links


def verify_chain(links: list[ChainLink], tol: float = 1e-9) -> bool:
    """Check the chain is strictly nested, witness by witness.

    Each pattern must grow by one entry, each witness must belong to its own
    face and violate the previous one.
    """
    for prev, cur in zip(links, links[1:]):
        if not set(prev.pattern) < set(cur.pattern):
            return False
        if len(cur.pattern) != len(prev.pattern) + 1:
            return False
        if cur.witness is None:
            return False
        defect, _ = cur.face.membership(cur.witness)
        if defect > tol:
            return False
        prev_defect, _ = prev.face.membership(cur.witness)
        if prev_defect <= tol:
            return False
    return True
