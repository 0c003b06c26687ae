"""Problem data, reduction certificates and their verification.

The problem of interest is the conic pair

    (P)  inf   <c, x>   s.t.  A x = b,  x in K*
    (D)  sup   <b, y>   s.t.  c - A^T y in K

over a product cone ``K`` (self-dual blocks, so ``K* = K`` as a set, but the
two sides play different roles).  Reduction works on the geometry of (D): it
shrinks ``K`` to smaller and smaller faces that still contain every dual
slack, each step being witnessed by a direction that the certificate records.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import cones
from .cones import (
    Face,
    FacePart,
    NonNegFace,
    PSDFace,
    SOCFace,
    ConeProduct,
    ConeBlock,
)


class FeasibilityStatus(enum.Enum):
    STRONGLY_FEASIBLE = "strongly_feasible"
    WEAKLY_FEASIBLE = "weakly_feasible"
    WEAKLY_INFEASIBLE = "weakly_infeasible"
    STRONGLY_INFEASIBLE = "strongly_infeasible"


class CertificateStatus(enum.Enum):
    MINIMAL_FACE_FOUND = "minimal_face_found"
    PPS_RESTORED = "pps_restored"
    INFEASIBLE_STRONG = "infeasible_strong"
    INFEASIBLE_WEAK = "infeasible_weak"
    PARTIAL = "partial"


class ReductionMode(enum.Enum):
    CLASSIC = "classic"
    POLY = "poly"


@dataclass
class ConicLP:
    """Data of the pair above.  ``intersection`` optionally carries a second
    cone on the same coordinates, meaning the dual constraint is really
    ``c - A^T y in K cap K2``; such problems are handled by duplication."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cone: ConeProduct
    intersection: ConeProduct | None = None

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.c = np.asarray(self.c, dtype=float).ravel()
        m, n = self.A.shape
        if self.b.shape != (m,) or self.c.shape != (n,):
            raise ValueError("A, b, c shapes are inconsistent")
        if self.cone.dim != n:
            raise ValueError("cone dimension does not match the data")
        if self.intersection is not None and self.intersection.dim != n:
            raise ValueError("intersection cone dimension mismatch")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def slack(self, y: np.ndarray) -> np.ndarray:
        return self.c - self.A.T @ np.asarray(y, dtype=float)


@dataclass
class DirectionCheck:
    valid: bool
    strict: bool
    kernel_residual: float
    dual_face_ok: bool
    cost_pairing: float
    reason: str = ""


def check_reducing_direction(
    prob: ConicLP, face: Face, d: np.ndarray, tol: float = 1e-8
) -> DirectionCheck:
    """Decide whether ``d`` certifies a reduction of ``face``.

    Valid means: ``d`` is (numerically) in the kernel of ``A``, lies in the
    dual cone of the current face, and pairs nonpositively with ``c``.
    Strict means the pairing with ``c`` is strictly negative, which upgrades
    the direction to an infeasibility certificate.
    """
    d = np.asarray(d, dtype=float)
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        return DirectionCheck(False, False, 0.0, False, 0.0, "zero direction")
    a_norm = float(np.linalg.norm(prob.A, 2)) if prob.A.size else 0.0
    kres = float(np.linalg.norm(prob.A @ d)) if prob.A.size else 0.0
    kernel_ok = kres <= tol * (1.0 + a_norm) * nd
    dual_ok = cones.dual_face_contains(face, d, tol * nd)
    cpair = float(prob.c @ d)
    c_norm = float(np.linalg.norm(prob.c))
    cost_ok = cpair <= tol * c_norm * nd
    strict = cpair < -tol * c_norm * nd if c_norm > 0 else False
    valid = kernel_ok and dual_ok and cost_ok
    reason = ""
    if not kernel_ok:
        reason = f"A d residual {kres:.3e} too large"
    elif not dual_ok:
        reason = "direction leaves the dual cone of the face"
    elif not cost_ok:
        reason = f"cost pairing {cpair:.3e} is positive"
    return DirectionCheck(valid, strict, kres, dual_ok, cpair, reason)


@dataclass
class ReductionCertificate:
    """Replayable witness of a reduction run.

    ``faces`` has one more entry than ``directions``; ``faces[0]`` is the
    full cone and ``faces[i+1]`` arises from ``faces[i]`` by cutting with
    ``directions[i]``.  Depending on ``status`` the certificate also carries
    a slack point: ``slack_interior`` sits in the relative interior of the
    final face (minimal face certificates), while ``slack_pps`` witnesses the
    partial polyhedral Slater condition reached after the first stage.
    """

    mode: ReductionMode
    status: CertificateStatus
    directions: list[np.ndarray]
    faces: list[Face]
    slack_interior: np.ndarray | None = None
    slack_pps: np.ndarray | None = None
    phase1_steps: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.directions)

    @property
    def final_face(self) -> Face:
        return self.faces[-1]


@dataclass
class VerificationReport:
    passed: bool
    failures: list[str]
    margins: dict[str, float]

    def __bool__(self) -> bool:
        return self.passed


def _nonpoly_interior_ok(face: Face, s: np.ndarray, tol: float) -> tuple[bool, float]:
    """Interior margin of ``s`` restricted to nonpolyhedral face blocks.

    Defects scale with the slack: face descriptors are only as accurate as
    the solves that produced them, so a large slack shows a proportionally
    large defect against an honest face.
    """
    worst = math.inf
    for (block, part), piece in zip(face.items(), face.cone.split(s)):
        defect, margin = cones.part_face_membership(block, part, piece)
        if defect > tol * (1.0 + float(np.linalg.norm(piece))):
            return False, -defect
        if not cones.part_is_polyhedral(block, part):
            worst = min(worst, margin)
    if worst is math.inf:
        return True, math.inf
    return worst >= tol, worst


def verify_certificate(
    prob: ConicLP, cert: ReductionCertificate, tol: float = 1e-8
) -> VerificationReport:
    """Replay a certificate against the problem data.

    Checks the face chain step by step, each recorded direction, and the
    slack obligations of the claimed status.  Everything re-derives from the
    problem data; nothing in the certificate is trusted blindly.
    """
    failures: list[str] = []
    margins: dict[str, float] = {}

    if len(cert.faces) != len(cert.directions) + 1:
        failures.append("face chain length does not match direction count")
        return VerificationReport(False, failures, margins)
    if not cones.faces_equal(cert.faces[0], prob.cone.full_face()):
        failures.append("chain does not start at the full cone")

    for i, d in enumerate(cert.directions):
        chk = check_reducing_direction(prob, cert.faces[i], d, tol)
        is_last = i == len(cert.directions) - 1
        infeasible_end = is_last and cert.status in (
            CertificateStatus.INFEASIBLE_STRONG,
            CertificateStatus.INFEASIBLE_WEAK,
        )
        if not chk.valid:
            failures.append(f"direction {i}: {chk.reason}")
            continue
        if infeasible_end:
            if not chk.strict:
                failures.append(
                    f"direction {i}: infeasibility claimed but cost pairing "
                    f"{chk.cost_pairing:.3e} is not strictly negative"
                )
            if cert.status is CertificateStatus.INFEASIBLE_STRONG:
                nd = float(np.linalg.norm(d))
                if not cones.dual_face_contains(prob.cone.full_face(), d, tol * nd):
                    failures.append(
                        f"direction {i}: strong infeasibility needs a witness "
                        "in the full dual cone"
                    )
        replay = cones.face_intersect_hyperplane(cert.faces[i], d, tol)
        if not cones.faces_equal(replay, cert.faces[i + 1], max(tol, 1e-7)):
            failures.append(f"face {i + 1} does not match the recorded cut")

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
            defect, margin = cones.face_membership(final, s)
            margins["slack_face_defect"] = defect
            margins["slack_interior_margin"] = margin
            if defect > tol * (1.0 + float(np.linalg.norm(s))):
                failures.append("interior slack leaves the final face")
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
            ok, margin = _nonpoly_interior_ok(final, s, tol)
            margins["pps_margin"] = margin
            if not ok:
                failures.append(
                    "pps slack is not interior on the nonpolyhedral blocks"
                )
    elif cert.status in (
        CertificateStatus.INFEASIBLE_STRONG,
        CertificateStatus.INFEASIBLE_WEAK,
    ):
        if not cert.directions:
            failures.append("infeasibility claimed with no directions")
    return VerificationReport(not failures, failures, margins)


def _range_residual(prob: ConicLP, s: np.ndarray) -> float:
    """Distance of ``s - c`` from the range of ``A^T``."""
    rhs = np.asarray(s, dtype=float) - prob.c
    if prob.m == 0:
        return float(np.linalg.norm(rhs))
    y, *_ = np.linalg.lstsq(prob.A.T, -rhs, rcond=None)
    return float(np.linalg.norm(prob.A.T @ y + rhs))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        raise ValueError("non-finite value in output")
    if isinstance(x, float) and x == 0.0:
        x = 0.0  # normalize -0.0
    return format(float(x), ".17g")


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and a fixed float format, so equal data
    always produces byte-identical files."""
    pieces: list[str] = []
    _write_json(obj, pieces)
    return "".join(pieces)


def _write_json(obj: Any, out: list[str]) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _write_json(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _write_json(v, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _write_json(obj[k], out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def cone_to_dict(cone: ConeProduct) -> dict:
    blocks = []
    for b in cone.blocks:
        if b.kind == cones.PSD:
            blocks.append({"type": "psd", "side": b.side})
        else:
            blocks.append({"type": b.kind, "dim": b.size})
    return {"blocks": blocks}


def cone_from_dict(data: dict) -> ConeProduct:
    blocks = []
    for spec in data["blocks"]:
        kind = spec["type"]
        if kind == "nonneg":
            blocks.append(cones.nonneg(int(spec["dim"])))
        elif kind == "soc":
            blocks.append(cones.soc(int(spec["dim"])))
        elif kind == "psd":
            blocks.append(cones.psd(int(spec["side"])))
        else:
            raise ValueError(f"unknown block type {kind!r}")
    return ConeProduct(tuple(blocks))


def problem_to_dict(prob: ConicLP) -> dict:
    data = {
        "cone": cone_to_dict(prob.cone),
        "A": prob.A,
        "b": prob.b,
        "c": prob.c,
    }
    if prob.intersection is not None:
        data["intersection"] = cone_to_dict(prob.intersection)
    return data


def problem_to_json(prob: ConicLP) -> str:
    return canonical_json(problem_to_dict(prob)) + "\n"


def problem_from_dict(data: dict) -> ConicLP:
    inter = None
    if data.get("intersection") is not None:
        inter = cone_from_dict(data["intersection"])
    return ConicLP(
        A=np.array(data["A"], dtype=float),
        b=np.array(data["b"], dtype=float),
        c=np.array(data["c"], dtype=float),
        cone=cone_from_dict(data["cone"]),
        intersection=inter,
    )


def problem_from_json(text: str) -> ConicLP:
    return problem_from_dict(json.loads(text))


def _part_to_dict(part: FacePart) -> dict:
    if isinstance(part, NonNegFace):
        return {"type": "nonneg", "support": list(part.support)}
    if isinstance(part, SOCFace):
        d: dict[str, Any] = {"type": "soc", "kind": part.kind}
        if part.ray is not None:
            d["ray"] = part.ray
        return d
    return {"type": "psd", "basis": part.basis}


def _part_from_dict(data: dict) -> FacePart:
    if data["type"] == "nonneg":
        return NonNegFace(tuple(int(i) for i in data["support"]))
    if data["type"] == "soc":
        ray = np.array(data["ray"], dtype=float) if "ray" in data else None
        return SOCFace(data["kind"], ray)
    basis = np.array(data["basis"], dtype=float)
    if basis.size == 0:
        side = len(data["basis"])
        basis = np.zeros((side, 0))
    return PSDFace(basis)


def face_to_dict(face: Face) -> dict:
    return {"parts": [_part_to_dict(p) for p in face.parts]}


def face_from_dict(data: dict, cone: ConeProduct) -> Face:
    return Face(cone, tuple(_part_from_dict(p) for p in data["parts"]))


def certificate_to_dict(cert: ReductionCertificate) -> dict:
    data: dict[str, Any] = {
        "mode": cert.mode.value,
        "status": cert.status.value,
        "directions": [np.asarray(d) for d in cert.directions],
        "faces": [face_to_dict(f) for f in cert.faces],
    }
    if cert.slack_interior is not None:
        data["slack_interior"] = cert.slack_interior
    if cert.slack_pps is not None:
        data["slack_pps"] = cert.slack_pps
    if cert.phase1_steps is not None:
        data["phase1_steps"] = cert.phase1_steps
    if cert.notes:
        data["notes"] = list(cert.notes)
    return data


def certificate_to_json(cert: ReductionCertificate) -> str:
    return canonical_json(certificate_to_dict(cert)) + "\n"


def certificate_from_dict(data: dict, cone: ConeProduct) -> ReductionCertificate:
    return ReductionCertificate(
        mode=ReductionMode(data["mode"]),
        status=CertificateStatus(data["status"]),
        directions=[np.array(d, dtype=float) for d in data["directions"]],
        faces=[face_from_dict(f, cone) for f in data["faces"]],
        slack_interior=_opt_vec(data, "slack_interior"),
        slack_pps=_opt_vec(data, "slack_pps"),
        phase1_steps=data.get("phase1_steps"),
        notes=list(data.get("notes", [])),
    )


def _opt_vec(data: dict, key: str) -> np.ndarray | None:
    if key in data:
        return np.array(data[key], dtype=float)
    return None
