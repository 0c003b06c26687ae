"""Backends that solve an auxiliary pair and hand back a matched solution.

Every backend implements the same tiny contract: take an :class:`AuxPair`,
return primal and dual vectors in the pair's own coordinates.  The caller
(the reduction driver) then classifies the solution; nothing here decides
what the solution *means*.

Three backends are provided.  The interior point one eliminates the flat
coordinates and runs the homogeneous solver on the conic remainder.  The
simplex one works in exact rational arithmetic and is available whenever
the symmetric part of the pair is entirely polyhedral.  The scripted one
replays externally supplied reducing directions, validating each against
the current face before trusting it; once the script runs dry it defers
to a fallback backend for the terminating solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.linalg import null_space

from . import simplex
from .auxiliary import AuxPair
from .cones import NONNEG, PSD, SOC, ConeProduct, nonneg
from .ipm import IPMSettings, solve as ipm_solve
from .model import check_reducing_direction


class FinderError(RuntimeError):
    """A backend could not produce a usable solution for this pair."""


@dataclass
class FinderReport:
    primal: np.ndarray
    dual: np.ndarray
    backend: str
    status: str
    iterations: int = 0
    exact_primal: list[Fraction] | None = None
    exact_dual: list[Fraction] | None = None
    exact_slack: list[Fraction] | None = None
    notes: str = ""


class Finder:
    """Interface: solve the pair, return matched primal and dual vectors."""

    name = "abstract"

    def find(self, aux: AuxPair) -> FinderReport:
        raise NotImplementedError

    def tighter(self, factor: float = 10.0) -> "Finder | None":
        """A more precise variant of this backend for one retry, if any."""
        return None


def _split_cone_columns(aux: AuxPair):
    """Column indices of the conic part (symmetric block plus t and w)."""
    ns, nf = aux.n_sym, aux.n_free
    return list(range(ns)) + [ns + nf, ns + nf + 1]


def _aux_cone(aux: AuxPair) -> ConeProduct:
    return ConeProduct(list(aux.sym_cone.blocks) + [nonneg(2)])


class InteriorPointFinder(Finder):
    """Numeric backend built on the homogeneous self dual solver.

    The pair's flat coordinates are unconstrained in sign, which the conic
    solver cannot express directly.  They are eliminated up front: rows are
    projected onto the orthogonal complement of the flat columns' range,
    the conic remainder is solved there, and the flat part is recovered
    afterwards from the original equations by least squares.  The dual
    vector lifts back through the same projection, which automatically
    zeroes the slack on the eliminated columns.
    """

    name = "hsd"

    def __init__(self, settings: IPMSettings | None = None):
        self.settings = settings or IPMSettings()

    def tighter(self, factor: float = 10.0) -> "InteriorPointFinder":
        s = self.settings
        return InteriorPointFinder(
            IPMSettings(
                max_iters=2 * s.max_iters,
                feas_tol=s.feas_tol / factor,
                gap_tol=s.gap_tol / factor,
                step_fraction=s.step_fraction,
            )
        )

    def find(self, aux: AuxPair) -> FinderReport:
        ns, nf = aux.n_sym, aux.n_free
        cone_cols = _split_cone_columns(aux)
        A_cone = aux.A_hat[:, cone_cols]
        c_cone = aux.c_hat[cone_cols]

        if nf:
            E = aux.A_hat[:, ns : ns + nf]
            P = null_space(E.T)
            if P.shape[1] == 0:
                raise FinderError(
                    "flat columns span every row; the pair is degenerate"
                )
        else:
            E = None
            P = np.eye(aux.A_hat.shape[0])

        Ap = P.T @ A_cone
        bp = P.T @ aux.b_hat

        u0 = aux.warm_primal[cone_cols]
        uy0 = P.T @ aux.warm_dual
        s0 = c_cone - Ap.T @ uy0
        cone = _aux_cone(aux)
        res = ipm_solve(
            Ap, bp, c_cone, cone, self.settings, warm=(u0, uy0, s0)
        )

        z = np.zeros(aux.A_hat.shape[1])
        z[:ns] = res.x[:ns]
        z[aux.t_index] = res.x[ns]
        z[aux.w_index] = res.x[ns + 1]
        if nf:
            rhs = aux.b_hat - A_cone @ res.x
            q, *_ = np.linalg.lstsq(E, rhs, rcond=None)
            z[ns : ns + nf] = q
        y = P @ res.y

        status = "ok" if res.status == "optimal" else res.status
        return FinderReport(
            primal=z,
            dual=y,
            backend=self.name,
            status=status,
            iterations=res.iterations,
        )


def _orthant_substitution(sym_cone: ConeProduct) -> np.ndarray | None:
    """Exact linear map from orthant variables onto the symmetric cone.

    Polyhedral blocks that are not literally orthants still admit one:
    a 1x1 matrix block is a single nonnegative coordinate and a
    two dimensional second-order block is the image of the orthant under
    ``x = ((u0+u1)/2, (u1-u0)/2)``.  Returns ``None`` when every block is
    already an orthant (the identity substitution), and raises for blocks
    that are genuinely not polyhedral.  All entries are exact in binary
    floating point, so rational conversions downstream stay exact.
    """
    if all(b.kind == NONNEG for b in sym_cone.blocks):
        return None
    pieces = []
    for block in sym_cone.blocks:
        if block.kind == NONNEG or (block.kind == PSD and block.side == 1):
            pieces.append(np.eye(block.size))
        elif block.kind == SOC and block.size == 2:
            pieces.append(np.array([[0.5, 0.5], [-0.5, 0.5]]))
        else:
            raise FinderError(
                "exact backend needs a polyhedral symmetric part, "
                f"got a {block.kind} block of size {block.size}"
            )
    ns = sym_cone.dim
    T = np.zeros((ns, ns))
    at = 0
    for piece in pieces:
        k = piece.shape[0]
        T[at : at + k, at : at + k] = piece
        at += k
    return T


class ExactSimplexFinder(Finder):
    """Rational arithmetic backend for pairs with a polyhedral symmetric part.

    Flat coordinates are split into positive and negative parts, and any
    non-orthant polyhedral blocks are substituted away, so the whole pair
    becomes a standard form linear program over the rationals.
    With ``strict=True`` the returned optimum is strictly complementary:
    the primal point has maximal support over the optimal face and the
    dual slack has maximal support over the dual optimal set, which is
    what the final cutting step of the reduction needs.
    """

    name = "exact"

    def __init__(self, strict: bool = False):
        self.strict = strict

    def find(self, aux: AuxPair) -> FinderReport:
        T = _orthant_substitution(aux.sym_cone)
        ns, nf = aux.n_sym, aux.n_free
        cone_cols = _split_cone_columns(aux)
        A_cone = aux.A_hat[:, cone_cols]
        A_sym = A_cone[:, :ns] if T is None else A_cone[:, :ns] @ T
        columns = [A_sym]
        if nf:
            E = aux.A_hat[:, ns : ns + nf]
            columns += [E, -E]
        columns.append(A_cone[:, ns:])
        A_lp = np.hstack(columns)
        c_lp = np.zeros(A_lp.shape[1])
        c_lp[-2] = 1.0  # the t column

        solve = simplex.solve_lp_strict if self.strict else simplex.solve_lp
        res = solve(A_lp, aux.b_hat, c_lp)
        if res.status != "optimal":
            raise FinderError(
                f"auxiliary pair reported {res.status}, which its "
                "construction rules out; the input data is inconsistent"
            )

        sym_exact = list(res.x[:ns])
        if T is not None:
            T_frac = simplex.to_fraction_matrix(T)
            sym_exact = [
                sum(T_frac[i][j] * res.x[j] for j in range(ns))
                for i in range(ns)
            ]
        xf = [float(v) for v in res.x]
        z = np.zeros(aux.A_hat.shape[1])
        z[:ns] = [float(v) for v in sym_exact]
        if nf:
            plus = np.array(xf[ns : ns + nf])
            minus = np.array(xf[ns + nf : ns + 2 * nf])
            z[ns : ns + nf] = plus - minus
        z[aux.t_index] = xf[-2]
        z[aux.w_index] = xf[-1]
        y = np.array([float(v) for v in res.y])

        exact_primal = sym_exact
        if nf:
            exact_primal += [
                res.x[ns + i] - res.x[ns + nf + i] for i in range(nf)
            ]
        exact_primal += [res.x[-2], res.x[-1]]
        return FinderReport(
            primal=z,
            dual=y,
            backend=self.name,
            status="ok",
            exact_primal=exact_primal,
            exact_dual=list(res.y),
            exact_slack=list(res.slack) if res.slack is not None else None,
        )


class ScriptedFinder(Finder):
    """Replay a prescribed sequence of ambient reducing directions.

    Each scripted direction is checked against the problem and the current
    face before use; a direction that fails the kernel, dual cone, or cost
    conditions raises instead of silently corrupting the reduction.  A
    valid direction is rescaled to satisfy the pair's normalization and
    wrapped as a value zero solution with the zero dual vector, which is a
    legitimate matched pair.  When the script is exhausted the fallback
    backend produces the terminating solve.
    """

    name = "oracle"

    def __init__(
        self,
        directions,
        fallback: Finder | None = None,
        tol: float = 1e-8,
    ):
        self.queue = [np.asarray(d, dtype=float) for d in directions]
        self.fallback = fallback or InteriorPointFinder()
        self.tol = tol
        self.replayed = 0

    def tighter(self, factor: float = 10.0) -> Finder | None:
        # ambiguity can only come from the fallback solve, and by then the
        # script is spent, so the retry goes straight to the fallback
        if self.queue:
            return None
        return self.fallback.tighter(factor)

    def find(self, aux: AuxPair) -> FinderReport:
        if not self.queue:
            rep = self.fallback.find(aux)
            rep.notes = "script exhausted; fallback solve"
            return rep
        d = self.queue.pop(0)
        self.replayed += 1
        chk = check_reducing_direction(aux.prob, aux.face, d, self.tol)
        if not chk.valid:
            raise FinderError(f"scripted direction rejected: {chk.reason}")

        cd = float(aux.prob.c @ d)
        denom = float(aux.e_amb @ d) - cd
        if denom <= self.tol:
            raise FinderError(
                "scripted direction pairs to zero with the normalizer; "
                "it cannot cut the current face"
            )
        scaled = d / denom

        ns, nf = aux.n_sym, aux.n_free
        z = np.zeros(aux.A_hat.shape[1])
        z[:ns] = aux.embedding.project_sym(scaled)
        if nf:
            z[ns : ns + nf] = aux.embedding.project_perp(scaled)
        z[aux.w_index] = -cd / denom

        back = aux.ambient_x(z)
        drift = float(np.linalg.norm(back - scaled))
        if drift > 1e-7 * max(1.0, float(np.linalg.norm(scaled))):
            raise FinderError(
                "scripted direction leaves the working subspace of this "
                f"pair (drift {drift:.2e}); it cannot be replayed here"
            )
        eq = float(np.linalg.norm(aux.A_hat @ z - aux.b_hat))
        if eq > 1e-7 * max(1.0, float(np.linalg.norm(aux.b_hat))):
            raise FinderError(
                f"replayed direction violates the pair equations by {eq:.2e}"
            )

        y = np.zeros(aux.A_hat.shape[0])
        return FinderReport(
            primal=z,
            dual=y,
            backend=self.name,
            status="ok",
            notes=f"replayed scripted direction {self.replayed}",
        )


def scripted_from_json(source) -> ScriptedFinder:
    """Build a scripted backend from a JSON file or an already loaded dict.

    Expected shape: ``{"directions": [[...], ...]}`` with optional
    ``"tol"``.  Directions are ambient vectors, one per reduction step,
    in the order they should be replayed.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    if not isinstance(data, dict) or "directions" not in data:
        raise ValueError("script must be an object with a 'directions' list")
    dirs = data["directions"]
    if not isinstance(dirs, list):
        raise ValueError("'directions' must be a list of vectors")
    tol = float(data.get("tol", 1e-8))
    return ScriptedFinder(dirs, tol=tol)


def make_finder(spec: str) -> Finder:
    """Map a command line style backend name to a backend instance.

    Accepted values: ``hsd``, ``exact``, and ``oracle:FILE`` where FILE is
    a JSON script of directions.
    """
    if spec == "hsd":
        return InteriorPointFinder()
    if spec == "exact":
        return ExactSimplexFinder()
    if spec.startswith("oracle:"):
        path = spec.split(":", 1)[1]
        if not path:
            raise ValueError("oracle backend needs a file: oracle:FILE")
        return scripted_from_json(path)
    raise ValueError(
        f"unknown backend {spec!r}; expected hsd, exact, or oracle:FILE"
    )
