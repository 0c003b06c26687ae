"""Exact rational simplex for the polyhedral subproblems.

Everything here works over ``fractions.Fraction`` so that value-zero tests,
support computations and strict complementarity are decided exactly rather
than by thresholding floats.  Floating-point input is converted entry by
entry; since binary floats are rationals this loses nothing.

Two entry points matter.  ``solve_lp`` returns an optimal vertex and a basic
dual solution.  ``solve_lp_strict`` returns a strictly complementary optimal
pair: a relative-interior point of the primal optimal face together with a
dual point whose slack has maximal support.  The latter is what the
reduction shortcut and the second stage rely on, since a vertex can hide
part of the minimal face.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def to_fraction_matrix(rows) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in rows]


def to_fraction_vector(vec) -> list[Fraction]:
    return [Fraction(x) for x in vec]


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction] | None = None
    y: list[Fraction] | None = None
    slack: list[Fraction] | None = None
    value: Fraction | None = None


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tab[row][col]
    inv = ONE / piv
    tab[row] = [v * inv for v in tab[row]]
    prow = tab[row]
    for r, other in enumerate(tab):
        if r == row:
            continue
        factor = other[col]
        if factor != 0:
            tab[r] = [v - factor * p for v, p in zip(other, prow)]
    basis[row] = col


def _bland_step(tab, basis, ncols, allowed) -> str:
    """One Bland-rule pivot; returns "optimal", "unbounded" or "pivoted"."""
    cost = tab[-1]
    enter = -1
    for j in range(ncols):
        if allowed is not None and j not in allowed:
            continue
        if cost[j] < 0:
            enter = j
            break
    if enter < 0:
        return "optimal"
    leave, best = -1, None
    for r in range(len(tab) - 1):
        a = tab[r][enter]
        if a > 0:
            ratio = tab[r][-1] / a
            if best is None or ratio < best or (
                ratio == best and basis[r] < basis[leave]
            ):
                best, leave = ratio, r
    if leave < 0:
        return "unbounded"
    _pivot(tab, basis, leave, enter)
    return "pivoted"


def _run_simplex(tab, basis, ncols, allowed=None) -> str:
    while True:
        state = _bland_step(tab, basis, ncols, allowed)
        if state != "pivoted":
            return state


def _solve_basis_dual(
    A: list[list[Fraction]], c: list[Fraction], basis: list[int], kept: list[int]
) -> list[Fraction]:
    """Solve B^T y = c_B exactly for the rows actually kept."""
    m = len(kept)
    # build the m x m system: rows indexed by basis entries, cols by kept rows
    M = [[A[kept[i]][basis[j]] for i in range(m)] for j in range(m)]
    rhs = [c[basis[j]] for j in range(m)]
    # gaussian elimination with exact pivoting
    for col in range(m):
        piv = next((r for r in range(col, m) if M[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular basis system")
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = ONE / M[col][col]
        M[col] = [v * inv for v in M[col]]
        rhs[col] *= inv
        for r in range(m):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[col])]
                rhs[r] -= f * rhs[col]
    return rhs


def solve_lp(A, b, c) -> LPResult:
    """Minimize ``c @ x`` subject to ``A x = b`` and ``x >= 0``, exactly.

    Returns a vertex solution, a dual vector (entries for dropped redundant
    rows are zero) and the optimal value.
    """
    A = to_fraction_matrix(A)
    b = to_fraction_vector(b)
    c = to_fraction_vector(c)
    m, n = len(A), len(c)
    if any(len(row) != n for row in A):
        raise ValueError("ragged constraint matrix")

    # phase 1: artificial identity basis on sign-corrected rows
    rows = []
    for i in range(m):
        row = list(A[i]) + [ZERO] * m + [b[i]]
        if b[i] < 0:
            row = [-v for v in row]
        row[n + i] = ONE
        rows.append(row)
    cost = [ZERO] * (n + m + 1)
    for i in range(m):
        cost = [cv - rv for cv, rv in zip(cost, rows[i])]
    for i in range(m):
        cost[n + i] = ZERO
    tab = rows + [cost]
    basis = [n + i for i in range(m)]
    state = _run_simplex(tab, basis, n + m)
    if state != "optimal" or tab[-1][-1] != 0:
        if state == "optimal" and -tab[-1][-1] > 0:
            return LPResult("infeasible")
        if state != "optimal":
            raise ArithmeticError("phase 1 cannot be unbounded")
        return LPResult("infeasible")

    # drive artificials out; a row with no real pivot is redundant
    drop: list[int] = []
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if tab[r][j] != 0), None)
            if col is None:
                drop.append(r)
            else:
                _pivot(tab, basis, r, col)
    kept = [i for i in range(m) if i not in drop]
    if drop:
        tab = [row for r, row in enumerate(tab[:-1]) if r not in drop] + [tab[-1]]
        basis = [bv for r, bv in enumerate(basis) if r not in drop]

    # phase 2 on the original costs
    tab = [row[:n] + [row[-1]] for row in tab[:-1]]
    cost = list(c) + [ZERO]
    for r, bv in enumerate(basis):
        f = cost[bv]
        if f != 0:
            cost = [cv - f * rv for cv, rv in zip(cost, tab[r])]
    tab.append(cost)
    state = _run_simplex(tab, basis, n)
    if state == "unbounded":
        return LPResult("unbounded")

    x = [ZERO] * n
    for r, bv in enumerate(basis):
        x[bv] = tab[r][-1]
    value = sum((cv * xv for cv, xv in zip(c, x)), ZERO)
    y_kept = _solve_basis_dual(A, c, basis, kept) if kept else []
    y = [ZERO] * m
    for pos, i in enumerate(kept):
        y[i] = y_kept[pos]
    slack = [
        c[j] - sum((A[i][j] * y[i] for i in range(m)), ZERO) for j in range(n)
    ]
    return LPResult("optimal", x, y, slack, value)


def _max_coordinate_on_face(A, b, c, value, j, n) -> list[Fraction] | None:
    """A face point with coordinate ``j`` positive, or ``None``.

    The face is ``{x >= 0 : A x = b, c @ x = value}``; the coordinate is
    capped at one so the subproblem always stays bounded.
    """
    m = len(A)
    A2 = [list(row) + [ZERO] for row in A]
    A2.append(list(c) + [ZERO])
    cap = [ZERO] * (n + 1)
    cap[j] = ONE
    cap[n] = ONE
    A2.append(cap)
    b2 = list(b) + [value, ONE]
    obj = [ZERO] * (n + 1)
    obj[j] = -ONE
    res = solve_lp(A2, b2, obj)
    if res.status != "optimal" or res.value == 0:
        return None
    return res.x[:n]


def solve_lp_strict(A, b, c) -> LPResult:
    """Strictly complementary optimum of the same LP.

    The primal point lies in the relative interior of the optimal face; the
    dual slack has maximal support over the dual optimal set.  By strict
    complementarity the two supports partition the coordinates, which is
    verified before returning.
    """
    A = to_fraction_matrix(A)
    b = to_fraction_vector(b)
    c = to_fraction_vector(c)
    base = solve_lp(A, b, c)
    if base.status != "optimal":
        return base
    n = len(c)
    m = len(A)
    points = [base.x]
    covered = {j for j in range(n) if base.x[j] > 0}
    for j in range(n):
        if j in covered:
            continue
        extra = _max_coordinate_on_face(A, b, c, base.value, j, n)
        if extra is not None:
            points.append(extra)
            covered |= {i for i in range(n) if extra[i] > 0}
    k = Fraction(1, len(points))
    x = [sum((p[j] for p in points), ZERO) * k for j in range(n)]

    y, slack = _strict_dual(A, b, c, base.value, n, m)
    for j in range(n):
        if (x[j] > 0) == (slack[j] > 0):
            raise ArithmeticError(
                "strict complementarity failed, optimal face computation is off"
            )
    value = sum((cv * xv for cv, xv in zip(c, x)), ZERO)
    return LPResult("optimal", x, y, slack, value)


def _strict_dual(A, b, c, value, n, m):
    """Relative-interior style point of the dual optimal set.

    Encoded over variables ``(y+, y-, s)`` with ``A^T y + s = c`` and
    ``b @ y = value``; only the slack supports need maximizing.
    """
    def dual_rows():
        rows = []
        for j in range(n):
            row = (
                [A[i][j] for i in range(m)]
                + [-A[i][j] for i in range(m)]
                + [ONE if k == j else ZERO for k in range(n)]
            )
            rows.append(row)
        rows.append(list(b) + [-v for v in b] + [ZERO] * n)
        return rows

    A2 = dual_rows()
    b2 = list(c) + [value]
    nvars = 2 * m + n
    base = solve_lp(A2, b2, [ZERO] * nvars)
    if base.status != "optimal":
        raise ArithmeticError("dual optimal set is empty at the optimal value")
    points = [base.x]
    covered = {j for j in range(n) if base.x[2 * m + j] > 0}
    for j in range(n):
        if j in covered:
            continue
        extra = _max_coordinate_on_face(
            A2, b2, [ZERO] * nvars, ZERO, 2 * m + j, nvars
        )
        if extra is not None:
            points.append(extra)
            covered |= {i for i in range(n) if extra[2 * m + i] > 0}
    k = Fraction(1, len(points))
    avg = [sum((p[j] for p in points), ZERO) * k for j in range(nvars)]
    y = [avg[i] - avg[m + i] for i in range(m)]
    slack = avg[2 * m :]
    return y, slack
