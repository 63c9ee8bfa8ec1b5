"""Two-phase primal simplex on equality-form LPs with Bland's rule.

The tableau works over float64 or, for small exact instances, over
``fractions.Fraction`` stored in object arrays. Bland's rule (smallest
eligible index for both entering and leaving variables) rules out cycling,
which keeps the pivot sequence deterministic for a given input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import LPError


@dataclass
class LPResult:
    """Optimal primal/dual pair of ``min c.x s.t. A x = b, x >= 0``."""

    value: float | Fraction
    x: np.ndarray
    duals: np.ndarray
    basis: list[int]
    pivots: int


def _as_tableau_array(values, exact: bool) -> np.ndarray:
    arr = np.asarray(values, dtype=object if exact else float)
    if exact:
        return np.vectorize(Fraction, otypes=[object])(arr)
    return arr


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] = tab[row] / tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0
    nz = np.flatnonzero(factors != 0)
    if nz.size:
        tab[nz] -= np.outer(factors[nz], tab[row])


def _run(tab, basis, cost_row, allowed, tol, max_pivots):
    """Iterate Bland pivots on ``tab`` with the objective in ``cost_row``."""
    m = len(basis)
    pivots = 0
    while True:
        reduced = tab[cost_row, :-1]
        eligible = np.flatnonzero((reduced < -tol) & allowed)
        if eligible.size == 0:
            return pivots
        col = int(eligible[0])
        column = tab[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise LPError("linear program is unbounded")
        ratios = tab[rows, -1] / column[rows]
        best = min(ratios)
        # exact ties for floats are rare; treat near-ties as ties so Bland applies
        slack = 0 if tol == 0 else tol * (1 + abs(best))
        ties = [int(r) for r, q in zip(rows, ratios) if q - best <= slack]
        row = min(ties, key=lambda r: basis[r])
        _pivot(tab, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_pivots:
            raise LPError(f"pivot limit {max_pivots} exceeded")


def solve_equality_lp(c, A, b, *, exact: bool = False, tol: float = 1e-12,
                      max_pivots: int = 100_000) -> LPResult:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.

    Parameters
    ----------
    c, A, b
        Problem data. Rows of ``A`` may be linearly dependent; redundant
        rows are detected during phase I and dropped.
    exact
        Pivot in rational arithmetic. Inputs are converted with
        ``Fraction`` so floats are taken at their exact binary value.
    tol
        Pivot/optimality tolerance for float mode; ignored when ``exact``.

    Returns
    -------
    LPResult
        ``duals`` has one entry per row of ``A`` (zero for dropped rows)
        and satisfies ``c - A.T @ duals >= 0`` at optimum.
    """
    if exact:
        tol = 0
    A = _as_tableau_array(A, exact)
    b = _as_tableau_array(b, exact).reshape(-1)
    c = _as_tableau_array(c, exact).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m or c.shape[0] != n:
        raise LPError("inconsistent LP dimensions")

    flip = b < 0
    A = A.copy()
    b = b.copy()
    A[flip] *= -1
    b[flip] *= -1

    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    # columns: n structural, m artificial, rhs; rows: m constraints, phase II, phase I
    tab = np.full((m + 2, n + m + 1), zero, dtype=object if exact else float)
    tab[:m, :n] = A
    for i in range(m):
        tab[i, n + i] = one
    tab[:m, -1] = b
    tab[m, :n] = c
    tab[m + 1, :n] = -A.sum(axis=0)
    tab[m + 1, -1] = -b.sum()
    basis = list(range(n, n + m))

    allowed = np.ones(n + m, dtype=bool)
    pivots = _run(tab, basis, m + 1, allowed, tol, max_pivots)
    if -tab[m + 1, -1] > (tol * max(1, len(b)) * 10 if tol else 0):
        raise LPError("linear program is infeasible")

    # drive zero-level artificials out of the basis; rows that cannot be
    # cleared are linear combinations of the others
    dropped = []
    for r in range(m):
        if basis[r] < n:
            continue
        row = tab[r, :n]
        cand = np.flatnonzero(abs(row) > tol) if not exact else np.flatnonzero(row != 0)
        if cand.size:
            col = int(cand[0])
            _pivot(tab, r, col)
            basis[r] = col
            pivots += 1
        else:
            dropped.append(r)

    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    keep = [r for r in range(m) if r not in dropped]
    sub = tab[keep + [m]]
    sub_basis = [basis[r] for r in keep]
    pivots += _run(sub, sub_basis, len(keep), allowed, tol, max_pivots)
    for i, r in enumerate(keep):
        tab[r] = sub[i]
        basis[r] = sub_basis[i]
    tab[m] = sub[-1]

    x = np.full(n, zero, dtype=object if exact else float)
    for r in keep:
        if basis[r] < n:
            x[basis[r]] = tab[r, -1]
    # reduced cost of artificial column i is -y_i (its cost is zero)
    duals = -tab[m, n:n + m]
    duals = np.array(duals, dtype=object if exact else float)
    for r in dropped:
        duals[r] = zero
    duals[flip] *= -1
    value = -tab[m, -1]
    return LPResult(value=value, x=x, duals=duals, basis=basis, pivots=pivots)
