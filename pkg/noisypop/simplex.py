"""
Dense two-phase tableau simplex with Bland's anti-cycling rule
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from noisypop.config import DUAL_TOL, MAX_PIVOTS, PIVOT_TOL
from noisypop.errors import InfeasibleError, LPSolveError, UnboundedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    pivots: int


class _Tableau:
    """Rows are constraints, last column is the right-hand side."""

    def __init__(self, table: np.ndarray, basis: List[int], pivot_tol: float, dual_tol: float, max_pivots: int):
        self.table = table
        self.basis = basis
        self.pivot_tol = pivot_tol
        self.dual_tol = dual_tol
        self.max_pivots = max_pivots
        self.pivots = 0

    def pivot(self, row: int, col: int) -> None:
        t = self.table
        t[row] /= t[row, col]
        factors = t[:, col].copy()
        factors[row] = 0.0
        t -= np.outer(factors, t[row])
        self.basis[row] = col
        self.pivots += 1

    def run(self, cost: np.ndarray, n_cols: int) -> None:
        """Minimize ``cost`` over the first ``n_cols`` columns until dual feasible."""
        t = self.table
        while True:
            if self.pivots >= self.max_pivots:
                raise LPSolveError(f"no optimum certified within {self.max_pivots} pivots")
            reduced = cost[:n_cols] - cost[self.basis] @ t[:, :n_cols]
            entering = np.flatnonzero(reduced < -self.dual_tol)
            if entering.size == 0:
                return
            col = int(entering[0])
            column = t[:, col]
            rows = np.flatnonzero(column > self.pivot_tol)
            if rows.size == 0:
                raise UnboundedError(f"column {col} has no positive pivot")
            ratios = np.maximum(t[rows, -1], 0.0) / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.pivot_tol * max(1.0, abs(best))]
            row = min(ties, key=lambda i: self.basis[i])
            self.pivot(int(row), col)


def simplex_minimize(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    pivot_tol: float = PIVOT_TOL,
    dual_tol: float = DUAL_TOL,
    max_pivots: int = MAX_PIVOTS,
) -> LPResult:
    """
    Minimize c.x subject to a_ub x <= b_ub and x >= 0

    Rows with negative right-hand side become ">=" rows with a surplus and an
    artificial variable; phase one drives the artificials to zero, phase two
    optimizes c.

    Args:
        c: Objective coefficients, length n
        a_ub: Constraint matrix, shape (m, n)
        b_ub: Right-hand sides, length m
        pivot_tol: Smallest entry accepted as a pivot
        dual_tol: Reduced costs above -dual_tol count as optimal
        max_pivots: Pivot budget across both phases

    Returns:
        LPResult with the optimal x

    Raises:
        InfeasibleError, UnboundedError, LPSolveError
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float)
    m, n = a.shape

    flipped = b < 0
    art_rows = np.flatnonzero(flipped)
    n_art = art_rows.size
    body = np.where(flipped[:, None], -a, a)
    slack = np.diag(np.where(flipped, -1.0, 1.0))
    art = np.zeros((m, n_art))
    art[art_rows, np.arange(n_art)] = 1.0
    table = np.hstack([body, slack, art, np.abs(b)[:, None]])

    basis = [n + i for i in range(m)]
    for pos, i in enumerate(art_rows):
        basis[i] = n + m + pos
    tab = _Tableau(table, basis, pivot_tol, dual_tol, max_pivots)

    if n_art:
        phase_one = np.zeros(n + m + n_art)
        phase_one[n + m:] = 1.0
        tab.run(phase_one, n + m + n_art)
        infeasibility = float(phase_one[tab.basis] @ tab.table[:, -1])
        if infeasibility > 1e-9 * max(1.0, float(np.abs(b).max())):
            raise InfeasibleError(f"phase one stopped at infeasibility {infeasibility:.3e}")
        _drive_out_artificials(tab, n + m)
        tab.table = np.delete(tab.table, np.s_[n + m:n + m + n_art], axis=1)

    phase_two = np.zeros(n + m)
    phase_two[:n] = c
    tab.run(phase_two, n + m)

    x = np.zeros(n + m)
    x[tab.basis] = tab.table[:, -1]
    logger.debug(f"simplex: {m} rows, {n} columns, {tab.pivots} pivots")
    return LPResult(x=x[:n], objective=float(c @ x[:n]), pivots=tab.pivots)


def _drive_out_artificials(tab: _Tableau, n_real: int) -> None:
    row = 0
    while row < len(tab.basis):
        if tab.basis[row] < n_real:
            row += 1
            continue
        candidates = np.flatnonzero(np.abs(tab.table[row, :n_real]) > tab.pivot_tol)
        if candidates.size:
            tab.pivot(row, int(candidates[0]))
            row += 1
        else:
            # redundant constraint
            tab.table = np.delete(tab.table, row, axis=0)
            del tab.basis[row]
