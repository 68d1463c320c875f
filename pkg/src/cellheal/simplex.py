"""Dense two-phase simplex for the small association LPs.

The healing LPs have at most a few hundred columns and a few dozen rows, so a
dense tableau is simpler and faster than anything sparse, and carrying our own
solver keeps pivoting deterministic: entering variable by most negative
reduced cost with lowest-index tie-break, switching to Bland's rule after a
run of degenerate pivots so cycling cannot occur.

Problems are stated as ``min c @ x`` subject to ``a @ x (sense) b`` with
``x >= 0`` and senses drawn from ``<`` (at most), ``=``, ``>`` (at least).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_BLAND_AFTER = 50  # consecutive degenerate pivots before switching rules


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    objective: float | None = None
    infeasible_rows: list[int] = field(default_factory=list)
    iterations: int = 0


class SimplexError(RuntimeError):
    """Internal solver failure (iteration limit, numerical breakdown)."""


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: np.ndarray,
                 allowed: np.ndarray, tol: float,
                 max_iter: int) -> int:
    """Pivot until the objective row has no improving column. Returns the
    pivot count. The objective row is the last row; rhs the last column."""
    m = tableau.shape[0] - 1
    iters = 0
    degenerate_run = 0
    while True:
        reduced = tableau[-1, :-1]
        candidates = np.where(allowed & (reduced < -tol))[0]
        if candidates.size == 0:
            return iters
        if degenerate_run >= _BLAND_AFTER:
            col = int(candidates[0])  # Bland: lowest eligible index
        else:
            col = int(candidates[np.argmin(reduced[candidates])])
        column = tableau[:m, col]
        rows = np.where(column > tol)[0]
        if rows.size == 0:
            raise SimplexError("unbounded direction encountered")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol * (1.0 + abs(best))]
        # leaving rule: among tied rows prefer the smallest basis index,
        # which combined with Bland's entering rule prevents cycling
        row = int(tied[np.argmin(basis[tied])])
        degenerate_run = degenerate_run + 1 if best <= tol else 0
        _pivot(tableau, basis, row, col)
        iters += 1
        if iters > max_iter:
            raise SimplexError(f"iteration limit {max_iter} exceeded")


def solve_dense_lp(c: np.ndarray, a: np.ndarray, senses: list[str],
                   b: np.ndarray, *, tol: float = 1e-9,
                   max_iter: int = 50000) -> LpSolution:
    c = np.asarray(c, dtype=float).copy()
    a = np.atleast_2d(np.asarray(a, dtype=float)).copy()
    b = np.asarray(b, dtype=float).copy()
    m, n = a.shape
    if len(senses) != m or b.shape != (m,):
        raise ValueError("inconsistent constraint dimensions")
    senses = list(senses)

    # normalize: nonnegative rhs, rows scaled to unit max magnitude
    for i in range(m):
        if b[i] < 0:
            a[i] *= -1.0
            b[i] = -b[i]
            senses[i] = {"<": ">", ">": "<", "=": "="}[senses[i]]
        scale = max(np.abs(a[i]).max(), abs(b[i]), 1e-300)
        a[i] /= scale
        b[i] /= scale
    c_scale = max(np.abs(c).max(), 1e-300)

    n_slack = sum(1 for s in senses if s in "<>")
    n_art = sum(1 for s in senses if s in "=>")
    total = n + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :n] = a
    tableau[:m, -1] = b
    basis = np.full(m, -1, dtype=int)
    art_of_row: dict[int, int] = {}
    slack_i, art_i = n, n + n_slack
    for i, s in enumerate(senses):
        if s == "<":
            tableau[i, slack_i] = 1.0
            basis[i] = slack_i
            slack_i += 1
        elif s == ">":
            tableau[i, slack_i] = -1.0
            slack_i += 1
            tableau[i, art_i] = 1.0
            basis[i] = art_i
            art_of_row[i] = art_i
            art_i += 1
        else:
            tableau[i, art_i] = 1.0
            basis[i] = art_i
            art_of_row[i] = art_i
            art_i += 1

    artificial = np.zeros(total, dtype=bool)
    artificial[n + n_slack:] = True
    allowed = ~artificial
    iterations = 0

    if n_art:
        # phase 1: minimize the artificial mass, priced out of the basis
        tableau[-1, :-1] = artificial.astype(float)
        for i in range(m):
            if artificial[basis[i]]:
                tableau[-1] -= tableau[i]
        iterations += _run_simplex(tableau, basis, allowed, tol, max_iter)
        if tableau[-1, -1] < -1e-7:
            bad = [i for i in range(m)
                   if artificial[basis[i]] and tableau[i, -1] > 1e-7]
            return LpSolution(status="infeasible", infeasible_rows=bad,
                              iterations=iterations)
        # drive leftover zero-level artificials out of the basis
        drop_rows = []
        for i in range(m):
            if not artificial[basis[i]]:
                continue
            pivots = np.where(allowed & (np.abs(tableau[i, :-1]) > 1e-7))[0]
            if pivots.size:
                _pivot(tableau, basis, i, int(pivots[0]))
            else:
                drop_rows.append(i)  # redundant constraint
        if drop_rows:
            keep = [i for i in range(m) if i not in drop_rows]
            tableau = np.vstack([tableau[keep], tableau[-1:]])
            basis = basis[keep]
            m = len(keep)

    # phase 2
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c / c_scale
    for i in range(m):
        if tableau[-1, basis[i]] != 0.0:
            tableau[-1] -= tableau[-1, basis[i]] * tableau[i]
    try:
        iterations += _run_simplex(tableau, basis, allowed, tol, max_iter)
    except SimplexError as exc:
        if "unbounded" in str(exc):
            return LpSolution(status="unbounded", iterations=iterations)
        raise

    x = np.zeros(total)
    x[basis] = np.maximum(tableau[:m, -1], 0.0)
    x = x[:n]
    return LpSolution(status="optimal", x=x, objective=float(c @ x),
                      iterations=iterations)
