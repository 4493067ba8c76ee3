"""Feasibility for small dense linear systems.

``lp_feasible`` answers whether ``A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi`` has a
solution.  The default backend is an embedded phase-one simplex with Bland's rule;
``backend="highs"`` delegates to scipy for speed on the hot path.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-11


class LPDimensionError(ValueError):
    pass


def _as_2d(A, n: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, n))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, n))
    if A.shape[1] != n:
        raise LPDimensionError(f"constraint matrix has {A.shape[1]} columns, expected {n}")
    return A


def _normalize(A_ub, b_ub, A_eq, b_eq, bounds, n):
    A_ub = _as_2d(A_ub, n)
    A_eq = _as_2d(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if len(b_ub) != A_ub.shape[0] or len(b_eq) != A_eq.shape[0]:
        raise LPDimensionError("right-hand side length does not match constraint rows")
    if bounds is None:
        bounds = [(0.0, math.inf)] * n
    elif len(bounds) != n:
        raise LPDimensionError("bounds length does not match variable count")
    return A_ub, b_ub, A_eq, b_eq, list(bounds)


def simplex_feasible(A_ub, b_ub, A_eq, b_eq, bounds) -> Optional[np.ndarray]:
    n = len(bounds)
    A_ub, b_ub, A_eq, b_eq, bounds = _normalize(A_ub, b_ub, A_eq, b_eq, bounds, n)
    lo = np.array([b[0] if b[0] is not None else -math.inf for b in bounds], dtype=float)
    hi = np.array([b[1] if b[1] is not None else math.inf for b in bounds], dtype=float)
    if np.any(lo > hi + FEAS_TOL):
        return None
    # free lower bounds: split x = x+ - x-
    free = ~np.isfinite(lo)
    shift = np.where(free, 0.0, lo)
    T_ub = np.hstack([A_ub, -A_ub[:, free]])
    T_eq = np.hstack([A_eq, -A_eq[:, free]])
    nv = n + int(free.sum())
    b1 = b_ub - A_ub @ shift
    b2 = b_eq - A_eq @ shift
    # finite upper bounds become rows y_i <= hi_i - lo_i
    up = np.isfinite(hi)
    if up.any():
        eye = np.eye(n)[up]
        rows = np.hstack([eye, -eye[:, free]])
        T_ub = np.vstack([T_ub, rows])
        b1 = np.concatenate([b1, (hi - shift)[up]])
    m1, m2 = T_ub.shape[0], T_eq.shape[0]
    m = m1 + m2
    neg1 = b1 < 0
    neg2 = b2 < 0
    n_art = int(neg1.sum()) + m2
    width = nv + m1 + n_art
    tab = np.zeros((m + 1, width + 1))
    basis = np.empty(m, dtype=int)
    art = 0
    for i in range(m1):
        sgn = -1.0 if neg1[i] else 1.0
        tab[i, :nv] = sgn * T_ub[i]
        tab[i, nv + i] = sgn
        tab[i, -1] = sgn * b1[i]
        if neg1[i]:
            tab[i, nv + m1 + art] = 1.0
            basis[i] = nv + m1 + art
            art += 1
        else:
            basis[i] = nv + i
    for j in range(m2):
        i = m1 + j
        sgn = -1.0 if neg2[j] else 1.0
        tab[i, :nv] = sgn * T_eq[j]
        tab[i, -1] = sgn * b2[j]
        tab[i, nv + m1 + art] = 1.0
        basis[i] = nv + m1 + art
        art += 1
    # phase-one objective row: minimise sum of artificials (as reduced costs)
    art_rows = basis >= nv + m1
    tab[-1, :] = -tab[:m][art_rows].sum(axis=0)
    tab[-1, nv + m1:width] = 0.0
    max_iter = 50 * (m + width) + 100
    for _ in range(max_iter):
        red = tab[-1, :width]
        cand = np.flatnonzero(red < -1e-10)
        if cand.size == 0:
            break
        e = int(cand[0])  # Bland: lowest index
        col = tab[:m, e]
        pos = col > _PIVOT_TOL
        if not pos.any():
            break  # unbounded direction cannot happen in phase one; stop defensively
        ratios = np.full(m, math.inf)
        ratios[pos] = tab[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12)
        r = int(ties[np.argmin(basis[ties])])
        tab[r] /= tab[r, e]
        others = np.flatnonzero(tab[:, e] != 0)
        others = others[others != r]
        tab[others] -= np.outer(tab[others, e], tab[r])
        basis[r] = e
    if -tab[-1, -1] > FEAS_TOL * max(1.0, np.abs(tab[:m, -1]).max(initial=0.0)):
        return None
    y = np.zeros(width)
    y[basis] = tab[:m, -1]
    x = y[:n].copy()
    if free.any():
        x[free] -= y[n:nv]
    x += shift
    return x


def highs_feasible(A_ub, b_ub, A_eq, b_eq, bounds) -> Optional[np.ndarray]:
    from scipy.optimize import linprog

    n = len(bounds)
    A_ub, b_ub, A_eq, b_eq, bounds = _normalize(A_ub, b_ub, A_eq, b_eq, bounds, n)
    res = linprog(np.zeros(n), A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A_eq if len(b_eq) else None, b_eq=b_eq if len(b_eq) else None,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9})
    if res.status != 0:
        return None
    return res.x


def lp_feasible(A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                bounds: Optional[Sequence[tuple]] = None, n: Optional[int] = None,
                backend: str = "simplex") -> Optional[np.ndarray]:
    """A feasible point of the system, or None when infeasible (tolerance 1e-7)."""
    if n is None:
        if bounds is not None:
            n = len(bounds)
        elif A_ub is not None:
            n = np.atleast_2d(A_ub).shape[1]
        elif A_eq is not None:
            n = np.atleast_2d(A_eq).shape[1]
        else:
            raise LPDimensionError("cannot infer variable count")
    if bounds is None:
        bounds = [(0.0, math.inf)] * n
    if len(bounds) != n:
        raise LPDimensionError("bounds length does not match variable count")
    if backend == "simplex":
        return simplex_feasible(A_ub, b_ub, A_eq, b_eq, bounds)
    if backend == "highs":
        return highs_feasible(A_ub, b_ub, A_eq, b_eq, bounds)
    raise ValueError(f"unknown LP backend {backend!r}")
