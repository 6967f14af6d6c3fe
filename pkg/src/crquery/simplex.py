"""Dense two-phase simplex for small equality-form programs.

    minimize c @ x  subject to  A @ x = b,  x >= 0

Bland's rule is used for both entering and leaving variables, so the method
terminates without cycling. With ``exact=True`` the tableau holds
``fractions.Fraction`` entries and all pivots are exact; float inputs are
converted with ``Fraction(float)`` so the exact optimum refers to the
float-rounded coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContractError, InfeasibleProgramError

FLOAT_TOL = 1e-11


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    basis: list[int]
    gap: float
    iterations: int
    exact_value: Fraction | None = None


def _to_array(a, exact):
    a = np.asarray(a)
    if exact:
        out = np.empty(a.shape, dtype=object)
        for idx, v in np.ndenumerate(a):
            if isinstance(v, Fraction):
                out[idx] = v
            elif isinstance(v, (int, np.integer)):
                out[idx] = Fraction(int(v))
            else:
                out[idx] = Fraction(float(v))
        return out
    return a.astype(float)


class _Tableau:
    def __init__(self, A, b, exact):
        self.exact = exact
        self.tol = 0 if exact else FLOAT_TOL
        self.zero = Fraction(0) if exact else 0.0
        nrow, ncol = A.shape
        # columns: structural | artificial | rhs
        T = np.empty((nrow, ncol + nrow + 1), dtype=object if exact else float)
        T[:, :ncol] = A
        T[:, ncol:ncol + nrow] = self.zero
        for r in range(nrow):
            T[r, ncol + r] = Fraction(1) if exact else 1.0
        T[:, -1] = b
        self.T = T
        self.n_struct = ncol
        self.basis = [ncol + r for r in range(nrow)]
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        T[r] = T[r] / T[r, j]
        for i in range(T.shape[0]):
            if i != r and T[i, j] != 0:
                T[i] = T[i] - T[i, j] * T[r]
        self.basis[r] = j
        self.iterations += 1

    def reduced_costs(self, cost):
        cb = np.array([cost[k] for k in self.basis], dtype=self.T.dtype)
        return cost - cb @ self.T[:, :-1] if len(cb) else cost.copy()

    def run(self, cost, allowed):
        """Minimize cost over the current feasible basis (Bland's rule)."""
        while True:
            rc = self.reduced_costs(cost)
            enter = next((j for j in range(len(rc)) if allowed[j] and rc[j] < -self.tol), None)
            if enter is None:
                return
            col = self.T[:, enter]
            best = None
            for r in range(self.T.shape[0]):
                if col[r] > self.tol:
                    ratio = self.T[r, -1] / col[r]
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                raise ContractError("linear program is unbounded")
            self.pivot(best[1], enter)


def solve(c, A_eq, b_eq, exact: bool = False) -> LPResult:
    """Solve the standard-form program; raises InfeasibleProgramError if empty."""
    A = _to_array(np.atleast_2d(A_eq), exact)
    b = _to_array(np.asarray(b_eq).reshape(-1), exact)
    c = _to_array(np.asarray(c).reshape(-1), exact)
    nrow, ncol = A.shape
    sign = np.ones(nrow, dtype=int)
    for r in range(nrow):
        if b[r] < 0:
            A[r], b[r], sign[r] = -A[r], -b[r], -1

    tab = _Tableau(A, b, exact)
    ntot = ncol + nrow
    one = Fraction(1) if exact else 1.0
    phase1 = np.array([tab.zero] * ncol + [one] * nrow, dtype=A.dtype)
    tab.run(phase1, [True] * ntot)
    infeas = sum((tab.T[r, -1] for r in range(nrow) if tab.basis[r] >= ncol), tab.zero)
    if infeas > (0 if exact else 1e-9):
        raise InfeasibleProgramError(f"no feasible point (phase-one residual {float(infeas):.3g})")

    # drive remaining artificials out; rows that cannot pivot are redundant
    keep = list(range(nrow))
    for r in range(nrow):
        if tab.basis[r] >= ncol:
            j = next((j for j in range(ncol) if abs(tab.T[r, j]) > tab.tol), None)
            if j is None:
                keep.remove(r)
            else:
                tab.pivot(r, j)
    if len(keep) < nrow:
        tab.T = tab.T[keep]
        tab.basis = [tab.basis[r] for r in keep]

    cost2 = np.concatenate([c, np.array([tab.zero] * nrow, dtype=A.dtype)])
    tab.run(cost2, [True] * ncol + [False] * nrow)

    x = np.array([tab.zero] * ncol, dtype=A.dtype)
    for r, k in enumerate(tab.basis):
        x[k] = tab.T[r, -1]
    value = sum((c[j] * x[j] for j in range(ncol)), tab.zero)

    # duals y = c_B B^{-1}; B^{-1} sits in the artificial columns of kept rows
    cb = np.array([cost2[k] for k in tab.basis], dtype=A.dtype)
    binv = tab.T[:, ncol:ncol + nrow]
    y = cb @ binv if len(cb) else np.array([tab.zero] * nrow, dtype=A.dtype)
    y = y * sign
    A_orig = A * sign[:, None]
    b_orig = b * sign
    dual_obj = sum((b_orig[r] * y[r] for r in range(nrow)), tab.zero)
    slack = c - y @ A_orig
    worst = min(slack) if len(slack) else tab.zero
    gap = abs(float(value) - float(dual_obj))
    if float(worst) < -1e-8 or gap > 1e-8:
        raise ContractError(f"duality certificate failed: gap {gap:.3g}, min reduced cost {float(worst):.3g}")

    return LPResult(
        x=np.array([float(v) for v in x]),
        value=float(value),
        duals=np.array([float(v) for v in y]),
        basis=list(tab.basis),
        gap=gap,
        iterations=tab.iterations,
        exact_value=value if exact else None,
    )
