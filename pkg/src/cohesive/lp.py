"""Small dense linear programs, solved exactly over the rationals.

A two-phase tableau simplex with Bland's rule. The same code runs on
``Fraction`` entries (exact) or floats (with a tolerance); instances are
tiny, so clarity wins over speed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .measure import to_fraction, to_float

LE, EQ, GE = "<=", "==", ">="


@dataclass
class LinearProgram:
    """``min c.x`` subject to rows ``a.x (<=|==|>=) b`` and ``x_j >= lower_j``.

    A lower bound of ``None`` makes the variable free.
    """

    objective: Sequence
    constraints: list = field(default_factory=list)
    lower: list | None = None

    def __post_init__(self):
        n = len(self.objective)
        if self.lower is None:
            self.lower = [0] * n
        if len(self.lower) != n:
            raise DimensionError(f"{len(self.lower)} lower bounds for {n} variables")
        for a, rel, _ in self.constraints:
            if len(a) != n:
                raise DimensionError(f"constraint has {len(a)} coefficients, expected {n}")
            if rel not in (LE, EQ, GE):
                raise ValidationError(f"unknown relation {rel!r}")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def add(self, coeffs, rel, bound) -> None:
        if len(coeffs) != self.n_vars:
            raise DimensionError(f"constraint has {len(coeffs)} coefficients, expected {self.n_vars}")
        if rel not in (LE, EQ, GE):
            raise ValidationError(f"unknown relation {rel!r}")
        self.constraints.append((coeffs, rel, bound))


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: object
    max_violation: object = 0
    pivots: int = 0


def max_violation(lp: LinearProgram, x) -> object:
    """Largest amount by which ``x`` breaks a constraint or bound (0 if feasible)."""
    worst = 0
    for a, rel, b in lp.constraints:
        lhs = sum(ai * xi for ai, xi in zip(a, x))
        if rel == LE:
            gap = lhs - b
        elif rel == GE:
            gap = b - lhs
        else:
            gap = abs(lhs - b)
        worst = max(worst, gap)
    for lb, xi in zip(lp.lower, x):
        if lb is not None:
            worst = max(worst, lb - xi)
    return worst


def solve(lp: LinearProgram, exact: bool = True, tol: float = 1e-9) -> LPResult:
    """Solve ``lp``. Exact mode returns a rational optimum; float mode works within ``tol``."""
    conv = to_fraction if exact else to_float
    zero = Fraction(0) if exact else 0.0
    eps = 0 if exact else tol
    n = lp.n_vars
    c = [conv(v) for v in lp.objective]
    lower = [None if lb is None else conv(lb) for lb in lp.lower]

    # column map: original variable j -> list of (tableau column, sign)
    cols: list[list[tuple[int, int]]] = []
    ncol = 0
    for lb in lower:
        if lb is None:
            cols.append([(ncol, 1), (ncol + 1, -1)])
            ncol += 2
        else:
            cols.append([(ncol, 1)])
            ncol += 1
    n_struct = ncol

    rows, rels, rhs = [], [], []
    for a, rel, b in lp.constraints:
        a = [conv(v) for v in a]
        b = conv(b) - sum(ai * lb for ai, lb in zip(a, lower) if lb is not None)
        row = [zero] * n_struct
        for j, aj in enumerate(a):
            for col, sgn in cols[j]:
                row[col] = sgn * aj
        if b < 0:
            row = [-v for v in row]
            b = -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        rows.append(row)
        rels.append(rel)
        rhs.append(b)

    m = len(rows)
    n_slack = sum(1 for r in rels if r != EQ)
    n_art = sum(1 for r in rels if r != LE)
    total = n_struct + n_slack + n_art
    T = np.empty((m + 1, total + 1), dtype=object if exact else float)
    T[:] = zero
    basis = [0] * m
    artificial = set()
    s_col = n_struct
    a_col = n_struct + n_slack
    for i, (row, rel, b) in enumerate(zip(rows, rels, rhs)):
        T[i, :n_struct] = row
        T[i, -1] = b
        if rel == LE:
            T[i, s_col] = 1
            basis[i] = s_col
            s_col += 1
        else:
            if rel == GE:
                T[i, s_col] = -1
                s_col += 1
            T[i, a_col] = 1
            basis[i] = a_col
            artificial.add(a_col)
            a_col += 1

    pivots = 0

    def pivot(r: int, col: int) -> None:
        nonlocal pivots
        T[r] = T[r] / T[r, col]
        for i in range(m + 1):
            if i != r and T[i, col] != 0:
                T[i] = T[i] - T[i, col] * T[r]
        basis[r] = col
        pivots += 1

    def run(allowed: int) -> str:
        # objective row holds reduced costs; minimisation
        while True:
            enter = next((j for j in range(allowed) if T[m, j] < -eps), None)
            if enter is None:
                return "optimal"
            best, leave = None, None
            for i in range(m):
                if T[i, enter] > eps:
                    ratio = T[i, -1] / T[i, enter]
                    if (best is None or ratio < best - eps
                            or (abs(ratio - best) <= eps and basis[i] < basis[leave])):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded"
            pivot(leave, enter)

    # phase one: minimise the sum of artificial variables
    if artificial:
        T[m] = zero
        for j in artificial:
            T[m, j] = 1
        for i in range(m):
            if basis[i] in artificial:
                T[m] = T[m] - T[i]
        run(total)
        if -T[m, -1] > eps:
            return LPResult("infeasible", None, None, pivots=pivots)
        # drive zero-level artificials out of the basis
        for i in range(m):
            if basis[i] in artificial:
                col = next((j for j in range(n_struct + n_slack) if abs(T[i, j]) > eps), None)
                if col is not None:
                    pivot(i, col)
        keep = [i for i in range(m) if basis[i] not in artificial]
        T = np.vstack([T[keep], T[m:m + 1]])
        basis = [basis[i] for i in keep]
        m = len(keep)
        T = np.hstack([T[:, :n_struct + n_slack], T[:, -1:]])
        total = n_struct + n_slack

    # phase two
    T[m] = zero
    for j in range(n):
        for col, sgn in cols[j]:
            T[m, col] = sgn * c[j]
    for i in range(m):
        if T[m, basis[i]] != 0:
            T[m] = T[m] - T[m, basis[i]] * T[i]
    status = run(total)
    if status == "unbounded":
        return LPResult("unbounded", None, None, pivots=pivots)

    y = [zero] * total
    for i in range(m):
        y[basis[i]] = T[i, -1]
    x = []
    for j in range(n):
        v = sum((sgn * y[col] for col, sgn in cols[j]), zero)
        x.append(v + lower[j] if lower[j] is not None else v)
    x = np.array(x, dtype=object if exact else float)
    value = sum((cj * xj for cj, xj in zip(c, x)), zero)
    return LPResult("optimal", x, value, max_violation(
        LinearProgram(c, [(
            [conv(v) for v in a], rel, conv(b)) for a, rel, b in lp.constraints], lower), x),
        pivots=pivots)
