"""Dense two-phase simplex for small feasibility problems.

Variables are implicitly nonnegative. Equalities ``A_eq w = b_eq`` and
inequalities ``A_ub w <= b_ub`` are converted to standard form with slacks,
every row is scaled by its max-norm, and phase 1 minimises the sum of
artificial variables. Infeasible problems come back with a Farkas vector
``y = (y_eq, y_ub)`` such that ``A_eq^T y_eq + A_ub^T y_ub >= 0``,
``y_ub >= 0`` and ``b^T y = -1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalBreakdownError, UnboundedError
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
HARRIS_SLACK = 1e-9
REINVERT_EVERY = 64
ZERO_ROW = 1e-13
INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    n_vars: int
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    objective: Optional[np.ndarray] = None

    def __post_init__(self):
        n = int(self.n_vars)
        if n < 1:
            raise ValueError("a linear program needs at least one variable")

        def mat(a):
            a = np.asarray(a, dtype=float)
            return a.reshape(-1, n) if a.size else np.zeros((0, n))

        A_eq, A_ub = mat(self.A_eq), mat(self.A_ub)
        b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        if A_eq.shape[0] != b_eq.size or A_ub.shape[0] != b_ub.size:
            raise ValueError("constraint rows and right-hand sides differ in count")
        c = None if self.objective is None else np.asarray(self.objective, dtype=float).reshape(-1)
        if c is not None and c.size != n:
            raise ValueError("objective length differs from n_vars")
        for arr in (A_eq, A_ub, b_eq, b_ub) + ((c,) if c is not None else ()):
            if not np.all(np.isfinite(arr)):
                raise ValueError("linear program has non-finite data")
        for name, val in (("n_vars", n), ("A_eq", A_eq), ("b_eq", b_eq),
                          ("A_ub", A_ub), ("b_ub", b_ub), ("objective", c)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_rows(cls, n_vars: int, eq: Sequence = (), ineq: Sequence = (), objective=None):
        """Build from lists of ``(coefficient_row, rhs)`` pairs."""
        A_eq = np.array([r for r, _ in eq], dtype=float).reshape(-1, n_vars)
        A_ub = np.array([r for r, _ in ineq], dtype=float).reshape(-1, n_vars)
        return cls(n_vars, A_eq, [b for _, b in eq], A_ub, [b for _, b in ineq], objective)

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def n_ub(self) -> int:
        return self.A_ub.shape[0]

    def residuals(self, w: np.ndarray) -> tuple[float, float, float]:
        """Max equality residual, max inequality excess and most negative entry."""
        eq = float(np.max(np.abs(self.A_eq @ w - self.b_eq))) if self.n_eq else 0.0
        ub = float(np.max(self.A_ub @ w - self.b_ub)) if self.n_ub else 0.0
        return eq, max(ub, 0.0), float(max(-np.min(w), 0.0))

    def accepts(self, w: np.ndarray, tol: float = DEFAULT.lp) -> bool:
        eq, ub, neg = self.residuals(w)
        scale = 1.0 + (float(np.max(np.abs(self.b_eq))) if self.n_eq else 0.0)
        return eq <= tol * scale and ub <= tol * scale and neg <= tol

    def certifies_infeasible(self, y: np.ndarray, tol: float = DEFAULT.lp) -> bool:
        """Check a Farkas vector ``y = (y_eq, y_ub)`` against the raw data."""
        y = np.asarray(y, dtype=float)
        y_eq, y_ub = y[: self.n_eq], y[self.n_eq:]
        lhs = self.A_eq.T @ y_eq + self.A_ub.T @ y_ub
        gap = float(self.b_eq @ y_eq + self.b_ub @ y_ub)
        if not gap < 0:
            return False
        # compare against the certified gap so the test is scale free
        y, lhs = y / -gap, lhs / -gap
        ynorm = float(np.max(np.abs(y)))
        amax = max(float(np.max(np.abs(self.A_eq))) if self.n_eq else 0.0,
                   float(np.max(np.abs(self.A_ub))) if self.n_ub else 0.0, 1.0)
        return bool(np.all(y[self.n_eq:] >= -tol * ynorm)
                    and np.all(lhs >= -tol * ynorm * amax))


@dataclass(eq=False)
class LpOutcome:
    status: str
    point: Optional[np.ndarray] = None
    certificate: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    pivots: int = 0
    notes: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


class _Tableau:
    """Row-scaled standard-form tableau with an attached cost row."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int], pivot_tol: float):
        m, N = A.shape
        self.A0 = np.column_stack([A, b])
        self.T = np.zeros((m + 1, N + 1))
        self.T[:m] = self.A0
        self.basis = list(basis)
        self.pivot_tol = pivot_tol
        self.pivots = 0
        self.costs = np.zeros(N)
        # make basic columns unit vectors
        for r, j in enumerate(self.basis):
            self.T[r] /= self.T[r, j]

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def set_costs(self, c: np.ndarray):
        self.costs = c
        self.T[-1, :-1] = c
        self.T[-1, -1] = 0.0
        cb = c[self.basis]
        self.T[-1] -= cb @ self.T[:-1]

    def drop_redundant(self, r: int) -> int:
        """Remove tableau row ``r`` (zero on every structural column) and one original row.

        The original row dropped is the one carrying the largest weight in
        row ``r`` of the basis inverse; the remaining basis stays regular.
        Returns the index of the dropped original row.
        """
        e = np.zeros(len(self.basis))
        e[r] = 1.0
        u = np.linalg.lstsq(self.A0[:, self.basis].T, e, rcond=None)[0]
        k = int(np.argmax(np.abs(u)))
        self.T = np.delete(self.T, r, axis=0)
        self.A0 = np.delete(self.A0, k, axis=0)
        del self.basis[r]
        return k

    def drop_columns(self, start: int, stop: int):
        self.T = np.delete(self.T, np.s_[start:stop], axis=1)
        self.A0 = np.delete(self.A0, np.s_[start:stop], axis=1)
        self.costs = np.delete(self.costs, np.s_[start:stop])

    def reinvert(self):
        """Rebuild the tableau from the original rows to shed accumulated round-off."""
        try:
            body = np.linalg.solve(self.A0[:, self.basis], self.A0)
        except np.linalg.LinAlgError:
            return
        if not np.all(np.isfinite(body)):
            return
        body[:, self.basis] = np.eye(len(self.basis))
        self.T[:-1] = body
        self.set_costs(self.costs)

    def pivot(self, r: int, j: int):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1

    def run(self, allowed: np.ndarray, rc_tol: float, max_pivots: int, phase: int) -> str:
        """Minimise the cost row. Returns 'optimal' or 'unbounded'."""
        T = self.T
        blocked = np.zeros(T.shape[1] - 1, dtype=bool)
        degenerate = 0
        while True:
            if self.pivots > max_pivots:
                raise NumericalBreakdownError("pivot limit reached")
            d = T[-1, :-1]
            cand = np.flatnonzero((d < -rc_tol) & allowed & ~blocked)
            if cand.size == 0:
                return "optimal"
            # steepest reduced cost, falling back to Bland's rule on degenerate stalls
            if degenerate < 50:
                j = int(cand[np.argmin(d[cand])])
            else:
                j = int(cand[0])
            col = T[:-1, j]
            rows = np.flatnonzero(col > self.pivot_tol)
            if rows.size == 0:
                if np.any(col > 0) or phase == 1:
                    blocked[j] = True
                    continue
                return "unbounded"
            rhs = np.maximum(T[rows, -1], 0.0)
            ratios = rhs / col[rows]
            if degenerate < 50:
                # Harris pass: among rows within the relaxed step take the largest pivot
                relaxed = np.min((rhs + HARRIS_SLACK) / col[rows])
                near = np.flatnonzero(ratios <= relaxed)
                r = int(rows[near[np.argmax(col[rows][near])]])
            else:
                best = ratios.min()
                ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
                r = int(min(ties, key=lambda i: self.basis[i]))
            degenerate = degenerate + 1 if T[r, -1] <= 1e-13 else 0
            self.pivot(r, j)
            np.maximum(T[:-1, -1], 0.0, out=T[:-1, -1])
            if self.pivots % REINVERT_EVERY == 0:
                self.reinvert()
            blocked[:] = False


def solve(lp: LinearProgram, tol=DEFAULT, max_pivots: int = 50_000, verbose: bool = False) -> LpOutcome:
    n, m1, m2 = lp.n_vars, lp.n_eq, lp.n_ub
    m = m1 + m2
    N = n + m2
    A = np.zeros((m, N))
    A[:m1, :n] = lp.A_eq
    A[m1:, :n] = lp.A_ub
    A[m1:, n:] = np.eye(m2)
    b = np.concatenate([lp.b_eq, lp.b_ub])

    rowmax = np.max(np.abs(A[:, :n]), axis=1) if m else np.zeros(0)
    amax = float(rowmax.max()) if m else 0.0
    bscale = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)
    # rows that are round-off next to the rest of the matrix count as zero rows,
    # since row scaling would otherwise blow them up into hard constraints
    zero = rowmax <= ZERO_ROW * amax
    for r in np.flatnonzero(zero):
        if (r < m1 and abs(b[r]) > tol.lp * bscale) or (r >= m1 and b[r] < -tol.lp * bscale):
            y = np.zeros(m)
            y[r] = -np.sign(b[r]) if r < m1 else 1.0
            y /= -(b @ y)
            return LpOutcome(INFEASIBLE, certificate=y, notes=["zero row"])
    keep = np.flatnonzero(~zero)
    scale = np.ones(m)
    scale[keep] = 1.0 / rowmax[keep]
    sign = np.where(b < 0, -1.0, 1.0)
    D = scale * sign
    As = A[keep] * D[keep, None]
    bs = b[keep] * D[keep]
    mk = keep.size

    # initial basis: unflipped slack rows use their slack, others get artificials
    basis, art_rows = [], []
    for i, r in enumerate(keep):
        if r >= m1 and sign[r] > 0:
            basis.append(n + (r - m1))
        else:
            basis.append(-1)
            art_rows.append(i)
    n_art = len(art_rows)
    Afull = np.zeros((mk, N + n_art))
    Afull[:, :N] = As
    for k, i in enumerate(art_rows):
        Afull[i, N + k] = 1.0
        basis[i] = N + k
    tab = _Tableau(Afull, bs, basis, tol.pivot)
    bnorm = 1.0 + (float(np.max(np.abs(bs))) if mk else 0.0)
    rc_tol = 1e-11

    c1 = np.zeros(N + n_art)
    c1[N:] = 1.0
    tab.set_costs(c1)
    allowed = np.ones(N + n_art, dtype=bool)
    tab.run(allowed, rc_tol, max_pivots, phase=1)
    tab.reinvert()
    infeas = -tab.T[-1, -1]
    if verbose:
        log.debug("phase 1 value %.3e after %d pivots", infeas, tab.pivots)

    if infeas > tol.lp * bnorm:
        Bmat = Afull[:, tab.basis]
        try:
            ys = np.linalg.solve(Bmat.T, c1[tab.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdownError("singular basis while extracting certificate") from exc
        y = np.zeros(m)
        y[keep] = -D[keep] * ys
        y /= -(b @ y)
        if not lp.certifies_infeasible(y, tol.lp):
            raise NumericalBreakdownError("phase 1 ended infeasible but the Farkas vector does not verify")
        return LpOutcome(INFEASIBLE, certificate=y, objective_value=None, pivots=tab.pivots)

    # drive artificials out of the basis, dropping redundant rows
    r = 0
    while r < tab.m:
        if tab.basis[r] >= N:
            row = tab.T[r, :N]
            j = int(np.argmax(np.abs(row))) if N else -1
            if N and abs(row[j]) > tol.pivot:
                tab.pivot(r, j)
                r += 1
            else:
                k = tab.drop_redundant(r)
                Afull = np.delete(Afull, k, axis=0)
                bs = np.delete(bs, k)
            continue
        r += 1
    tab.drop_columns(N, N + n_art)
    Afull = Afull[:, :N]
    tab.reinvert()

    obj = None
    if lp.objective is not None:
        c2 = np.concatenate([lp.objective, np.zeros(m2)])
        tab.set_costs(c2)
        status = tab.run(np.ones(N, dtype=bool), rc_tol * max(1.0, float(np.max(np.abs(c2)))), max_pivots, phase=2)
        tab.reinvert()
        if status == "unbounded":
            raise UnboundedError("objective is unbounded below")

    z = np.zeros(N)
    z[tab.basis] = tab.T[:-1, -1]
    z = _refine(Afull, bs, tab.basis, z)
    w = np.maximum(z[:n], 0.0)
    if lp.objective is not None:
        obj = float(lp.objective @ w)
    if not lp.accepts(w, tol.lp):
        raise NumericalBreakdownError("simplex point fails the raw constraint check")
    return LpOutcome(FEASIBLE, point=w, objective_value=obj, pivots=tab.pivots)


def _refine(A: np.ndarray, b: np.ndarray, basis: list[int], z: np.ndarray) -> np.ndarray:
    """Recompute the basic solution from the original scaled columns."""
    if not basis:
        return z
    try:
        zb = np.linalg.solve(A[:, basis], b)
    except np.linalg.LinAlgError:
        return z
    if not np.all(np.isfinite(zb)) or np.min(zb) < -1e-9:
        return z
    out = np.zeros_like(z)
    out[basis] = np.maximum(zb, 0.0)
    res_new = np.max(np.abs(A @ out - b))
    res_old = np.max(np.abs(A @ np.maximum(z, 0.0) - b))
    return out if res_new <= res_old else np.maximum(z, 0.0)
