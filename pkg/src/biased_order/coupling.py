"""Biased martingale couplings: LP construction, strong variant and gluing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .envelope import PiecewiseLinear, beta_envelope
from .errors import (
    MarginalMismatchError,
    NegativeMassError,
    NotInBiasedOrderError,
    NotInStrongOrderError,
)
from .lp import LinearProgram, solve
from .measure import BiasParams, DiscreteMeasure
from .order import OrderVerdict, is_beta_biased, is_strongly_beta_biased, reflect
from .tolerances import DEFAULT

ROW_THRESHOLD = 1e-14


@dataclass(frozen=True, eq=False)
class DiscreteCoupling:
    """Joint weights ``w[i, j]`` between atoms ``xs[i]`` and ``ys[j]``."""

    xs: np.ndarray
    ys: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        w = np.asarray(self.w, dtype=float).reshape(xs.size, ys.size)
        if not np.all(np.isfinite(w)):
            raise ValueError("coupling weights must be finite")
        if np.any(w < -DEFAULT.mass):
            raise NegativeMassError("coupling weights must be nonnegative")
        for name, val in (("xs", xs), ("ys", ys), ("w", np.maximum(w, 0.0))):
            object.__setattr__(self, name, val)

    @classmethod
    def identity(cls, mu: DiscreteMeasure) -> "DiscreteCoupling":
        return cls(mu.xs, mu.xs, np.diag(mu.ms))

    def row_masses(self) -> np.ndarray:
        return self.w.sum(axis=1)

    def col_masses(self) -> np.ndarray:
        return self.w.sum(axis=0)

    def row_marginal(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.xs, self.row_masses())

    def col_marginal(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.ys, self.col_masses())

    def row(self, i: int) -> DiscreteMeasure:
        """Conditional law of the second coordinate given ``xs[i]``."""
        wi = self.w[i]
        return DiscreteMeasure(self.ys, wi / wi.sum())

    def martingale_defect(self) -> float:
        return float(np.max(np.abs(self.w @ self.ys - self.row_masses() * self.xs)))


@dataclass(frozen=True, eq=False)
class CouplingProgram:
    """LP encoding of a biased coupling problem plus its row bookkeeping.

    Variables are ``w[i, j]`` flattened row-major. Equality rows are ordered
    as row sums, column sums, then per-row martingale conditions.
    """

    lp: LinearProgram
    xs: np.ndarray
    ys: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.xs.size, self.ys.size

    def coupling(self, point: np.ndarray) -> DiscreteCoupling:
        nx, ny = self.shape
        w = np.asarray(point[: nx * ny]).reshape(nx, ny).copy()
        w[w < 1e-13 * max(float(w.max()), 1.0)] = 0.0
        return DiscreteCoupling(self.xs, self.ys, w)

    def column_duals(self, certificate: np.ndarray) -> np.ndarray:
        nx, ny = self.shape
        return np.asarray(certificate[nx: nx + ny])


def _row_strikes(y: np.ndarray, x: float, bp: BiasParams):
    right = y >= x
    refl = np.where(right, y, reflect(y, x, bp))
    return right, refl


def _bias_rows(xi: float, ys: np.ndarray, bp: BiasParams):
    """Bias inequalities for a single row, as (coefficients over ys, strike, kind, j)."""
    a = bp.a
    right, pts = _row_strikes(ys, xi, bp)
    rows = []
    # alpha >= 0
    rows.append((np.where(right, -1.0, a), None, "alpha", -1))
    for j in range(ys.size):
        k = pts[j]
        hinge = np.maximum(k - pts, 0.0)
        base = max(k - xi, 0.0)
        coef = np.where(right, hinge - base, -a * hinge + a * base)
        rows.append((coef, k, "right" if right[j] else "left", j))
    return rows


def build_coupling_program(mu: DiscreteMeasure, nu: DiscreteMeasure, beta,
                           strong_margin: Optional[float] = None,
                           tol=DEFAULT) -> CouplingProgram:
    """LP whose feasible points are couplings with beta-biased rows.

    With ``strong_margin`` set, the strict-gap constraints of the strong
    order are added with slack proportional to the masses that make the gap
    required, see ``check_strong_biased_coupling``.
    """
    bp = BiasParams.coerce(beta)
    xs, ys = mu.xs, nu.xs
    nx, ny = xs.size, ys.size
    nv = nx * ny
    eq_A = np.zeros((2 * nx + ny, nv))
    eq_b = np.concatenate([mu.ms, nu.ms, np.zeros(nx)])
    for i in range(nx):
        sl = slice(i * ny, (i + 1) * ny)
        eq_A[i, sl] = 1.0
        eq_A[nx + ny + i, sl] = ys - xs[i]
    for j in range(ny):
        eq_A[nx + j, j::ny] = 1.0

    ub_A, ub_b = [], []
    eps = strong_margin
    for i in range(nx):
        xi = xs[i]
        right, pts = _row_strikes(ys, xi, bp)
        at_center = np.abs(ys - xi) <= tol.merge
        top = pts.max()
        seen = set()
        for coef, k, kind, j in _bias_rows(xi, ys, bp):
            row = np.zeros(nv)
            row[i * ny:(i + 1) * ny] = coef
            rhs = 0.0
            if kind == "alpha":
                if eps is not None:
                    # alpha minus the central atom must dominate eps times the off-centre mass
                    row[i * ny:(i + 1) * ny] += np.where(at_center, 1.0 - eps, 0.0)
                    rhs = -eps * mu.ms[i]
                ub_A.append(row)
                ub_b.append(rhs)
                continue
            if eps is None:
                if k >= top or k in seen or np.all(np.abs(coef) < 1e-15):
                    continue
                seen.add(k)
            else:
                if kind == "right":
                    if at_center[j]:
                        continue
                    row[i * ny + j] += eps
                else:
                    further = (~right) & (ys < ys[j])
                    row[i * ny:(i + 1) * ny] += eps * further
            ub_A.append(row)
            ub_b.append(rhs)
    A_ub = np.array(ub_A).reshape(-1, nv)
    lp = LinearProgram(nv, eq_A, eq_b, A_ub, np.array(ub_b))
    return CouplingProgram(lp, xs, ys)


def construct_biased_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure, beta,
                              tol=DEFAULT) -> DiscreteCoupling:
    """A coupling of ``mu`` and ``nu`` whose rows are beta-biased around their centres.

    Raises ``NotInBiasedOrderError`` carrying the Farkas certificate when no
    such coupling exists.
    """
    prog = build_coupling_program(mu, nu, beta, tol=tol)
    out = solve(prog.lp, tol)
    if not out.feasible:
        raise NotInBiasedOrderError("no beta-biased coupling exists",
                                    certificate=out.certificate, program=prog)
    return prog.coupling(out.point)


def check_strong_biased_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure, beta,
                                 margin: float = 1e-6, tol=DEFAULT) -> DiscreteCoupling:
    """A coupling with strongly beta-biased rows, found at a fixed margin.

    Each row must keep ``alpha`` (net of a central atom) at least ``margin``
    times the off-centre mass, and the potential gap at every active kink
    strictly inside the row's irreducibility interval at least ``margin``
    times the mass that makes that kink active. Success proves the strong
    order; failure only means no coupling at this margin.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    prog = build_coupling_program(mu, nu, beta, strong_margin=margin, tol=tol)
    out = solve(prog.lp, tol)
    if not out.feasible:
        raise NotInStrongOrderError(f"no coupling at margin {margin!r}",
                                    certificate=out.certificate, program=prog)
    return prog.coupling(out.point)


def glue(pi1: DiscreteCoupling, pi2: DiscreteCoupling, tol=DEFAULT) -> DiscreteCoupling:
    """Compose two couplings through their shared middle marginal."""
    col1 = pi1.col_masses()
    row2 = pi2.row_masses()
    idx = np.full(pi1.ys.size, -1)
    for j, y in enumerate(pi1.ys):
        hit = np.flatnonzero(np.abs(pi2.xs - y) <= tol.merge * max(1.0, abs(y)))
        if hit.size:
            idx[j] = hit[0]
        elif col1[j] > tol.mass:
            raise MarginalMismatchError(f"middle atom {y!r} missing from the second coupling")
    matched = np.zeros(pi2.xs.size)
    for j, k in enumerate(idx):
        if k >= 0:
            matched[k] += col1[j]
    if np.max(np.abs(matched - row2)) > tol.mass:
        raise MarginalMismatchError("middle marginals differ")
    kern = np.divide(pi2.w, row2[:, None], out=np.zeros_like(pi2.w), where=row2[:, None] > 0)
    lifted = np.zeros((pi1.ys.size, pi2.ys.size))
    ok = idx >= 0
    lifted[ok] = kern[idx[ok]]
    return DiscreteCoupling(pi1.xs, pi2.ys, pi1.w @ lifted)


def rows_biased(pi: DiscreteCoupling, beta, strong: bool = False, tol=DEFAULT) -> OrderVerdict:
    """Apply the (strong) bias test to every row with positive mass."""
    check = is_strongly_beta_biased if strong else is_beta_biased
    best: Optional[OrderVerdict] = None
    for i, m in enumerate(pi.row_masses()):
        if m < ROW_THRESHOLD:
            continue
        v = check(pi.row(i), float(pi.xs[i]), beta, tol)
        tagged = OrderVerdict(v.holds, v.margin, None if v.holds else float(pi.xs[i]),
                              f"row {i}: {v.reason}" if v.reason else "")
        if (best is None or (best.holds and not v.holds)
                or (best.holds == v.holds and v.margin < best.margin)):
            best = tagged
    return best if best is not None else OrderVerdict(True, math.inf, None, "no rows")


def farkas_payoff(prog: CouplingProgram, certificate: np.ndarray, steepness: float) -> PiecewiseLinear:
    """Payoff read off a Farkas vector of the coupling LP.

    The column duals fix ``g`` on the atoms of the target; between atoms and
    in the tails ``g`` rises with slope ``steepness`` so that test measures
    gain nothing by leaving the atom grid.
    """
    ys = prog.ys
    vals = prog.column_duals(certificate)
    if ys.size == 1:
        return PiecewiseLinear(ys, vals, -steepness, steepness)
    mids = 0.5 * (ys[:-1] + ys[1:])
    peaks = 0.5 * (vals[:-1] + vals[1:]) + steepness * 0.5 * np.diff(ys)
    kx = np.empty(2 * ys.size - 1)
    ky = np.empty_like(kx)
    kx[0::2], ky[0::2] = ys, vals
    kx[1::2], ky[1::2] = mids, peaks
    return PiecewiseLinear(kx, ky, -steepness, steepness)


def separating_payoff(mu: DiscreteMeasure, nu: DiscreteMeasure, beta, err: NotInBiasedOrderError,
                      gap: float = 1e-10, max_doublings: int = 60) -> tuple[PiecewiseLinear, float]:
    """Turn an infeasibility certificate into ``g`` with ``mu(g_beta) > nu(g) + gap``.

    Returns the payoff and the achieved separation ``mu(g_beta) - nu(g)``.
    """
    prog, y = err.program, err.certificate
    vals = prog.column_duals(y)
    spread = float(np.ptp(vals)) + float(np.max(np.abs(vals)))
    dy = float(np.min(np.diff(prog.ys))) if prog.ys.size > 1 else 1.0
    steep = 1.0 + spread / dy
    sep = -math.inf
    for _ in range(max_doublings):
        g = farkas_payoff(prog, y, steep)
        env = np.array([beta_envelope(g, beta, float(x)) for x in mu.xs])
        sep = float(env @ mu.ms) - nu.integrate(g)
        if sep > gap:
            return g, sep
        steep *= 2.0
    raise NotInBiasedOrderError(f"certificate did not separate (best {sep!r})",
                                certificate=y, program=prog)
