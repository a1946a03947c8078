"""Decomposition of biased measures into simple biased components."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coupling import DiscreteCoupling
from .errors import (
    BarycenterMismatchError,
    InfeasibleError,
    InvalidComponentError,
    NotAtomicBiasedError,
    NotBiasedError,
)
from .lp import LinearProgram, solve
from .measure import BiasParams, DiscreteMeasure, barycenter, mixture, split_lr
from .order import is_beta_biased, is_strongly_beta_biased, reflect
from .tolerances import DEFAULT


@dataclass(frozen=True, eq=False)
class SimpleComponent:
    """Weighted simple measure: ``left`` plus one atom of mass ``gamma`` at ``M``."""

    weight: float
    left: DiscreteMeasure
    M: float
    gamma: float

    def measure(self) -> DiscreteMeasure:
        return self.left + DiscreteMeasure.dirac(self.M, self.gamma)

    def validate(self, x: float, beta: BiasParams, tol=DEFAULT):
        if not self.weight > 0:
            raise InvalidComponentError("component weight must be positive")
        if self.gamma < beta.beta - tol.order or self.gamma > 1.0 + tol.mass:
            raise InvalidComponentError(f"atom mass {self.gamma!r} outside [beta, 1]")
        if self.M < x - tol.mean:
            raise InvalidComponentError("top atom lies left of the centre")
        if not self.left.is_empty() and self.left.smax >= x:
            raise InvalidComponentError("left part must lie strictly left of the centre")
        if abs(self.left.mass + self.gamma - 1.0) > tol.mass:
            raise InvalidComponentError("component is not a probability measure")
        if abs(self.measure().first_moment() - x) > tol.mean:
            raise InvalidComponentError("component barycenter differs from the centre")


@dataclass(frozen=True, eq=False)
class Decomposition:
    x: float
    beta: BiasParams
    components: tuple[SimpleComponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "beta", BiasParams.coerce(self.beta))

    def validate(self, tol=DEFAULT) -> "Decomposition":
        for c in self.components:
            c.validate(self.x, self.beta, tol)
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > tol.mass:
            raise InvalidComponentError(f"component weights sum to {total!r}")
        return self

    def reassemble(self) -> DiscreteMeasure:
        return mixture((c.weight, c.measure()) for c in self.components)


def _trivial(x: float, bp: BiasParams) -> Decomposition:
    return Decomposition(x, bp, (SimpleComponent(1.0, DiscreteMeasure.empty(), x, 1.0),))


def _check_centered(nu: DiscreteMeasure, x: float, tol):
    if nu.is_empty() or abs(nu.mass - 1.0) > tol.mass:
        raise BarycenterMismatchError("input must be a probability measure")
    if abs(barycenter(nu) - x) > tol.mean:
        raise BarycenterMismatchError(f"barycenter {barycenter(nu)!r} differs from {x!r}")


def decompose_atomic(nu: DiscreteMeasure, x: float, beta, tol=DEFAULT) -> Decomposition:
    """Closed-form split of an atomic biased measure (top atom of mass >= beta)."""
    bp = BiasParams.coerce(beta)
    _check_centered(nu, x, tol)
    if nu.is_dirac():
        return _trivial(x, bp)
    if nu.ms[-1] < bp.beta - tol.order:
        raise NotAtomicBiasedError(f"top atom has mass {nu.ms[-1]!r} < beta")
    left, right = split_lr(nu, x)
    mL = barycenter(left)
    comps = []
    for y, m in right.atoms:
        B = (x - mL) / (y - mL)
        comps.append(SimpleComponent(m / B, left.scaled((1.0 - B) / left.mass), y, B))
    return Decomposition(x, bp, tuple(comps))


def construct_martingale_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure,
                                  tol=DEFAULT) -> DiscreteCoupling:
    """Martingale coupling of two measures in convex order (equal masses allowed < 1).

    Among all such couplings the LP picks one minimising ``sum w |y - x|``.
    """
    return _martingale_lp(mu.xs, mu.ms, nu.xs, nu.ms, tol)


def _martingale_lp(xs, px, ys, py, tol, strong_col: Optional[int] = None) -> DiscreteCoupling:
    nx, ny = xs.size, ys.size
    nv = nx * ny + (1 if strong_col is not None else 0)
    A = np.zeros((2 * nx + ny, nv))
    for i in range(nx):
        A[i, i * ny:(i + 1) * ny] = 1.0
        A[nx + ny + i, i * ny:(i + 1) * ny] = ys - xs[i]
    for j in range(ny):
        A[nx + j, j:nx * ny:ny] = 1.0
    b = np.concatenate([px, py, np.zeros(nx)])
    if strong_col is None:
        c = np.abs(ys[None, :] - xs[:, None]).ravel()
        A_ub, b_ub = np.zeros((0, nv)), np.zeros(0)
    else:
        # maximise t subject to w[i, strong_col] >= t * px[i]
        c = np.zeros(nv)
        c[-1] = -1.0
        A_ub = np.zeros((nx + 1, nv))
        for i in range(nx):
            A_ub[i, i * ny + strong_col] = -1.0
            A_ub[i, -1] = px[i]
        A_ub[nx, -1] = 1.0
        b_ub = np.concatenate([np.zeros(nx), [1.0]])
    out = solve(LinearProgram(nv, A, b, A_ub, b_ub, c), tol)
    if not out.feasible:
        raise InfeasibleError("no martingale coupling between the given measures",
                              certificate=out.certificate)
    w = out.point[: nx * ny].reshape(nx, ny).copy()
    w[w < 1e-14 * max(float(w.max()), 1.0)] = 0.0
    return DiscreteCoupling(xs, ys, w)


def decompose_biased(nu: DiscreteMeasure, x: float, beta, strong: bool = False,
                     tol=DEFAULT) -> Decomposition:
    """Split a beta-biased measure into simple components via a martingale coupling.

    The right part is coupled to ``a R_# left + alpha delta_x``; every right
    atom ``z`` then yields one component whose atom mass is ``1/beta_z`` with
    ``beta_z = 1/a + 1 - pi_z({x})/a``. With ``strong=True`` the coupling
    maximises the smallest share sent to ``x`` so that every component has
    atom mass strictly above ``beta``.
    """
    bp = BiasParams.coerce(beta)
    _check_centered(nu, x, tol)
    if nu.is_dirac():
        return _trivial(x, bp)
    check = is_strongly_beta_biased if strong else is_beta_biased
    verdict = check(nu, x, bp, tol)
    if not verdict.holds:
        raise NotBiasedError(f"measure is not {'strongly ' if strong else ''}"
                             f"{bp.beta!r}-biased around {x!r}: {verdict.reason}")
    a = bp.a
    left, right = split_lr(nu, x)
    alpha = max(right.mass - a * left.mass, 0.0)
    gx = np.concatenate([reflect(left.xs, x, bp).reshape(-1), [x]])
    gm = np.concatenate([a * left.ms, [alpha]])
    if alpha <= 0:
        gx, gm = gx[:-1], gm[:-1]
    center_col = left.size if alpha > 0 else None
    if strong and center_col is None:
        raise NotBiasedError("no mass left at the centre for a strong split")
    pi = _martingale_lp(right.xs, right.ms, gx, gm, tol,
                        strong_col=center_col if strong else None)
    comps = []
    for i, (z, rz) in enumerate(right.atoms):
        row = pi.w[i] / rz
        px = row[center_col] if center_col is not None else 0.0
        beta_z = 1.0 / a + 1.0 - px / a
        lm = row[: left.size] / (a * beta_z)
        comps.append(SimpleComponent(beta_z * rz, DiscreteMeasure(left.xs, lm), z, 1.0 / beta_z))
    return Decomposition(x, bp, tuple(comps))
