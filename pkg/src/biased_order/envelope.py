"""Beta-envelopes of piecewise-linear payoffs and the dual order test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .measure import BiasParams, DiscreteMeasure
from .order import OrderVerdict, TestFunction
from .tolerances import DEFAULT

MINUS_INFINITY = float("-inf")


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function with linear tails."""

    xs: np.ndarray
    ys: np.ndarray
    left_slope: float
    right_slope: float

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.size == 0 or xs.shape != ys.shape:
            raise ValueError("need at least one kink with matching values")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("kinks must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))
                and math.isfinite(self.left_slope) and math.isfinite(self.right_slope)):
            raise ValueError("piecewise-linear data must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))

    @classmethod
    def from_kinks(cls, kinks: Sequence[Sequence[float]], ls: float, rs: float) -> "PiecewiseLinear":
        arr = np.asarray(kinks, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], ls, rs)

    @classmethod
    def constant(cls, c: float) -> "PiecewiseLinear":
        return cls(np.array([0.0]), np.array([c]), 0.0, 0.0)

    @property
    def kinks(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def slopes(self) -> np.ndarray:
        inner = np.diff(self.ys) / np.diff(self.xs)
        return np.concatenate(([self.left_slope], inner, [self.right_slope]))

    def is_convex(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.slopes()) >= -tol))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        xs, ys = self.xs, self.ys
        out = np.interp(t, xs, ys)
        out = np.where(t < xs[0], ys[0] + self.left_slope * (t - xs[0]), out)
        out = np.where(t > xs[-1], ys[-1] + self.right_slope * (t - xs[-1]), out)
        return float(out) if out.ndim == 0 else out


def _lower_hull(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by x."""
    keep: list[int] = []
    for i in range(xs.size):
        while len(keep) >= 2:
            o, p = keep[-2], keep[-1]
            cross = (xs[p] - xs[o]) * (ys[i] - ys[o]) - (ys[p] - ys[o]) * (xs[i] - xs[o])
            if cross <= 0:
                keep.pop()
            else:
                break
        keep.append(i)
    return np.array(keep, dtype=int)


def _argmin_tilted(xs, ys, slope, prefer_right: bool) -> int:
    vals = ys - slope * xs
    lo = vals.min()
    hits = np.flatnonzero(vals <= lo + 1e-14 * max(1.0, abs(lo)))
    return int(hits[-1] if prefer_right else hits[0])


def convex_hull(g: PiecewiseLinear):
    """Greatest convex minorant, or ``MINUS_INFINITY`` if no affine minorant exists."""
    ls, rs = g.left_slope, g.right_slope
    if rs < ls:
        return MINUS_INFINITY
    i0 = _argmin_tilted(g.xs, g.ys, ls, prefer_right=True)
    i1 = _argmin_tilted(g.xs, g.ys, rs, prefer_right=False)
    if i0 > i1:
        i0 = i1
    idx = i0 + _lower_hull(g.xs[i0:i1 + 1], g.ys[i0:i1 + 1])
    return PiecewiseLinear(g.xs[idx], g.ys[idx], ls, rs)


def left_hull(g: PiecewiseLinear, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the convex minorant of ``g`` restricted to ``(-inf, x]``.

    The minorant continues to the left with ``g.left_slope``; its last vertex
    is always ``(x, g(x))``.
    """
    mask = g.xs < x
    px = np.concatenate((g.xs[mask], [x]))
    py = np.concatenate((g.ys[mask], [g(x)]))
    i0 = _argmin_tilted(px, py, g.left_slope, prefer_right=True)
    idx = i0 + _lower_hull(px[i0:], py[i0:])
    return px[idx], py[idx]


def _eval_hull(hx, hy, ls, m):
    m = np.asarray(m, dtype=float)
    out = np.interp(m, hx, hy)
    return np.where(m < hx[0], hy[0] + ls * (m - hx[0]), out)


def beta_envelope(g: PiecewiseLinear, beta, x: float) -> float:
    """Infimum of ``rho(g)`` over simple beta-biased ``rho`` centred at ``x``.

    A simple measure is described by its top atom ``(M, gamma)`` and the
    barycenter ``m_L`` of its left part, whose best cost is the left convex
    hull. In the coordinates ``(gamma, gamma*M)`` the objective is linear on
    every cell cut out by the kinks of ``g`` (in ``M``) and of the hull (in
    ``m_L``), so the infimum sits on a cell vertex, on the Dirac limit
    ``gamma -> 1`` or escapes to ``-inf`` along ``M -> inf``.
    """
    bp = BiasParams.coerce(beta)
    b = bp.beta
    gx = g(x)
    if g.is_convex():
        return gx
    ls = g.left_slope
    if g.right_slope < ls:
        return MINUS_INFINITY
    hx, hy = left_hull(g, x)
    Ms = np.concatenate(([x], g.xs[g.xs > x]))
    gM = g(Ms)
    cands = [np.array([gx])]
    # gamma -> 1 with the left part escaping to -inf
    cands.append(gM + ls * (x - Ms))
    # gamma = beta with M on a kink of g
    mL = (x - b * Ms) / (1.0 - b)
    cands.append(b * gM + (1.0 - b) * _eval_hull(hx, hy, ls, mL))
    # gamma = beta with m_L on a hull vertex
    Mk = (x - (1.0 - b) * hx) / b
    cands.append(b * g(Mk) + (1.0 - b) * hy)
    # M on a kink of g and m_L on a hull vertex
    kk = hx[hx < x]
    Mg = Ms[Ms > x]
    if kk.size and Mg.size:
        K, M = np.meshgrid(kk, Mg, indexing="ij")
        gam = (x - K) / (M - K)
        ok = (gam >= b) & (gam <= 1.0)
        if ok.any():
            hk = np.broadcast_to(hy[hx < x][:, None], K.shape)
            vals = gam * g(M) + (1.0 - gam) * hk
            cands.append(vals[ok])
    return float(min(c.min() for c in cands if c.size))


def dual_order_test(mu: DiscreteMeasure, nu: DiscreteMeasure, beta,
                    gs: Iterable[PiecewiseLinear], tol=DEFAULT) -> OrderVerdict:
    """Check ``mu(g_beta) <= nu(g)`` for every supplied payoff."""
    bp = BiasParams.coerce(beta)
    worst, where = math.inf, None
    for idx, g in enumerate(gs):
        env = np.array([beta_envelope(g, bp, float(x)) for x in mu.xs])
        if np.any(np.isneginf(env)):
            continue
        slack = nu.integrate(g) - float(env @ mu.ms)
        if slack < worst:
            worst, where = slack, idx
    if where is None:
        return OrderVerdict(True, math.inf, None, "no finite envelope tested")
    holds = worst >= -tol.order
    return OrderVerdict(holds, worst, None if holds else float(where),
                        "" if holds else f"payoff #{where} separates the pair")


def _shifted_test_kinks(f: TestFunction, x: float) -> np.ndarray:
    a = f.beta.a
    ks = np.array([k for k, _ in f.kinks])
    return np.concatenate(([x], x + ks / a, x - ks))


def envelope_dual_lower_bound(g: PiecewiseLinear, beta, x: float,
                              f_family: Sequence[TestFunction]) -> float:
    """``max_f inf_y (f(y - x) + g(y))`` over a finite family of test functions."""
    bp = BiasParams.coerce(beta)
    best = MINUS_INFINITY
    for f in f_family:
        if f.beta != bp:
            f = TestFunction(f.kinks, f.right_slope, bp)
        tail = f.right_slope
        if g.right_slope + tail < 0 or g.left_slope + tail > 0:
            continue
        pts = np.concatenate((g.xs, _shifted_test_kinks(f, x)))
        val = float(np.min(f(pts - x) + g(pts)))
        best = max(best, val)
    return best
