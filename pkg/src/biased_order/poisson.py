"""Embedding biased couplings into integrals against a compensated Poisson clock.

For a simple component centred at ``x`` with top atom ``(M, gamma)`` the
integrand is ``H(t) = c_j e^t`` on the quantile pieces of the left part and
zero after ``log(1/gamma)``. The process ``X_t = x + int_0^t H dM`` with
``M_t = t - N_t`` drifts up until the first clock ring ``tau`` and then
jumps down by ``H(tau)``; the landing point is the left quantile at level
``1 - exp(-tau)``, and without a ring before the cutoff it ends at ``M``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coupling import (
    ROW_THRESHOLD,
    DiscreteCoupling,
    check_strong_biased_coupling,
    construct_biased_coupling,
)
from .decomposition import Decomposition, SimpleComponent, decompose_biased
from .errors import InvalidComponentError
from .measure import BiasParams, DiscreteMeasure
from .tolerances import DEFAULT

BLOCK = 4096


@dataclass(frozen=True, eq=False)
class IntegrandSchedule:
    """``H(t) = coefs[j] * e^t`` on ``[breaks[j], breaks[j+1])``, zero after ``cutoff``."""

    breaks: np.ndarray
    coefs: np.ndarray
    cutoff: float

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float).reshape(-1)
        c = np.asarray(self.coefs, dtype=float).reshape(-1)
        if b.size != c.size + 1 or b[0] != 0.0:
            raise ValueError("breaks must start at 0 and have one more entry than coefs")
        if np.any(np.diff(b) < 0):
            raise ValueError("breaks must be nondecreasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "coefs", c)
        object.__setattr__(self, "cutoff", float(self.cutoff))
        # e^{a_j} reused by every closed-form integral
        object.__setattr__(self, "_exp", np.exp(b))

    @classmethod
    def empty(cls) -> "IntegrandSchedule":
        return cls(np.array([0.0]), np.empty(0), 0.0)

    @property
    def n_pieces(self) -> int:
        return self.coefs.size

    def piece_of(self, t) -> np.ndarray:
        return np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, max(self.n_pieces - 1, 0))

    def H(self, t):
        t = np.asarray(t, dtype=float)
        if self.n_pieces == 0:
            out = np.zeros_like(t)
        else:
            out = np.where((t >= 0) & (t <= self.cutoff), self.coefs[self.piece_of(t)] * np.exp(t), 0.0)
        return float(out) if out.ndim == 0 else out

    def _cumulative(self) -> np.ndarray:
        """``int_0^{a_j} H`` for every break ``a_j``."""
        e = self._exp
        return np.concatenate(([0.0], np.cumsum(self.coefs * np.diff(e))))

    def integral(self, t):
        """``int_0^{min(t, cutoff)} H(s) ds`` in closed form."""
        t = np.minimum(np.asarray(t, dtype=float), self.cutoff)
        if self.n_pieces == 0:
            out = np.zeros_like(t)
        else:
            j = self.piece_of(t)
            out = self._cumulative()[j] + self.coefs[j] * (np.exp(t) - self._exp[j])
            out = np.where(t <= 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def total_drift(self) -> float:
        return float(self._cumulative()[-1]) if self.n_pieces else 0.0

    def jump_levels(self) -> np.ndarray:
        """``int_0^t H - H(t)`` on each piece (constant there)."""
        return self._cumulative()[:-1] - self.coefs * self._exp[:-1]

    def landing(self, t):
        """Position relative to the centre after a ring at time ``t <= cutoff``."""
        return self.jump_levels()[self.piece_of(t)]

    def piece_masses(self) -> np.ndarray:
        """Probability that the first ring falls in each piece."""
        s = np.exp(-self.breaks)
        return s[:-1] - s[1:]

    def to_dict(self) -> dict:
        return {"breaks": self.breaks.tolist(), "coefs": self.coefs.tolist(), "cutoff": self.cutoff}


def integrand_for_simple(comp: SimpleComponent, x: float, beta, tol=DEFAULT) -> IntegrandSchedule:
    """Closed-form solution of the Volterra equation for one simple component."""
    bp = BiasParams.coerce(beta)
    try:
        comp.validate(x, bp, tol)
    except InvalidComponentError:
        raise
    left = comp.left
    if left.is_empty() or comp.gamma >= 1.0:
        return IntegrandSchedule.empty()
    m = left.ms
    q = left.xs - x
    p_before = np.concatenate(([0.0], np.cumsum(m)[:-1]))
    # F(a_j) = int_0^{a_j} e^{-s} q(s) ds = sum_{i<j} q_i m_i exactly
    F = np.concatenate(([0.0], np.cumsum(q * m)[:-1]))
    coefs = -(F + q * (1.0 - p_before))
    cutoff = -math.log(comp.gamma)
    breaks = np.concatenate((-np.log1p(-p_before), [cutoff]))
    breaks[-1] = max(breaks[-1], breaks[-2])
    return IntegrandSchedule(breaks, coefs, cutoff)


@dataclass(frozen=True, eq=False)
class PlanRow:
    x: float
    mass: float
    decomposition: Decomposition
    schedules: tuple[IntegrandSchedule, ...]


@dataclass(frozen=True, eq=False)
class EmbeddingPlan:
    mu: DiscreteMeasure
    beta: BiasParams
    rows: tuple[PlanRow, ...]
    coupling: Optional[DiscreteCoupling] = None

    @property
    def max_cutoff(self) -> float:
        return max((s.cutoff for r in self.rows for s in r.schedules), default=0.0)

    def flat(self):
        """Per component: centre, selection probability and schedule."""
        xs, ps, scheds = [], [], []
        for r in self.rows:
            for c, s in zip(r.decomposition.components, r.schedules):
                xs.append(r.x)
                ps.append(r.mass * c.weight)
                scheds.append(s)
        return np.array(xs), np.array(ps), scheds


def _plan_from_coupling(mu, pi: DiscreteCoupling, bp: BiasParams, strong: bool, tol) -> EmbeddingPlan:
    rows = []
    for i, mass in enumerate(pi.row_masses()):
        if mass < ROW_THRESHOLD:
            continue
        x = float(pi.xs[i])
        dec = decompose_biased(pi.row(i), x, bp, strong=strong, tol=tol)
        scheds = tuple(integrand_for_simple(c, x, bp, tol) for c in dec.components)
        rows.append(PlanRow(x, float(mass), dec, scheds))
    return EmbeddingPlan(mu, bp, tuple(rows), pi)


def plan_embedding(mu: DiscreteMeasure, nu: DiscreteMeasure, beta, tol=DEFAULT) -> EmbeddingPlan:
    bp = BiasParams.coerce(beta)
    pi = construct_biased_coupling(mu, nu, bp, tol)
    return _plan_from_coupling(mu, pi, bp, False, tol)


def strong_plan(mu: DiscreteMeasure, nu: DiscreteMeasure, beta, margin: float = 1e-6,
                tol=DEFAULT) -> EmbeddingPlan:
    """Plan whose components all have atom mass above beta, so every cutoff is below t_beta."""
    bp = BiasParams.coerce(beta)
    pi = check_strong_biased_coupling(mu, nu, bp, margin, tol)
    return _plan_from_coupling(mu, pi, bp, True, tol)


def marginal_law(plan: EmbeddingPlan, t: float) -> DiscreteMeasure:
    """Exact law of ``X_t`` under the plan."""
    xs, ms = [], []
    for x, p, s in zip(*plan.flat()):
        if s.n_pieces == 0:
            xs.append([x])
            ms.append([p])
            continue
        u = min(t, s.cutoff)
        xs.append([x + s.integral(u)])
        ms.append([p * math.exp(-u)])
        a = s.breaks
        ends = np.minimum(a[1:], u)
        live = a[:-1] < u
        xs.append(x + s.jump_levels()[live])
        ms.append(p * (np.exp(-a[:-1][live]) - np.exp(-ends[live])))
    return DiscreteMeasure(np.concatenate(xs), np.concatenate(ms))


def exact_terminal_law(plan: EmbeddingPlan) -> DiscreteMeasure:
    """Exact law of the terminal value, read off the schedules alone."""
    xs, ms = [], []
    for x, p, s in zip(*plan.flat()):
        if s.n_pieces == 0:
            xs.append([x])
            ms.append([p])
            continue
        xs.append([x + s.total_drift()])
        ms.append([p * math.exp(-s.cutoff)])
        xs.append(x + s.jump_levels())
        ms.append(p * s.piece_masses())
    return DiscreteMeasure(np.concatenate(xs), np.concatenate(ms))


def _block_uniforms(seed: int, block: int, size: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    return gen.random((size, 3))


def _draw(plan: EmbeddingPlan, u: np.ndarray):
    """Map uniforms to (component index, ring time)."""
    cx, cp, _ = plan.flat()
    row_of = np.concatenate([[k] * len(r.schedules) for k, r in enumerate(plan.rows)]).astype(int)
    row_p = np.array([r.mass for r in plan.rows])
    row_cum = np.cumsum(row_p) / row_p.sum()
    r = np.minimum(np.searchsorted(row_cum, u[:, 0], side="right"), row_p.size - 1)
    comp = np.empty(u.shape[0], dtype=int)
    start = 0
    for k, row in enumerate(plan.rows):
        nk = len(row.schedules)
        w = np.array([c.weight for c in row.decomposition.components])
        cum = np.cumsum(w) / w.sum()
        hit = r == k
        comp[hit] = start + np.minimum(np.searchsorted(cum, u[hit, 1], side="right"), nk - 1)
        start += nk
    tau = -np.log1p(-u[:, 2])
    return comp, tau


def _terminal(plan: EmbeddingPlan, comp: np.ndarray, tau: np.ndarray) -> np.ndarray:
    cx, _, scheds = plan.flat()
    out = np.empty(comp.size)
    for k, s in enumerate(scheds):
        hit = comp == k
        if not hit.any():
            continue
        t = tau[hit]
        if s.n_pieces == 0:
            out[hit] = cx[k]
            continue
        out[hit] = cx[k] + np.where(t > s.cutoff, s.total_drift(), s.landing(np.minimum(t, s.cutoff)))
    return out


def sample(plan: EmbeddingPlan, n: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Terminal values of ``n`` independent runs.

    Sample ``k`` always uses substream ``k // BLOCK`` of the seed, so output
    does not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    nblocks = -(-n // BLOCK)

    def block(b):
        size = min(BLOCK, n - b * BLOCK)
        comp, tau = _draw(plan, _block_uniforms(seed, b, size))
        return _terminal(plan, comp, tau)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(block, range(nblocks)))
    else:
        parts = [block(b) for b in range(nblocks)]
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class Trajectory:
    path_id: int
    times: np.ndarray
    values: np.ndarray
    jump_time: Optional[float]
    terminal: float


def sample_paths(plan: EmbeddingPlan, n: int, seed: int = 0,
                 grid: Optional[Sequence[float]] = None) -> list[Trajectory]:
    """Trajectories on a time grid with the ring time inserted (pre- and post-jump point)."""
    horizon = plan.beta.t_beta
    grid = np.linspace(0.0, horizon, 200) if grid is None else np.asarray(grid, dtype=float)
    cx, _, scheds = plan.flat()
    out = []
    for b in range(-(-n // BLOCK)):
        size = min(BLOCK, n - b * BLOCK)
        comp, tau = _draw(plan, _block_uniforms(seed, b, size))
        for k in range(size):
            s, x, t1 = scheds[comp[k]], cx[comp[k]], float(tau[k])
            jumps = s.n_pieces > 0 and t1 <= s.cutoff
            pre = grid[grid < t1] if jumps else grid
            times = pre
            values = x + s.integral(pre)
            if jumps:
                land = x + float(s.landing(t1))
                post = grid[grid >= t1]
                times = np.concatenate((pre, [t1, t1], post))
                values = np.concatenate((values, [x + s.integral(t1), land], np.full(post.size, land)))
                terminal = land
            else:
                terminal = x + s.total_drift()
            out.append(Trajectory(b * BLOCK + k, times, values, t1 if jumps else None, terminal))
    return out
