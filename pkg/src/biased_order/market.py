"""American put curves: recovery of the implied law and the no-arbitrage test.

In a one-period market with spot ``s0`` and numeraire ``B1`` at time one,
an American put curve ``p`` is free of arbitrage exactly when it is the
potential function of a law ``nu`` on ``[0, inf)`` with ``delta_{s0}``
strongly ``beta``-below ``nu``, where ``beta = 1 - 1/B1``. Here ``nu`` is
read as the law of the discounted asset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadAsymptoticsError, NotBiasedError, NotConvexError, OutOfRangeError
from .measure import BiasParams, DiscreteMeasure, PotentialCurve, barycenter, potential
from .order import OrderVerdict, is_strongly_beta_biased, max_bias
from .tolerances import DEFAULT


@dataclass(frozen=True)
class MarketSpec:
    s0: float
    B1: float

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 >= 0):
            raise OutOfRangeError(f"spot must be finite and nonnegative, got {self.s0!r}")
        if not (math.isfinite(self.B1) and self.B1 > 1):
            raise OutOfRangeError(f"numeraire B1 must exceed 1, got {self.B1!r}")

    @property
    def beta(self) -> float:
        return 1.0 - 1.0 / self.B1


def measure_from_put_curve(p: PotentialCurve, tol=DEFAULT) -> DiscreteMeasure:
    """Atoms sit where the slope changes; each carries the slope increment."""
    if p.strikes.size == 0:
        raise BadAsymptoticsError("curve has no kinks")
    scale = max(1.0, float(np.max(np.abs(p.values))))
    if abs(p.values[0]) > 1e-12 * scale:
        raise BadAsymptoticsError(f"curve does not vanish on the left (p = {p.values[0]!r})")
    slopes = p.slopes()
    jumps = np.diff(slopes)
    if np.any(jumps < -tol.mass):
        k = float(p.strikes[int(np.argmin(jumps))])
        raise NotConvexError(f"slope decreases at strike {k!r}")
    if abs(p.right_slope - 1.0) > tol.mass:
        raise BadAsymptoticsError(f"terminal slope {p.right_slope!r} is not 1")
    keep = jumps > tol.mass * 1e-3
    return DiscreteMeasure(p.strikes[keep], jumps[keep])


@dataclass(frozen=True)
class ConsistencyReport:
    verdict: OrderVerdict
    measure: DiscreteMeasure
    k_tilde: float
    max_bias: Optional[float]
    beta_required: float

    @property
    def holds(self) -> bool:
        return self.verdict.holds


def check_american_consistency(p: PotentialCurve, m: MarketSpec, tol=DEFAULT) -> ConsistencyReport:
    """Recover ``nu`` and run the exact strong bias test around the spot."""
    nu = measure_from_put_curve(p, tol)
    beta = m.beta
    k_tilde = nu.smax
    if nu.smin < -tol.mean:
        v = OrderVerdict(False, nu.smin, nu.smin, "implied law charges negative prices")
        return ConsistencyReport(v, nu, k_tilde, None, beta)
    mean = barycenter(nu)
    if abs(mean - m.s0) > tol.mean * max(1.0, abs(m.s0)):
        v = OrderVerdict(False, -abs(mean - m.s0), None,
                         f"implied mean {mean!r} differs from the spot {m.s0!r}")
        return ConsistencyReport(v, nu, k_tilde, None, beta)
    try:
        mb = max_bias(nu, m.s0, tols=tol)
    except NotBiasedError:
        mb = 0.0
    v = is_strongly_beta_biased(nu, m.s0, BiasParams(beta), tol)
    return ConsistencyReport(v, nu, k_tilde, mb, beta)


def american_put_value(nu: DiscreteMeasure, m: MarketSpec, k):
    """Best of exercising now and holding to the end (continuation value)."""
    k_arr = np.asarray(k, dtype=float)
    out = np.maximum(np.maximum(k_arr - m.s0, 0.0), potential(nu, k_arr))
    return float(out) if out.ndim == 0 else out
