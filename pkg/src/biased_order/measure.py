"""Finitely-atomic measures on the real line and their basic calculus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    EmptyMeasureError,
    MassMismatchError,
    NegativeMassError,
    NonFiniteError,
    OutOfRangeError,
)
from .tolerances import DEFAULT


def _normalize(xs: np.ndarray, ms: np.ndarray, tol=DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    if xs.shape != ms.shape or xs.ndim != 1:
        raise ValueError("locations and masses must be 1-d arrays of equal length")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ms))):
        raise NonFiniteError("measure has a non-finite location or mass")
    if np.any(ms < -tol.mass):
        raise NegativeMassError(f"negative mass {ms.min()!r}")
    keep = ms > 0
    xs, ms = xs[keep], ms[keep]
    if xs.size == 0:
        return xs, ms
    order = np.argsort(xs, kind="stable")
    xs, ms = xs[order], ms[order]
    # group runs of locations closer than the merge tolerance
    starts = np.concatenate(([True], np.diff(xs) > tol.merge))
    if starts.all():
        return xs, ms
    group = np.cumsum(starts) - 1
    gm = np.bincount(group, weights=ms)
    gx = np.bincount(group, weights=ms * xs) / gm
    # the weighted mean can drift by an ulp; keep exact duplicates exactly in place
    lo, hi = xs[starts], xs[np.concatenate((starts[1:], [True]))]
    gx = np.where(lo == hi, lo, np.clip(gx, lo, hi))
    return gx, gm


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative measure with finitely many atoms.

    Locations are strictly increasing, masses strictly positive. Construction
    sorts, merges locations closer than the merge tolerance and drops zero
    masses, so any pair of arrays is accepted as long as it is finite and not
    meaningfully negative.
    """

    xs: np.ndarray
    ms: np.ndarray

    def __post_init__(self):
        xs, ms = _normalize(np.asarray(self.xs, dtype=float).ravel(),
                            np.asarray(self.ms, dtype=float).ravel())
        xs.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ms", ms)

    # construction helpers
    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "DiscreteMeasure":
        pairs = list(pairs)
        if not pairs:
            return cls(np.empty(0), np.empty(0))
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> "DiscreteMeasure":
        return cls(np.array([x]), np.array([mass]))

    @classmethod
    def empty(cls) -> "DiscreteMeasure":
        return cls(np.empty(0), np.empty(0))

    # basic properties
    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ms.tolist()))

    @property
    def mass(self) -> float:
        return float(self.ms.sum())

    @property
    def size(self) -> int:
        return int(self.xs.size)

    def is_empty(self) -> bool:
        return self.xs.size == 0

    @property
    def smin(self) -> float:
        self._require_nonempty()
        return float(self.xs[0])

    @property
    def smax(self) -> float:
        self._require_nonempty()
        return float(self.xs[-1])

    def is_dirac(self) -> bool:
        return self.xs.size == 1

    def mass_at(self, x: float, tol: float = DEFAULT.merge) -> float:
        hit = np.abs(self.xs - x) <= tol
        return float(self.ms[hit].sum())

    def first_moment(self) -> float:
        return float(np.dot(self.xs, self.ms))

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(np.asarray(f(self.xs), dtype=float), self.ms))

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.xs, self.ms * c)

    def shifted(self, dx: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.xs + dx, self.ms)

    def normalized(self) -> "DiscreteMeasure":
        return self.scaled(1.0 / self.mass)

    def restrict(self, mask: np.ndarray) -> "DiscreteMeasure":
        return DiscreteMeasure(self.xs[mask], self.ms[mask])

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure(np.concatenate([self.xs, other.xs]),
                               np.concatenate([self.ms, other.ms]))

    def __repr__(self) -> str:
        body = ", ".join(f"{m:.6g}@{x:.6g}" for x, m in self.atoms)
        return f"DiscreteMeasure({body})"

    def _require_nonempty(self):
        if self.xs.size == 0:
            raise EmptyMeasureError("operation needs a nonempty measure")


def make_measure(pairs: Iterable[Sequence[float]]) -> DiscreteMeasure:
    return DiscreteMeasure.from_pairs(pairs)


def barycenter(nu: DiscreteMeasure) -> float:
    m = nu.mass
    if m <= 0:
        raise EmptyMeasureError("barycenter of a zero measure")
    return nu.first_moment() / m


def split_lr(nu: DiscreteMeasure, x: float) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Split at ``x``; an atom sitting exactly at ``x`` goes to the right part."""
    left = nu.xs < x
    return nu.restrict(left), nu.restrict(~left)


def potential(nu: DiscreteMeasure, k):
    """Put-price potential ``sum (k - x)_+ m`` (vectorised over ``k``)."""
    k_arr = np.asarray(k, dtype=float)
    vals = np.maximum(k_arr[..., None] - nu.xs, 0.0) @ nu.ms
    return float(vals) if vals.ndim == 0 else vals


@dataclass(frozen=True, eq=False)
class PotentialCurve:
    """Piecewise-linear convex curve: zero on the left, given right slope."""

    strikes: np.ndarray
    values: np.ndarray
    right_slope: float

    def __post_init__(self):
        s = np.asarray(self.strikes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.shape != v.shape or s.ndim != 1:
            raise ValueError("strikes and values must be 1-d of equal length")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(v)) and math.isfinite(self.right_slope)):
            raise NonFiniteError("curve has non-finite entries")
        if s.size > 1 and np.any(np.diff(s) <= 0):
            raise ValueError("curve strikes must be strictly increasing")
        object.__setattr__(self, "strikes", s)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "right_slope", float(self.right_slope))

    @property
    def kinks(self) -> list[tuple[float, float]]:
        return list(zip(self.strikes.tolist(), self.values.tolist()))

    def slopes(self) -> np.ndarray:
        """Slopes of every linear piece, from the left ray to the right ray."""
        inner = np.diff(self.values) / np.diff(self.strikes)
        return np.concatenate(([0.0], inner, [self.right_slope]))

    def __call__(self, k):
        k_arr = np.asarray(k, dtype=float)
        s, v = self.strikes, self.values
        if s.size == 0:
            out = np.zeros_like(k_arr)
        else:
            out = np.interp(k_arr, s, v)
            out = np.where(k_arr < s[0], v[0], out)
            out = np.where(k_arr > s[-1], v[-1] + self.right_slope * (k_arr - s[-1]), out)
        return float(out) if out.ndim == 0 else out


def potential_curve(nu: DiscreteMeasure) -> PotentialCurve:
    return PotentialCurve(nu.xs.copy(), potential(nu, nu.xs), nu.mass)


def quantile(nu: DiscreteMeasure, p: float, tol=DEFAULT) -> float:
    """Left-continuous inverse CDF ``inf{t : nu((-inf, t]) >= p}``."""
    total = nu.mass
    if not (p > 0) or p > total + tol.mass:
        raise OutOfRangeError(f"quantile level {p!r} outside (0, {total!r}]")
    cum = np.cumsum(nu.ms)
    # absorb summation round-off at exact step levels
    idx = int(np.searchsorted(cum, p - 1e-14 * max(total, 1.0), side="left"))
    return float(nu.xs[min(idx, nu.size - 1)])


def pushforward(nu: DiscreteMeasure, fn: Callable) -> DiscreteMeasure:
    try:
        ys = np.asarray(fn(nu.xs), dtype=float)
        if ys.shape != nu.xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        ys = np.array([fn(float(x)) for x in nu.xs], dtype=float)
    if not np.all(np.isfinite(ys)):
        raise NonFiniteError("push-forward image is not finite")
    return DiscreteMeasure(ys, nu.ms)


def mixture(components: Iterable[tuple[float, DiscreteMeasure]]) -> DiscreteMeasure:
    xs, ms = [], []
    for w, m in components:
        if w < 0:
            raise NegativeMassError("mixture weight must be nonnegative")
        xs.append(m.xs)
        ms.append(m.ms * w)
    if not xs:
        return DiscreteMeasure.empty()
    return DiscreteMeasure(np.concatenate(xs), np.concatenate(ms))


def w1(mu: DiscreteMeasure, nu: DiscreteMeasure, tol=DEFAULT) -> float:
    """Wasserstein-1 distance as the area between the two CDFs."""
    if mu.is_empty() or nu.is_empty():
        raise EmptyMeasureError("w1 needs nonempty measures")
    if abs(mu.mass - nu.mass) > tol.mass:
        raise MassMismatchError(f"masses differ: {mu.mass!r} vs {nu.mass!r}")
    grid = np.union1d(mu.xs, nu.xs)
    fm = np.cumsum(mu.ms)[np.searchsorted(mu.xs, grid, side="right") - 1]
    fm = np.where(grid < mu.xs[0], 0.0, fm)
    fn = np.cumsum(nu.ms)[np.searchsorted(nu.xs, grid, side="right") - 1]
    fn = np.where(grid < nu.xs[0], 0.0, fn)
    return float(np.sum(np.abs(fm - fn)[:-1] * np.diff(grid)))


def allclose(mu: DiscreteMeasure, nu: DiscreteMeasure, atol: float = 1e-12) -> bool:
    return (mu.size == nu.size and np.allclose(mu.xs, nu.xs, rtol=0, atol=atol)
            and np.allclose(mu.ms, nu.ms, rtol=0, atol=atol))


@dataclass(frozen=True)
class BiasParams:
    """Bias level ``beta`` with its distortion ratio and Poisson horizon."""

    beta: float
    a: float = field(init=False)
    t_beta: float = field(init=False)

    def __post_init__(self):
        b = float(self.beta)
        if not (0.0 < b < 1.0):
            raise OutOfRangeError(f"beta must lie in (0, 1), got {self.beta!r}")
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "a", b / (1.0 - b))
        object.__setattr__(self, "t_beta", -math.log(b))

    @classmethod
    def coerce(cls, beta) -> "BiasParams":
        return beta if isinstance(beta, cls) else cls(beta)
