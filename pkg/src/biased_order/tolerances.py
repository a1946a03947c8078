"""Numerical tolerances shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    mass: float = 1e-9
    order: float = 1e-9
    strict: float = 1e-10
    mean: float = 1e-9
    merge: float = 1e-12
    lp: float = 1e-8
    pivot: float = 1e-11
    reassemble: float = 1e-9

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT = Tolerances()
