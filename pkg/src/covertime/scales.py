"""Scale-indexed parameters: radii, excursion budgets, barriers."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import DomainError

RADIUS_RATIO = math.e
SHRINK_OFFSET = 100.0


def radii(L: int) -> np.ndarray:
    """Radii r_0 > r_1 > ... > r_L with r_l = exp(-0.75 log log L - l)."""
    if L < 3:
        raise DomainError(f"radii need L >= 3 (log log L > 0), got L={L}")
    top = -0.75 * math.log(math.log(L))
    return np.exp(top - np.arange(L + 1, dtype=float))


def excursion_budget(L: int, s: float) -> float:
    """t_s = L (2L - (1-s) log L)."""
    if L < 1:
        raise DomainError(f"excursion budget needs L >= 1, got L={L}")
    return L * budget_per_scale(L, s)


def budget_per_scale(L: int, s: float) -> float:
    return 2.0 * L - (1.0 - s) * math.log(L)


def target_time(eps: float, s: float) -> float:
    """m(eps, s) = (1/pi) log(1/eps) (2 log(1/eps) - (1-s) log log(1/eps))."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    a = math.log(1.0 / eps)
    return a * (2.0 * a - (1.0 - s) * math.log(a)) / math.pi


def shrink_factor(L: int) -> tuple[float, bool]:
    """Factor used for the modified radii and whether it was substituted.

    For L <= 100 the nominal factor 1 - 100/L is nonpositive, so the
    factor at L = max(L, 200) is used instead and the flag is raised.
    """
    if L > SHRINK_OFFSET:
        return 1.0 - SHRINK_OFFSET / L, False
    return 1.0 - SHRINK_OFFSET / max(L, 200), True


def bump(l, L: int, exponent: float):
    l = np.asarray(l, dtype=float)
    lo = np.clip(l, 0.0, None) ** exponent
    hi = np.clip(L - l, 0.0, None) ** exponent
    return np.minimum(lo, hi)


def cutoff(L: int) -> int:
    return int(math.floor(0.1 * math.log(math.log(L))))


@dataclass(frozen=True)
class BarrierSet:
    """Barrier curves for the square-root traversal profile at budget t."""

    L: int
    t: float
    l0: int

    def beta(self, l):
        return (1.0 - np.asarray(l, dtype=float) / self.L) * math.sqrt(self.t)

    def alpha(self, l):
        return self.beta(l) - math.log(self.L) ** 2

    def f(self, l):
        return bump(l, self.L, 0.49)

    def g(self, l):
        return bump(l, self.L, 0.51)

    def gamma(self, l):
        return self.beta(l) + self.f(l)

    def delta(self, l):
        return self.beta(l) + self.g(l)

    def table(self) -> dict[str, np.ndarray]:
        l = np.arange(self.L + 1)
        return {
            "alpha": self.alpha(l),
            "beta": self.beta(l),
            "gamma": self.gamma(l),
            "delta": self.delta(l),
        }


def barriers(L: int, s: float, t: float | None = None) -> BarrierSet:
    """Barriers for budget t (default t_s)."""
    if L < 3:
        raise DomainError(f"barriers need L >= 3, got L={L}")
    budget = excursion_budget(L, s) if t is None else float(t)
    return BarrierSet(L=L, t=budget, l0=cutoff(L))


@dataclass(frozen=True)
class ScaleSystem:
    """All scale-indexed quantities for L scales and order parameter s.

    ``top_radius`` replaces r_0 while keeping the ratio e between
    consecutive radii; needed whenever the nominal r_0 is too large for
    discs to lift isometrically from the torus (L < 13).
    ``shrink`` overrides the factor used for the modified radii.
    """

    L: int
    s: float = 0.0
    spacing_factor: float = 0.25
    top_radius: float | None = None
    shrink: float | None = None

    def __post_init__(self):
        if self.L < 3 and self.top_radius is None:
            raise DomainError(f"scale system needs L >= 3, got L={self.L}")
        if not 0.0 < self.spacing_factor <= 1.0:
            raise DomainError("spacing_factor must lie in (0, 1]")
        if self.shrink is not None and not 0.0 < self.shrink <= 1.0:
            raise DomainError("shrink must lie in (0, 1]")

    @cached_property
    def radii(self) -> np.ndarray:
        if self.top_radius is None:
            return radii(self.L)
        return self.top_radius * np.exp(-np.arange(self.L + 1, dtype=float))

    @property
    def modification(self) -> tuple[float, bool]:
        if self.shrink is not None:
            return self.shrink, False
        return shrink_factor(self.L)

    @property
    def radii_minus(self) -> np.ndarray:
        return self.radii * self.modification[0]

    @property
    def radii_plus(self) -> np.ndarray:
        return self.radii / self.modification[0]

    @property
    def substituted(self) -> bool:
        return self.modification[1]

    @property
    def budget(self) -> float:
        return excursion_budget(self.L, self.s)

    @cached_property
    def barrier_set(self) -> BarrierSet:
        return BarrierSet(L=self.L, t=self.budget, l0=cutoff(max(self.L, 3)))

    def grid_spacing(self, l: int) -> float:
        return self.spacing_factor * float(self.radii[l])

    def table(self) -> list[dict[str, float]]:
        bars = self.barrier_set.table()
        rows = []
        for l in range(self.L + 1):
            rows.append({
                "l": l,
                "r_l": float(self.radii[l]),
                "r_l_minus": float(self.radii_minus[l]),
                "r_l_plus": float(self.radii_plus[l]),
                "alpha": float(bars["alpha"][l]),
                "beta": float(bars["beta"][l]),
                "gamma": float(bars["gamma"][l]),
                "delta": float(bars["delta"][l]),
            })
        return rows
