"""Excursion cycles between two concentric circles: mean identity, minorization, concentration."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError
from .stats import loglog_slope, mean_se, proportion_se, wilson_interval
from .torus_bm import SimConfig, TorusPoint, cycle_pair, disc_exit_sample, hit_times

RICHARDSON = 1.0 / (math.sqrt(2.0) - 1.0)
BATCHES = 20


def mean_cycle_target(R: float, r: float) -> float:
    """Equilibrium mean of one cycle on the unit-area torus: log(R/r)/pi."""
    _check(R, r)
    return math.log(R / r) / math.pi


def in_out_target(R: float, r: float) -> float:
    """Mean time from the inner circle to the outer one: (R^2 - r^2)/2."""
    _check(R, r)
    return (R * R - r * r) / 2.0


def _check(R: float, r: float) -> None:
    if not 0 < r < R < 0.5:
        raise DomainError("need 0 < r < R < 1/2")


@dataclass
class CycleStats:
    """Post-burn-in cycles D_k - D_{k-1}.

    ``cycle_times`` and ``in_out`` come from the fine observer;
    ``coarse_*`` from the same path sampled at twice the step. The
    extrapolated means remove the leading sqrt(dt) crossing bias.
    """

    n_cycles: int
    cycle_times: np.ndarray
    burn_in: int
    in_out: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coarse_cycle_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coarse_in_out: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dt: float = math.nan

    def __post_init__(self):
        if np.any(self.cycle_times <= 0):
            raise ValueError("cycle times must be positive")

    @property
    def out_in(self) -> np.ndarray:
        return self.cycle_times - self.in_out

    @staticmethod
    def _extrapolate(fine: np.ndarray, coarse: np.ndarray) -> tuple[float, float]:
        f, c = float(np.mean(fine)), float(np.mean(coarse))
        value = f + (f - c) * RICHARDSON
        # observers can drift apart by a missed cycle, so use batch means
        n = min(fine.size, coarse.size)
        if n < 2 * BATCHES:
            return value, math.nan
        bf = np.array([b.mean() for b in np.array_split(fine[:n], BATCHES)])
        bc = np.array([b.mean() for b in np.array_split(coarse[:n], BATCHES)])
        combo = bf + (bf - bc) * RICHARDSON
        return value, float(np.std(combo, ddof=1) / math.sqrt(BATCHES))

    def mean(self) -> tuple[float, float]:
        return mean_se(self.cycle_times)

    def extrapolated_mean(self) -> tuple[float, float]:
        if self.coarse_cycle_times.size == 0:
            return self.mean()
        return self._extrapolate(self.cycle_times, self.coarse_cycle_times)

    def extrapolated_in_out(self) -> tuple[float, float]:
        if self.coarse_in_out.size == 0:
            return mean_se(self.in_out)
        return self._extrapolate(self.in_out, self.coarse_in_out)


def _chain(R: float, r: float, n: int, burn_in: int, dt: float, rng: np.random.Generator):
    total = n + burn_in + 1
    (dep_f, ret_f), (dep_c, ret_c) = cycle_pair(R, r, total, dt, 2, rng)
    s = slice(burn_in, burn_in + n)
    # cycle k ends with the in-to-out leg that starts at return k+1
    return (np.diff(dep_f)[s], (dep_f - ret_f)[1:][s], np.diff(dep_c)[s], (dep_c - ret_c)[1:][s])


def equilibrium_cycles(center: TorusPoint, R: float, r: float, n: int, burn_in: int,
                       config: SimConfig, rng: np.random.Generator, chains: int = 1) -> CycleStats:
    """Run ``chains`` independent chains of n post-burn-in cycles each.

    The disc is translation invariant on the torus, so ``center`` only
    labels the output. Stepping is fixed-dt regardless of the policy.
    """
    _check(R, r)
    if n < 1 or chains < 1:
        raise DomainError("need n >= 1 and chains >= 1")
    parts = [_chain(R, r, n, burn_in, config.dt, rng) for _ in range(chains)]
    cat = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    return CycleStats(n_cycles=n * chains, cycle_times=cat[0], burn_in=burn_in, in_out=cat[1],
                      coarse_cycle_times=cat[2], coarse_in_out=cat[3], dt=config.dt)


def minorization_q(R: float, r: float) -> float:
    """((R - r)/(R + r))^2."""
    _check(R, r)
    return ((R - r) / (R + r)) ** 2


def empirical_kernel_ratio(R: float, r: float, N: int, n_bins: int, rng: np.random.Generator):
    """Minimum over angular bins of (exit frequency / uniform mass) for
    exits of B(0,R) started on the r-circle; returns (min ratio, its SE)."""
    _check(R, r)
    c = TorusPoint(0.5, 0.5)
    pts = disc_exit_sample(c, R, c.shifted(r, 0.0), rng, size=N)
    ang = np.mod(np.arctan2(pts[:, 1] - 0.5, pts[:, 0] - 0.5), 2 * math.pi)
    counts = np.bincount(np.minimum((ang / (2 * math.pi) * n_bins).astype(int), n_bins - 1),
                         minlength=n_bins)
    i = int(np.argmin(counts))
    p, se = proportion_se(int(counts[i]), N)
    return p * n_bins, se * n_bins


@dataclass
class ConcentrationRow:
    n: int
    failure: float
    lower: float
    upper: float
    rel_sd: float
    runs: int


def concentration_experiment(center: TorusPoint, R: float, r: float, n_list, delta: float, N: int,
                             config: SimConfig, rng: np.random.Generator, burn_in: int = 50):
    """P[D_n outside (1 +- delta) n log(R/r)/pi] and the relative SD of D_n/n.

    Returns (rows, log-log slope of the relative SD against n).
    """
    _check(R, r)
    if not 0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    n_list = sorted(int(n) for n in n_list)
    n_max = n_list[-1]
    mu = mean_cycle_target(R, r)
    sums = np.zeros((N, len(n_list)))
    for i in range(N):
        (dep, _), _ = cycle_pair(R, r, burn_in + n_max + 1, config.dt, 2, rng)
        base = dep[burn_in]
        sums[i] = dep[burn_in + np.array(n_list)] - base
    rows = []
    for j, n in enumerate(n_list):
        d = sums[:, j]
        k = int(np.sum(np.abs(d - n * mu) > delta * n * mu))
        lo, hi = wilson_interval(k, N)
        rows.append(ConcentrationRow(n, k / N, lo, hi, float(np.std(d / n, ddof=1) / mu), N))
    slope = math.nan
    if len(n_list) > 1:
        slope = loglog_slope(np.array(n_list, float), np.array([row.rel_sd for row in rows]))
    return rows, slope


@dataclass
class KhasminskiiReport:
    r: float
    n_max: int
    sup_mean: float
    moments: np.ndarray
    moment_se: np.ndarray
    bounds: np.ndarray
    holds: bool


def khasminskii_check(center: TorusPoint, r: float, n_max: int, N: int, config: SimConfig,
                      rng: np.random.Generator, grid: int = 4) -> KhasminskiiReport:
    """E_z[H^n] <= n! (sup_z E_z[H])^n over a coarse grid of starts z,
    with H the hitting time of B(center, r); the worst start per moment is kept."""
    if not 1 <= n_max <= 4:
        raise DomainError("n_max must lie in 1..4")
    if not 0 < r < 0.5:
        raise DomainError("need 0 < r < 1/2")
    offs = (np.arange(grid) + 0.5) / grid
    means, moments, ses = [], [], []
    for ox in offs:
        for oy in offs:
            z = center.shifted(ox, oy)
            h = hit_times(z, center, r, config.dt, N, rng)
            if not np.all(np.isfinite(h)):
                raise RuntimeError("hitting time beyond the time cap")
            means.append(h.mean())
            powers = np.stack([h ** k for k in range(1, n_max + 1)])
            moments.append(powers.mean(axis=1))
            ses.append(powers.std(axis=1, ddof=1) / math.sqrt(N))
    moments = np.array(moments)
    ses = np.array(ses)
    sup_mean = float(max(means))
    worst = np.argmax(moments, axis=0)
    m = moments[worst, np.arange(n_max)]
    se = ses[worst, np.arange(n_max)]
    bounds = np.array([math.factorial(k) * sup_mean ** k for k in range(1, n_max + 1)])
    # n = 1 holds with equality at the worst start
    holds = bool(np.all(m[1:] <= bounds[1:] + 3 * se[1:]))
    return KhasminskiiReport(r, n_max, sup_mean, m, se, bounds, holds)
