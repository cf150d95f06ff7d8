"""Continuous-time simple random walk on {0,...,L}: local times and edge traversals."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numba import njit
from scipy import special, stats as sps

from .errors import DomainError
from .stats import (TestReport, chi_square_from_parts, chi_square_parts, inconclusive,
                    ks_test, ks_test_cdf, mean_se, two_sample_chi_square)
from . import gw

STOP_KINDS = ("tau", "returns")
MIN_PER_BIN = 500


@dataclass(frozen=True)
class LatticeRun:
    L: int
    local_times: np.ndarray
    edge_traversals: np.ndarray
    stop_kind: str
    budget: float
    elapsed: float


def degrees(L: int) -> np.ndarray:
    d = np.full(L + 1, 2.0)
    d[0] = d[L] = 1.0
    return d


@njit(cache=True)
def _walk(L, t, stop_returns, rng, raw, edges):
    """Simulate one run in place; returns the elapsed time."""
    if t <= 0:
        return 0.0
    target = int(math.floor(t))
    if stop_returns and target == 0:
        return 0.0
    pos = 0
    elapsed = 0.0
    returns = 0
    while True:
        hold = rng.standard_exponential()
        if not stop_returns and pos == 0 and raw[0] + hold >= t:
            elapsed += t - raw[0]
            raw[0] = t
            return elapsed
        raw[pos] += hold
        elapsed += hold
        if pos == 0:
            nxt = 1
        elif pos == L:
            nxt = L - 1
        elif rng.random() < 0.5:
            nxt = pos + 1
        else:
            nxt = pos - 1
        if nxt > pos:
            edges[pos] += 1
        pos = nxt
        if stop_returns and pos == 0:
            returns += 1
            if returns >= target:
                return elapsed


@njit(cache=True)
def _walk_many(L, t, stop_returns, n, rng):
    raw = np.zeros((n, L + 1))
    edges = np.zeros((n, L), dtype=np.int64)
    elapsed = np.zeros(n)
    for i in range(n):
        elapsed[i] = _walk(L, t, stop_returns, rng, raw[i], edges[i])
    return raw, edges, elapsed


def _check(L: int, t: float, stop_kind: str) -> bool:
    if L < 2:
        raise DomainError(f"path length must be >= 2, got L={L}")
    if t < 0:
        raise DomainError("budget must be nonnegative")
    if stop_kind not in STOP_KINDS:
        raise DomainError(f"stop_kind must be one of {STOP_KINDS}")
    return stop_kind == "returns"


def ctrw_run(L: int, t: float, stop_kind: str, rng: np.random.Generator) -> LatticeRun:
    """One run stopped at inverse local time tau(t) or at the t-th return to 0."""
    stop_returns = _check(L, t, stop_kind)
    raw = np.zeros(L + 1)
    edges = np.zeros(L, dtype=np.int64)
    elapsed = _walk(L, float(t), stop_returns, rng, raw, edges)
    return LatticeRun(L, raw / degrees(L), edges, stop_kind, float(t), elapsed)


def ctrw_runs(L: int, t: float, stop_kind: str, n: int, rng: np.random.Generator):
    """Vectorized runs: (local_times (n, L+1), edge_traversals (n, L), elapsed (n,))."""
    stop_returns = _check(L, t, stop_kind)
    raw, edges, elapsed = _walk_many(L, float(t), stop_returns, n, rng)
    return raw / degrees(L), edges, elapsed


# ---------------------------------------------------------------- identities


def ray_knight_marginal_check(L: int, t: float, l: int, N: int, rng: np.random.Generator) -> TestReport:
    """KS between L_l at tau(t) and half of a BESQ^0 from 2t at time l."""
    if not 0 <= l <= L:
        raise DomainError("vertex out of range")
    local, _, _ = ctrw_runs(L, t, "tau", N, rng)
    sim = local[:, l]
    if l == 0:
        ref = np.full(N, float(t))
    else:
        n = rng.poisson(2.0 * t / (2.0 * l), size=N)
        ref = np.zeros(N)
        pos = n > 0
        ref[pos] = 0.5 * rng.gamma(n[pos], 2.0 * l)
    return ks_test(sim, ref, name=f"ray-knight L={L} t={t} l={l}")


def zero_mass_check(L: int, t: float, N: int, rng: np.random.Generator) -> tuple[float, float, float]:
    """Empirical P[L_L = 0] at tau(t), its SE, and the BESQ^0 value exp(-t/L)."""
    local, _, _ = ctrw_runs(L, t, "tau", N, rng)
    k = int(np.sum(local[:, L] == 0))
    p = k / N
    return p, math.sqrt(p * (1 - p) / N), math.exp(-t / L)


def traversals_vs_gw(L: int, t: float, N: int, rng: np.random.Generator) -> list[TestReport]:
    """Per-edge two-sample chi-square of edge traversals against GW profiles."""
    _, edges, _ = ctrw_runs(L, t, "returns", N, rng)
    ref = gw.gw_sample_many(t, L - 1, N, rng)
    return [two_sample_chi_square(edges[:, l], ref[:, l], name=f"edges-vs-gw l={l}")
            for l in range(1, L)]


# ---------------------------------------------------------------- conditional traversal law


def _series_terms(z: float):
    """log z^m/(m!(m-1)!) for m = 1.. until the relative tail drops below 1e-15."""
    logs = []
    logz = math.log(z)
    m = 1
    peak = -math.inf
    while True:
        lt = m * logz - math.lgamma(m + 1) - math.lgamma(m)
        logs.append(lt)
        peak = max(peak, lt)
        # terms decay faster than geometrically once m^2 > z
        if m * m > z and lt < peak + math.log(1e-15) - 5.0:
            break
        m += 1
    return np.array(logs)


def bessel_series(z: float) -> float:
    """sum_{m>=1} z^m / (m! (m-1)!), equal to sqrt(z) I_1(2 sqrt(z))."""
    if z <= 0:
        raise DomainError("z must be positive")
    logs = _series_terms(z)
    top = logs.max()
    return float(math.exp(top) * np.sum(np.exp(logs - top)))


def conditional_traversal_pmf(u: float, u2: float, m: int) -> float:
    """P[m traversals of an edge | local times u, u2 at its end vertices]."""
    if u <= 0 or u2 <= 0:
        raise DomainError("local times must be positive")
    if m < 1:
        return 0.0
    z = u * u2
    logs = _series_terms(z)
    top = logs.max()
    log_norm = top + math.log(np.sum(np.exp(logs - top)))
    return math.exp(m * math.log(z) - math.lgamma(m + 1) - math.lgamma(m) - log_norm)


def conditional_pmf_table(z: np.ndarray, m_max: int) -> np.ndarray:
    """Row i holds the pmf over m = 1..m_max for product z[i]; the tail goes in the last column."""
    z = np.asarray(z, dtype=float)
    m = np.arange(1, m_max + 1)
    logs = m[None, :] * np.log(z)[:, None] - special.gammaln(m + 1)[None, :] - special.gammaln(m)[None, :]
    # normalizer from the Bessel identity, exponentially scaled for stability
    s = np.sqrt(z)
    log_norm = np.log(s) + np.log(special.ive(1, 2 * s)) + 2 * s
    pmf = np.exp(logs - log_norm[:, None])
    pmf[:, -1] += np.clip(1.0 - pmf.sum(axis=1), 0.0, None)
    return pmf


def conditional_pmf_check(L: int, t: float, l: int, N: int, rng: np.random.Generator,
                          min_per_bin: int = MIN_PER_BIN) -> TestReport:
    """Chi-square of edge traversals T_l against the conditional pmf given (L_l, L_{l+1}).

    Runs are stratified by quantiles of z = L_l L_{l+1}; within a stratum
    the expected histogram is the sum of the exact per-run pmfs.
    """
    if not 1 <= l <= L - 1:
        raise DomainError("need 1 <= l <= L-1")
    local, edges, _ = ctrw_runs(L, t, "returns", N, rng)
    keep = local[:, l + 1] > 0
    z = local[keep, l] * local[keep, l + 1]
    m = edges[keep, l]
    n = int(z.size)
    if n < 2 * min_per_bin:
        return inconclusive(f"conditional-pmf l={l}", n)
    n_bins = max(1, n // min_per_bin)
    order = np.argsort(z, kind="stable")
    stat, dof = 0.0, 0
    m_max = int(max(m.max(), 4 * math.sqrt(z.max()) + 40))
    for idx in np.array_split(order, n_bins):
        pmf = conditional_pmf_table(z[idx], m_max)
        expected = pmf.sum(axis=0)
        observed = np.bincount(m[idx] - 1, minlength=m_max)[:m_max].astype(float)
        s, d = chi_square_parts(observed, expected)
        stat += s
        dof += d
    return chi_square_from_parts(stat, dof, n, f"conditional-pmf L={L} t={t} l={l}")


def conditioned_gamma_check(L: int, t: int, N: int, rng: np.random.Generator):
    """L_1 at D_t on {L_L = 0} against Gamma(t, (L-1)/L).

    Returns (KS report, mean, SE, predicted mean).
    """
    if t > 10 * L * L:
        raise DomainError("t beyond 10 L^2")
    local, _, _ = ctrw_runs(L, t, "returns", N, rng)
    sub = local[local[:, L] == 0, 1]
    target = t * (L - 1) / L
    if sub.size == 0:
        return inconclusive(f"conditioned-gamma L={L} t={t}"), math.nan, math.nan, target
    scale = (L - 1) / L
    rep = ks_test_cdf(sub, lambda x: sps.gamma.cdf(x, t, scale=scale),
                      name=f"conditioned-gamma L={L} t={t}")
    mean, se = mean_se(sub)
    return rep, mean, se, target


def conditional_loctime_ld_check(L: int, t: float, l: int, N: int, rng: np.random.Generator) -> TestReport:
    """L_l at D_t given edge counts is Gamma(T_{l-1} + T_l, 1/2): two-sample KS."""
    if not 1 <= l <= L - 1:
        raise DomainError("need 1 <= l <= L-1")
    local, edges, _ = ctrw_runs(L, t, "returns", N, rng)
    shape = edges[:, l - 1] + edges[:, l]
    pos = shape > 0
    ref = rng.gamma(shape[pos], 0.5)
    return ks_test(local[pos, l], ref, name=f"loctime-given-edges L={L} t={t} l={l}")
