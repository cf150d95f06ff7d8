"""Critical Galton-Watson process with geometric(1/2) offspring.

Samplers, closed-form extinction, an exact windowed dynamic program for
barrier events (optionally conditioned on extinction), compound
binomial-geometric counters and immigration processes.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable, Iterable

import numpy as np
from numba import njit

from .errors import DomainError, TruncationError
from .scales import BarrierSet

TRUNCATION_TOL = 1e-9
REJECTION_MIN_ACCEPT = 1e-4


def floor_budget(t: float) -> int:
    if t < 0:
        raise DomainError(f"budget must be nonnegative, got {t}")
    return int(math.floor(t))


@dataclass(frozen=True)
class TraversalProfile:
    counts: np.ndarray
    budget: float
    origin: tuple[float, float] | None = None

    def extinct_at(self, l: int) -> bool:
        return bool(self.counts[l] == 0)


@dataclass(frozen=True)
class GwLaw:
    initial_population: int
    horizon: int

    @classmethod
    def from_budget(cls, t: float, horizon: int) -> "GwLaw":
        return cls(floor_budget(t), int(horizon))

    def sample_many(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return gw_sample_many(self.initial_population, self.horizon, n, rng)


def offspring_sample(rng: np.random.Generator, size=None):
    """Offspring count k with probability 2^-(k+1)."""
    return rng.geometric(0.5, size=size) - 1


def _offspring_sum(a: np.ndarray, rng: np.random.Generator, success: float = 0.5) -> np.ndarray:
    # sum of a iid geometric{0,1,..} draws is negative binomial (failures before a successes)
    out = np.zeros_like(a)
    alive = a > 0
    if alive.any():
        out[alive] = rng.negative_binomial(a[alive], success)
    return out


def gw_sample(t: float, horizon: int, rng: np.random.Generator) -> TraversalProfile:
    counts = gw_sample_many(t, horizon, 1, rng)[0]
    return TraversalProfile(counts=counts, budget=float(t))


def gw_sample_many(t: float, horizon: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent profiles as an (n, horizon+1) integer array."""
    out = np.zeros((n, horizon + 1), dtype=np.int64)
    out[:, 0] = floor_budget(t)
    for l in range(horizon):
        out[:, l + 1] = _offspring_sum(out[:, l], rng)
    return out


def gw_sample_bruteforce(t: float, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Individual-by-individual reference sampler (slow)."""
    counts = np.zeros(horizon + 1, dtype=np.int64)
    counts[0] = floor_budget(t)
    for l in range(horizon):
        counts[l + 1] = int(np.sum(offspring_sample(rng, size=int(counts[l])))) if counts[l] else 0
    return counts


def extinction_prob(L: int, t: float) -> float:
    """P[T_{L-1} = 0] = (1 - 1/L)^floor(t)."""
    if L < 2:
        raise DomainError(f"extinction probability needs L >= 2, got L={L}")
    return (1.0 - 1.0 / L) ** floor_budget(t)


def survival_ratio(L: int, l: int) -> float:
    """Probability that one individual at generation l has no descendants at L-1."""
    return (L - 1.0 - l) / (L - l)


def extinction_weight(L: int, l: int, a) -> np.ndarray:
    return survival_ratio(L, l) ** np.asarray(a, dtype=float)


def transition_pmf(a: int, b: int) -> float:
    """P[T_{l+1} = b | T_l = a] = C(a+b-1, a-1) 2^-(a+b)."""
    if a < 0 or b < 0:
        raise DomainError("populations must be nonnegative")
    if a == 0:
        return 1.0 if b == 0 else 0.0
    if a + b < 1000:
        return math.comb(a + b - 1, a - 1) / 2 ** (a + b)
    return math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b + 1) - (a + b) * math.log(2.0))


# ---------------------------------------------------------------- dynamic program


@njit(cache=True)
def _nb_logpmf(a, b, log1m, logth):
    return math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b + 1.0) + a * log1m + b * logth


@njit(cache=True)
def _dp_step(p, lo, theta, new_lo, new_hi, cap, count_overflow, log_w_src, log_w_dst, prune, tol):
    """Push a window of population mass through one generation.

    Population a moves to NB(a, 1-theta). Only targets in [new_lo, new_hi]
    are kept. Returns the new window and the (weighted) mass lost to
    pruning of negligible sources or to overflow past cap.
    """
    width = new_hi - new_lo + 1
    out = np.zeros(max(width, 0))
    lost = 0.0
    for i in range(p.size):
        m = p[i]
        if m == 0.0:
            continue
        a = lo + i
        if m * math.exp(a * log_w_src) < prune:
            lost += m * math.exp(a * log_w_src)
            continue
        if a == 0 or theta == 0.0:
            if new_lo <= 0 and 0 <= new_hi:
                out[-new_lo] += m
            continue
        if width <= 0:
            continue
        log1m = math.log1p(-theta)
        logth = math.log(theta)
        mode = int(math.floor((a - 1) * theta / (1.0 - theta)))
        if mode < 0:
            mode = 0
        top = _nb_logpmf(a, mode, log1m, logth)
        floor_level = top + math.log(tol)
        # start inside the window, as close to the mode as possible
        start = mode
        if start < new_lo:
            start = new_lo
        if start > new_hi:
            start = new_hi
        lp = _nb_logpmf(a, start, log1m, logth)
        if lp >= floor_level:
            pb = math.exp(lp)
            b = start
            while True:
                out[b - new_lo] += m * pb
                if b >= new_hi:
                    break
                pb *= (a + b) / (b + 1.0) * theta
                b += 1
                if b > mode and pb < math.exp(floor_level):
                    break
            pb = math.exp(lp)
            b = start
            while b > new_lo:
                pb *= b / (a + b - 1.0) / theta
                b -= 1
                if b < mode and pb < math.exp(floor_level):
                    break
                out[b - new_lo] += m * pb
        if count_overflow and new_hi == cap:
            b = cap + 1
            lpo = _nb_logpmf(a, b, log1m, logth)
            if lpo >= floor_level or b <= mode:
                pb = math.exp(lpo)
                while True:
                    lost += m * pb * math.exp(b * log_w_dst)
                    pb *= (a + b) / (b + 1.0) * theta
                    b += 1
                    if b > mode and pb < math.exp(floor_level):
                        break
    return out, lost


@dataclass(frozen=True)
class DpResult:
    """Outcome of the barrier dynamic program.

    probability is conditional on extinction when conditioned is set;
    joint is P[barrier event and extinction] in that case.
    """

    probability: float
    joint: float
    extinction: float
    truncated_mass: float
    conditioned: bool
    method: str


def _as_count_bounds(L, lower, upper, levels, cap):
    lo = np.zeros(L, dtype=np.int64)
    hi = np.full(L, cap, dtype=np.int64)
    checked = np.zeros(L, dtype=bool)
    for l in levels:
        if not 0 <= l <= L - 1:
            continue
        checked[l] = True
        if lower is not None:
            v = float(lower(l))
            if v > 0:
                lo[l] = int(math.ceil(v - 1e-9 * max(1.0, v)))
        if upper is not None:
            v = float(upper(l))
            if v < 0:
                hi[l] = -1
            elif v < cap:
                hi[l] = int(math.floor(v + 1e-9 * max(1.0, v)))
    return lo, hi, checked


def _trim(p, lo, floor_value=0.0):
    nz = np.nonzero(p > floor_value)[0]
    if nz.size == 0:
        return np.zeros(0), lo
    return p[nz[0]:nz[-1] + 1].copy(), lo + int(nz[0])


def barrier_prob_dp(L: int, t: float, lower: Callable | None = None, upper: Callable | None = None,
                    condition_extinct: bool = False, cap: int | None = None,
                    levels: Iterable[int] | None = None, method: str = "tilted",
                    tol: float = TRUNCATION_TOL, marginals: bool = False):
    """Exact probability that lower(l) <= T_l <= upper(l) for every checked l.

    Bounds act on the population count itself. With condition_extinct the
    result is conditioned on T_{L-1} = 0, computed either by running the
    process under its extinction-tilted kernel (method="tilted"; each
    individual at generation l has geometric offspring with ratio
    q_{l+1}/2) or by weighting the plain forward recursion with the
    extinction weights ((L-1-l)/(L-l))^a (method="weighted").
    With marginals=True also returns the per-generation windows.
    """
    if L < 2:
        raise DomainError(f"DP needs L >= 2, got L={L}")
    t0 = floor_budget(t)
    if cap is None:
        cap = 3 * t0 + 40 * L + 100
    if cap < t0:
        raise DomainError(f"cap {cap} below the initial population {t0}")
    if method not in ("tilted", "weighted"):
        raise DomainError(f"unknown DP method {method!r}")
    levels = range(L) if levels is None else list(levels)
    lo_b, hi_b, checked = _as_count_bounds(L, lower, upper, levels, cap)
    ext = extinction_prob(L, t0)
    tilted = condition_extinct and method == "tilted"
    weighted = condition_extinct and method == "weighted"
    if weighted:
        # the extinction event is itself a barrier at the last generation
        hi_b[L - 1] = min(hi_b[L - 1], 0)
        checked[L - 1] = True
    prune = 1e-25 * (ext if weighted else 1.0)

    history = []
    if checked[0] and not lo_b[0] <= t0 <= hi_b[0]:
        p, lo = np.zeros(0), 0
    else:
        p, lo = np.array([1.0]), t0
    history.append((p, lo))
    lost = 0.0
    for l in range(L - 1):
        if p.size == 0:
            history.append((p, 0))
            continue
        if tilted:
            theta = 0.5 * survival_ratio(L, l + 1)
            lw_src = lw_dst = 0.0
        else:
            theta = 0.5
            lw_src = math.log(survival_ratio(L, l)) if weighted and l < L - 1 else 0.0
            nxt = survival_ratio(L, l + 1)
            lw_dst = (math.log(nxt) if nxt > 0 else -np.inf) if weighted else 0.0
        new_lo = int(lo_b[l + 1]) if checked[l + 1] else 0
        new_hi = int(hi_b[l + 1]) if checked[l + 1] else cap
        count_overflow = (not checked[l + 1]) or hi_b[l + 1] >= cap
        p, step_lost = _dp_step(p, lo, theta, new_lo, new_hi, cap, count_overflow,
                                lw_src, lw_dst, prune, 1e-20)
        lost += step_lost
        p, lo = _trim(p, new_lo)
        history.append((p, lo))
    final = float(p.sum()) if p.size else 0.0
    if weighted:
        joint = final
        truncated = lost / ext if ext > 0 else lost
        prob = joint / ext if ext > 0 else math.nan
    elif tilted:
        prob = final
        joint = prob * ext
        truncated = lost
    else:
        prob = joint = final
        truncated = lost
    if truncated > tol:
        raise TruncationError(
            f"truncated mass {truncated:.3e} exceeds {tol:.0e}; increase cap (currently {cap})", truncated)
    result = DpResult(prob, joint, ext, truncated, bool(condition_extinct), method)
    if marginals:
        return result, history
    return result


def sqrt_bounds(fn: Callable | None) -> Callable | None:
    """Turn a barrier on the square-root scale into one on the count scale."""
    if fn is None:
        return None

    def count_bound(l):
        v = float(fn(l))
        return math.copysign(v * v, v)
    return count_bound


def effective_cutoff(bars: BarrierSet, minimum: int = 2) -> int:
    return max(bars.l0, minimum)


def barrier_preset(name: str, bars: BarrierSet, l0_eff: int | None = None):
    """(lower, upper, levels) on the count scale for a named barrier preset.

    "alpha": sqrt(T_l) >= alpha(l) on 0..L-1.
    "gamma-delta": gamma(l) <= sqrt(T_l) <= delta(l) on l0..L-l0.
    "none": no constraint.
    """
    L = bars.L
    if name == "none":
        return None, None, []
    if name == "alpha":
        return sqrt_bounds(bars.alpha), None, list(range(L))
    if name == "gamma-delta":
        k = effective_cutoff(bars) if l0_eff is None else l0_eff
        return sqrt_bounds(bars.gamma), sqrt_bounds(bars.delta), list(range(k, min(L - k, L - 1) + 1))
    raise DomainError(f"unknown barrier preset {name!r}")


def tilted_sample_many(t: float, L: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Profiles on generations 0..L-1 drawn from the law conditioned on T_{L-1} = 0.

    Conditioning a critical geometric process on extinction by L-1 keeps it
    a branching process whose offspring at generation l is geometric with
    ratio q_{l+1}/2, so forward sampling is exact and needs no weights.
    """
    out = np.zeros((n, L), dtype=np.int64)
    out[:, 0] = floor_budget(t)
    for l in range(L - 1):
        theta = 0.5 * survival_ratio(L, l + 1)
        out[:, l + 1] = _offspring_sum(out[:, l], rng, 1.0 - theta) if theta > 0 else 0
    return out


def conditioned_sample_many(t: float, L: int, n: int, rng: np.random.Generator,
                            method: str = "auto") -> np.ndarray:
    """n profiles (generations 0..L-1) conditioned on extinction at L-1.

    Rejection is used while the acceptance probability is at least 1e-4,
    otherwise the tilted forward sampler.
    """
    ext = extinction_prob(L, t)
    if method == "auto":
        method = "rejection" if ext >= REJECTION_MIN_ACCEPT else "tilted"
    if method == "tilted":
        return tilted_sample_many(t, L, n, rng)
    if method != "rejection":
        raise DomainError(f"unknown sampling method {method!r}")
    kept = []
    have = 0
    batch = max(1000, int(1.2 * n / max(ext, 1e-12)))
    batch = min(batch, 2_000_000)
    while have < n:
        draw = gw_sample_many(t, L - 1, batch, rng)
        ok = draw[draw[:, L - 1] == 0]
        kept.append(ok)
        have += ok.shape[0]
    return np.concatenate(kept)[:n]


# ---------------------------------------------------------------- compound law


@dataclass(frozen=True)
class CompoundParams:
    n: int
    p: float
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be positive")
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise DomainError("p and q must lie in (0, 1)")

    @property
    def mean(self) -> float:
        return self.n * self.q / self.p


def compound_sample(params: CompoundParams, rng: np.random.Generator, size=None):
    """Sum of n terms J_i G_i with J_i ~ Bernoulli(q), G_i ~ Geometric{1,2,..}(p).

    Drawn as K + NB(K, p) with K ~ Binomial(n, q).
    """
    k = np.asarray(rng.binomial(params.n, params.q, size=size))
    extra = np.zeros_like(k)
    pos = k > 0
    if np.any(pos):
        extra[pos] = rng.negative_binomial(k[pos], params.p)
    total = k + extra
    return int(total) if size is None else total


def compound_sample_direct(params: CompoundParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """Term-by-term reference sampler."""
    j = rng.random((size, params.n)) < params.q
    g = rng.geometric(params.p, size=(size, params.n))
    return np.sum(j * g, axis=1)


def compound_pmf(params: CompoundParams, s_max: int) -> np.ndarray:
    """Exact pmf of the compound sum on 0..s_max."""
    from scipy import stats

    k = np.arange(params.n + 1)
    wk = stats.binom.pmf(k, params.n, params.q)
    out = np.zeros(s_max + 1)
    out[0] = wk[0]
    for kk in range(1, params.n + 1):
        s = np.arange(kk, s_max + 1)
        if s.size == 0:
            break
        out[kk:] += wk[kk] * stats.nbinom.pmf(s - kk, kk, params.p)
    return out


def ld_bound_compound(params: CompoundParams, theta: float) -> float:
    """Lower-tail bound exp(-(sqrt(q theta) - sqrt(p n))^2) for theta <= nq/p."""
    if theta > params.mean * (1 + 1e-12):
        raise DomainError(f"theta={theta} beyond the mean {params.mean}; bound not valid")
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    return math.exp(-(math.sqrt(params.q * theta) - math.sqrt(params.p * params.n)) ** 2)


# ---------------------------------------------------------------- immigration


def immigration_gw_sample_many(n: int, k: int, k_plus: int, horizon: int, size: int,
                               rng: np.random.Generator) -> np.ndarray:
    """n founders join at each generation k..k_plus; returns (size, horizon+1)."""
    if not 0 <= k <= k_plus <= horizon:
        raise DomainError("need 0 <= k <= k_plus <= horizon")
    out = np.zeros((size, horizon + 1), dtype=np.int64)
    for l in range(k, horizon + 1):
        if l > k:
            out[:, l] = _offspring_sum(out[:, l - 1], rng)
        if l <= k_plus:
            out[:, l] += n
    return out


def immigration_gw_sample(n: int, k: int, k_plus: int, horizon: int,
                          rng: np.random.Generator) -> TraversalProfile:
    counts = immigration_gw_sample_many(n, k, k_plus, horizon, 1, rng)[0]
    return TraversalProfile(counts=counts, budget=float(n))
