"""Brownian bridges, squared Bessel processes and bridges to zero."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

POSITIVITY_FLOOR = 1e-12
BARRIER_CONSTANT = 1.0


@dataclass(frozen=True)
class PathSample:
    """A trajectory on a uniform grid over [0, T].

    ``signed`` keeps the underlying Brownian coordinate when a d=1 path is
    built as a square, so sign changes between grid points can be seen.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str
    dimension: int | None = None
    start: float = 0.0
    end: float | None = None
    signed: np.ndarray | None = None

    @property
    def T(self) -> float:
        return float(self.grid[-1])


def uniform_grid(T: float, M: int) -> np.ndarray:
    if T <= 0:
        raise DomainError("T must be positive")
    if M < 2:
        raise DomainError("grid needs M >= 2 intervals")
    return np.linspace(0.0, T, M + 1)


# ---------------------------------------------------------------- Brownian bridge


def bb_paths(a: float, b: float, T: float, M: int, n: int, rng: np.random.Generator,
             upto: int | None = None) -> np.ndarray:
    """n bridges from a to b over [0, T] on M intervals, shape (n, M+1).

    Each grid value is drawn from its Gaussian law given the previous one
    and the endpoint. With ``upto`` only the first upto+1 grid values are
    produced.
    """
    grid = uniform_grid(T, M)
    last = M if upto is None else int(upto)
    out = np.empty((n, last + 1))
    out[:, 0] = a
    for i in range(last):
        if i + 1 == M:
            out[:, M] = b
            break
        u, v = grid[i], grid[i + 1]
        rem = T - u
        frac = (v - u) / rem
        mean = out[:, i] + (b - out[:, i]) * frac
        var = (v - u) * (T - v) / rem
        out[:, i + 1] = mean + math.sqrt(var) * rng.standard_normal(n)
    return out


def bb_sample(a: float, b: float, T: float, M: int, rng: np.random.Generator) -> PathSample:
    values = bb_paths(a, b, T, M, 1, rng)[0]
    return PathSample(uniform_grid(T, M), values, "bridge", None, a, b)


def bb_linear_barrier_prob(T: float, a: float, b: float) -> float:
    """P[a 0->0 bridge on [0,T] stays above the line from -a to -b] = 1 - exp(-2ab/T)."""
    if T <= 0:
        raise DomainError("T must be positive")
    if a <= 0 or b <= 0:
        raise DomainError("barrier offsets a, b must be positive")
    return -math.expm1(-2.0 * a * b / T)


def bb_barrier_mc(T: float, a: float, b: float, M: int, n: int, rng: np.random.Generator,
                  chunk: int = 4096) -> tuple[float, float, float, float]:
    """Monte Carlo stay-above probability for the linear barrier.

    Returns (continuous estimate, its SE, grid-only estimate, its SE).
    The continuous estimate multiplies, for each grid interval, the exact
    probability that the bridge between two grid values avoids the
    (straight) barrier, exp(-2 d_i d_{i+1} / dt) being the crossing chance.
    """
    grid = uniform_grid(T, M)
    line = -a + (a - b) * grid / T
    dt = T / M
    cont, disc = [], []
    done = 0
    while done < n:
        k = min(chunk, n - done)
        x = bb_paths(0.0, 0.0, T, M, k, rng)
        gap = x - line
        above = np.all(gap > 0, axis=1)
        d0, d1 = np.clip(gap[:, :-1], 0, None), np.clip(gap[:, 1:], 0, None)
        with np.errstate(divide="ignore"):
            log_surv = np.sum(np.log1p(-np.exp(-2.0 * d0 * d1 / dt)), axis=1)
        cont.append(np.where(above, np.exp(log_surv), 0.0))
        disc.append(above.astype(float))
        done += k
    cont = np.concatenate(cont)
    disc = np.concatenate(disc)
    return (float(cont.mean()), float(cont.std(ddof=1) / math.sqrt(n)),
            float(disc.mean()), float(disc.std(ddof=1) / math.sqrt(n)))


def integer_time_barrier_mc(T: int, a: float, b: float, n: int, rng: np.random.Generator,
                            chunk: int = 4096) -> tuple[float, float]:
    """P[0->0 bridge stays above the line -a..-b at integer times 0..T]."""
    line = -a + (a - b) * np.arange(T + 1) / T
    hits = 0
    done = 0
    while done < n:
        k = min(chunk, n - done)
        x = bb_paths(0.0, 0.0, float(T), int(T), k, rng)
        hits += int(np.sum(np.all(x >= line, axis=1)))
        done += k
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


def discrete_barrier_bound(T: float, a: float, b: float, t1: float = 0.0, t2: float = 0.0,
                           c: float = BARRIER_CONSTANT) -> float:
    """(c + a + sqrt t1)(c + b + sqrt t2) / (T - t1 - t2)."""
    if t1 + t2 >= T:
        raise DomainError("need t1 + t2 < T")
    if a <= 0 or b <= 0:
        raise DomainError("a, b must be positive")
    return (c + a + math.sqrt(t1)) * (c + b + math.sqrt(t2)) / (T - t1 - t2)


def barrier_bound_shape(T: float, a: float, b: float, t1: float, t2: float) -> float:
    """Constant-free form (a + sqrt t1)(b + sqrt t2) / (T - t1 - t2)."""
    if t1 + t2 >= T:
        raise DomainError("need t1 + t2 < T")
    return (a + math.sqrt(t1)) * (b + math.sqrt(t2)) / (T - t1 - t2)


# ---------------------------------------------------------------- squared Bessel


def besq0_step(y: np.ndarray, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Exact BESQ^0 transition over dt: Gamma(N, 2 dt) with N ~ Poisson(y / (2 dt))."""
    y = np.asarray(y, dtype=float)
    n = rng.poisson(y / (2.0 * dt))
    out = np.zeros_like(y)
    pos = n > 0
    if np.any(pos):
        out[pos] = rng.gamma(n[pos], 2.0 * dt)
    return out


def besq_at_times(d: int, x: float, times: np.ndarray, n: int, rng: np.random.Generator,
                  method: str = "additive") -> np.ndarray:
    """BESQ^d from x sampled at increasing times (first may be 0); shape (n, len(times)).

    "additive": a BESQ^0 part from x plus d squared Brownian coordinates
    from 0. "direct": one coordinate started at sqrt(x) and d-1 from 0.
    """
    if d < 0 or x < 0:
        raise DomainError("need d >= 0 and x >= 0")
    times = np.asarray(times, dtype=float)
    out = np.zeros((n, times.size))
    if method == "additive":
        y = np.full(n, float(x))
        coords = np.zeros((d, n))
        prev = 0.0
        for j, s in enumerate(times):
            dt = s - prev
            if dt > 0:
                y = besq0_step(y, dt, rng)
                coords = coords + math.sqrt(dt) * rng.standard_normal((d, n))
            out[:, j] = y + np.sum(coords ** 2, axis=0)
            prev = s
    elif method == "direct":
        if d < 1:
            raise DomainError("direct construction needs d >= 1")
        coords = np.zeros((d, n))
        coords[0] = math.sqrt(x)
        prev = 0.0
        for j, s in enumerate(times):
            dt = s - prev
            if dt > 0:
                coords = coords + math.sqrt(dt) * rng.standard_normal((d, n))
            out[:, j] = np.sum(coords ** 2, axis=0)
            prev = s
    else:
        raise DomainError(f"unknown BESQ method {method!r}")
    return out


def besq_sample(d: int, x: float, T: float, M: int, rng: np.random.Generator,
                method: str = "additive") -> PathSample:
    grid = uniform_grid(T, M)
    values = besq_at_times(d, x, grid, 1, rng, method)[0]
    return PathSample(grid, values, "besq", d, x, None)


def bridge_clock(grid: np.ndarray, T: float) -> np.ndarray:
    """Time change u = s / (1 - s/T) for s < T."""
    return grid / (1.0 - grid / T)


def besq_bridge_to_zero_paths(d: int, x: float, T: float, M: int, n: int, rng: np.random.Generator,
                              upto: int | None = None) -> np.ndarray:
    """(1 - s/T)^2 X_{s/(1-s/T)} for X ~ BESQ^d from x; last value exactly 0."""
    grid = uniform_grid(T, M)
    last = M if upto is None else int(upto)
    inner = grid[:min(last, M - 1) + 1]
    vals = besq_at_times(d, x, bridge_clock(inner, T), n, rng)
    vals *= (1.0 - inner / T) ** 2
    if last == M:
        vals = np.concatenate([vals, np.zeros((n, 1))], axis=1)
    return vals


def besq_bridge_to_zero_sample(d: int, x: float, T: float, M: int, rng: np.random.Generator) -> PathSample:
    grid = uniform_grid(T, M)
    values = besq_bridge_to_zero_paths(d, x, T, M, 1, rng)[0]
    return PathSample(grid, values, "besq-bridge", d, x, 0.0)


def bessel1_bridge_signed(x: float, T: float, M: int, n: int, rng: np.random.Generator,
                          upto: int | None = None) -> np.ndarray:
    """Brownian bridge from sqrt(x) to 0; its square is the d=1 bridge to zero."""
    return bb_paths(math.sqrt(x), 0.0, T, M, n, rng, upto=upto)


# ---------------------------------------------------------------- change of dimension


def rn_weights(values: np.ndarray, dt: float, S_index: int, T: float, x: float,
               signed: np.ndarray | None = None) -> np.ndarray:
    """Vectorized weight for paths in rows of ``values`` (grid spacing dt).

    Weight is 0 when a path reaches 0 on [0, S], including sign changes of
    the signed coordinate between grid points when it is supplied.
    """
    v = np.asarray(values, dtype=float)[:, :S_index + 1]
    S = S_index * dt
    alive = np.all(v[:, 1:] > 0, axis=1)
    if signed is not None:
        s = np.asarray(signed)[:, :S_index + 1]
        alive &= np.all(s[:, 1:] * s[:, :-1] > 0, axis=1)
    floored = np.maximum(v, POSITIVITY_FLOOR)
    inv = 1.0 / floored
    integral = dt * (inv[:, 1:-1].sum(axis=1) + 0.5 * (inv[:, 0] + inv[:, -1]))
    w = ((1.0 - S / T) ** 2 * x / floored[:, -1]) ** 0.25 * np.exp(-0.375 * integral)
    return np.where(alive, w, 0.0)


def rn_weight_zero_vs_one(path: PathSample, S: float, x: float) -> float:
    """Density of the BESQ^0 bridge law against the BESQ^1 bridge law on {H_0 > S}."""
    T = path.T
    if not 0 < S < T:
        raise DomainError("need 0 < S < T")
    dt = float(path.grid[1] - path.grid[0])
    k = int(round(S / dt))
    if abs(k * dt - S) > 1e-9 * max(1.0, S):
        raise DomainError("S must be a grid time")
    signed = None if path.signed is None else path.signed[None, :]
    return float(rn_weights(path.values[None, :], dt, k, T, x, signed)[0])


def q0_bridge_survival(x: float, T: float, S: float) -> float:
    """P[BESQ^0 bridge to zero from x has not hit 0 by S] = 1 - exp(-x (1 - S/T) / (2S))."""
    u = S / (1.0 - S / T)
    return -math.expm1(-x / (2.0 * u))


# ---------------------------------------------------------------- tube event


def tube_barriers(T: float, grid: np.ndarray, u: float = 0.0):
    g = np.minimum(grid, T - grid)
    shift = u * (T - grid) / T
    return shift + np.power(g, 0.499), shift + np.power(g, 0.501)


def tube_probability_mc(T: float, t: float, u: float, v: float, M: int, N: int,
                        rng: np.random.Generator, chunk: int = 2048):
    """Grid-level estimates for a bridge from u+v to 0 over [0, T].

    p_tube: stays between h_0.499 and h_0.501 (shifted by the line
    u(T-s)/T) on [t, T-t] and above -T/10000 on [0, t].
    p_above: stays above the shifted zero level on [t, T-t].
    Returns (p_tube, p_above, ratio, se_tube, se_above).
    """
    if not 1 <= t < T / 3:
        raise DomainError("need 1 <= t < T/3")
    grid = uniform_grid(T, M)
    low, high = tube_barriers(T, grid, u)
    shift = u * (T - grid) / T
    mid = (grid >= t) & (grid <= T - t)
    early = grid < t
    tube = above = 0
    done = 0
    while done < N:
        k = min(chunk, N - done)
        x = bb_paths(u + v, 0.0, T, M, k, rng)
        ok_mid = np.all((x[:, mid] >= low[mid]) & (x[:, mid] <= high[mid]), axis=1)
        ok_early = np.all(x[:, early] - shift[early] >= -T / 10000.0, axis=1)
        tube += int(np.sum(ok_mid & ok_early))
        above += int(np.sum(np.all(x[:, mid] >= shift[mid], axis=1)))
        done += k
    p_tube, p_above = tube / N, above / N
    ratio = p_tube / p_above if p_above > 0 else math.nan
    return (p_tube, p_above, ratio,
            math.sqrt(p_tube * (1 - p_tube) / N), math.sqrt(p_above * (1 - p_above) / N))
