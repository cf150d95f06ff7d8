"""Brownian motion on the unit torus: stepping, exit laws, excursion counting."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from numba import njit

from .errors import DomainError
from .gw import TraversalProfile, floor_budget
from .rng import DEFAULT_SEED
from .scales import ScaleSystem

DT_POLICIES = ("fixed", "proximity")
RETURN, DEPARTURE = 0, 1
MAX_SPLIT_DEPTH = 40


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % 1.0)
        object.__setattr__(self, "y", float(self.y) % 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def shifted(self, dx: float, dy: float) -> "TorusPoint":
        return TorusPoint(self.x + dx, self.y + dy)


def min_image(d):
    d = np.asarray(d, dtype=float)
    return d - np.floor(d + 0.5)


def torus_distance(p, q) -> float:
    a = p.as_array() if isinstance(p, TorusPoint) else np.asarray(p, dtype=float)
    b = q.as_array() if isinstance(q, TorusPoint) else np.asarray(q, dtype=float)
    return float(np.hypot(*min_image(b - a)))


@dataclass(frozen=True)
class SimConfig:
    """Time stepping. With the proximity policy the step shrinks to
    dt (d/rho_ref)^2 (never below dt_min) when the path is within rho_ref of
    a circle whose crossing is the next event of interest."""

    dt: float = 1e-5
    dt_policy: str = "fixed"
    seed: int = DEFAULT_SEED
    rho_ref: float | None = None
    dt_min: float | None = None
    max_time: float = 1e5

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.dt_policy not in DT_POLICIES:
            raise DomainError(f"dt_policy must be one of {DT_POLICIES}")

    @property
    def adaptive(self) -> bool:
        return self.dt_policy == "proximity"

    @property
    def reference_distance(self) -> float:
        return 3.0 * math.sqrt(self.dt) if self.rho_ref is None else self.rho_ref

    @property
    def smallest_step(self) -> float:
        return self.dt * 1e-4 if self.dt_min is None else self.dt_min

    def refined(self, factor: float) -> "SimConfig":
        """Same policy with every time scale divided by factor."""
        return SimConfig(self.dt / factor, self.dt_policy, self.seed,
                         None if self.rho_ref is None else self.rho_ref / math.sqrt(factor),
                         None if self.dt_min is None else self.dt_min / factor, self.max_time)


@dataclass
class ExcursionLog:
    center: TorusPoint
    R: float
    r: float
    kinds: np.ndarray
    times: np.ndarray
    locations: np.ndarray
    complete: bool = True

    @property
    def returns(self) -> np.ndarray:
        return self.times[self.kinds == RETURN]

    @property
    def departures(self) -> np.ndarray:
        return self.times[self.kinds == DEPARTURE]


# ---------------------------------------------------------------- numba kernels


@njit(cache=True, inline="always")
def _wrap(d):
    return d - math.floor(d + 0.5)


@njit(cache=True, inline="always")
def _seg_dist(ax, ay, bx, by):
    """Distance from the origin to the segment a-b."""
    vx = bx - ax
    vy = by - ay
    vv = vx * vx + vy * vy
    if vv <= 0.0:
        return math.sqrt(ax * ax + ay * ay)
    s = -(ax * vx + ay * vy) / vv
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    px = ax + s * vx
    py = ay + s * vy
    return math.sqrt(px * px + py * py)


@njit(cache=True)
def _exit_times(R, z, dt, n, rng):
    """Planar exit times of B(0,R) from (z, 0); Gaussian steps of variance dt."""
    out = np.empty(n)
    sd = math.sqrt(dt)
    R2 = R * R
    for i in range(n):
        x = z
        y = 0.0
        t = 0.0
        while x * x + y * y <= R2:
            x += sd * rng.standard_normal()
            y += sd * rng.standard_normal()
            t += dt
        out[i] = t
    return out


@njit(cache=True)
def _hit_times(x0, y0, cx, cy, r, dt, n, t_max, rng):
    """Torus hitting times of B(c, r) from (x0, y0); inf when t_max is reached first."""
    out = np.empty(n)
    sd = math.sqrt(dt)
    for i in range(n):
        ax = _wrap(x0 - cx)
        ay = _wrap(y0 - cy)
        t = 0.0
        hit = ax * ax + ay * ay <= r * r
        while not hit and t < t_max:
            bx = ax + sd * rng.standard_normal()
            by = ay + sd * rng.standard_normal()
            t += dt
            if _seg_dist(ax, ay, bx, by) <= r:
                hit = True
            ax = _wrap(bx)
            ay = _wrap(by)
        out[i] = t if hit else np.inf
    return out


@njit(cache=True)
def _annulus_hits(r, rho, R, dt, n, rng):
    """Start on the rho-circle; True when B(0,r) is reached before leaving B(0,R)."""
    out = np.zeros(n, dtype=np.bool_)
    sd = math.sqrt(dt)
    R2 = R * R
    for i in range(n):
        x = rho
        y = 0.0
        while True:
            nx = x + sd * rng.standard_normal()
            ny = y + sd * rng.standard_normal()
            if _seg_dist(x, y, nx, ny) <= r:
                out[i] = True
                break
            if nx * nx + ny * ny > R2:
                break
            x = nx
            y = ny
    return out


@njit(cache=True)
def _track(x0, y0, cx, cy, Ro, Ri, n_dep, dt, adaptive, rho_ref, dt_min, t_max, rng,
           log_cap, ev_kind, ev_time, ev_x, ev_y):
    """Excursion counters for K centres, J circle pairs each.

    Counter (k, j) registers a return when the path enters B(c_k, Ri[k,j])
    and a departure when it next leaves B(c_k, Ro[k,j]). Tracker k starts
    counting once outside B(c_k, Ro[k,0]) and stops at the n_dep-th
    departure of its counter 0. Events of tracker 0, counter 0 are logged.
    """
    K = cx.size
    J = Ro.shape[1]
    counts = np.zeros((K, J), dtype=np.int64)
    need_ret = np.ones((K, J), dtype=np.bool_)
    deps = np.zeros(K, dtype=np.int64)
    done = np.zeros(K, dtype=np.bool_)
    armed = np.zeros(K, dtype=np.bool_)
    stop_time = np.full(K, np.nan)
    min_dist = np.full(K, np.inf)
    n_ev = 0
    x = x0
    y = y0
    t = 0.0
    active = K
    for k in range(K):
        ax = _wrap(x - cx[k])
        ay = _wrap(y - cy[k])
        if math.sqrt(ax * ax + ay * ay) > Ro[k, 0]:
            armed[k] = True
        if n_dep == 0:
            done[k] = True
            stop_time[k] = 0.0
            active -= 1
    st_x = np.empty(MAX_SPLIT_DEPTH + 2)
    st_y = np.empty(MAX_SPLIT_DEPTH + 2)
    st_h = np.empty(MAX_SPLIT_DEPTH + 2)
    st_d = np.empty(MAX_SPLIT_DEPTH + 2, dtype=np.int64)
    ret_hit = np.zeros(J, dtype=np.bool_)
    dep_hit = np.zeros(J, dtype=np.bool_)
    while active > 0 and t < t_max:
        h = dt
        if adaptive:
            dmin = np.inf
            for k in range(K):
                if done[k]:
                    continue
                ax = _wrap(x - cx[k])
                ay = _wrap(y - cy[k])
                d = math.sqrt(ax * ax + ay * ay)
                if not armed[k]:
                    dd = abs(d - Ro[k, 0])
                    if dd < dmin:
                        dmin = dd
                    continue
                for j in range(J):
                    rad = Ri[k, j] if need_ret[k, j] else Ro[k, j]
                    dd = abs(d - rad)
                    if dd < dmin:
                        dmin = dd
            if dmin < rho_ref:
                h = dt * (dmin / rho_ref) ** 2
                if h < dt_min:
                    h = dt_min
        sd = math.sqrt(h)
        top = 0
        st_x[0] = sd * rng.standard_normal()
        st_y[0] = sd * rng.standard_normal()
        st_h[0] = h
        st_d[0] = 0
        while top >= 0 and active > 0:
            sx = st_x[top]
            sy = st_y[top]
            sh = st_h[top]
            depth = st_d[top]
            # does any tracker see a mixed return/departure inside this piece?
            ambiguous = False
            if depth < MAX_SPLIT_DEPTH:
                for k in range(K):
                    if done[k] or not armed[k]:
                        continue
                    ax = _wrap(x - cx[k])
                    ay = _wrap(y - cy[k])
                    bx = ax + sx
                    by = ay + sy
                    db = math.sqrt(bx * bx + by * by)
                    ds = _seg_dist(ax, ay, bx, by)
                    any_ret = False
                    any_dep = False
                    for j in range(J):
                        if need_ret[k, j]:
                            if ds <= Ri[k, j]:
                                any_ret = True
                                if db > Ro[k, j]:
                                    any_dep = True
                        else:
                            if db > Ro[k, j]:
                                any_dep = True
                                if ds <= Ri[k, j]:
                                    any_ret = True
                    if any_ret and any_dep:
                        ambiguous = True
                        break
            if ambiguous:
                # split with a Brownian bridge midpoint; second half stays below
                mx = 0.5 * sx + math.sqrt(sh / 4.0) * rng.standard_normal()
                my = 0.5 * sy + math.sqrt(sh / 4.0) * rng.standard_normal()
                st_x[top] = sx - mx
                st_y[top] = sy - my
                st_h[top] = 0.5 * sh
                st_d[top] = depth + 1
                top += 1
                st_x[top] = mx
                st_y[top] = my
                st_h[top] = 0.5 * sh
                st_d[top] = depth + 1
                continue
            top -= 1
            t_end = t + sh
            for k in range(K):
                if done[k]:
                    continue
                ax = _wrap(x - cx[k])
                ay = _wrap(y - cy[k])
                bx = ax + sx
                by = ay + sy
                db = math.sqrt(bx * bx + by * by)
                if not armed[k]:
                    if db > Ro[k, 0]:
                        armed[k] = True
                    continue
                ds = _seg_dist(ax, ay, bx, by)
                if ds < min_dist[k]:
                    min_dist[k] = ds
                for j in range(J):
                    ret_hit[j] = False
                    dep_hit[j] = False
                    if need_ret[k, j]:
                        if ds <= Ri[k, j]:
                            ret_hit[j] = True
                    elif db > Ro[k, j]:
                        dep_hit[j] = True
                for j in range(J):
                    if ret_hit[j]:
                        counts[k, j] += 1
                        need_ret[k, j] = False
                        if k == 0 and j == 0 and n_ev < log_cap:
                            ev_kind[n_ev] = 0
                            ev_time[n_ev] = t_end
                            ev_x[n_ev] = (x + sx) % 1.0
                            ev_y[n_ev] = (y + sy) % 1.0
                            n_ev += 1
                    elif dep_hit[j]:
                        need_ret[k, j] = True
                        if k == 0 and j == 0 and n_ev < log_cap:
                            ev_kind[n_ev] = 1
                            ev_time[n_ev] = t_end
                            ev_x[n_ev] = (x + sx) % 1.0
                            ev_y[n_ev] = (y + sy) % 1.0
                            n_ev += 1
                        if j == 0:
                            deps[k] += 1
                            if deps[k] >= n_dep:
                                done[k] = True
                                stop_time[k] = t_end
                                active -= 1
                                break
            x = (x + sx) % 1.0
            y = (y + sy) % 1.0
            t = t_end
    return counts, stop_time, min_dist, n_ev, t


@njit(cache=True)
def _cycles_pair(x0, y0, R, r, n_total, dt, stride, rng, dep_f, ret_f, dep_c, ret_c):
    """Excursion events seen by a fine observer (every step) and a coarse
    observer (every stride-th position) of the same planar path around 0.

    Fills departure/return time arrays (length n_total) for both and
    returns the number recorded by each.
    """
    sd = math.sqrt(dt)
    R2 = R * R
    x = x0
    y = y0
    cxp = x0
    cyp = y0
    t = 0.0
    nf_d = 0
    nf_r = 0
    nc_d = 0
    nc_r = 0
    f_need = True
    c_need = True
    step = 0
    while nf_d < n_total or nc_d < n_total:
        nx = x + sd * rng.standard_normal()
        ny = y + sd * rng.standard_normal()
        t += dt
        step += 1
        if nf_d < n_total:
            if f_need:
                if _seg_dist(x, y, nx, ny) <= r:
                    ret_f[nf_r] = t
                    nf_r += 1
                    f_need = False
            elif nx * nx + ny * ny > R2:
                dep_f[nf_d] = t
                nf_d += 1
                f_need = True
        if step % stride == 0:
            if nc_d < n_total:
                if c_need:
                    if _seg_dist(cxp, cyp, nx, ny) <= r:
                        ret_c[nc_r] = t
                        nc_r += 1
                        c_need = False
                elif nx * nx + ny * ny > R2:
                    dep_c[nc_d] = t
                    nc_d += 1
                    c_need = True
            cxp = nx
            cyp = ny
        # fold back onto the torus; both observers share the frame
        if nx > 0.5:
            nx -= 1.0
            cxp -= 1.0
        elif nx < -0.5:
            nx += 1.0
            cxp += 1.0
        if ny > 0.5:
            ny -= 1.0
            cyp -= 1.0
        elif ny < -0.5:
            ny += 1.0
            cyp += 1.0
        x = nx
        y = ny
    return nf_d, nc_d


@njit(cache=True)
def _scale_walk(p_in, t0, n, rng):
    """Traversal counts of the scale-index walk; p_in[j] is the chance of moving inward from scale j."""
    L = p_in.size - 1
    out = np.zeros((n, L), dtype=np.int64)
    for i in range(n):
        for e in range(t0):
            out[i, 0] += 1
            j = 1
            while j > 0:
                if j == L:
                    j -= 1
                elif rng.random() < p_in[j]:
                    out[i, j] += 1
                    j += 1
                else:
                    j -= 1
    return out


@njit(cache=True)
def _occupation(T, dt, res, x0, y0, rng):
    hist = np.zeros((res, res))
    x = x0
    y = y0
    sd = math.sqrt(dt)
    t = 0.0
    while t < T:
        h = dt if t + dt <= T else T - t
        i = int(x * res) % res
        j = int(y * res) % res
        hist[i, j] += h
        s = math.sqrt(h) if h != dt else sd
        x = (x + s * rng.standard_normal()) % 1.0
        y = (y + s * rng.standard_normal()) % 1.0
        t += h
    return hist


@njit(cache=True)
def _adaptive_chunk(x, y, n, dt, rho_ref, dt_min, ccx, ccy, crad, rng):
    xs = np.empty(n)
    ys = np.empty(n)
    hs = np.empty(n)
    for i in range(n):
        h = dt
        dmin = np.inf
        for c in range(ccx.size):
            ax = _wrap(x - ccx[c])
            ay = _wrap(y - ccy[c])
            dd = abs(math.sqrt(ax * ax + ay * ay) - crad[c])
            if dd < dmin:
                dmin = dd
        if dmin < rho_ref:
            h = max(dt * (dmin / rho_ref) ** 2, dt_min)
        s = math.sqrt(h)
        x = (x + s * rng.standard_normal()) % 1.0
        y = (y + s * rng.standard_normal()) % 1.0
        xs[i] = x
        ys[i] = y
        hs[i] = h
    return xs, ys, hs


# ---------------------------------------------------------------- public operations


def em_path(start: TorusPoint, T: float, config: SimConfig, rng: np.random.Generator,
            consumer: Callable[[np.ndarray, np.ndarray], None], chunk: int = 8192,
            circles: list[tuple[TorusPoint, float]] | None = None) -> TorusPoint:
    """Stream a Gaussian-increment path to ``consumer(times, positions)`` chunk by chunk.

    Positions are reduced mod 1; times are cumulative. With the proximity
    policy ``circles`` lists the circles that control the step size.
    Returns the final position.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    x, y = start.x, start.y
    t = 0.0
    if config.adaptive and circles:
        ccx = np.array([c.x for c, _ in circles])
        ccy = np.array([c.y for c, _ in circles])
        crad = np.array([rad for _, rad in circles], dtype=float)
    else:
        ccx = ccy = crad = np.zeros(0)
    while t < T:
        if config.adaptive and crad.size:
            xs, ys, hs = _adaptive_chunk(x, y, chunk, config.dt, config.reference_distance,
                                         config.smallest_step, ccx, ccy, crad, rng)
        else:
            k = int(min(chunk, math.ceil((T - t) / config.dt)))
            hs = np.full(k, config.dt)
            steps = math.sqrt(config.dt) * rng.standard_normal((k, 2))
            pos = np.mod(np.array([x, y]) + np.cumsum(steps, axis=0), 1.0)
            xs, ys = pos[:, 0], pos[:, 1]
        times = t + np.cumsum(hs)
        keep = times <= T + 1e-15
        if not np.all(keep):
            xs, ys, times = xs[keep], ys[keep], times[keep]
            if times.size == 0:
                break
        consumer(times, np.column_stack([xs, ys]))
        x, y, t = float(xs[-1]), float(ys[-1]), float(times[-1])
        if not np.all(keep):
            break
    return TorusPoint(x, y)


def exit_times(R: float, offset: float, dt: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exit times of a disc of radius R < 1/2 from a point at distance offset from its centre."""
    if not 0 <= offset < R < 0.5:
        raise DomainError("need 0 <= offset < R < 1/2")
    return _exit_times(R, offset, dt, n, rng)


def disc_exit_sample(center: TorusPoint, R: float, u, rng: np.random.Generator, size: int | None = None):
    """Exit location of B(center, R) for a path started at u.

    The exit angle has the Poisson kernel density, a wrapped Cauchy law
    with concentration |u - center| / R, sampled by inverting its CDF.
    """
    if not 0 < R < 0.5:
        raise DomainError("need 0 < R < 1/2")
    rel = min_image((u.as_array() if isinstance(u, TorusPoint) else np.asarray(u, float)) - center.as_array())
    a = float(np.hypot(*rel)) / R
    if a >= 1.0:
        raise DomainError("start point must lie inside the disc")
    psi = math.atan2(rel[1], rel[0]) if a > 0 else 0.0
    v = rng.random(size)
    phi = psi + 2.0 * np.arctan((1.0 - a) / (1.0 + a) * np.tan(np.pi * (v - 0.5)))
    pts = np.column_stack([center.x + R * np.cos(phi), center.y + R * np.sin(phi)]) % 1.0
    if size is None:
        return TorusPoint(*pts[0])
    return pts


def poisson_kernel(R: float, u_rel, phi) -> np.ndarray:
    """Exit density against the normalized uniform measure on the circle."""
    u_rel = np.asarray(u_rel, dtype=float)
    b = R * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return (R * R - u_rel @ u_rel) / np.sum((u_rel - b) ** 2, axis=-1)


def hit_times(start: TorusPoint, center: TorusPoint, r: float, dt: float, n: int,
              rng: np.random.Generator, t_max: float = 1e4) -> np.ndarray:
    """Hitting times of B(center, r) on the torus, fixed-step Gaussian increments."""
    if not 0 < r < 0.5:
        raise DomainError("need 0 < r < 1/2")
    return _hit_times(start.x, start.y, center.x, center.y, r, dt, n, t_max, rng)


def annulus_inner_prob(r: float, rho: float, R: float) -> float:
    """P[B(r) is hit before B(R) is left, from the rho-circle] = log(R/rho)/log(R/r)."""
    if not 0 < r < rho < R < 0.5:
        raise DomainError("need 0 < r < rho < R < 1/2")
    return math.log(R / rho) / math.log(R / r)


def scale_hit_prob(l1: float, l2: float, l3: float) -> float:
    """P[reach scale l3 before scale l1, from scale l2] = (l2 - l1)/(l3 - l1)."""
    if not l1 < l2 < l3:
        raise DomainError("need l1 < l2 < l3")
    return (l2 - l1) / (l3 - l1)


def annulus_first_hit(center: TorusPoint, r: float, rho: float, R: float,
                      rng: np.random.Generator, size: int | None = None):
    p = annulus_inner_prob(r, rho, R)
    draw = rng.random(size) < p
    return bool(draw) if size is None else draw


def annulus_first_hit_em(r: float, rho: float, R: float, dt: float, n: int,
                         rng: np.random.Generator) -> np.ndarray:
    if not 0 < r < rho < R < 0.5:
        raise DomainError("need 0 < r < rho < R < 1/2")
    return _annulus_hits(r, rho, R, dt, n, rng)


def _start_outside(center: TorusPoint, radius: float, rng: np.random.Generator) -> TorusPoint:
    """A uniform point on the circle of the given radius (the counting window opens there)."""
    ang = rng.uniform(0, 2 * math.pi)
    return center.shifted(radius * math.cos(ang), radius * math.sin(ang))


def run_trackers(start: TorusPoint, centers: list[TorusPoint], outer: np.ndarray, inner: np.ndarray,
                 n_dep: int, config: SimConfig, rng: np.random.Generator, log_cap: int = 0):
    """Drive the excursion counters; see ``_track`` for the semantics."""
    cx = np.array([c.x for c in centers])
    cy = np.array([c.y for c in centers])
    outer = np.ascontiguousarray(outer, dtype=float)
    inner = np.ascontiguousarray(inner, dtype=float)
    if outer.shape != inner.shape or outer.shape[0] != len(centers):
        raise DomainError("radius tables must be (n_centers, n_levels)")
    if np.any(outer >= 0.5) or np.any(inner >= outer):
        raise DomainError("need inner < outer < 1/2 for every counter")
    ev_kind = np.zeros(log_cap, dtype=np.int64)
    ev_time = np.zeros(log_cap)
    ev_x = np.zeros(log_cap)
    ev_y = np.zeros(log_cap)
    counts, stop, min_dist, n_ev, t = _track(
        start.x, start.y, cx, cy, outer, inner, int(n_dep), config.dt, config.adaptive,
        config.reference_distance, config.smallest_step, config.max_time, rng,
        log_cap, ev_kind, ev_time, ev_x, ev_y)
    log = (ev_kind[:n_ev], ev_time[:n_ev], np.column_stack([ev_x[:n_ev], ev_y[:n_ev]]))
    return counts, stop, min_dist, log, t


def excursion_decompose(center: TorusPoint, R: float, r: float, t: float, config: SimConfig,
                        rng: np.random.Generator, start: TorusPoint | None = None) -> ExcursionLog:
    """Returns and departures between the circles of radii r < R until the floor(t)-th departure."""
    if not 0 < r < R < 0.5:
        raise DomainError("need 0 < r < R < 1/2")
    n = floor_budget(t)
    if n < 1:
        raise DomainError("need t >= 1")
    start = _start_outside(center, R, rng) if start is None else start
    _, stop, _, (kinds, times, locs), _ = run_trackers(
        start, [center], np.array([[R]]), np.array([[r]]), n, config, rng, log_cap=2 * n + 2)
    return ExcursionLog(center, R, r, kinds, times, locs, complete=bool(np.isfinite(stop[0])))


def scale_walk_inward_probs(radii: np.ndarray) -> np.ndarray:
    L = radii.size - 1
    p = np.zeros(L + 1)
    for j in range(1, L):
        p[j] = math.log(radii[j - 1] / radii[j]) / math.log(radii[j - 1] / radii[j + 1])
    return p


def exact_profiles(radii: np.ndarray, t: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, L) traversal counts from the scale-index walk driven by annulus exit laws."""
    return _scale_walk(scale_walk_inward_probs(np.asarray(radii, dtype=float)), floor_budget(t), n, rng)


def level_tables(radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Counter j watches the pair (r_j, r_{j+1})."""
    radii = np.asarray(radii, dtype=float)
    return radii[:-1][None, :], radii[1:][None, :]


def timed_profiles(center: TorusPoint, radii: np.ndarray, t: float, n: int, config: SimConfig,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(n, L) traversal counts from simulated paths, and whether B(center, r_L) was reached."""
    outer, inner = level_tables(radii)
    L = radii.size - 1
    out = np.zeros((n, L), dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    n_dep = floor_budget(t)
    for i in range(n):
        start = _start_outside(center, float(radii[0]), rng)
        counts, _, min_dist, _, _ = run_trackers(start, [center], outer, inner, n_dep, config, rng)
        out[i] = counts[0]
        visited[i] = min_dist[0] <= radii[-1]
    return out, visited


def traversal_profile(center: TorusPoint, scale_system: ScaleSystem, t: float, mode: str,
                      rng: np.random.Generator, config: SimConfig | None = None) -> TraversalProfile:
    radii = scale_system.radii
    if radii[0] >= 0.5:
        raise DomainError("top radius must be below 1/2; set top_radius on the scale system")
    if mode == "exact-untimed":
        counts = exact_profiles(radii, t, 1, rng)[0]
    elif mode == "timed-EM":
        counts = timed_profiles(center, radii, t, 1, config or SimConfig(dt_policy="proximity"), rng)[0][0]
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return TraversalProfile(counts=counts, budget=float(t), origin=(center.x, center.y))


def cycle_pair(R: float, r: float, n_total: int, dt: float, stride: int, rng: np.random.Generator):
    """Departure/return times for a fine and a coarse observer of one path."""
    if not 0 < r < R < 0.5:
        raise DomainError("need 0 < r < R < 1/2")
    arrays = [np.zeros(n_total) for _ in range(4)]
    ang = rng.uniform(0, 2 * math.pi)
    _cycles_pair(R * math.cos(ang), R * math.sin(ang), R, r, n_total, dt, stride, rng, *arrays)
    dep_f, ret_f, dep_c, ret_c = arrays
    return (dep_f, ret_f), (dep_c, ret_c)


def occupation_histogram(T: float, dt: float, res: int, start: TorusPoint, rng: np.random.Generator) -> np.ndarray:
    if T <= 0:
        return np.zeros((res, res))
    return _occupation(T, dt, res, start.x, start.y, rng)
