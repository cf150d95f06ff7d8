"""Grids, counting variables, coupling checks, cover times and occupation maps."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numba import njit

from . import gw
from .errors import ConfigError, DomainError
from .scales import ScaleSystem
from .stats import TestReport, mean_se, two_sample_chi_square
from .torus_bm import SimConfig, TorusPoint, _seg_dist, _wrap, occupation_histogram, run_trackers, torus_distance

MODES = ("untruncated-Z", "upper-Z", "lower-Z")
ENGINES = ("gw-exact", "gw-mc", "torus-mc")
GRID_CAP = 4_000_000


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class Grid:
    level: int
    spacing: float
    points: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def covering_radius(self) -> float:
        return self.spacing * math.sqrt(2.0) / 2.0


def lattice_axis(spacing: float) -> np.ndarray:
    """Multiples of spacing in [0, 1), dropping any that wrap onto 0."""
    n = int(math.ceil(1.0 / spacing - 1e-9))
    return np.arange(n) * spacing


def grid_size(spacing: float) -> int:
    return int(math.ceil(1.0 / spacing - 1e-9)) ** 2


def build_grid(scale_system: ScaleSystem, l: int, cap: int = GRID_CAP) -> Grid:
    if not 0 <= l <= scale_system.L:
        raise DomainError(f"level must lie in 0..{scale_system.L}")
    h = scale_system.grid_spacing(l)
    n_axis = int(math.ceil(1.0 / h - 1e-9))
    if n_axis * n_axis > cap:
        raise ConfigError(f"grid at level {l} has {n_axis ** 2} points (cap {cap}); "
                          "use a larger spacing_factor")
    ax = lattice_axis(h)
    xx, yy = np.meshgrid(ax, ax, indexing="ij")
    return Grid(l, h, np.column_stack([xx.ravel(), yy.ravel()]))


def nearest_lattice_point(p: TorusPoint, spacing: float) -> TorusPoint:
    """Closest point of the spacing-lattice without enumerating it."""
    n = int(math.ceil(1.0 / spacing - 1e-9))
    best = None
    for coord in (p.x, p.y):
        k = int(round(coord / spacing))
        cands = [(k - 1) % n, k % n, (k + 1) % n]
        val = min((c * spacing for c in cands), key=lambda v: abs(_wrap(v - coord)))
        best = (val,) if best is None else best + (val,)
    return TorusPoint(*best)


# ---------------------------------------------------------------- counting variables


@dataclass(frozen=True)
class CountingSpec:
    """Which grid points count: all unvisited ones (untruncated-Z), those
    whose profile also stays above alpha (upper-Z), or those inside the
    gamma..delta tube on l0..L-l0 (lower-Z)."""

    mode: str
    t: float
    scale_system: ScaleSystem
    l0_eff: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")

    def preset(self):
        bars = self.scale_system.barrier_set
        bars = type(bars)(L=bars.L, t=float(self.t), l0=bars.l0)
        name = {"untruncated-Z": "none", "upper-Z": "alpha", "lower-Z": "gamma-delta"}[self.mode]
        return gw.barrier_preset(name, bars, self.l0_eff)

    def satisfied(self, counts: np.ndarray) -> np.ndarray:
        """Row-wise indicator for (n, L) traversal counts."""
        counts = np.atleast_2d(counts)
        L = self.scale_system.L
        ok = counts[:, L - 1] == 0
        lower, upper, levels = self.preset()
        for l in levels:
            if lower is not None:
                ok &= counts[:, l] >= lower(l) - 1e-9
            if upper is not None:
                ok &= counts[:, l] <= upper(l) + 1e-9
        return ok


def single_point_probability(spec: CountingSpec, cap: int | None = None) -> float:
    """P[one profile satisfies spec] under the GW law, exactly."""
    L = spec.scale_system.L
    if spec.mode == "untruncated-Z":
        return gw.extinction_prob(L, spec.t)
    lower, upper, levels = spec.preset()
    cap = cap or max(8 * gw.floor_budget(spec.t), 400)
    return gw.barrier_prob_dp(L, spec.t, lower, upper, condition_extinct=True,
                              levels=levels, cap=cap).joint


def counting_variable_estimate(spec: CountingSpec, engine: str, N: int, rng: np.random.Generator,
                               points: np.ndarray | None = None, start: TorusPoint | None = None,
                               config: SimConfig | None = None) -> tuple[float, float]:
    """(mean, stderr) of the number of grid points whose profile satisfies spec.

    Without ``points`` the grid is F_L of the scale system. The torus
    engine drops points within r_0 of the start, simulates one path per
    run with a tracker at every remaining point and needs r_0 < 1/2.
    """
    if engine not in ENGINES:
        raise DomainError(f"engine must be one of {ENGINES}")
    ss = spec.scale_system
    n_points = grid_size(ss.grid_spacing(ss.L)) if points is None else int(len(points))
    if engine == "gw-exact":
        return n_points * single_point_probability(spec), 0.0
    if engine == "gw-mc":
        prof = gw.gw_sample_many(spec.t, ss.L - 1, N, rng)
        hits = spec.satisfied(prof).astype(float)
        m, se = mean_se(hits)
        return n_points * m, n_points * se
    if points is None:
        raise DomainError("torus-mc needs an explicit small point set")
    radii = ss.radii
    if radii[0] >= 0.5:
        raise DomainError("torus-mc needs r_0 < 1/2; set top_radius")
    start = start or TorusPoint(0.0, 0.0)
    centers = [TorusPoint(*p) for p in points]
    centers = [c for c in centers if torus_distance(c, start) > radii[0]]
    if not centers:
        return 0.0, 0.0
    config = config or SimConfig(dt=1e-5, dt_policy="proximity")
    outer = np.tile(radii[:-1], (len(centers), 1))
    inner = np.tile(radii[1:], (len(centers), 1))
    n_dep = gw.floor_budget(spec.t)
    z = np.zeros(N)
    for i in range(N):
        counts, stop, _, _, _ = run_trackers(start, centers, outer, inner, n_dep, config, rng)
        if not np.all(np.isfinite(stop)):
            raise RuntimeError("time cap reached before every tracker finished")
        z[i] = spec.satisfied(counts).sum()
    return mean_se(z)


# ---------------------------------------------------------------- coupling checks


@dataclass
class IndependenceReport:
    separation: float
    correlations: np.ndarray
    stderr: np.ndarray
    n: int

    @property
    def independent(self) -> bool:
        ok = np.isfinite(self.correlations)
        return bool(np.all(np.abs(self.correlations[ok]) <= 3 * self.stderr[ok]))


def paired_profiles(scale_system: ScaleSystem, y: TorusPoint, z: TorusPoint, t: float, N: int,
                    rng: np.random.Generator, config: SimConfig | None = None):
    """(N, L) traversal counts around y and z, both from the same path per run."""
    radii = scale_system.radii
    if radii[0] >= 0.5:
        raise DomainError("needs r_0 < 1/2; set top_radius")
    config = config or SimConfig(dt=1e-5, dt_policy="proximity")
    outer = np.tile(radii[:-1], (2, 1))
    inner = np.tile(radii[1:], (2, 1))
    n_dep = gw.floor_budget(t)
    a = np.zeros((N, scale_system.L), dtype=np.int64)
    b = np.zeros_like(a)
    for i in range(N):
        start = TorusPoint(*rng.random(2))
        counts, _, _, _, _ = run_trackers(start, [y, z], outer, inner, n_dep, config, rng)
        a[i], b[i] = counts
    return a, b


def two_point_independence_check(scale_system: ScaleSystem, separation: float, t: float, N: int,
                                 rng: np.random.Generator, config: SimConfig | None = None) -> IndependenceReport:
    """Per-generation correlation of the traversal counts around two centres."""
    y = TorusPoint(0.5, 0.5)
    z = y.shifted(separation, 0.0)
    a, b = paired_profiles(scale_system, y, z, t, N, rng, config)
    L = scale_system.L
    corr = np.full(L, np.nan)
    for l in range(L):
        if a[:, l].std() > 0 and b[:, l].std() > 0:
            corr[l] = np.corrcoef(a[:, l], b[:, l])[0, 1]
    se = (1 - np.nan_to_num(corr) ** 2) / math.sqrt(max(N - 1, 1))
    return IndependenceReport(separation, corr, se, N)


@dataclass
class PackingReport:
    l: int
    violations: int
    n: int
    tilde: np.ndarray
    hat: np.ndarray
    params: gw.CompoundParams
    law_test: TestReport

    @property
    def passed(self) -> bool:
        return self.violations == 0


def packing_parameters(scale_system: ScaleSystem, l: int) -> tuple[float, float]:
    """(p, q) of the compound law of the modified counters at level l."""
    rm, rp = scale_system.radii_minus, scale_system.radii_plus
    den = math.log(rm[0] / rm[l + 1])
    return math.log(rp[l] / rm[l + 1]) / den, math.log(rm[0] / rp[1]) / den


def _check_sandwich(ss: ScaleSystem, l: int, d: float) -> None:
    r, rm, rp = ss.radii, ss.radii_minus, ss.radii_plus
    conds = [rm[l + 1] + d <= r[l + 1], r[l] + d <= rp[l], r[1] + d <= rp[1],
             rm[0] + d <= r[0], rp[1] < rm[0], rp[0] < 0.5]
    if not all(conds):
        raise DomainError(
            "modified radii do not nest around the packing point; "
            f"shrink factor {ss.modification[0]:.4g} too small for this L (pass shrink=...)")


def packing_domination_check(scale_system: ScaleSystem, l: int, t: float, N: int,
                             rng: np.random.Generator, config: SimConfig | None = None,
                             y: TorusPoint | None = None, packing_point: TorusPoint | None = None) -> PackingReport:
    """Pathwise comparison of the modified counter at the packing point y'
    with the counter at y, over N coupled runs.

    y' defaults to the nearest point of the lattice at level l + ceil(log L).
    """
    ss = scale_system
    if not 1 <= l <= ss.L - 1:
        raise DomainError("need 1 <= l <= L-1")
    y = y or TorusPoint(0.5 + 0.013, 0.5 + 0.007)
    if packing_point is None:
        level = l + int(math.ceil(math.log(ss.L)))
        packing_point = nearest_lattice_point(y, ss.spacing_factor * ss.radii[0] * math.exp(-level))
    d = torus_distance(y, packing_point)
    _check_sandwich(ss, l, d)
    r, rm, rp = ss.radii, ss.radii_minus, ss.radii_plus
    outer = np.array([[r[0], r[l]], [rm[0], rp[l]]])
    inner = np.array([[r[1], r[l + 1]], [rp[1], rm[l + 1]]])
    config = config or SimConfig(dt=1e-5, dt_policy="proximity")
    n_dep = gw.floor_budget(t)
    tilde = np.zeros(N, dtype=np.int64)
    hat = np.zeros(N, dtype=np.int64)
    for i in range(N):
        ang = rng.uniform(0, 2 * math.pi)
        rad = r[0] * (1 + 1e-9)
        start = y.shifted(rad * math.cos(ang), rad * math.sin(ang))
        counts, _, _, _, _ = run_trackers(start, [y, packing_point], outer, inner, n_dep, config, rng)
        tilde[i], hat[i] = counts[0, 1], counts[1, 1]
    p, q = packing_parameters(ss, l)
    params = gw.CompoundParams(max(n_dep, 1), p, q)
    ref = gw.compound_sample(params, rng, size=max(N, 1000))
    law = two_sample_chi_square(hat, ref, name=f"modified-counter-vs-compound l={l}")
    return PackingReport(l, int(np.sum(hat > tilde)), N, tilde, hat, params, law)


# ---------------------------------------------------------------- cover time


@njit(cache=True)
def _cover(x0, y0, dt, t_max, n_axis, spacing, radius, rng):
    """Time at which every point of each lattice has been within its radius of the path.

    Level k is the lattice of n_axis[k]^2 points at the given spacing.
    Returns times (inf when t_max is reached) for all levels.
    """
    K = n_axis.size
    offsets = np.zeros(K + 1, dtype=np.int64)
    for k in range(K):
        offsets[k + 1] = offsets[k] + n_axis[k] * n_axis[k]
    covered = np.zeros(offsets[K], dtype=np.bool_)
    left = np.empty(K, dtype=np.int64)
    for k in range(K):
        left[k] = n_axis[k] * n_axis[k]
    times = np.full(K, np.inf)
    remaining = K
    sd = math.sqrt(dt)
    x = x0
    y = y0
    nx = x
    ny = y
    t = 0.0
    first = True
    while remaining > 0 and t < t_max:
        if first:
            nx = x
            ny = y
            first = False
        else:
            nx = x + sd * rng.standard_normal()
            ny = y + sd * rng.standard_normal()
            t += dt
        lo_x = min(x, nx)
        hi_x = max(x, nx)
        lo_y = min(y, ny)
        hi_y = max(y, ny)
        for k in range(K):
            if left[k] == 0:
                continue
            h = spacing[k]
            n = n_axis[k]
            rad = radius[k]
            i0 = int(math.floor((lo_x - rad) / h))
            i1 = int(math.ceil((hi_x + rad) / h))
            j0 = int(math.floor((lo_y - rad) / h))
            j1 = int(math.ceil((hi_y + rad) / h))
            for i in range(i0, i1 + 1):
                ii = i % n
                px = ii * h
                for j in range(j0, j1 + 1):
                    jj = j % n
                    idx = offsets[k] + ii * n + jj
                    if covered[idx]:
                        continue
                    py = jj * h
                    ax = _wrap(x - px)
                    ay = _wrap(y - py)
                    if _seg_dist(ax, ay, ax + (nx - x), ay + (ny - y)) <= rad:
                        covered[idx] = True
                        left[k] -= 1
            if left[k] == 0:
                times[k] = t
                remaining -= 1
        x = nx % 1.0
        y = ny % 1.0
    return times


@dataclass
class CoverResult:
    """Cover times per run for each eps: ``upper`` uses radius eps minus the
    grid covering radius (so C_eps <= upper), ``lower`` uses radius eps on
    the grid (so lower <= C_eps)."""

    eps: list[float]
    upper: dict[float, np.ndarray] = field(default_factory=dict)
    lower: dict[float, np.ndarray] = field(default_factory=dict)
    complete: bool = True

    def deficit(self, eps: float, which: str = "upper") -> np.ndarray:
        c = (self.upper if which == "upper" else self.lower)[eps]
        a = math.log(1.0 / eps)
        return 2.0 * a - c / (a / math.pi)


def median_se(x: np.ndarray) -> float:
    """Large-sample SE of the median for a roughly normal sample."""
    x = np.asarray(x, dtype=float)
    return 1.2533 * float(np.std(x, ddof=1)) / math.sqrt(x.size)


def cover_time_study(eps_list, config: SimConfig, N_runs: int, rng: np.random.Generator,
                     t_max: float = 500.0) -> CoverResult:
    """Cover times for several eps on common trajectories; grid spacing eps/2."""
    eps_list = sorted({float(e) for e in eps_list}, reverse=True)
    for e in eps_list:
        if not 0 < e <= 0.125:
            raise DomainError("eps must lie in (0, 1/8]")
    if config.dt > min(eps_list) ** 2 / 50 * (1 + 1e-9):
        raise DomainError("dt must be at most eps^2/50")
    spacing, n_axis, radius = [], [], []
    for e in eps_list:
        h = e / 2.0
        n = int(math.ceil(1.0 / h - 1e-9))
        for rad in (e - h * math.sqrt(2.0) / 2.0, e):
            spacing.append(h)
            n_axis.append(n)
            radius.append(rad)
    spacing = np.array(spacing)
    n_axis = np.array(n_axis, dtype=np.int64)
    radius = np.array(radius)
    res = CoverResult(eps_list)
    upper = np.zeros((N_runs, len(eps_list)))
    lower = np.zeros_like(upper)
    for i in range(N_runs):
        x0, y0 = rng.random(2)
        times = _cover(x0, y0, config.dt, t_max, n_axis, spacing, radius, rng)
        upper[i] = times[0::2]
        lower[i] = times[1::2]
    for k, e in enumerate(eps_list):
        res.upper[e] = upper[:, k]
        res.lower[e] = lower[:, k]
    res.complete = bool(np.all(np.isfinite(upper)))
    return res


def cover_time_estimate(eps: float, config: SimConfig, N_runs: int, rng: np.random.Generator,
                        t_max: float = 500.0) -> np.ndarray:
    """Per-run upper brackets of C_eps."""
    return cover_time_study([eps], config, N_runs, rng, t_max).upper[float(eps)]


# ---------------------------------------------------------------- occupation map


def disc_kernel(res: int, radius: float) -> np.ndarray:
    """Periodic indicator of the pixels whose centres lie within radius of pixel (0, 0)."""
    d = np.minimum(np.arange(res), res - np.arange(res)) / res
    return (d[:, None] ** 2 + d[None, :] ** 2 <= radius * radius).astype(float)


def occupation_heatmap(T: float, radius: float, resolution: int, config: SimConfig,
                       rng: np.random.Generator, start: TorusPoint | None = None,
                       scaled: bool = True) -> np.ndarray:
    """Time spent within ``radius`` of each pixel centre up to time T.

    Scaled by 1/(pi radius^2) unless scaled=False. Radii above 1/2 are clipped.
    """
    if not 1 <= resolution <= 1024:
        raise DomainError("resolution must lie in 1..1024")
    radius = min(float(radius), 0.5)
    if radius <= 0:
        raise DomainError("radius must be positive")
    start = start or TorusPoint(*rng.random(2))
    hist = occupation_histogram(T, config.dt, resolution, start, rng)
    ker = disc_kernel(resolution, radius)
    occ = np.real(np.fft.ifft2(np.fft.fft2(hist) * np.conj(np.fft.fft2(ker))))
    occ = np.where(np.abs(occ) < 1e-12, 0.0, occ)
    if scaled:
        occ = occ / (math.pi * radius * radius)
    return occ


def heatmap_to_pgm(matrix: np.ndarray) -> str:
    m = np.asarray(matrix, dtype=float)
    top = m.max()
    pix = np.zeros_like(m, dtype=int) if top <= 0 else np.round(255 * m / top).astype(int)
    lines = ["P2", f"{m.shape[1]} {m.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pix]
    return "\n".join(lines) + "\n"


def heatmap_to_csv(matrix: np.ndarray) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in np.asarray(matrix)) + "\n"
