"""The acceptance suite: one function per criterion, each on its own substream."""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable

import numpy as np

from . import bridges as br
from . import excursions as exc
from . import experiments as xp
from . import gw, lattice_rk as lrk
from . import torus_bm as tb
from .report import Row
from .rng import substream
from .scales import ScaleSystem, barriers, excursion_budget
from .stats import ALPHA, bonferroni, ks_test, mean_se, two_sample_chi_square


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    rows: list[Row]


class _Rows:
    """Collects rows tagged with the criterion's module, seed and substream."""

    def __init__(self, module: str, seed: int, index: int):
        self.module, self.seed, self.index = module, seed, index
        self.rows: list[Row] = []

    def add(self, quantity: str, value, stderr=math.nan, n: int = 0) -> None:
        self.rows.append(Row(self.module, quantity, float(value), float(stderr), int(n),
                             self.seed, self.index))


def c01_annulus(seed: int, idx: int):
    out = _Rows("torus_bm", seed, idx)
    r, rho, R, N = 0.05, 0.1, 0.2, 10_000
    exact = tb.annulus_inner_prob(r, rho, R)
    hits = tb.annulus_first_hit_em(r, rho, R, 1e-6, N, substream(seed, idx))
    p = float(hits.mean())
    se = math.sqrt(exact * (1 - exact) / N)
    other_form = 1.0 - math.log(rho / r) / math.log(R / r)
    out.add("annulus.em_inner_first", p, se, N)
    out.add("annulus.formula", exact)
    out.add("annulus.formula_gap", abs(exact - other_form))
    ok = abs(p - exact) <= 3 * se and abs(exact - other_form) <= 1e-12
    return ok, out.rows


def c02_traversal_gw(seed: int, idx: int):
    out = _Rows("torus_bm", seed, idx)
    rng = substream(seed, idx)
    L, t, N = 6, 20, 10_000
    radii = ScaleSystem(L, top_radius=0.25).radii
    walk = tb.exact_profiles(radii, t, N, rng)
    ref = gw.gw_sample_many(t, L - 1, N, rng)
    thr = bonferroni(ALPHA, L)
    ok = bool(np.all(walk[:, 0] == ref[:, 0]))
    for l in range(1, L):
        rep = two_sample_chi_square(walk[:, l], ref[:, l], name=f"gen{l}")
        out.add(f"traversal_vs_gw.p_gen{l}", rep.p_value, n=N)
        ok &= rep.p_value > thr
    return ok, out.rows


def c03_extinction(seed: int, idx: int):
    out = _Rows("gw", seed, idx)
    worst = 0.0
    for L in range(2, 21):
        for t in range(0, 201):
            res = gw.barrier_prob_dp(L, t, condition_extinct=False, levels=[L - 1],
                                     upper=lambda l: 0, cap=3 * t + 40 * L + 100)
            worst = max(worst, abs(res.probability - gw.extinction_prob(L, t)))
    out.add("extinction.dp_max_abs_gap", worst)
    L, t, N = 6, 40, 100_000
    radii = ScaleSystem(L, top_radius=0.25).radii
    prof = tb.exact_profiles(radii, t, N, substream(seed, idx))
    freq = float(np.mean(prof[:, L - 1] == 0))
    exact = gw.extinction_prob(L, t)
    se = math.sqrt(exact * (1 - exact) / N)
    out.add("extinction.mc_freq", freq, se, N)
    out.add("extinction.exact", exact)
    return worst <= 1e-12 and abs(freq - exact) <= 3 * se, out.rows


def c04_bridge_barrier(seed: int, idx: int):
    out = _Rows("bridges", seed, idx)
    T, a, b, M, N = 10.0, 2.0, 3.0, 2048, 100_000
    est, se, grid_only, grid_se = br.bb_barrier_mc(T, a, b, M, N, substream(seed, idx))
    exact = br.bb_linear_barrier_prob(T, a, b)
    out.add("bb_barrier.mc", est, se, N)
    out.add("bb_barrier.grid_only", grid_only, grid_se, N)
    out.add("bb_barrier.exact", exact)
    return abs(est - exact) <= 0.01, out.rows


def c05_besq(seed: int, idx: int):
    out = _Rows("bridges", seed, idx)
    rng = substream(seed, idx)
    N = 10_000
    at = np.array([2.0])
    summed = (br.besq_at_times(0, 1.0, at, N, rng)[:, 0]
              + br.besq_at_times(1, 2.0, at, N, rng, "direct")[:, 0])
    joint = br.besq_at_times(1, 3.0, at, N, rng, "direct")[:, 0]
    add = ks_test(summed, joint, name="additivity")
    x, T, M = 4.0, 10.0, 64
    bridge = br.besq_bridge_to_zero_paths(1, x, T, M, N, rng)[:, M // 2]
    squared = br.bessel1_bridge_signed(x, T, M, N, rng)[:, M // 2] ** 2
    brk = ks_test(bridge, squared, name="d1-bridge")
    out.add("besq.additivity_p", add.p_value, n=N)
    out.add("besq.d1_bridge_p", brk.p_value, n=N)
    return add.p_value > ALPHA and brk.p_value > ALPHA, out.rows


def c06_radon_nikodym(seed: int, idx: int):
    out = _Rows("bridges", seed, idx)
    rng = substream(seed, idx)
    x, T, S, M, N, chunk = 4.0, 10.0, 5.0, 4096, 100_000, 5000
    k = int(round(S / (T / M)))
    w, alive = [], []
    for _ in range(N // chunk):
        signed = br.bessel1_bridge_signed(x, T, M, chunk, rng, upto=k)
        w.append(br.rn_weights(signed ** 2, T / M, k, T, x, signed=signed))
        direct = br.besq_bridge_to_zero_paths(0, x, T, M, chunk, rng, upto=k)
        alive.append((direct[:, k] > 0).astype(float))
    rw, rw_se = mean_se(np.concatenate(w))
    dq, dq_se = mean_se(np.concatenate(alive))
    out.add("rn.reweighted_q1", rw, rw_se, N)
    out.add("rn.direct_q0", dq, dq_se, N)
    out.add("rn.exact", br.q0_bridge_survival(x, T, S))
    return abs(rw - dq) <= 3 * math.hypot(rw_se, dq_se), out.rows


def c07_ray_knight(seed: int, idx: int):
    out = _Rows("lattice_rk", seed, idx)
    rep = lrk.ray_knight_marginal_check(8, 5, 3, 10_000, substream(seed, idx))
    out.add("ray_knight.ks_p", rep.p_value, n=rep.n)
    return rep.p_value > ALPHA, out.rows


def c08_conditional_pmf(seed: int, idx: int):
    out = _Rows("lattice_rk", seed, idx)
    rng = substream(seed, idx)
    L, t, N = 6, 8, 20_000
    thr = bonferroni(ALPHA, L - 2)
    ok = True
    for l in range(1, L - 1):
        rep = lrk.conditional_pmf_check(L, t, l, N, rng)
        out.add(f"conditional_pmf.p_edge{l}", rep.p_value, n=rep.n)
        ok &= (not rep.inconclusive) and rep.p_value > thr
    return ok, out.rows


def c09_conditioned_gamma(seed: int, idx: int):
    out = _Rows("lattice_rk", seed, idx)
    rep, mean, se, target = lrk.conditioned_gamma_check(6, 10, 100_000, substream(seed, idx))
    out.add("conditioned_gamma.ks_p", rep.p_value, n=rep.n)
    out.add("conditioned_gamma.mean", mean, se, rep.n)
    out.add("conditioned_gamma.target", target)
    return rep.p_value > ALPHA and abs(mean - target) <= 3 * se, out.rows


def c10_mean_cycle(seed: int, idx: int):
    out = _Rows("excursions", seed, idx)
    R = 0.25
    r = R / math.e
    stats = exc.equilibrium_cycles(tb.TorusPoint(0.5, 0.5), R, r, 5000, 50, tb.SimConfig(dt=1e-5),
                                   substream(seed, idx), chains=4)
    target = exc.mean_cycle_target(R, r)
    raw, raw_se = stats.mean()
    ext, ext_se = stats.extrapolated_mean()
    io, io_se = stats.extrapolated_in_out()
    leg_in, _ = mean_se(stats.in_out)
    leg_out, _ = mean_se(stats.out_in)
    n = stats.n_cycles
    out.add("cycle.mean_fine", raw, raw_se, n)
    out.add("cycle.mean_coarse", float(np.mean(stats.coarse_cycle_times)), n=n)
    out.add("cycle.mean_extrapolated", ext, ext_se, n)
    out.add("cycle.target", target)
    out.add("cycle.in_out_extrapolated", io, io_se, n)
    out.add("cycle.in_out_target", exc.in_out_target(R, r))
    out.add("cycle.leg_sum_gap", abs(leg_in + leg_out - raw), raw_se, n)
    ok = abs(ext - target) <= 0.03 * target and abs(leg_in + leg_out - raw) <= raw_se
    return ok, out.rows


def c11_exit_time(seed: int, idx: int):
    out = _Rows("torus_bm", seed, idx)
    R, N = 0.2, 20_000
    times = tb.exit_times(R, 0.0, 1e-6, N, substream(seed, idx))
    m, se = mean_se(times)
    target = R * R / 2
    out.add("exit_time.mean", m, se, N)
    out.add("exit_time.target", target)
    return abs(m - target) <= 0.02 * target, out.rows


def c12_tube_order(seed: int, idx: int):
    out = _Rows("gw", seed, idx)
    ratios = []
    for L in (20, 40, 80):
        bars = barriers(L, 0.0)
        k = gw.effective_cutoff(bars)
        lower, upper, levels = gw.barrier_preset("gamma-delta", bars, k)
        t = excursion_budget(L, 0.0)
        res = gw.barrier_prob_dp(L, t, lower, upper, condition_extinct=True, levels=levels,
                                 cap=max(8 * int(t), 400))
        ratio = res.probability / (k / L)
        ratios.append(ratio)
        out.add(f"tube.L{L}.probability", res.probability)
        out.add(f"tube.L{L}.ratio", ratio)
    ratios = np.array(ratios)
    spread = ratios.max() / ratios.min() if ratios.min() > 0 else math.inf
    out.add("tube.window_spread", spread)
    return bool(ratios.min() > 0 and spread <= 10), out.rows


def c13_compound_ld(seed: int, idx: int):
    out = _Rows("gw", seed, idx)
    params = gw.CompoundParams(100, 0.2, 0.2)
    N = 1_000_000
    draws = gw.compound_sample(params, substream(seed, idx), size=N)
    ok = True
    for theta in (25, 50, 75):
        p = float(np.mean(draws <= theta))
        se = math.sqrt(p * (1 - p) / N)
        bound = gw.ld_bound_compound(params, theta)
        out.add(f"compound_ld.theta{theta}.freq", p, se, N)
        out.add(f"compound_ld.theta{theta}.bound", bound)
        ok &= p <= bound + 3 * se
    return ok, out.rows


def c14_cover_deficit(seed: int, idx: int):
    out = _Rows("experiments", seed, idx)
    eps_list = [2.0 ** -4, 2.0 ** -5, 2.0 ** -6]
    runs = 50
    cfg = tb.SimConfig(dt=min(eps_list) ** 2 / 50)
    res = xp.cover_time_study(eps_list, cfg, runs, substream(seed, idx))
    meds, ses = [], []
    for e in sorted(eps_list, reverse=True):
        d = res.deficit(e)
        med, se = float(np.median(d)), xp.median_se(d)
        meds.append(med)
        ses.append(se)
        k = int(round(-math.log2(e)))
        out.add(f"cover.eps2^-{k}.median_upper", float(np.median(res.upper[e])), n=runs)
        out.add(f"cover.eps2^-{k}.median_lower", float(np.median(res.lower[e])), n=runs)
        out.add(f"cover.eps2^-{k}.median_deficit", med, se, runs)
    ok = res.complete and all(m > 0 for m in meds)
    for i in range(len(meds) - 1):
        ok &= meds[i + 1] >= meds[i] - 2 * math.hypot(ses[i], ses[i + 1])
    return bool(ok), out.rows


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("annulus exit law", c01_annulus),
    2: ("traversal process matches Galton-Watson", c02_traversal_gw),
    3: ("extinction formula", c03_extinction),
    4: ("bridge linear barrier", c04_bridge_barrier),
    5: ("squared Bessel identities", c05_besq),
    6: ("change of dimension reweighting", c06_radon_nikodym),
    7: ("Ray-Knight marginal", c07_ray_knight),
    8: ("conditional traversal pmf", c08_conditional_pmf),
    9: ("conditioned gamma law", c09_conditioned_gamma),
    10: ("mean cycle identity", c10_mean_cycle),
    11: ("disc exit time", c11_exit_time),
    12: ("conditioned tube order", c12_tube_order),
    13: ("compound lower-tail bound", c13_compound_ld),
    14: ("cover-time deficit sign and trend", c14_cover_deficit),
}

# longest first so a pool stays busy
SCHEDULE = (14, 10, 6, 3, 9, 4, 8, 5, 12, 13, 11, 2, 1, 7)


def _run_one(task) -> Outcome:
    number, seed = task
    title, fn = CRITERIA[number]
    passed, rows = fn(seed, number)
    rows.append(Row("acceptance", f"criterion{number:02d}.pass", float(passed), math.nan, 0, seed, number))
    return Outcome(number, title, bool(passed), rows)


def run_suite(seed: int, workers: int = 1, only=None) -> list[Outcome]:
    """Run the selected criteria; results are ordered by criterion number."""
    from .parallel import run_tasks

    numbers = [n for n in SCHEDULE if only is None or n in set(only)]
    results = run_tasks(_run_one, [(n, seed) for n in numbers], workers)
    return sorted(results, key=lambda o: o.number)
