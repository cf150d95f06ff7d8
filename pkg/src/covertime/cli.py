"""Command-line front end."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bridges as br
from . import excursions as exc
from . import experiments as xp
from . import gw, lattice_rk as lrk
from . import torus_bm as tb
from .config import parse_config
from .errors import ConfigError, DomainError, TruncationError
from .report import Row, write_rows, write_table
from .rng import substream
from .scales import ScaleSystem, barriers, excursion_budget
from .stats import ALPHA, mean_se

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class Param:
    name: str
    kind: Callable
    default: object
    help: str = ""


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _flag(text) -> bool:
    return str(text).lower() in ("1", "true", "yes", "on")


PARAMS: dict[str, list[Param]] = {
    "scales": [Param("L", int, 16, "number of scales"), Param("s", float, 0.0, "order parameter"),
               Param("top_radius", float, None, "override r_0")],
    "gw": [Param("L", int, 6), Param("t", float, 20.0), Param("N", int, 100_000),
           Param("barrier", str, "none", "none | alpha | gamma-delta"),
           Param("conditioned", _flag, False, "condition on extinction at L-1")],
    "bridge": [Param("T", float, 10.0), Param("a", float, 2.0), Param("b", float, 3.0),
               Param("M", int, 2048), Param("N", int, 20_000)],
    "lattice": [Param("L", int, 8), Param("t", float, 5.0), Param("vertex", int, 3), Param("N", int, 10_000)],
    "torus": [Param("mode", str, "exact-untimed", "exact-untimed | timed-EM | log"),
              Param("L", int, 4), Param("t", float, 10.0), Param("R", float, 0.25),
              Param("r", float, 0.25 / math.e), Param("top_radius", float, 0.25),
              Param("dt", float, 1e-5), Param("N", int, 200)],
    "excursions": [Param("R", float, 0.25), Param("r", float, 0.25 / math.e), Param("n", int, 2000),
                   Param("burn_in", int, 50), Param("chains", int, 1), Param("delta", float, 0.1),
                   Param("N", int, 0, "concentration runs (0 skips)"), Param("dt", float, 1e-5)],
    "count": [Param("mode", str, "untruncated-Z", "untruncated-Z | upper-Z | lower-Z"),
              Param("engine", str, "gw-exact", "gw-exact | gw-mc | torus-mc"),
              Param("L", int, 20), Param("s", float, 0.0), Param("t", float, None, "default t_s"),
              Param("N", int, 10_000), Param("top_radius", float, None),
              Param("grid", int, 3, "torus-mc: points per axis"), Param("dt", float, 1e-4)],
    "cover": [Param("eps", _floats, [2.0 ** -4], "comma-separated eps values"),
              Param("runs", int, 10), Param("dt", float, None, "default eps_min^2/50"),
              Param("t_max", float, 500.0)],
    "heatmap": [Param("T", float, 1.0), Param("radius", float, 0.05), Param("resolution", int, 128),
                Param("dt", float, 1e-5), Param("pgm", str, "", "also write an 8-bit PGM here")],
    "selftest": [Param("only", _ints, None, "comma-separated criterion numbers")],
}


def _resolve(command: str, cfg, ns) -> dict:
    values = {}
    for p in PARAMS[command]:
        raw = getattr(ns, p.name, None)
        if raw is None:
            raw = cfg.params.get(p.name)
        if raw is None:
            values[p.name] = p.default
            continue
        try:
            values[p.name] = p.kind(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {p.name}: {raw!r}") from None
    return values


class _Out:
    def __init__(self, module: str, seed: int, index: int = 0):
        self.module, self.seed, self.index = module, seed, index
        self.rows: list[Row] = []

    def add(self, quantity, value, stderr=math.nan, n=0):
        self.rows.append(Row(self.module, quantity, float(value), float(stderr), int(n), self.seed, self.index))


# ---------------------------------------------------------------- commands


def cmd_scales(p, cfg):
    ss = ScaleSystem(p["L"], p["s"], top_radius=p["top_radius"])
    write_table(ss.table(), cfg.output_path)
    return EXIT_OK


def cmd_gw(p, cfg):
    out = _Out("gw", cfg.seed)
    L, t, N = p["L"], p["t"], p["N"]
    rng = substream(cfg.seed, 0)
    bars = barriers(L, 0.0, t) if L >= 3 else None
    lower, upper, levels = gw.barrier_preset(p["barrier"], bars) if bars else (None, None, [])
    res = gw.barrier_prob_dp(L, t, lower, upper, condition_extinct=p["conditioned"], levels=levels)
    out.add("extinction.exact", gw.extinction_prob(L, t))
    out.add("barrier.dp", res.probability)
    out.add("barrier.dp_truncated_mass", res.truncated_mass)
    prof = (gw.conditioned_sample_many(t, L, N, rng) if p["conditioned"]
            else gw.gw_sample_many(t, L - 1, N, rng))
    ok = np.ones(N, dtype=bool)
    for l in levels:
        if lower is not None:
            ok &= prof[:, l] >= lower(l) - 1e-9
        if upper is not None:
            ok &= prof[:, l] <= upper(l) + 1e-9
    m, se = mean_se(ok.astype(float))
    out.add("barrier.mc", m, se, N)
    ext = float(np.mean(prof[:, L - 1] == 0))
    out.add("extinction.mc", ext, math.sqrt(max(ext * (1 - ext), 0) / N), N)
    for l in range(L):
        mm, ss = mean_se(prof[:, l])
        out.add(f"mean_T{l}", mm, ss, N)
    write_rows(out.rows, cfg.output_path, cfg.format)
    # binomial SE of the exact value; the sample SE vanishes when every draw agrees
    exact_se = math.sqrt(res.probability * (1 - res.probability) / N)
    return EXIT_OK if abs(m - res.probability) <= 4 * exact_se + 1.0 / N else EXIT_FAIL


def cmd_bridge(p, cfg):
    out = _Out("bridges", cfg.seed)
    est, se, grid, grid_se = br.bb_barrier_mc(p["T"], p["a"], p["b"], p["M"], p["N"], substream(cfg.seed, 0))
    exact = br.bb_linear_barrier_prob(p["T"], p["a"], p["b"])
    out.add("bb_barrier.mc", est, se, p["N"])
    out.add("bb_barrier.grid_only", grid, grid_se, p["N"])
    out.add("bb_barrier.exact", exact)
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK if abs(est - exact) <= 4 * se + 1e-3 else EXIT_FAIL


def cmd_lattice(p, cfg):
    out = _Out("lattice_rk", cfg.seed)
    rng = substream(cfg.seed, 0)
    rep = lrk.ray_knight_marginal_check(p["L"], p["t"], p["vertex"], p["N"], rng)
    zero, zse, target = lrk.zero_mass_check(p["L"], p["t"], p["N"], rng)
    out.add("ray_knight.ks_stat", rep.statistic, n=rep.n)
    out.add("ray_knight.ks_p", rep.p_value, n=rep.n)
    out.add("zero_mass.mc", zero, zse, p["N"])
    out.add("zero_mass.target", target)
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK if rep.p_value > ALPHA else EXIT_FAIL


def cmd_torus(p, cfg):
    out = _Out("torus_bm", cfg.seed)
    rng = substream(cfg.seed, 0)
    center = tb.TorusPoint(0.5, 0.5)
    sim = tb.SimConfig(dt=p["dt"], dt_policy="proximity", seed=cfg.seed)
    if p["mode"] == "log":
        log = tb.excursion_decompose(center, p["R"], p["r"], p["t"], sim, rng)
        ret, dep = log.returns, log.departures
        out.add("log.returns", ret.size)
        out.add("log.departures", dep.size)
        if dep.size > 1:
            m, se = mean_se(np.diff(dep))
            out.add("log.mean_cycle", m, se, dep.size - 1)
        out.add("log.complete", float(log.complete))
    else:
        radii = ScaleSystem(p["L"], top_radius=p["top_radius"]).radii
        if p["mode"] == "exact-untimed":
            counts = tb.exact_profiles(radii, p["t"], p["N"], rng)
        elif p["mode"] == "timed-EM":
            counts, _ = tb.timed_profiles(center, radii, p["t"], p["N"], sim, rng)
        else:
            raise DomainError(f"unknown torus mode {p['mode']!r}")
        for l in range(counts.shape[1]):
            m, se = mean_se(counts[:, l])
            out.add(f"profile.mean_T{l}", m, se, p["N"])
            values, freq = np.unique(counts[:, l], return_counts=True)
            for v, f in zip(values[:20], freq[:20]):
                out.add(f"profile.hist_T{l}[{int(v)}]", f / p["N"], n=p["N"])
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK


def cmd_excursions(p, cfg):
    out = _Out("excursions", cfg.seed)
    rng = substream(cfg.seed, 0)
    center = tb.TorusPoint(0.5, 0.5)
    sim = tb.SimConfig(dt=p["dt"], seed=cfg.seed)
    R, r = p["R"], p["r"]
    stats = exc.equilibrium_cycles(center, R, r, p["n"], p["burn_in"], sim, rng, chains=p["chains"])
    m, se = stats.mean()
    e, ese = stats.extrapolated_mean()
    out.add("cycle.mean_fine", m, se, stats.n_cycles)
    out.add("cycle.mean_extrapolated", e, ese, stats.n_cycles)
    out.add("cycle.target", exc.mean_cycle_target(R, r))
    io, iose = stats.extrapolated_in_out()
    out.add("cycle.in_out_extrapolated", io, iose, stats.n_cycles)
    out.add("cycle.in_out_target", exc.in_out_target(R, r))
    out.add("minorization.q", exc.minorization_q(R, r))
    if p["N"] > 0:
        rows, slope = exc.concentration_experiment(center, R, r, [50, 200, 800], p["delta"], p["N"], sim, rng,
                                                   burn_in=p["burn_in"])
        for row in rows:
            out.add(f"concentration.n{row.n}.failure", row.failure, n=row.runs)
            out.add(f"concentration.n{row.n}.rel_sd", row.rel_sd, n=row.runs)
        out.add("concentration.rel_sd_slope", slope)
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK


def cmd_count(p, cfg):
    out = _Out("experiments", cfg.seed)
    rng = substream(cfg.seed, 0)
    ss = ScaleSystem(p["L"], p["s"], top_radius=p["top_radius"])
    t = excursion_budget(p["L"], p["s"]) if p["t"] is None else p["t"]
    spec = xp.CountingSpec(p["mode"], t, ss)
    points = start = None
    if p["engine"] == "torus-mc":
        k = p["grid"]
        ax = np.arange(k) / k
        points = np.array([[a, b] for a in ax for b in ax])
        start = tb.TorusPoint(0.5 / k, 0.5 / k)
    m, se = xp.counting_variable_estimate(spec, p["engine"], p["N"], rng, points=points, start=start,
                                          config=tb.SimConfig(dt=p["dt"], dt_policy="proximity"))
    out.add(f"count.{p['mode']}.{p['engine']}", m, se, p["N"])
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK


def cmd_cover(p, cfg):
    out = _Out("experiments", cfg.seed)
    eps = p["eps"]
    dt = p["dt"] if p["dt"] is not None else min(eps) ** 2 / 50
    res = xp.cover_time_study(eps, tb.SimConfig(dt=dt), p["runs"], substream(cfg.seed, 0), p["t_max"])
    for e in res.eps:
        for name, arr in (("upper", res.upper[e]), ("lower", res.lower[e])):
            out.add(f"cover.eps{e!r}.median_{name}", float(np.median(arr)), n=arr.size)
        d = res.deficit(e)
        out.add(f"cover.eps{e!r}.median_deficit", float(np.median(d)), xp.median_se(d), d.size)
    out.add("cover.complete", float(res.complete))
    write_rows(out.rows, cfg.output_path, cfg.format)
    return EXIT_OK if res.complete else EXIT_FAIL


def cmd_heatmap(p, cfg):
    occ = xp.occupation_heatmap(p["T"], p["radius"], p["resolution"], tb.SimConfig(dt=p["dt"]),
                                substream(cfg.seed, 0))
    text = xp.heatmap_to_csv(occ)
    if cfg.output_path in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    if p["pgm"]:
        with open(p["pgm"], "w") as fh:
            fh.write(xp.heatmap_to_pgm(occ))
    return EXIT_OK


def cmd_selftest(p, cfg):
    from .acceptance import run_suite

    outcomes = run_suite(cfg.seed, cfg.workers, p["only"])
    rows = [row for o in outcomes for row in o.rows]
    write_rows(rows, cfg.output_path, cfg.format)
    for o in outcomes:
        print(f"criterion {o.number:2d} {'PASS' if o.passed else 'FAIL'}  {o.title}", file=sys.stderr)
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_FAIL


COMMANDS = {
    "scales": cmd_scales, "gw": cmd_gw, "bridge": cmd_bridge, "lattice": cmd_lattice,
    "torus": cmd_torus, "excursions": cmd_excursions, "count": cmd_count, "cover": cmd_cover,
    "heatmap": cmd_heatmap, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset after it
    hide = argparse.SUPPRESS
    common.add_argument("--seed", default=hide, help="64-bit seed (decimal or 0x...)")
    common.add_argument("--workers", type=int, default=hide)
    common.add_argument("--out", default=hide, help="output path, '-' for stdout")
    common.add_argument("--format", choices=("csv", "json"), default=hide)
    common.add_argument("--config", default=hide, help="key=value file")
    parser = argparse.ArgumentParser(prog="covertime", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        for prm in PARAMS[name]:
            # booleans work bare (--conditioned) or with a value (--conditioned false)
            extra = {"nargs": "?", "const": "true"} if prm.kind is _flag else {}
            sp.add_argument(f"--{prm.name.replace('_', '-')}", dest=prm.name, default=None, help=prm.help,
                            **extra)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        overrides = {k: getattr(ns, k, None) for k in ("seed", "workers", "out", "format")}
        cfg = parse_config(getattr(ns, "config", None), overrides, [prm.name for prm in PARAMS[ns.command]])
        params = _resolve(ns.command, cfg, ns)
        return COMMANDS[ns.command](params, cfg)
    except (ConfigError, DomainError, TruncationError) as err:
        print(f"covertime: error: {err}", file=sys.stderr)
        return EXIT_USAGE
