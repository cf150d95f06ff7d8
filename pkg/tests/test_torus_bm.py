import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from covertime import gw
from covertime import torus_bm as tb
from covertime.errors import DomainError
from covertime.scales import ScaleSystem
from covertime.stats import chi_square_test, two_sample_chi_square

coords = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(coords, coords, coords, coords, coords, coords)
def test_distance_is_a_bounded_metric(ax, ay, bx, by, cx, cy):
    a, b, c = tb.TorusPoint(ax, ay), tb.TorusPoint(bx, by), tb.TorusPoint(cx, cy)
    dab = tb.torus_distance(a, b)
    assert dab == pytest.approx(tb.torus_distance(b, a), abs=1e-12)
    assert dab <= math.sqrt(2) / 2 + 1e-12
    assert tb.torus_distance(a, c) <= dab + tb.torus_distance(b, c) + 1e-12


def test_point_reduced_mod_one():
    p = tb.TorusPoint(1.25, -0.25)
    assert (p.x, p.y) == (0.25, 0.75)
    assert tb.torus_distance(tb.TorusPoint(0.05, 0.5), tb.TorusPoint(0.95, 0.5)) == pytest.approx(0.1)


def test_config_validation():
    with pytest.raises(DomainError):
        tb.SimConfig(dt=0)
    with pytest.raises(DomainError):
        tb.SimConfig(dt_policy="sometimes")
    cfg = tb.SimConfig(dt=1e-4, dt_policy="proximity")
    assert cfg.reference_distance == pytest.approx(0.03)
    assert cfg.refined(4).dt == pytest.approx(2.5e-5)


def test_increment_variance(rng):
    dt = 1e-4
    chunks = []
    tb.em_path(tb.TorusPoint(0.5, 0.5), 10.0, tb.SimConfig(dt=dt), rng,
               lambda times, pos: chunks.append(pos))
    pos = np.concatenate(chunks)
    inc = tb.min_image(np.diff(pos, axis=0)).ravel()
    n = inc.size
    assert n >= 100_000
    var = float(np.mean(inc ** 2))
    assert abs(var - dt) <= 3 * dt * math.sqrt(2.0 / n)


def test_proximity_policy_shrinks_steps(rng):
    seen = []
    c = tb.TorusPoint(0.5, 0.5)
    tb.em_path(c.shifted(0.1, 0), 0.05, tb.SimConfig(dt=1e-4, dt_policy="proximity"), rng,
               lambda times, pos: seen.append(times), circles=[(c, 0.1)])
    steps = np.diff(np.concatenate([[0.0], *seen]))
    assert steps.min() < 1e-4 and steps.max() <= 1e-4 * (1 + 1e-12)


def test_exit_time_from_centre(rng):
    R, N = 0.2, 2000
    h = tb.exit_times(R, 0.0, 1e-6, N, rng)
    assert abs(h.mean() - R * R / 2) <= 0.02 * R * R / 2


def test_half_torus_occupation(rng):
    fracs = []
    for _ in range(20):
        hist = tb.occupation_histogram(2.0, 1e-4, 2, tb.TorusPoint(0.1, 0.3), rng)
        fracs.append(hist[0].sum() / hist.sum())
    fracs = np.array(fracs)
    assert abs(fracs.mean() - 0.5) <= 3 * fracs.std(ddof=1) / math.sqrt(fracs.size)


def test_exit_from_centre_uniform(rng):
    c = tb.TorusPoint(0.5, 0.5)
    pts = tb.disc_exit_sample(c, 0.2, c, rng, size=100_000)
    ang = np.mod(np.arctan2(pts[:, 1] - 0.5, pts[:, 0] - 0.5), 2 * math.pi)
    counts = np.bincount((ang / (2 * math.pi) * 36).astype(int) % 36, minlength=36)
    assert chi_square_test(counts, np.full(36, 1.0)).p_value > 0.01


def test_exit_semicircle_matches_quadrature(rng):
    c, R, N = tb.TorusPoint(0.5, 0.5), 0.2, 50_000
    u = c.shifted(R / 2, 0)
    pts = tb.disc_exit_sample(c, R, u, rng, size=N)
    near = np.mean(pts[:, 0] > 0.5)
    exact = integrate.quad(lambda phi: tb.poisson_kernel(R, [R / 2, 0.0], phi), -math.pi / 2,
                           math.pi / 2)[0] / (2 * math.pi)
    assert abs(near - exact) <= 3 * math.sqrt(exact * (1 - exact) / N)


@pytest.mark.parametrize("frac", [0.0, 0.5, 0.9])
def test_poisson_kernel_normalized(frac):
    R = 0.3
    val = integrate.quad(lambda phi: tb.poisson_kernel(R, [frac * R, 0.0], phi), -math.pi, math.pi,
                         limit=200, epsabs=1e-12)[0] / (2 * math.pi)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_exit_sample_rejects_outside(rng):
    c = tb.TorusPoint(0.5, 0.5)
    with pytest.raises(DomainError):
        tb.disc_exit_sample(c, 0.1, c.shifted(0.2, 0), rng)


def test_annulus_probabilities():
    r, R = 0.01, 0.25
    assert tb.annulus_inner_prob(r, math.sqrt(r * R), R) == pytest.approx(0.5, abs=1e-12)
    assert tb.annulus_inner_prob(R / math.e ** 2, R / math.e, R) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        tb.annulus_inner_prob(0.2, 0.1, 0.3)


def test_scale_hit_probability():
    assert tb.scale_hit_prob(0, 1, 5) == pytest.approx(0.2)
    radii = 0.4 * np.exp(-np.arange(6))
    assert tb.annulus_inner_prob(radii[5], radii[1], radii[0]) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(DomainError):
        tb.scale_hit_prob(1, 0, 5)


def test_scale_hit_by_simulation(rng):
    R, N = 0.4, 2000
    hits = tb.annulus_first_hit_em(R * math.exp(-3), R * math.exp(-1), R, 1e-6, N, rng)
    p = tb.scale_hit_prob(0, 1, 3)
    assert abs(hits.mean() - p) <= 3 * math.sqrt(p * (1 - p) / N)


def test_exact_bernoulli(rng):
    draws = tb.annulus_first_hit(tb.TorusPoint(0, 0), 0.01, 0.05, 0.2, rng, size=50_000)
    p = tb.annulus_inner_prob(0.01, 0.05, 0.2)
    assert abs(draws.mean() - p) <= 3 * math.sqrt(p * (1 - p) / 50_000)


def test_excursion_log_structure(rng):
    c = tb.TorusPoint(0.3, 0.7)
    for cfg in (tb.SimConfig(dt=1e-4), tb.SimConfig(dt=1e-4, dt_policy="proximity")):
        log = tb.excursion_decompose(c, 0.2, 0.05, 6.7, cfg, rng)
        assert log.complete
        assert log.departures.size == 6 and log.returns.size == 6
        assert np.all(log.kinds[0::2] == log.kinds[0]) and np.all(log.kinds[1::2] != log.kinds[0])
        assert np.all(np.diff(log.times) > 0)
        assert np.all(log.returns < log.departures)
        d = np.hypot(*tb.min_image(log.locations - c.as_array()).T)
        assert np.all(np.abs(d[log.kinds == log.kinds[0]] - 0.05) < 0.01)
        assert np.all(np.abs(d[log.kinds != log.kinds[0]] - 0.2) < 0.01)


def test_excursion_needs_budget(rng):
    with pytest.raises(DomainError):
        tb.excursion_decompose(tb.TorusPoint(0, 0), 0.2, 0.1, 0.5, tb.SimConfig(), rng)


def test_first_generation_is_budget(rng):
    ss = ScaleSystem(5, top_radius=0.25)
    prof = tb.exact_profiles(ss.radii, 7.9, 500, rng)
    assert np.all(prof[:, 0] == 7)
    p = tb.traversal_profile(tb.TorusPoint(0.5, 0.5), ss, 3, "timed-EM", rng, tb.SimConfig(dt=1e-4))
    assert p.counts[0] == 3


def test_exact_profiles_match_gw(rng):
    ss = ScaleSystem(6, top_radius=0.25)
    walk = tb.exact_profiles(ss.radii, 20, 10_000, rng)
    ref = gw.gw_sample_many(20, 5, 10_000, rng)
    for l in range(1, 6):
        assert two_sample_chi_square(walk[:, l], ref[:, l]).p_value > 0.01 / 5


def test_timed_matches_exact_and_extinction_equivalence(rng):
    ss = ScaleSystem(4, top_radius=0.25)
    c = tb.TorusPoint(0.5, 0.5)
    timed, visited = tb.timed_profiles(c, ss.radii, 10, 400,
                                       tb.SimConfig(dt=1e-4, dt_policy="proximity"), rng)
    assert np.array_equal(timed[:, -1] > 0, visited)
    exact = tb.exact_profiles(ss.radii, 10, 4000, rng)
    for l in range(1, 4):
        assert two_sample_chi_square(timed[:, l], exact[:, l]).p_value > 0.01 / 3


def test_refinement_changes_counts_little(rng):
    ss = ScaleSystem(4, top_radius=0.25)
    c = tb.TorusPoint(0.5, 0.5)
    cfg = tb.SimConfig(dt=4e-4, dt_policy="proximity")
    n = 1000
    a, _ = tb.timed_profiles(c, ss.radii, 10, n, cfg, rng)
    b, _ = tb.timed_profiles(c, ss.radii, 10, n, cfg.refined(4), rng)
    # independent runs: compare against the standard error of the difference
    se = math.hypot(a[:, -1].std(ddof=1), b[:, -1].std(ddof=1)) / math.sqrt(n)
    assert abs(a[:, -1].mean() - b[:, -1].mean()) < 3 * se


def test_profile_mode_and_radius_checks(rng):
    with pytest.raises(DomainError):
        tb.traversal_profile(tb.TorusPoint(0, 0), ScaleSystem(4, top_radius=0.25), 2, "magic", rng)
