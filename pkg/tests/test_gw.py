import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covertime import gw
from covertime.errors import DomainError, TruncationError
from covertime.scales import barriers
from covertime.stats import chi_square_test, two_sample_chi_square


def test_offspring_law(rng):
    k = gw.offspring_sample(rng, size=1_000_000)
    assert abs(k.mean() - 1) <= 3 * math.sqrt(2) / 1000
    assert np.mean(k == 0) == pytest.approx(0.5, abs=0.002)
    assert np.mean(k == 3) == pytest.approx(1 / 16, abs=0.001)


def test_gw_sample_basic(rng):
    assert np.all(gw.gw_sample(0, 5, rng).counts == 0)
    prof = gw.gw_sample_many(2, 1, 200_000, rng)
    p = np.mean(prof[:, 1] == 0)
    assert abs(p - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 200_000)


def test_extinction_absorbing(rng):
    prof = gw.gw_sample_many(5, 12, 5000, rng)
    dead = prof[:, :-1] == 0
    assert np.all(prof[:, 1:][dead] == 0)


def test_martingale(rng):
    prof = gw.gw_sample_many(10, 3, 100_000, rng)
    a = prof[:, 1]
    for val in (5, 10, 15):
        sel = prof[a == val, 2]
        assert abs(sel.mean() - val) <= 3 * sel.std() / math.sqrt(sel.size)


def test_vectorized_sampler_matches_bruteforce(rng):
    fast = gw.gw_sample_many(6, 3, 3000, rng)
    slow = np.array([gw.gw_sample_bruteforce(6, 3, rng) for _ in range(3000)])
    for l in range(1, 4):
        assert two_sample_chi_square(fast[:, l], slow[:, l]).p_value > 0.001


@pytest.mark.parametrize("L,t,value", [(2, 0, 1.0), (2, 2, 0.25), (4, 3, 27 / 64)])
def test_extinction_values(L, t, value):
    assert gw.extinction_prob(L, t) == pytest.approx(value, abs=1e-15)


def test_extinction_domain():
    with pytest.raises(DomainError):
        gw.extinction_prob(1, 3)


def test_extinction_mc(rng):
    prof = gw.gw_sample_many(3, 3, 1_000_000, rng)
    p = np.mean(prof[:, 3] == 0)
    assert abs(p - 27 / 64) <= 3 * math.sqrt(p * (1 - p) / 1e6)


def test_transition_pmf_values():
    assert gw.transition_pmf(1, 0) == 0.5
    assert gw.transition_pmf(2, 1) == 0.25
    assert gw.transition_pmf(0, 0) == 1.0 and gw.transition_pmf(0, 3) == 0.0


@given(st.integers(min_value=1, max_value=50))
@settings(max_examples=20, deadline=None)
def test_transition_rows_sum_to_one(a):
    total, b = 0.0, 0
    while True:
        v = gw.transition_pmf(a, b)
        total += v
        if b > 2 * a and v < 1e-17:
            break
        b += 1
    assert total == pytest.approx(1.0, abs=1e-12)


def test_dp_vacuous_is_one():
    assert gw.barrier_prob_dp(6, 20).probability == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_dp_single_founder_extinction(n):
    res = gw.barrier_prob_dp(n + 1, 1, condition_extinct=True, method="weighted")
    assert res.joint == pytest.approx(n / (n + 1), abs=1e-12)


def test_dp_matches_closed_form_small_grid():
    for L in (2, 5, 11):
        for t in (0, 7, 60):
            res = gw.barrier_prob_dp(L, t, upper=lambda l: 0, levels=[L - 1], cap=3 * t + 40 * L + 100)
            assert res.probability == pytest.approx(gw.extinction_prob(L, t), abs=1e-12)


def test_dp_conditioned_vacuous_extinction():
    for method in ("tilted", "weighted"):
        res = gw.barrier_prob_dp(12, 40, condition_extinct=True, method=method)
        assert res.joint == pytest.approx(gw.extinction_prob(12, 40), rel=1e-9)


def test_dp_conditioned_lower_barrier_vs_rejection(rng):
    lower = lambda l: 1.0
    res = gw.barrier_prob_dp(4, 3, lower=lower, condition_extinct=True, levels=[0, 1, 2])
    prof = gw.conditioned_sample_many(3, 4, 1_000_000, rng, method="rejection")
    p = np.mean(np.all(prof[:, :3] >= 1, axis=1))
    assert abs(p - res.probability) <= 3 * math.sqrt(p * (1 - p) / prof.shape[0])


def test_dp_methods_agree():
    bars = barriers(20, 0.0)
    lo, hi, lev = gw.barrier_preset("alpha", bars)
    a = gw.barrier_prob_dp(20, bars.t, lo, hi, condition_extinct=True, levels=lev, method="tilted", cap=6000)
    b = gw.barrier_prob_dp(20, bars.t, lo, hi, condition_extinct=True, levels=lev, method="weighted", cap=6000)
    assert a.probability == pytest.approx(b.probability, rel=1e-6)


def test_truncation_error_pickles():
    import pickle
    err = pickle.loads(pickle.dumps(TruncationError("lost", 0.5)))
    assert err.truncated_mass == 0.5 and str(err) == "lost"


def test_dp_small_cap_raises():
    with pytest.raises(TruncationError) as err:
        gw.barrier_prob_dp(3, 100, cap=100)
    assert err.value.truncated_mass > 1e-9


def test_conditioned_marginals_match_dp(rng):
    L, t, N = 6, 20, 100_000
    prof = gw.conditioned_sample_many(t, L, N, rng)
    _, hist = gw.barrier_prob_dp(L, t, condition_extinct=True, marginals=True)
    for l in range(1, L - 1):
        p, lo = hist[l]
        obs = np.bincount(prof[:, l] - lo if lo == 0 else np.clip(prof[:, l] - lo, 0, None),
                          minlength=p.size)[:p.size]
        assert chi_square_test(obs, p * N).p_value > 0.001


def test_tilted_sampler_matches_rejection(rng):
    a = gw.conditioned_sample_many(15, 5, 40_000, rng, method="tilted")
    b = gw.conditioned_sample_many(15, 5, 40_000, rng, method="rejection")
    assert np.all(a[:, 4] == 0)
    for l in (1, 2, 3):
        assert two_sample_chi_square(a[:, l], b[:, l]).p_value > 0.001


def test_compound_mean_and_samplers(rng):
    params = gw.CompoundParams(30, 0.3, 0.4)
    x = gw.compound_sample(params, rng, size=100_000)
    assert abs(x.mean() - params.mean) <= 3 * x.std() / math.sqrt(x.size)
    y = gw.compound_sample_direct(params, rng, 50_000)
    assert two_sample_chi_square(x[:50_000], y).p_value > 0.001
    pmf = gw.compound_pmf(params, 400)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-10)


def test_compound_rare_q(rng):
    params = gw.CompoundParams(5, 0.5, 1e-6)
    assert np.mean(gw.compound_sample(params, rng, size=10_000) == 0) > 0.999


def test_ld_bound_values():
    params = gw.CompoundParams(100, 0.2, 0.2)
    assert gw.ld_bound_compound(params, 25) == pytest.approx(math.exp(-5), abs=1e-6)
    assert gw.ld_bound_compound(gw.CompoundParams(40, 0.3, 0.3), 40) == pytest.approx(1.0)
    vals = [gw.ld_bound_compound(params, th) for th in range(0, 101, 10)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        gw.ld_bound_compound(params, 101)


def test_ld_bound_holds_empirically(rng):
    params = gw.CompoundParams(100, 0.2, 0.2)
    x = gw.compound_sample(params, rng, size=1_000_000)
    p = np.mean(x <= 50)
    assert p <= gw.ld_bound_compound(params, 50) + 3 * math.sqrt(p * (1 - p) / x.size)


def test_immigration(rng):
    assert np.all(gw.immigration_gw_sample(0, 1, 3, 5, rng).counts == 0)
    x = gw.immigration_gw_sample_many(4, 2, 5, 7, 100_000, rng)
    assert np.all(x[:, :2] == 0)
    assert abs(x[:, 5].mean() - 16) <= 3 * x[:, 5].std() / math.sqrt(x.shape[0])
    single = gw.immigration_gw_sample_many(6, 2, 2, 5, 50_000, rng)
    ref = gw.gw_sample_many(6, 3, 50_000, rng)
    assert two_sample_chi_square(single[:, 4], ref[:, 2]).p_value > 0.001


def test_presets():
    bars = barriers(40, 0.0)
    lo, hi, lev = gw.barrier_preset("gamma-delta", bars, 2)
    assert lev[0] == 2 and lev[-1] == 38
    assert gw.barrier_preset("none", bars) == (None, None, [])
    with pytest.raises(DomainError):
        gw.barrier_preset("bogus", bars)
