import csv
import io
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from covertime.config import RunConfig, parse_config
from covertime.errors import ConfigError
from covertime.report import COLUMNS, Row, to_csv, to_json
from covertime.rng import DEFAULT_SEED, SEED_ENV, default_seed, parse_seed, substream
from covertime.stats import chi_square_test, ks_test, merge_bins, wilson_interval


def run_cli(*args, env=None):
    full_env = {**os.environ, **(env or {})}
    return subprocess.run([sys.executable, "-m", "covertime", *args], capture_output=True,
                          text=True, env=full_env, timeout=600)


# ---------------------------------------------------------------- config


def test_empty_file_gives_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    f = tmp_path / "empty.cfg"
    f.write_text("")
    cfg = parse_config(f)
    assert cfg == RunConfig()
    assert cfg.seed == 0xC0FFEE and cfg.workers == 1 and cfg.format == "csv"


def test_flag_beats_file(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("seed = 42\n")
    assert parse_config(f).seed == 42
    assert parse_config(f, {"seed": "7"}).seed == 7


def test_env_overrides_default_only(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "99")
    assert default_seed() == 99
    assert parse_config().seed == 99
    assert parse_config(overrides={"seed": 5}).seed == 5
    f = tmp_path / "a.cfg"
    f.write_text("seed=42")
    assert parse_config(f).seed == 42


def test_zero_workers_rejected(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("workers=0\n")
    with pytest.raises(ConfigError, match="workers"):
        parse_config(f)


def test_unknown_key_lists_valid_keys(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("# comment\nseed=1\ncolour=blue\n")
    with pytest.raises(ConfigError) as err:
        parse_config(f)
    assert ":3:" in str(err.value) and "workers" in str(err.value)


def test_malformed_line_reports_line_number(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("\nseed=1\nnot a pair\n")
    with pytest.raises(ConfigError, match=":3:"):
        parse_config(f)


def test_subcommand_params_accepted(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("L = 12\nformat=json\n")
    cfg = parse_config(f, param_keys=["L"])
    assert cfg.params == {"L": "12"} and cfg.format == "json"


def test_seed_parsing():
    assert parse_seed("0xC0FFEE") == DEFAULT_SEED
    with pytest.raises(ValueError):
        parse_seed(-1)
    with pytest.raises(ValueError):
        parse_seed(2**64)


# ---------------------------------------------------------------- substreams


def test_substream_deterministic():
    a = substream(123, 4).random(1000)
    b = substream(123, 4).random(1000)
    assert np.array_equal(a, b)


def test_substreams_uncorrelated():
    n = 10_000
    a = substream(DEFAULT_SEED, 0).standard_normal(n)
    b = substream(DEFAULT_SEED, 1).standard_normal(n)
    assert abs(np.corrcoef(a, b)[0, 1]) <= 3 / math.sqrt(n)


def test_distinct_seeds_differ():
    firsts = {substream(seed, 0).integers(0, 2**63) for seed in range(1000)}
    assert len(firsts) == 1000


# ---------------------------------------------------------------- statistics


def test_ks_identical_samples():
    x = np.random.default_rng(1).standard_normal(500)
    rep = ks_test(x, x.copy())
    assert rep.statistic == 0 and rep.p_value == 1 and rep.passed


def test_ks_empty_is_inconclusive():
    assert ks_test([], [1.0]).inconclusive


def test_chi_square_exact_fit():
    obs = np.array([10.0, 20.0, 30.0, 40.0])
    rep = chi_square_test(obs, obs)
    assert rep.statistic == 0 and rep.p_value == pytest.approx(1.0)


def test_merge_bins_keeps_totals():
    o, e = merge_bins([1, 2, 3, 50, 1], [1, 1, 4, 50, 2])
    assert o.sum() == 57 and e.sum() == 58 and np.all(e >= 5)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100, 0.95)
    assert lo == pytest.approx(0.404, abs=1e-3) and hi == pytest.approx(0.596, abs=1e-3)
    assert wilson_interval(0, 10)[0] == 0.0


# ---------------------------------------------------------------- reports and CLI


def test_csv_schema():
    text = to_csv([Row("gw", "x", 0.5, math.nan, 3, 7, 2)])
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == COLUMNS
    assert rows[1] == ["gw", "x", "0.5", "nan", "3", "7", "2"]
    assert '"stderr": null' in to_json([Row("gw", "x", 0.5)])


def test_cli_scales_ok():
    res = run_cli("scales", "--L", "16")
    assert res.returncode == 0
    assert res.stdout.splitlines()[0].startswith("l,")


def test_cli_usage_errors_exit_two(tmp_path):
    assert run_cli("scales", "--L", "1").returncode == 2
    assert run_cli("nosuchcommand").returncode == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("workers=0\n")
    assert run_cli("--config", str(bad), "scales").returncode == 2


def test_cli_gw_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    r1 = run_cli("gw", "--L", "5", "--t", "8", "--N", "2000", "--seed", "11", "--out", str(a))
    r2 = run_cli("--seed", "11", "gw", "--L", "5", "--t", "8", "--N", "2000", "--out", str(b))
    assert r1.returncode == 0 and r2.returncode == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == ",".join(COLUMNS)


def test_cli_failing_check_exits_one():
    # the tube criterion does not hold at desk scale, so selftest reports failure
    res = run_cli("selftest", "--only", "12", "--out", os.devnull)
    assert res.returncode == 1
    assert "criterion 12 FAIL" in res.stderr
