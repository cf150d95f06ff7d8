"""End-to-end acceptance: runs the full self-test twice through the CLI.

Criteria 1-14 are read from the pass rows of the first run's CSV;
criterion 15 requires the two runs to produce byte-identical output.
"""
import csv
import subprocess
import sys

import pytest

SEED = "0xC0FFEE"
WORKERS = "4"
TITLES = {
    1: "annulus exit law", 2: "traversal process matches Galton-Watson", 3: "extinction formula",
    4: "bridge linear barrier", 5: "squared Bessel identities", 6: "change of dimension reweighting",
    7: "Ray-Knight marginal", 8: "conditional traversal pmf", 9: "conditioned gamma law",
    10: "mean cycle identity", 11: "disc exit time", 12: "conditioned tube order",
    13: "compound lower-tail bound", 14: "cover-time deficit sign and trend",
    15: "byte-identical reruns",
}


def _selftest(out):
    return subprocess.run([sys.executable, "-m", "covertime", "selftest", "--seed", SEED,
                           "--workers", WORKERS, "--out", str(out)],
                          capture_output=True, text=True, timeout=3600)


@pytest.fixture(scope="module")
def runs(tmp_path_factory, request):
    d = tmp_path_factory.mktemp("acceptance")
    first, second = d / "first.csv", d / "second.csv"
    r1 = _selftest(first)
    r2 = _selftest(second)
    with open(first, newline="") as fh:
        rows = list(csv.DictReader(fh))
    verdicts = {int(r["quantity"][9:11]): float(r["value"]) == 1.0
                for r in rows if r["quantity"].startswith("criterion") and r["quantity"].endswith(".pass")}
    verdicts[15] = first.read_bytes() == second.read_bytes()
    capture = request.config.pluginmanager.get_plugin("capturemanager")
    with capture.global_and_fixture_disabled():
        print()
        for k in sorted(TITLES):
            print(f"criterion {k:2d} {'PASS' if verdicts.get(k) else 'FAIL'}  {TITLES[k]}")
    return {"verdicts": verdicts, "codes": (r1.returncode, r2.returncode)}


@pytest.mark.parametrize("number", sorted(TITLES), ids=lambda k: f"{k:02d}-{TITLES[k].replace(' ', '_')}")
def test_criterion(runs, number):
    assert runs["verdicts"].get(number) is True, TITLES[number]


def test_exit_code_reflects_verdicts(runs):
    expected = 0 if all(runs["verdicts"][k] for k in range(1, 15)) else 1
    assert runs["codes"] == (expected, expected)
