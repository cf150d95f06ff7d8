"""Goodness-of-fit helpers returning uniform test reports."""
from __future__ import annotations

from dataclasses import dataclass, asdict
import math

import numpy as np
from scipy import stats

ALPHA = 0.01


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float
    n: int
    passed: bool
    inconclusive: bool = False
    threshold: float = ALPHA

    __test__ = False  # keep pytest from collecting this class

    def as_dict(self) -> dict:
        return asdict(self)


def bonferroni(alpha: float, k: int) -> float:
    return alpha / max(int(k), 1)


def inconclusive(name: str, n: int = 0) -> TestReport:
    return TestReport(name, math.nan, math.nan, n, False, inconclusive=True)


def ks_test(sample_a, sample_b, name: str = "ks", alpha: float = ALPHA) -> TestReport:
    """Two-sample Kolmogorov-Smirnov with the asymptotic p-value."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        return inconclusive(name, int(min(a.size, b.size)))
    res = stats.ks_2samp(a, b, method="asymp")
    p = float(min(max(res.pvalue, 0.0), 1.0))
    return TestReport(name, float(res.statistic), p, int(min(a.size, b.size)), p > alpha, threshold=alpha)


def ks_test_cdf(sample, cdf, name: str = "ks1", alpha: float = ALPHA) -> TestReport:
    """One-sample KS against an exact distribution function."""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        return inconclusive(name)
    res = stats.kstest(x, cdf)
    p = float(res.pvalue)
    return TestReport(name, float(res.statistic), p, int(x.size), p > alpha, threshold=alpha)


def merge_bins(observed, expected, min_expected: float = 5.0):
    """Merge adjacent bins left to right until each expected count is >= min_expected."""
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    out_o, out_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            out_o.append(acc_o)
            out_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if out_e:
            out_o[-1] += acc_o
            out_e[-1] += acc_e
        else:
            out_o.append(acc_o)
            out_e.append(acc_e)
    return np.array(out_o), np.array(out_e)


def chi_square_test(observed, expected, name: str = "chi2", alpha: float = ALPHA,
                    ddof: int = 0) -> TestReport:
    """Pearson goodness of fit after merging sparse bins.

    Expected counts are rescaled to the observed total.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    n = int(round(obs.sum()))
    if n == 0 or exp.sum() <= 0:
        return inconclusive(name, n)
    exp = exp * (obs.sum() / exp.sum())
    o, e = merge_bins(obs, exp)
    if o.size < 2:
        return inconclusive(name, n)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1 - ddof
    p = float(stats.chi2.sf(stat, dof))
    return TestReport(name, stat, p, n, p > alpha, threshold=alpha)


def chi_square_from_parts(stat: float, dof: int, n: int, name: str, alpha: float = ALPHA) -> TestReport:
    if dof <= 0:
        return inconclusive(name, n)
    p = float(stats.chi2.sf(stat, dof))
    return TestReport(name, float(stat), p, n, p > alpha, threshold=alpha)


def chi_square_parts(observed, expected) -> tuple[float, int]:
    """Statistic and degrees of freedom for one stratum, with exact expected totals."""
    o, e = merge_bins(observed, expected)
    if o.size < 2:
        return 0.0, 0
    return float(np.sum((o - e) ** 2 / e)), int(o.size - 1)


def two_sample_chi_square(a, b, name: str = "chi2-2s", alpha: float = ALPHA) -> TestReport:
    """Homogeneity test for two integer samples, pooling sparse tail categories."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(initial=0), b.max(initial=0)))
    ca = np.bincount(a, minlength=top + 1).astype(float)
    cb = np.bincount(b, minlength=top + 1).astype(float)
    # pool categories so that the pooled expected count is at least 10
    pooled = ca + cb
    edges, acc = [], 0.0
    for k in range(top + 1):
        acc += pooled[k]
        if acc >= 10:
            edges.append(k)
            acc = 0.0
    if not edges:
        return inconclusive(name, int(a.size))
    edges[-1] = top  # leftover sparse tail joins the last category
    table = []
    lo = 0
    for hi in edges:
        table.append([ca[lo:hi + 1].sum(), cb[lo:hi + 1].sum()])
        lo = hi + 1
    table = np.array(table).T
    if table.shape[1] < 2:
        return inconclusive(name, int(a.size))
    res = stats.chi2_contingency(table, correction=False)
    p = float(res.pvalue)
    return TestReport(name, float(res.statistic), p, int(min(a.size, b.size)), p > alpha, threshold=alpha)


def wilson_interval(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(0.5 + conf / 2.0))
    phat = k / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def proportion_se(k: int, n: int) -> tuple[float, float]:
    p = k / n
    return p, math.sqrt(max(p * (1 - p), 0.0) / n)


def loglog_slope(x, y) -> float:
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
