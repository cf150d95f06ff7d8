"""Cover-time brackets and the second-order deficit for several eps on common paths."""
import argparse
import math

import numpy as np

from covertime.experiments import cover_time_study, median_se
from covertime.rng import DEFAULT_SEED, substream
from covertime.torus_bm import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, nargs="+", default=[4, 5, 6], help="eps = 2^-k")
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=lambda v: int(v, 0), default=DEFAULT_SEED)
    args = ap.parse_args()
    eps = [2.0 ** -k for k in args.k]
    cfg = SimConfig(dt=min(eps) ** 2 / 50)
    res = cover_time_study(eps, cfg, args.runs, substream(args.seed, 0))
    print("eps,median_lower,median_upper,leading_ratio,deficit_median,deficit_se")
    for e in sorted(eps, reverse=True):
        a = math.log(1 / e)
        d = res.deficit(e)
        print(f"{e:.6g},{np.median(res.lower[e]):.5g},{np.median(res.upper[e]):.5g},"
              f"{np.median(res.upper[e]) / (2 * a * a / math.pi):.4f},{np.median(d):.4f},{median_se(d):.4f}")
    if not res.complete:
        print("# some runs hit the time cap")


if __name__ == "__main__":
    main()
