"""Mean excursion-cycle time against its exact value as the step size shrinks."""
import argparse
import math

from covertime.excursions import equilibrium_cycles, mean_cycle_target
from covertime.rng import DEFAULT_SEED, substream
from covertime.torus_bm import SimConfig, TorusPoint


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, default=0.25)
    ap.add_argument("--r", type=float, default=0.25 / math.e)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--dt", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5])
    ap.add_argument("--seed", type=lambda v: int(v, 0), default=DEFAULT_SEED)
    args = ap.parse_args()
    target = mean_cycle_target(args.R, args.r)
    print(f"# target {target:.6f}")
    print("dt,raw_mean,raw_se,extrapolated,extrapolated_se")
    for i, dt in enumerate(args.dt):
        s = equilibrium_cycles(TorusPoint(0.5, 0.5), args.R, args.r, args.n, 50, SimConfig(dt=dt),
                               substream(args.seed, i))
        (m, se), (e, ese) = s.mean(), s.extrapolated_mean()
        print(f"{dt:g},{m:.6f},{se:.6f},{e:.6f},{ese:.6f}")


if __name__ == "__main__":
    main()
