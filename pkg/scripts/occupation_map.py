"""Occupation-time field of one Brownian path at several radii, written as PGM images."""
import argparse
from pathlib import Path

from covertime.experiments import heatmap_to_pgm, occupation_heatmap
from covertime.rng import DEFAULT_SEED, substream
from covertime.torus_bm import SimConfig, TorusPoint


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.2, 0.05, 0.01])
    ap.add_argument("--resolution", type=int, default=256)
    ap.add_argument("--outdir", default="heatmaps")
    ap.add_argument("--seed", type=lambda v: int(v, 0), default=DEFAULT_SEED)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for radius in args.radii:
        # same seed for every radius, so all maps show the same path
        m = occupation_heatmap(args.T, radius, args.resolution, SimConfig(dt=1e-5),
                               substream(args.seed, 0), start=TorusPoint(0.5, 0.5))
        path = out / f"occupation_r{radius:g}.pgm"
        path.write_text(heatmap_to_pgm(m))
        print(f"{path}: max {m.max():.4g}, mean {m.mean():.4g}")


if __name__ == "__main__":
    main()
