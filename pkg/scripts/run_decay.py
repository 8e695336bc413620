"""Log-log slopes of the one-coordinate second moment of the log-ratio.

Fits E[rho^2] against the proposal scale for rough RWM, rough MALA and the
Gaussian control on one fine fBM environment.
"""
import argparse

import numpy as np

from scaling_lab.diagnostics import estimate_In_decay
from scaling_lab.fbm_env import GridSpec, sample_fbm_circulant
from scaling_lab.targets import (LocalisationParams, build_gaussian, build_mala_rough, build_rwm_rough,
                                 normalize_and_tabulate)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hurst", type=float, default=0.5)
    ap.add_argument("--points", type=int, default=2_000_001)
    ap.add_argument("--env-seed", type=int, default=1)
    ap.add_argument("--samples", type=int, default=400_000)
    ap.add_argument("--c", type=float, default=0.1)
    args = ap.parse_args()
    H = args.hurst
    path = sample_fbm_circulant(GridSpec(-9.0, 9.0, args.points), H, args.env_seed)
    print(f"grid spacing {path.grid.spacing:.2e}")
    cases = [
        ("rough rwm", build_rwm_rough(path), H, np.geomspace(1e-3, 10**-1.5, 6)),
        ("rough mala", build_mala_rough(path, LocalisationParams(args.c, H)), 2 + H,
         np.geomspace(3e-4, 3e-4 * 10**1.5, 6)),
        ("gaussian", build_gaussian(), 1.0, np.geomspace(1e-3, 10**-1.5, 6)),
    ]
    for name, target, beta, sigmas in cases:
        fit = estimate_In_decay(normalize_and_tabulate(target), H, beta, sigmas, args.samples, seed=1)
        print(f"{name:>10}: slope {fit.slope:.3f}, expected {fit.expected_slope:.3f}")


if __name__ == "__main__":
    main()
