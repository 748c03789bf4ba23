"""Weight trajectories of one MANIE run, with the corruption mask, for plotting.

Usage: python3 scripts/run_weights.py --config configs/zk_kuramoto1_2.yaml --seed 0 --out results/weights.csv
"""

import argparse

import numpy as np

from manie import experiment as ex
from manie.enhance import run_manie


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="configs/zk_kuramoto1_2.yaml")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/weights.csv")
    args = p.parse_args()

    cfg, _ = ex.load_config(args.config)
    _, _, noisy = ex.prepare(cfg, args.seed)
    data, mask = noisy[0]
    res = run_manie(ex.build_method(cfg), data, ex.manie_config(cfg))
    ex.export_weights(res, mask, args.out)
    bad = mask.noisy_samples
    for it, v in enumerate(res.v_trajectory, start=1):
        print(f"iter {it:2d}  mean v noisy {np.mean(v[bad]) if bad.any() else np.nan:.3f}"
              f"  clean {np.mean(v[~bad]) if (~bad).any() else np.nan:.3f}")


if __name__ == "__main__":
    main()
