"""Noise-intensity and noise-fraction sweeps for the model-free and EG methods.

Writes one tidy CSV per sweep into --outdir.
Usage: python3 scripts/run_sweeps.py --seeds 10 --jobs 4
"""

import argparse
import logging
from pathlib import Path

from manie import experiment as ex

ZK = {"fixture": "zachary"}

SWEEPS = {
    "kuramoto_snr": (ex.ExperimentConfig(ZK, {"kind": "kuramoto"}, {"kind": "awgn_local", "snr_db": 10.0, "prob": 0.5}),
                     "snr_db", [0, 5, 10, 15, 20, 25, 30]),
    "kuramoto_fraction": (ex.ExperimentConfig(ZK, {"kind": "kuramoto"}, {"kind": "awgn_local", "snr_db": 10.0, "prob": 0.5}),
                          "noise_fraction", [0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
    "eg_amplitude": (ex.ExperimentConfig(ZK, {"kind": "eg", "reps": 6}, {"kind": "amp_uniform", "amplitude": 10.0, "prob": 0.5}),
                     "amplitude", [0, 2, 4, 6, 8, 10]),
    "eg_fraction": (ex.ExperimentConfig(ZK, {"kind": "eg", "reps": 6}, {"kind": "amp_uniform", "amplitude": 10.0, "prob": 0.5}),
                    "noise_fraction", [0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--only", nargs="*", choices=sorted(SWEEPS), default=sorted(SWEEPS))
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--outdir", default="results")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for name in args.only:
        base, axis, values = SWEEPS[name]
        cfg = ex.dataclasses.replace(base, seeds=list(range(args.seeds)))
        table = ex.run_sweep(cfg, axis, values, jobs=args.jobs)
        for v in values:
            for mode in ("off", "on"):
                aucs = [r.auc for x, r in table if x == float(v) and r.manie == mode and r.auc is not None]
                logging.info("%s %s=%g %-3s %.3f", name, axis, v, mode, sum(aucs) / max(len(aucs), 1))
        ex.write_text(ex.rows_to_csv(table, axis=axis), Path(args.outdir) / f"sweep_{name}.csv")


if __name__ == "__main__":
    main()
