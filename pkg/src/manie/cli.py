"""Command-line entry point: ``manie {simulate,infer,benchmark,sweep,export-weights}``.

Exit code 0 when every run succeeds, 2 when any per-seed run recorded an error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .enhance import run_manie
from .metrics import auc

log = logging.getLogger("manie")

EXIT_OK = 0
EXIT_PARTIAL = 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML experiment config")
    common.add_argument("--seed", type=int, default=None, help="first seed (overrides config seeds)")
    common.add_argument("--seeds", type=int, default=None, help="number of consecutive seeds from --seed")
    common.add_argument("--out", default=None, help="output path (default: config 'out' or stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
    common.add_argument("--manie", choices=("on", "off", "both"), default=None)
    common.add_argument("--timing", action="store_true", help="fill the wall_time column")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="manie", description="Self-paced enhancement of network inference.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write the noisy record and its corruption mask")
    sub.add_parser("infer", parents=[common], help="write the inferred score matrix for one seed")
    sub.add_parser("benchmark", parents=[common], help="results CSV over all seeds")
    sw = sub.add_parser("sweep", parents=[common], help="results CSV over a noise axis")
    sw.add_argument("--axis", choices=ex.SWEEP_AXES, default=None)
    sw.add_argument("--values", type=float, nargs="+", default=None)
    sub.add_parser("export-weights", parents=[common], help="long-format weight trajectories for one seed")
    return p


def _seeds(cfg_seeds, seed, n):
    if seed is None and n is None:
        return cfg_seeds
    start = cfg_seeds[0] if seed is None else seed
    return [start + k for k in range(n or 1)]


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        ex.write_text(text, out)
        log.info("wrote %s", out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    cfg, sweep = ex.load_config(args.config)
    cfg = dataclasses.replace(cfg, seeds=_seeds(cfg.seeds, args.seed, args.seeds))
    out = args.out or cfg.out
    seed = cfg.seeds[0]

    if args.command == "benchmark":
        rows = ex.run_experiment(cfg, args.manie, args.jobs, args.timing)
        _emit(ex.rows_to_csv(rows), out)
        return EXIT_PARTIAL if any(r.error for r in rows) else EXIT_OK

    if args.command == "sweep":
        axis = args.axis or (sweep or {}).get("axis")
        values = args.values or (sweep or {}).get("values")
        if axis is None or not values:
            raise SystemExit("sweep needs --axis and --values (or a 'sweep' block in the config)")
        table = ex.run_sweep(cfg, axis, values, args.manie, args.jobs, args.timing)
        _emit(ex.rows_to_csv(table, axis=axis), out)
        return EXIT_PARTIAL if any(r.error for _, r in table) else EXIT_OK

    net, _, noisy = ex.prepare(cfg, seed)
    data, mask = noisy[0]
    if len(noisy) > 1:
        log.warning("scenario expands to %d noise specs; using the first", len(noisy))

    if args.command == "simulate":
        _emit(ex.record_to_csv(data), out)
        if out is not None:
            mask_path = Path(out).with_suffix(".mask.csv")
            ex.write_text("sample,is_noisy\r\n" + "".join(f"{t},{int(b)}\r\n" for t, b in enumerate(mask.noisy_samples)),
                          mask_path)
        return EXIT_OK

    method = ex.build_method(cfg)
    mc = ex.manie_config(cfg)
    if args.command == "infer":
        use_manie = (args.manie or ("off" if mc is None else "on")) != "off"
        if use_manie and mc is None:
            raise SystemExit("manie is 'off' in this config")
        scores = run_manie(method, data, mc).scores if use_manie else method.fit(data)
        rep = auc(scores, net)
        log.info("seed %d auc %.4f", seed, rep.auc)
        _emit(ex.scores_to_csv(scores), out)
        return EXIT_OK

    # export-weights
    if mc is None:
        raise SystemExit("export-weights needs MANIE enabled in the config")
    result = run_manie(method, data, mc)
    _emit(ex.weights_to_csv(result, mask), out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
