"""Config-driven experiment runner.

An ``ExperimentConfig`` names a network, a dynamics family, a noise scenario
(template ``"_0"`` ... ``"_3"`` or an explicit ``NoiseSpec``), an inference
method and a MANIE setting. ``run_experiment`` executes one independent job
per seed and returns ``ResultRow`` records sorted by (scenario, seed, manie),
so the CSV bytes never depend on worker scheduling.

Every stage draws from its own seed substream, ``SeedSequence([seed, stage])``,
so changing e.g. the noise level leaves the simulated trajectory untouched.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import BinaryTimeSeries, EgRecord, TimeSeries, make_game, simulate_cp, simulate_eg, simulate_kuramoto_segments, simulate_sis
from .enhance import ManieConfig, ManieResult, run_manie
from .graphgen import FIXTURES, Network, ParameterError, gen_ba, gen_er, gen_nw, gen_ws, load_fixture, load_network_file
from .methods import ArniMethod, BasisSpec, EgMethod, EpidemicMethod, ScoreMatrix
from .metrics import auc as auc_report
from .metrics import neg_log2
from .noise import CorruptionMask, NoiseSpec, apply_noise

STAGES = {"network": 0, "dynamics": 1, "noise": 2, "method": 3}
SWEEP_AXES = ("snr_db", "noise_fraction", "amplitude")
FAMILY = {"kuramoto": "model_free", "eg": "eg", "sis": "epidemic", "cp": "epidemic"}

# Noise templates per dynamics family. A template may expand to several
# specs; their AUCs are averaged into one row (the EG global scenario).
SCENARIOS = {
    "model_free": {
        "_0": (NoiseSpec(),),
        "_1": (NoiseSpec("awgn_global", snr_db=10.0),),
        "_2": (NoiseSpec("awgn_local", snr_db=10.0, prob=0.5),),
        "_3": (NoiseSpec("awgn_local_random_snr", snr_range=(0.0, 10.0), prob=0.5),),
    },
    "eg": {
        "_0": (NoiseSpec(),),
        "_1": (NoiseSpec("amp_uniform", amplitude=10.0, prob=0.5),),
        "_2": (NoiseSpec("amp_uniform_random", amplitude=10.0, prob=0.5),),
        "_3": tuple(NoiseSpec("amp_uniform", amplitude=a, prob=1.0) for a in (1.0, 5.0, 10.0)),
    },
    "epidemic": {
        "_0": (NoiseSpec(),),
        "_1": (NoiseSpec("drop_nodes", frac=0.1),),
        "_2": (NoiseSpec("flip_bits", prob=0.1),),
    },
}

# MANIE settings per family. The model-free loss spans orders of magnitude
# between clean and corrupted samples, so its pace starts at the Otsu split
# of the log-losses; EG starts at a low quantile. Epidemic records often hold
# long stretches with nothing to predict (zero loss), so their quantile skips
# those samples.
MANIE_DEFAULTS = {
    "model_free": {"lambda_rule": "otsu", "c": 1.05},
    "eg": {"lambda_quantile": 0.3, "c": 1.05},
    "epidemic": {"lambda_positive_only": True},
}

DYNAMICS_DEFAULTS = {
    "kuramoto": {"variant": "K1", "n_segments": 50, "seg_len": 5, "dt": 0.1, "omega_range": 1.0,
                 "exact_derivatives": False},
    "eg": {"game": "pdg", "param": 1.2, "rounds": 10, "reps": 10, "kappa": 0.1},
    "sis": {"beta": 0.2, "delta": 0.2, "steps": 1000, "init_frac": 0.1},
    "cp": {"beta": 0.2, "delta": 0.2, "steps": 1000, "init_frac": 0.1},
}

NETWORK_IDS = {"zachary": "ZK", "example5": "Example"}
DYNAMICS_IDS = {"K1": "Kuramoto1", "K2": "Kuramoto2"}

ROW_FIELDS = ("scenario", "network", "dynamics", "noise", "method", "manie", "seed",
              "auc", "neg_log2_auc", "iterations", "wall_time", "error")


@dataclass
class ExperimentConfig:
    network: dict
    dynamics: dict
    noise: str | dict = "_0"
    method: dict = field(default_factory=dict)
    manie: dict | str | None = None
    seeds: list = field(default_factory=lambda: [0])
    out: str | None = None
    name: str = ""

    def __post_init__(self):
        if not self.seeds:
            raise ParameterError("seeds must be non-empty")
        self.seeds = [int(s) for s in self.seeds]
        kind = self.dynamics.get("kind")
        if kind not in FAMILY:
            raise ParameterError(f"dynamics kind must be one of {sorted(FAMILY)}, got {kind!r}")
        fixture = self.network.get("fixture")
        if fixture is not None and fixture not in FIXTURES:
            raise ParameterError(f"unknown fixture {fixture!r}; bundled: {FIXTURES}")
        path = self.network.get("path")
        if path is not None and not Path(path).is_file():
            raise ParameterError(f"network file {path} does not exist")
        if isinstance(self.manie, str) and self.manie != "off":
            raise ParameterError("manie must be a mapping, null, or 'off'")
        if isinstance(self.noise, str):
            noise_specs(self)  # fail early on unknown templates

    @property
    def family(self) -> str:
        return FAMILY[self.dynamics["kind"]]

    @property
    def scenario_id(self) -> str:
        if self.name:
            return self.name
        return f"{network_id(self.network)}_{dynamics_id(self.dynamics)}{noise_id(self.noise)}"


@dataclass
class ResultRow:
    scenario: str
    network: str
    dynamics: str
    noise: str
    method: str
    manie: str
    seed: int
    auc: float | None = None
    neg_log2_auc: float | None = None
    iterations: int | None = None
    wall_time: float | None = None
    error: str = ""

    def sort_key(self):
        return (self.scenario, self.seed, self.manie)


# --- config handling ---------------------------------------------------------


def network_id(spec: dict) -> str:
    if "fixture" in spec:
        return NETWORK_IDS.get(spec["fixture"], spec["fixture"])
    if "path" in spec:
        return Path(spec["path"]).stem
    return str(spec.get("generator", "net")).upper()


def dynamics_id(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "kuramoto":
        return DYNAMICS_IDS.get(spec.get("variant", "K1"), spec.get("variant", "K1"))
    return kind.upper()


def noise_id(noise) -> str:
    return noise if isinstance(noise, str) else "_" + noise.get("kind", "none")


def noise_specs(cfg: ExperimentConfig) -> tuple:
    if isinstance(cfg.noise, str):
        table = SCENARIOS[cfg.family]
        if cfg.noise not in table:
            raise ParameterError(f"no template {cfg.noise!r} for {cfg.family}; have {sorted(table)}")
        return table[cfg.noise]
    spec = dict(cfg.noise)
    if "snr_range" in spec and spec["snr_range"] is not None:
        spec["snr_range"] = tuple(spec["snr_range"])
    return (NoiseSpec(**spec),)


def manie_config(cfg: ExperimentConfig) -> ManieConfig | None:
    if cfg.manie == "off":
        return None
    params = dict(MANIE_DEFAULTS[cfg.family])
    params.update(cfg.manie or {})
    return ManieConfig(**params)


def expand_config(cfg: ExperimentConfig) -> dict:
    """Fully resolved view of a config: templates and defaults filled in."""
    dyn = dict(DYNAMICS_DEFAULTS[cfg.dynamics["kind"]])
    dyn.update(cfg.dynamics)
    mc = manie_config(cfg)
    return {
        "scenario": cfg.scenario_id,
        "network": dict(cfg.network),
        "dynamics": dyn,
        "noise": [_spec_dict(s) for s in noise_specs(cfg)],
        "method": dict(cfg.method),
        "manie": "off" if mc is None else dataclasses.asdict(mc),
        "seeds": list(cfg.seeds),
    }


def _spec_dict(spec: NoiseSpec) -> dict:
    d = dataclasses.asdict(spec)
    if d["snr_range"] is not None:
        d["snr_range"] = list(d["snr_range"])
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    extra = set(d) - known - {"sweep"}
    if extra:
        raise ParameterError(f"unknown config keys: {sorted(extra)}")
    return ExperimentConfig(**{k: v for k, v in d.items() if k in known})


def load_config(path) -> tuple[ExperimentConfig, dict | None]:
    """Read a YAML config; returns the experiment and its optional ``sweep`` block."""
    with open(path) as fh:
        d = yaml.safe_load(fh)
    return config_from_dict(d), d.get("sweep")


# --- pipeline stages ----------------------------------------------------------


def stage_seed(seed: int, stage: str, *extra: int) -> int:
    """Independent 63-bit seed for one pipeline stage of one run."""
    ss = np.random.SeedSequence([seed, STAGES[stage], *extra])
    return int(ss.generate_state(2, np.uint64)[0] >> np.uint64(1))


def build_network(spec: dict, seed: int) -> Network:
    if "fixture" in spec:
        return load_fixture(spec["fixture"])
    if "path" in spec:
        return load_network_file(spec["path"])
    gen = spec.get("generator")
    s = stage_seed(seed, "network")
    if gen == "er":
        return gen_er(spec["n"], spec.get("p", 0.15), spec.get("directed", False), seed=s)
    if gen == "ba":
        return gen_ba(spec["n"], spec.get("m", 2), seed=s)
    if gen == "nw":
        return gen_nw(spec["n"], spec.get("k", 4), spec.get("p", 0.1), seed=s)
    if gen == "ws":
        return gen_ws(spec["n"], spec.get("k", 4), spec.get("p", 0.1), seed=s)
    raise ParameterError(f"network spec needs a fixture, path or known generator, got {spec}")


def simulate(net: Network, spec: dict, seed: int):
    kind = spec["kind"]
    p = dict(DYNAMICS_DEFAULTS[kind])
    p.update(spec)
    s = stage_seed(seed, "dynamics")
    if kind == "kuramoto":
        ts = simulate_kuramoto_segments(net, p["variant"], p["n_segments"], p["seg_len"], p["dt"], s,
                                        omega_range=p["omega_range"])
        if not p["exact_derivatives"]:
            ts = TimeSeries(ts.values, ts.dt, None, ts.segments, ts.variant)
        return ts
    if kind == "eg":
        return simulate_eg(net, make_game(p["game"], p["param"]), p["rounds"], p["reps"], p["kappa"], seed=s)
    rng = np.random.default_rng(s)
    k = max(1, math.ceil(round(p["init_frac"] * net.n, 9)))
    x0 = rng.choice(net.n, size=k, replace=False)
    sim_seed = int(rng.integers(2**63))
    if kind == "sis":
        return simulate_sis(net, p["beta"], p["delta"], x0, p["steps"], seed=sim_seed)
    return simulate_cp(net, p["beta"], x0, p["steps"], seed=sim_seed, delta=p["delta"])


def build_method(cfg: ExperimentConfig):
    params = dict(cfg.method)
    name = params.pop("name", None)
    family = cfg.family
    if family == "model_free":
        if name not in (None, "arni"):
            raise ParameterError(f"model-free data needs method 'arni', got {name!r}")
        if "basis" in params:
            params["basis"] = BasisSpec(**{k: tuple(v) for k, v in params["basis"].items()})
        return ArniMethod(**params)
    if family == "eg":
        if name not in (None, "eg"):
            raise ParameterError(f"EG data needs method 'eg', got {name!r}")
        return EgMethod(**params)
    if name not in (None, "cs"):
        raise ParameterError(f"epidemic data needs method 'cs', got {name!r}")
    dyn = dict(DYNAMICS_DEFAULTS[cfg.dynamics["kind"]])
    dyn.update(cfg.dynamics)
    params.setdefault("beta_hat", dyn["beta"])  # model-based: transmission rate is known
    return EpidemicMethod(model=cfg.dynamics["kind"].upper(), **params)


def prepare(cfg: ExperimentConfig, seed: int):
    """Network, clean record and one (noisy record, mask) per noise spec."""
    net = build_network(cfg.network, seed)
    clean = simulate(net, cfg.dynamics, seed)
    noisy = [apply_noise(clean, spec, stage_seed(seed, "noise", k)) for k, spec in enumerate(noise_specs(cfg))]
    return net, clean, noisy


def _fmt_error(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def run_seed(cfg: ExperimentConfig, seed: int, modes=("off", "on"), timing: bool = False) -> list[ResultRow]:
    """All rows for one seed. Any stage error lands in the row's ``error`` field."""
    base = dict(scenario=cfg.scenario_id, network=network_id(cfg.network), dynamics=dynamics_id(cfg.dynamics),
                noise=noise_id(cfg.noise), method=cfg.method.get("name", _default_method(cfg.family)), seed=seed)
    try:
        net, _, noisy = prepare(cfg, seed)
        method = build_method(cfg)
        mc = manie_config(cfg)
    except Exception as exc:  # noqa: BLE001 - recorded per seed, other seeds continue
        return [ResultRow(manie=m, error=_fmt_error(exc), **base) for m in modes]
    rows = []
    for mode in modes:
        t0 = time.perf_counter()
        try:
            aucs, iters = [], []
            for data, _ in noisy:
                if mode == "on":
                    if mc is None:
                        raise ParameterError("manie is 'off' in this config")
                    res = run_manie(method, data, mc)
                    scores, it = res.scores, res.iterations
                else:
                    scores, it = method.fit(data), 0
                aucs.append(auc_report(scores, net).auc)
                iters.append(it)
            a = float(np.mean(aucs))
            rep = dict(auc=a, neg_log2_auc=neg_log2(a) if a > 0 else math.inf, iterations=max(iters))
            wall = time.perf_counter() - t0 if timing else None
            rows.append(ResultRow(manie=mode, wall_time=wall, **rep, **base))
        except Exception as exc:  # noqa: BLE001
            rows.append(ResultRow(manie=mode, error=_fmt_error(exc), **base))
    return rows


def _default_method(family):
    return {"model_free": "arni", "eg": "eg", "epidemic": "cs"}[family]


def _modes(cfg: ExperimentConfig, manie: str | None):
    if cfg.manie == "off" and manie in (None, "off"):
        return ("off",)
    manie = manie or "both"
    if manie not in ("on", "off", "both"):
        raise ParameterError("manie mode must be on, off or both")
    return ("off", "on") if manie == "both" else (manie,)


def _run_job(args):
    cfg, seed, modes, timing = args
    return run_seed(cfg, seed, modes, timing)


def run_jobs(jobs: list, n_workers: int = 1) -> list[ResultRow]:
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            batches = list(pool.map(_run_job, jobs))
    else:
        batches = [_run_job(j) for j in jobs]
    rows = [r for b in batches for r in b]
    return sorted(rows, key=ResultRow.sort_key)


def run_experiment(cfg: ExperimentConfig, manie: str | None = None, jobs: int = 1,
                   timing: bool = False) -> list[ResultRow]:
    """One job per seed; ``manie`` picks on, off or both (paired on the same data)."""
    modes = _modes(cfg, manie)
    return run_jobs([(cfg, s, modes, timing) for s in cfg.seeds], jobs)


def sweep_config(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Copy of ``cfg`` whose noise has ``axis`` set to ``value``.

    A zero noise fraction maps to the noise-free template so that column of a
    sweep reproduces the ``"_0"`` rows exactly.
    """
    if axis not in SWEEP_AXES:
        raise ParameterError(f"sweep axis must be one of {SWEEP_AXES}")
    specs = noise_specs(cfg)
    if len(specs) != 1:
        raise ParameterError("sweeps need a single-spec noise scenario")
    spec = dataclasses.asdict(specs[0])
    if spec["kind"] == "none":
        spec.update(_SWEEP_BASE[cfg.family])
    if axis == "noise_fraction":
        if value == 0:
            return dataclasses.replace(cfg, noise="_0", name="")
        spec["frac" if spec["kind"] == "drop_nodes" else "prob"] = float(value)
    elif axis == "snr_db":
        if not spec["kind"].startswith("awgn"):
            raise ParameterError("snr_db sweeps need an AWGN scenario")
        if spec["kind"] == "awgn_local_random_snr":
            spec["snr_range"] = (spec["snr_range"] or (0.0, 10.0))[0], float(value)
        spec["snr_db"] = float(value)
    else:
        if not spec["kind"].startswith("amp"):
            raise ParameterError("amplitude sweeps need a payoff-noise scenario")
        spec["amplitude"] = float(value)
    spec["snr_range"] = list(spec["snr_range"]) if spec["snr_range"] is not None else None
    return dataclasses.replace(cfg, noise=spec, name="")


_SWEEP_BASE = {
    "model_free": {"kind": "awgn_local", "snr_db": 10.0, "prob": 1.0},
    "eg": {"kind": "amp_uniform", "amplitude": 10.0, "prob": 1.0},
    "epidemic": {"kind": "flip_bits", "prob": 0.1},
}


def run_sweep(cfg: ExperimentConfig, axis: str, values, manie: str | None = None, jobs: int = 1,
              timing: bool = False) -> list[tuple[float, ResultRow]]:
    """Tidy table of ``(value, row)``: one ``run_experiment`` per axis value."""
    modes = _modes(cfg, manie)
    cells = [(float(v), sweep_config(cfg, axis, v)) for v in values]
    job_list = [(c, s, modes, timing) for _, c in cells for s in c.seeds]
    batches = [_run_job(j) for j in job_list] if jobs <= 1 else None
    if batches is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_job, job_list))
    out, k = [], 0
    for value, c in cells:
        for _ in c.seeds:
            out.extend((value, r) for r in batches[k])
            k += 1
    return sorted(out, key=lambda vr: (vr[0], vr[1].seed, vr[1].manie))


# --- CSV output ---------------------------------------------------------------


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows, axis: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    if axis is None:
        w.writerow(ROW_FIELDS)
        for r in rows:
            w.writerow([_cell(getattr(r, f)) for f in ROW_FIELDS])
    else:
        w.writerow(("axis", "value") + ROW_FIELDS)
        for value, r in rows:
            w.writerow([axis, _cell(value)] + [_cell(getattr(r, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def write_text(text: str, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def weights_to_csv(result: ManieResult, mask: CorruptionMask) -> str:
    """Long-format weight trajectories: ``iteration, sample, v, is_noisy``."""
    noisy = np.asarray(mask.noisy_samples, dtype=bool)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("iteration", "sample", "v", "is_noisy"))
    for it, v in enumerate(result.v_trajectory, start=1):
        if v.size != noisy.size:
            raise ParameterError(f"mask covers {noisy.size} samples, weights {v.size}")
        for t in range(v.size):
            w.writerow((it, t, repr(float(v[t])), int(noisy[t])))
    return buf.getvalue()


def export_weights(result: ManieResult, mask: CorruptionMask, path) -> Path:
    write_text(weights_to_csv(result, mask), path)
    return Path(path)


def matrix_to_csv(mat: np.ndarray, header: dict | None = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}={v}\n")
    np.savetxt(buf, np.asarray(mat), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def record_to_csv(data) -> str:
    """One row per node, one column per sample, with a small ``# key=value`` header."""
    if isinstance(data, TimeSeries):
        return matrix_to_csv(data.values, {"kind": "timeseries", "dt": data.dt, "variant": data.variant})
    if isinstance(data, BinaryTimeSeries):
        missing = ";".join(str(i) for i in np.flatnonzero(data.missing))
        return matrix_to_csv(data.states, {"kind": "binary", "missing": missing})
    if isinstance(data, EgRecord):
        head = {"kind": "eg", "game": data.game.name, "param": data.game.param}
        return (matrix_to_csv(data.strategies, {**head, "block": "strategies"})
                + matrix_to_csv(data.payoffs, {"block": "payoffs"}))
    raise TypeError(f"cannot serialize {type(data).__name__}")


def scores_to_csv(scores: ScoreMatrix) -> str:
    return matrix_to_csv(scores.scores)
