"""Observational-noise injectors.

Every injector returns a new record plus a ``CorruptionMask`` marking the
samples (time steps) it touched. Injectors corrupt recorded values only: a
noisy ``TimeSeries`` never carries the clean derivative, callers re-estimate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import BinaryTimeSeries, EgRecord, TimeSeries
from .graphgen import ParameterError

KINDS = (
    "none",
    "awgn_global",
    "awgn_local",
    "awgn_local_random_snr",
    "amp_uniform",
    "amp_uniform_random",
    "drop_nodes",
    "flip_bits",
)


class ZeroPowerError(ValueError):
    """SNR is undefined for a series with zero signal power."""


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    snr_db: float = 10.0
    snr_range: tuple[float, float] | None = None
    amplitude: float = 0.0
    prob: float = 1.0
    frac: float = 0.0
    per_entry: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if not (0 <= self.prob <= 1 and 0 <= self.frac <= 1):
            raise ParameterError("prob and frac must lie in [0, 1]")
        if self.amplitude < 0:
            raise ParameterError("amplitude must be >= 0")
        if self.snr_range is not None:
            lo, hi = self.snr_range
            if lo > hi:
                raise ParameterError("snr_range must be ordered lo <= hi")
            object.__setattr__(self, "snr_range", (float(lo), float(hi)))


@dataclass
class CorruptionMask:
    noisy_samples: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        self.noisy_samples = np.asarray(self.noisy_samples, dtype=bool)

    def __len__(self):
        return self.noisy_samples.size


def _noise_std(values: np.ndarray) -> np.ndarray:
    power = np.mean(values**2, axis=1)
    if np.any(power == 0):
        raise ZeroPowerError("series with zero signal power: SNR undefined")
    return np.sqrt(power)


def _awgn(ts, snr_db_per_step, rows, rng):
    """Gaussian noise at the per-step SNRs on the chosen (node, step) entries."""
    scale = _noise_std(ts.values)[:, None] * 10.0 ** (-np.asarray(snr_db_per_step)[None, :] / 20.0)
    noise = rng.standard_normal(ts.values.shape) * scale
    values = ts.values + np.where(rows, noise, 0.0)
    out = TimeSeries(values, ts.dt, None, ts.segments.copy(), ts.variant)
    return out, CorruptionMask(rows.any(axis=0))


def _corrupted_entries(shape, prob, per_entry, rng):
    n, m = shape
    if per_entry:
        return rng.random((n, m)) < prob
    steps = rng.random(m) < prob
    return np.broadcast_to(steps, (n, m)).copy()


def add_awgn_global(ts: TimeSeries, snr_db: float, seed=None):
    rng = np.random.default_rng(seed)
    rows = np.ones(ts.values.shape, dtype=bool)
    return _awgn(ts, np.full(ts.m, float(snr_db)), rows, rng)


def add_awgn_local(ts: TimeSeries, snr_db: float, prob: float, seed=None, per_entry: bool = False):
    return add_awgn_local_random_snr(ts, snr_db, snr_db, prob, seed, per_entry)


def add_awgn_local_random_snr(
    ts: TimeSeries, snr_lo: float, snr_hi: float, prob: float, seed=None, per_entry: bool = False
):
    if snr_lo > snr_hi:
        raise ParameterError("snr_lo must not exceed snr_hi")
    _noise_std(ts.values)
    rng = np.random.default_rng(seed)
    rows = _corrupted_entries(ts.values.shape, prob, per_entry, rng)
    snr = rng.uniform(snr_lo, snr_hi, size=ts.m) if snr_lo < snr_hi else np.full(ts.m, float(snr_lo))
    return _awgn(ts, snr, rows, rng)


def add_amp_noise(eg: EgRecord, amplitude: float, random_amp: bool = False, prob: float = 1.0, seed=None):
    """Uniform noise on ``[-a, a]`` added to every payoff of each selected round."""
    if amplitude < 0:
        raise ParameterError("amplitude must be >= 0")
    rng = np.random.default_rng(seed)
    steps = rng.random(eg.m) < prob
    amp = rng.uniform(0.0, amplitude, size=eg.m) if random_amp else np.full(eg.m, float(amplitude))
    noise = rng.uniform(-1.0, 1.0, size=eg.payoffs.shape) * amp[None, :]
    noise[:, ~steps] = 0.0
    payoffs = eg.payoffs + noise
    mask = (noise != 0).any(axis=0)
    return EgRecord(eg.strategies.copy(), payoffs, eg.game), CorruptionMask(mask)


def drop_nodes(bts: BinaryTimeSeries, frac: float, seed=None) -> BinaryTimeSeries:
    """Flag ``ceil(frac * N)`` uniformly chosen nodes as missing."""
    if not 0 <= frac <= 1:
        raise ParameterError("frac must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    k = math.ceil(round(frac * bts.n, 9))
    missing = bts.missing.copy()
    missing[rng.choice(bts.n, size=k, replace=False)] = True
    return BinaryTimeSeries(bts.states.copy(), missing)


def flip_bits(bts: BinaryTimeSeries, prob: float, seed=None):
    if not 0 <= prob <= 1:
        raise ParameterError("prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    flips = rng.random(bts.states.shape) < prob
    states = np.where(flips, 1 - bts.states, bts.states)
    return BinaryTimeSeries(states, bts.missing.copy()), CorruptionMask(flips.any(axis=0))


def apply_noise(data, spec: NoiseSpec, seed=None):
    """Dispatch ``spec`` onto a record; returns ``(noisy_record, mask)``."""
    kind = spec.kind
    m = data.m
    if kind == "none":
        return data, CorruptionMask(np.zeros(m, dtype=bool))
    if kind == "awgn_global":
        return add_awgn_global(data, spec.snr_db, seed)
    if kind == "awgn_local":
        return add_awgn_local(data, spec.snr_db, spec.prob, seed, spec.per_entry)
    if kind == "awgn_local_random_snr":
        lo, hi = spec.snr_range if spec.snr_range is not None else (0.0, spec.snr_db)
        return add_awgn_local_random_snr(data, lo, hi, spec.prob, seed, spec.per_entry)
    if kind in ("amp_uniform", "amp_uniform_random"):
        return add_amp_noise(data, spec.amplitude, kind == "amp_uniform_random", spec.prob, seed)
    if kind == "drop_nodes":
        return drop_nodes(data, spec.frac, seed), CorruptionMask(np.zeros(m, dtype=bool))
    if kind == "flip_bits":
        return flip_bits(data, spec.prob, seed)
    raise ParameterError(f"unhandled noise kind {kind!r}")
