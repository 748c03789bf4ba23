"""Self-paced alternating optimization around any inference method.

The loop alternates two half-steps. With weights ``v`` fixed the embedded
method fits a reconstruction; with the reconstruction fixed every weight
solves ``min_{v in [0,1]} v * L_t + lam/2 * (v^2 - 2v)`` in closed form.
The pace ``lam`` grows geometrically so harder samples are admitted over time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphgen import ParameterError
from .methods import InferenceMethod, ScoreMatrix

GROWTH_FACTORS = (1.05, 1.25, 1.5)
LAMBDA_FLOOR = 1e-12
LAMBDA_RULES = ("quantile", "otsu")


class ManieError(RuntimeError):
    """The enhancement loop could not continue (bad losses, all samples rejected)."""


@dataclass(frozen=True)
class ManieConfig:
    """Pace schedule. ``lambda0=None`` picks the start from the first fit's losses
    by ``lambda_rule``; ``lambda_positive_only`` ignores zero losses there."""

    lambda0: float | None = None
    c: float = 1.25
    eps: float = 1e-3
    max_outer: int = 50
    lambda_quantile: float = 0.75
    max_empty_retries: int = 10
    lambda_rule: str = "quantile"
    lambda_positive_only: bool = False

    def __post_init__(self):
        if self.lambda0 is not None and self.lambda0 <= 0:
            raise ParameterError("lambda0 must be positive")
        if self.c <= 1:
            raise ParameterError("growth factor c must exceed 1")
        if self.eps <= 0 or self.max_outer < 1:
            raise ParameterError("need eps > 0 and max_outer >= 1")
        if not 0 <= self.lambda_quantile <= 1:
            raise ParameterError("lambda_quantile must lie in [0, 1]")
        if self.lambda_rule not in LAMBDA_RULES:
            raise ParameterError(f"lambda_rule must be one of {LAMBDA_RULES}")


@dataclass
class ManieResult:
    scores: ScoreMatrix
    v_final: np.ndarray
    v_trajectory: list = field(default_factory=list)
    loss_trajectory: list = field(default_factory=list)
    lambda_trajectory: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def update_weights(losses, lam: float) -> np.ndarray:
    """``v_t = 1 - L_t / lam`` where ``L_t < lam``, else 0."""
    losses = np.asarray(losses, dtype=float)
    if lam <= 0:
        raise ParameterError("lambda must be positive")
    if np.any(losses < 0):
        raise ParameterError("per-sample losses must be nonnegative")
    return np.where(losses < lam, 1.0 - losses / lam, 0.0)


def self_paced_objective(v, losses, lam: float) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ np.asarray(losses) + 0.5 * lam * np.sum(v**2 - 2 * v))


def init_lambda(initial_losses, quantile: float = 0.75) -> float:
    """Pace start: the ``quantile`` of the all-ones-fit losses, floored at 1e-12."""
    q = float(np.quantile(np.asarray(initial_losses, dtype=float), quantile))
    return max(q, LAMBDA_FLOOR)


def otsu_lambda(initial_losses) -> float:
    """Pace start at the best two-class split of the log-losses.

    Sorts ``log L``, picks the cut maximizing the between-class variance
    ``k (n - k) (mean_low - mean_high)^2`` and returns the geometric midpoint
    of the two losses straddling it. Useful when clean and corrupted samples
    sit orders of magnitude apart, as with derivative-based regressions.
    """
    x = np.sort(np.log(np.maximum(np.asarray(initial_losses, dtype=float), LAMBDA_FLOOR)))
    n = x.size
    if n < 2 or x[-1] == x[0]:
        return max(float(np.exp(x[-1])), LAMBDA_FLOOR)
    cs = np.cumsum(x)
    k = np.arange(1, n)
    low = cs[:-1] / k
    high = (cs[-1] - cs[:-1]) / (n - k)
    b = int(np.argmax(k * (n - k) * (low - high) ** 2))
    return max(float(np.exp(0.5 * (x[b] + x[b + 1]))), LAMBDA_FLOOR)


def run_manie(method: InferenceMethod, data, cfg: ManieConfig | None = None) -> ManieResult:
    cfg = cfg or ManieConfig()
    m = data.m
    v = np.ones(m)
    lam = cfg.lambda0
    result = None
    for it in range(1, cfg.max_outer + 1):
        try:
            scores = method.fit(data, v)
            losses = np.asarray(method.per_sample_loss(data, scores), dtype=float)
        except Exception as exc:
            raise ManieError(f"{getattr(method, 'name', method)} failed at outer iteration {it}: {exc}") from exc
        if losses.shape != (m,) or not np.all(np.isfinite(losses)):
            bad = np.flatnonzero(~np.isfinite(losses)) if losses.shape == (m,) else losses.shape
            raise ManieError(f"non-finite or misshapen losses at outer iteration {it}: {bad}")
        if lam is None:
            pool = losses[losses > 0] if cfg.lambda_positive_only and np.any(losses > 0) else losses
            if cfg.lambda_rule == "otsu":
                lam = otsu_lambda(pool)
            else:
                lam = init_lambda(pool, cfg.lambda_quantile)
        v_new = update_weights(losses, lam)
        retries = 0
        while not v_new.any():
            if retries == cfg.max_empty_retries:
                raise ManieError(f"every sample rejected at outer iteration {it} (lambda={lam:.3g})")
            lam *= cfg.c
            v_new = update_weights(losses, lam)
            retries += 1
        if result is None:
            result = ManieResult(scores, v_new)
        result.scores = scores
        result.v_final = v_new
        result.v_trajectory.append(v_new)
        result.loss_trajectory.append(losses)
        result.lambda_trajectory.append(lam)
        result.iterations = it
        lam *= cfg.c
        done = np.max(np.abs(v_new - v)) < cfg.eps
        v = v_new
        if done:
            result.converged = True
            break
    return result
