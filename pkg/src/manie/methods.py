"""Base network-inference methods.

Each method exposes the two calls the self-paced loop needs:

* ``fit(data, weights) -> ScoreMatrix`` fits under per-sample weights;
* ``per_sample_loss(data, scores) -> np.ndarray`` gives one nonnegative loss per sample.

``weights=None`` is the unweighted base method (identical to all-ones weights).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
from scipy import stats

from .dynamics import BinaryTimeSeries, EgRecord, TimeSeries
from .graphgen import ParameterError
from .solvers import DesignProblem, stridge, weighted_lasso


class LowRankWarning(UserWarning):
    """Design matrix carries too little variation to identify all links."""


class UnidentifiableNodeWarning(UserWarning):
    """Some node rows cannot be reconstructed (e.g. never susceptible)."""


@dataclass
class ScoreMatrix:
    """Inferred link strengths, ``scores[i, j]`` for the link ``j -> i``.

    ``model`` carries whatever per-node fit a method needs to evaluate its
    own per-sample loss later (e.g. basis coefficients).
    """

    scores: np.ndarray
    model: Any = None
    unidentifiable: np.ndarray | None = None
    excluded: np.ndarray | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        np.fill_diagonal(self.scores, 0.0)


class InferenceMethod(Protocol):
    name: str

    def fit(self, data, weights=None) -> ScoreMatrix: ...

    def per_sample_loss(self, data, scores: ScoreMatrix) -> np.ndarray: ...


def _weights(weights, m):
    if weights is None:
        return np.ones(m)
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ParameterError(f"expected {m} sample weights, got shape {w.shape}")
    return w


def _solve(solver, prob, penalty, threshold, positive=False):
    if solver == "stridge":
        return stridge(prob, alpha=penalty, threshold=threshold).beta
    if solver == "lasso":
        return weighted_lasso(prob, alpha=penalty, positive=positive).beta
    raise ParameterError(f"unknown solver {solver!r}")


# --- evolutionary games ---------------------------------------------------


def eg_design(eg: EgRecord, i: int) -> np.ndarray:
    """Rows = rounds, columns = all nodes; column j holds P(S_i(t), S_j(t))."""
    s = eg.strategies
    phi = eg.game.payoff(s[i][:, None], s.T)
    phi[:, i] = 0.0
    return phi


def eg_infer(eg: EgRecord, solver: str = "stridge", penalty: float = 1e-6, weights=None,
             threshold: float = 0.5) -> ScoreMatrix:
    """Recover each node's neighbours from its payoffs, one sparse regression per node."""
    if eg.m < 2:
        raise ParameterError("need at least 2 rounds")
    w = _weights(weights, eg.m)
    if np.all(eg.strategies == eg.strategies[0, 0]):
        warnings.warn("all strategies identical in every round: design is degenerate", LowRankWarning, stacklevel=2)
    scores = np.zeros((eg.n, eg.n))
    others = np.ones(eg.n, dtype=bool)
    for i in range(eg.n):
        others[:] = True
        others[i] = False
        phi = eg_design(eg, i)[:, others]
        scores[i, others] = _solve(solver, DesignProblem(phi, eg.payoffs[i], w), penalty, threshold)
    return ScoreMatrix(scores)


def eg_per_sample_loss(eg: EgRecord, scores: ScoreMatrix) -> np.ndarray:
    """Squared payoff-prediction residual, summed over nodes, per round."""
    a = scores.scores
    loss = np.zeros(eg.m)
    for i in range(eg.n):
        r = eg.payoffs[i] - eg_design(eg, i) @ a[i]
        loss += r**2
    return loss


@dataclass
class EgMethod:
    solver: str = "stridge"
    penalty: float = 1e-6
    threshold: float = 0.5
    name: str = "eg"

    def fit(self, data: EgRecord, weights=None) -> ScoreMatrix:
        return eg_infer(data, self.solver, self.penalty, weights, self.threshold)

    def per_sample_loss(self, data: EgRecord, scores: ScoreMatrix) -> np.ndarray:
        return eg_per_sample_loss(data, scores)


# --- epidemics ------------------------------------------------------------


def estimate_beta(bts: BinaryTimeSeries) -> float:
    """Plug-in transmission estimate when the true value is withheld.

    Infection events per susceptible step divided by the mean number of
    infected observed nodes; without the network this under-counts exposure,
    so it is only a scale for the loss clamp, not a calibrated estimate.
    """
    obs = ~bts.missing
    s = bts.states[obs]
    sus = s[:, :-1] == 0
    events = (sus & (s[:, 1:] == 1)).sum()
    exposure = (sus * s[:, :-1].sum(axis=0)[None, :]).sum()
    return float(events / exposure) if exposure > 0 else 1.0


def epidemic_design(bts: BinaryTimeSeries, i: int):
    """Design rows for node ``i``: transitions where ``i`` is susceptible.

    Returns ``(rows, phi, y, predictors)`` where ``rows`` indexes transitions
    ``t -> t+1``, ``phi[:, k]`` is the state of node ``predictors[k]`` at ``t``.
    """
    s = bts.states
    predictors = np.flatnonzero(~bts.missing)
    predictors = predictors[predictors != i]
    rows = np.flatnonzero(s[i, :-1] == 0)
    phi = s[predictors][:, rows].T.astype(float)
    y = s[i, rows + 1].astype(float)
    return rows, phi, y, predictors


def epidemic_infer(bts: BinaryTimeSeries, model: str = "SIS", beta_hat: float | None = None,
                   penalty: float = 0.01, weights=None) -> ScoreMatrix:
    """Non-negative weighted LASSO on the linearised infection probability.

    SIS and CP share the surrogate ``P(infection) ~ beta * sum_j a_ij s_j``;
    for CP the recovered strengths are degree-normalised, which leaves each
    row's ranking intact.
    """
    if model not in ("SIS", "CP"):
        raise ParameterError(f"unknown epidemic model {model!r}")
    beta_hat = estimate_beta(bts) if beta_hat is None else beta_hat
    if beta_hat <= 0:
        raise ParameterError("beta_hat must be positive")
    w = _weights(weights, bts.m)
    n = bts.n
    scores = np.zeros((n, n))
    bad = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(~bts.missing):
        rows, phi, y, pred = epidemic_design(bts, i)
        if rows.size == 0 or pred.size == 0:
            bad[i] = True
            continue
        beta = weighted_lasso(DesignProblem(phi, y, w[rows]), alpha=penalty, positive=True).beta
        scores[i, pred] = beta / beta_hat
    if bad.any():
        warnings.warn(f"{int(bad.sum())} node(s) never susceptible: rows left at zero",
                      UnidentifiableNodeWarning, stacklevel=2)
    return ScoreMatrix(scores, model={"beta_hat": beta_hat}, unidentifiable=bad, excluded=bts.missing.copy())


def epidemic_per_sample_loss(bts: BinaryTimeSeries, scores: ScoreMatrix, beta_hat: float | None = None) -> np.ndarray:
    """Per-transition squared error of the clamped infection probability.

    Transition ``t -> t+1`` is charged to sample ``t``; the last sample has no
    outgoing transition and gets zero loss.
    """
    if beta_hat is None:
        beta_hat = (scores.model or {}).get("beta_hat")
    if beta_hat is None:
        beta_hat = estimate_beta(bts)
    obs = ~bts.missing
    s = bts.states.astype(float)
    a = scores.scores * obs[None, :]
    pred = np.clip(beta_hat * (a @ s[:, :-1]), 0.0, 1.0)
    sus = (bts.states[:, :-1] == 0) & obs[:, None]
    r2 = np.where(sus, (s[:, 1:] - pred) ** 2, 0.0)
    return np.append(r2.sum(axis=0), 0.0)


@dataclass
class EpidemicMethod:
    model: str = "SIS"
    beta_hat: float | None = None
    penalty: float = 0.01
    name: str = "cs"

    def fit(self, data: BinaryTimeSeries, weights=None) -> ScoreMatrix:
        return epidemic_infer(data, self.model, self.beta_hat, self.penalty, weights)

    def per_sample_loss(self, data: BinaryTimeSeries, scores: ScoreMatrix) -> np.ndarray:
        return epidemic_per_sample_loss(data, scores, self.beta_hat)


# --- model-free: greedy basis regression ------------------------------------


def estimate_derivatives(ts: TimeSeries, scheme: str = "forward") -> TimeSeries:
    """Finite differences that never cross a segment boundary.

    ``forward`` assigns ``(x(t+1) - x(t)) / dt`` to sample ``t`` and falls back
    to the backward difference at a segment's last sample; ``central`` uses
    one-sided differences at both segment ends.
    """
    if scheme not in ("forward", "central"):
        raise ParameterError(f"unknown derivative scheme {scheme!r}")
    x = ts.values
    d = np.zeros_like(x)
    for seg in np.unique(ts.segments):
        idx = np.flatnonzero(ts.segments == seg)
        if idx.size < 2:
            raise ParameterError(f"segment {seg} has fewer than 2 samples")
        xs = x[:, idx]
        ds = np.empty_like(xs)
        if scheme == "forward":
            ds[:, :-1] = np.diff(xs, axis=1) / ts.dt
            ds[:, -1] = ds[:, -2]
        else:
            ds[:, 1:-1] = (xs[:, 2:] - xs[:, :-2]) / (2 * ts.dt)
            ds[:, 0] = (xs[:, 1] - xs[:, 0]) / ts.dt
            ds[:, -1] = (xs[:, -1] - xs[:, -2]) / ts.dt
        d[:, idx] = ds
    return TimeSeries(x.copy(), ts.dt, d, ts.segments.copy(), ts.variant)


@dataclass(frozen=True)
class BasisSpec:
    """Pairwise Fourier harmonics of ``x_j - x_i`` and self terms in ``x_i``."""

    harmonics: tuple[int, ...] = (1, 2)
    self_harmonics: tuple[int, ...] = (1,)

    @property
    def block_size(self) -> int:
        return 2 * len(self.harmonics)

    def pair_block(self, xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
        """Shape ``(..., M, block_size)`` for broadcastable ``xi``/``xj``."""
        d = xj - xi
        cols = []
        for h in self.harmonics:
            cols += [np.sin(h * d), np.cos(h * d)]
        return np.stack(cols, axis=-1)

    def self_block(self, xi: np.ndarray) -> np.ndarray:
        cols = [np.ones_like(xi)]
        for h in self.self_harmonics:
            cols += [np.sin(h * xi), np.cos(h * xi)]
        return np.stack(cols, axis=-1)


@dataclass
class NodeModel:
    selected: list = field(default_factory=list)
    coef: np.ndarray | None = None


def _node_design(basis, x, i, blocks):
    parts = [basis.self_block(x[i])]
    parts += [basis.pair_block(x[i], x[j]) for j in blocks]
    return np.concatenate(parts, axis=1)


def _weighted_lstsq(phi, y, sw, ridge=1e-8):
    a = phi * sw[:, None]
    gram = a.T @ a
    rhs = a.T @ (y * sw)
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        gram[np.diag_indices_from(gram)] += ridge * max(1.0, np.trace(gram) / len(gram))
        return np.linalg.solve(gram, rhs)


def _orthonormal_extension(q, block, rtol=1e-10):
    """Orthonormal columns spanning ``block`` minus ``span(q)``; drops null directions."""
    u, sv, _ = np.linalg.svd(block, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros((block.shape[0], 0))
    u = u[:, sv > rtol * sv[0]]
    u -= q @ (q.T @ u)
    u, sv, _ = np.linalg.svd(u, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros((block.shape[0], 0))
    return u[:, sv > rtol]


def arni_node(ts: TimeSeries, i: int, w: np.ndarray, basis: BasisSpec, kmax: int,
              min_gain: float = 1e-4, enter_level: float | None = 0.01) -> tuple[np.ndarray, NodeModel]:
    """Greedy forward block selection for one node's incoming links.

    The self block is always in the model. Each step adds the candidate
    block whose inclusion removes the most weighted residual, scored by the
    fraction of the post-self-block residual it removed. Selection stops after
    ``kmax`` blocks, when the best gain relative to the current residual drops
    below ``min_gain``, when the residual is at round-off level, or (unless
    ``enter_level`` is None) when the block fails a partial F-test at that
    level, counting only positively weighted samples as observations.
    """
    x = ts.values
    n = ts.n
    y = ts.deriv[i]
    sw = np.sqrt(w)
    n_eff = float(np.count_nonzero(w))
    yw = y * sw
    total = float(yw @ yw)
    scores = np.zeros(n)

    base = basis.self_block(x[i]) * sw[:, None]
    q = _orthonormal_extension(np.zeros((base.shape[0], 0)), base)
    resid = yw - q @ (q.T @ yw)
    res_norm = float(resid @ resid)
    start_norm = res_norm
    cand = np.array([j for j in range(n) if j != i], dtype=int)
    blocks = basis.pair_block(x[i][None, :], x[cand]) * sw[None, :, None]
    # candidate blocks with the current model span projected out, updated in place
    proj = blocks - q @ np.matmul(q.T, blocks)
    eye = np.eye(basis.block_size)
    selected: list[int] = []
    while cand.size and len(selected) < kmax:
        if res_norm <= 1e-24 * max(total, 1e-300):
            break
        pt = proj.transpose(0, 2, 1)
        gram = pt @ proj
        rhs = pt @ resid
        reg = 1e-8 * (np.trace(gram, axis1=1, axis2=2)[:, None, None] / len(eye) + 1e-300) * eye
        coef = np.linalg.solve(gram + reg, rhs[..., None])[..., 0]
        gain = np.einsum("ca,ca->c", rhs, coef)
        best = int(np.argmax(gain))
        if gain[best] < min_gain * res_norm:
            break
        if enter_level is not None:
            dof = n_eff - q.shape[1] - basis.block_size
            if dof <= 0:
                break
            f_stat = (gain[best] / basis.block_size) / (max(res_norm - gain[best], 1e-300) / dof)
            if f_stat < stats.f.ppf(1.0 - enter_level, basis.block_size, dof):
                break
        j = int(cand[best])
        scores[j] = gain[best] / start_norm if start_norm > 0 else 0.0
        selected.append(j)
        u = _orthonormal_extension(q, proj[best])
        q = np.hstack([q, u])
        keep = np.arange(cand.size) != best
        cand, proj = cand[keep], proj[keep]
        proj -= u @ np.matmul(u.T, proj)
        resid -= u @ (u.T @ resid)
        res_norm = float(resid @ resid)
    phi = _node_design(basis, x, i, selected)
    coef = _weighted_lstsq(phi, y, sw)
    return scores, NodeModel(selected, coef)


def arni_infer(ts: TimeSeries, basis: BasisSpec | None = None, kmax: int | None = None,
               weights=None, min_gain: float = 1e-4, scheme: str = "forward",
               enter_level: float | None = 0.01) -> ScoreMatrix:
    """Model-free reconstruction by greedy basis-block regression on derivatives.

    Uses ``ts.deriv`` when present, otherwise finite differences (``scheme``).
    """
    basis = basis or BasisSpec()
    if ts.deriv is None:
        ts = estimate_derivatives(ts, scheme)
    kmax = ts.n - 1 if kmax is None else kmax
    w = _weights(weights, ts.m)
    scores = np.zeros((ts.n, ts.n))
    models = []
    for i in range(ts.n):
        scores[i], node = arni_node(ts, i, w, basis, kmax, min_gain, enter_level)
        models.append(node)
    return ScoreMatrix(scores, model={"basis": basis, "nodes": models, "scheme": scheme})


def arni_per_sample_loss(ts: TimeSeries, scores: ScoreMatrix) -> np.ndarray:
    """Squared derivative residual of the retained per-node fits, summed over nodes."""
    model = scores.model
    if ts.deriv is None:
        ts = estimate_derivatives(ts, model.get("scheme", "forward"))
    basis = model["basis"]
    loss = np.zeros(ts.m)
    for i, node in enumerate(model["nodes"]):
        phi = _node_design(basis, ts.values, i, node.selected)
        loss += (ts.deriv[i] - phi @ node.coef) ** 2
    return loss


@dataclass
class ArniMethod:
    basis: BasisSpec = field(default_factory=BasisSpec)
    kmax: int | None = None
    min_gain: float = 1e-4
    scheme: str = "forward"
    enter_level: float | None = 0.01
    name: str = "arni"

    def fit(self, data: TimeSeries, weights=None) -> ScoreMatrix:
        return arni_infer(data, self.basis, self.kmax, weights, self.min_gain, self.scheme, self.enter_level)

    def per_sample_loss(self, data: TimeSeries, scores: ScoreMatrix) -> np.ndarray:
        return arni_per_sample_loss(data, scores)
