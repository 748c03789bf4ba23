"""Sample-weighted regression primitives: ridge, LASSO (coordinate descent), STRidge.

All solvers standardize design columns to unit weighted RMS,
``s_p = sqrt(sum_t w_t Phi_tp^2 / sum_t w_t)``, solve in that space, and map
coefficients back. Penalties are therefore in standardized units, invariant
to a common rescaling of the weights, and rows with zero weight behave
exactly as if they were deleted. Pass ``standardize=False`` to penalize the
raw coefficients instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import linalg

from .graphgen import ParameterError


class SingularSystemError(np.linalg.LinAlgError):
    """Weighted normal equations are singular (no ridge penalty to rescue them)."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class DesignProblem:
    phi: np.ndarray
    y: np.ndarray
    w: np.ndarray | None = None

    def __post_init__(self):
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        m = self.phi.shape[0]
        self.w = np.ones(m) if self.w is None else np.asarray(self.w, dtype=float).ravel()
        if self.y.size != m or self.w.size != m:
            raise ParameterError(f"row mismatch: phi {self.phi.shape}, y {self.y.size}, w {self.w.size}")
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.y))):
            raise ParameterError("design problem has non-finite entries")
        if np.any(self.w < 0) or np.any(self.w > 1) or not np.all(np.isfinite(self.w)):
            raise ParameterError("sample weights must lie in [0, 1]")

    @property
    def n_features(self) -> int:
        return self.phi.shape[1]


@dataclass
class Coefficients:
    beta: np.ndarray
    intercept: float = 0.0
    n_iter: int = 0
    converged: bool = True
    objective_path: list = field(default_factory=list, repr=False)

    @property
    def support(self) -> set[int]:
        return set(np.flatnonzero(self.beta).tolist())


def _column_scales(phi, w, standardize):
    p = phi.shape[1]
    if not standardize:
        return np.ones(p)
    wsum = w.sum()
    if wsum <= 0:
        return np.ones(p)
    s = np.sqrt((w[:, None] * phi**2).sum(axis=0) / wsum)
    s[s == 0] = 1.0
    return s


def weighted_ridge(prob: DesignProblem, alpha: float = 0.0, standardize: bool = True) -> Coefficients:
    """Minimize ``sum_t w_t (y_t - Phi_t beta)^2 + alpha * |S beta|^2`` by Cholesky."""
    if alpha < 0:
        raise ParameterError("alpha must be >= 0")
    phi, y, w = prob.phi, prob.y, prob.w
    s = _column_scales(phi, w, standardize)
    z = phi / s
    gram = z.T @ (w[:, None] * z)
    if alpha > 0:
        gram[np.diag_indices_from(gram)] += alpha
    rhs = z.T @ (w * y)
    try:
        factor = linalg.cho_factor(gram, check_finite=False)
    except linalg.LinAlgError:
        raise SingularSystemError("weighted normal equations are singular; use alpha > 0") from None
    gamma = linalg.cho_solve(factor, rhs, check_finite=False)
    return Coefficients(gamma / s)


def weighted_lasso(
    prob: DesignProblem,
    alpha: float,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    standardize: bool = True,
    fit_intercept: bool = False,
    positive: bool = False,
) -> Coefficients:
    """Cyclic coordinate descent on ``0.5 * sum_t w_t r_t^2 + alpha * |S beta|_1``.

    Works on the weighted Gram matrix, so each coordinate step is O(P).
    Converged when the largest coefficient change in a sweep is below ``tol``.
    """
    if alpha < 0:
        raise ParameterError("alpha must be >= 0")
    phi, y, w = prob.phi, prob.y, prob.w
    wsum = w.sum()
    if fit_intercept and wsum > 0:
        x_mean = (w @ phi) / wsum
        y_mean = (w @ y) / wsum
        phi = phi - x_mean
        y = y - y_mean
    s = _column_scales(phi, w, standardize)
    z = phi / s
    gram = z.T @ (w[:, None] * z)
    corr = z.T @ (w * y)
    yy = float(y @ (w * y))
    gamma = np.zeros(z.shape[1])
    path = np.empty(max_iter + 1)
    it, converged = _cd_sweeps(gram, corr, yy, s, alpha, positive, tol, max_iter, gamma, path)
    path = path[: it + 1].tolist()
    if not converged:
        warnings.warn(f"coordinate descent stopped after {max_iter} sweeps", ConvergenceWarning, stacklevel=2)
    beta = gamma / s
    intercept = float(y_mean - x_mean @ beta) if fit_intercept and wsum > 0 else 0.0
    return Coefficients(beta, intercept, it, converged, path)


@numba.njit(cache=True)
def _cd_sweeps(gram, corr, yy, s, alpha, positive, tol, max_iter, gamma, path):
    p = gamma.size
    g_gamma = np.zeros(p)  # gram @ gamma, kept current across coordinate updates
    path[0] = 0.5 * yy
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            d = gram[j, j]
            if d <= 0.0:
                continue
            old = gamma[j]
            rho = corr[j] - g_gamma[j] + d * old
            if positive:
                new = max(rho - alpha, 0.0) / d
            elif rho > alpha:
                new = (rho - alpha) / d
            elif rho < -alpha:
                new = (rho + alpha) / d
            else:
                new = 0.0
            if new != old:
                step = new - old
                for k in range(p):
                    g_gamma[k] += gram[k, j] * step
                gamma[j] = new
                max_delta = max(max_delta, abs(step) / s[j])
        quad = 0.0
        l1 = 0.0
        for k in range(p):
            quad += gamma[k] * (g_gamma[k] - 2.0 * corr[k])
            l1 += abs(gamma[k])
        path[it] = 0.5 * (yy + quad) + alpha * l1
        if max_delta < tol:
            return it, True
    return max_iter, False


def stridge(
    prob: DesignProblem,
    alpha: float = 1e-6,
    threshold: float = 0.5,
    iters: int = 10,
    standardize: bool = True,
) -> Coefficients:
    """Sequentially thresholded ridge: drop ``|beta_p| < threshold``, refit survivors."""
    if threshold < 0:
        raise ParameterError("threshold must be >= 0")
    p = prob.n_features
    beta = weighted_ridge(prob, alpha, standardize).beta
    active = np.ones(p, dtype=bool)
    it = 0
    for it in range(1, iters + 1):
        keep = active & (np.abs(beta) >= threshold)
        if not keep.any():
            return Coefficients(np.zeros(p), n_iter=it)
        if np.array_equal(keep, active):
            break
        active = keep
        beta = np.zeros(p)
        beta[active] = weighted_ridge(DesignProblem(prob.phi[:, active], prob.y, prob.w), alpha, standardize).beta
    return Coefficients(beta, n_iter=it)
