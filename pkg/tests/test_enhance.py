from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manie.enhance import (
    ManieConfig,
    ManieError,
    init_lambda,
    otsu_lambda,
    run_manie,
    self_paced_objective,
    update_weights,
)
from manie.graphgen import ParameterError
from manie.methods import ScoreMatrix
from manie.solvers import DesignProblem, weighted_ridge


@dataclass
class Linear:
    phi: np.ndarray
    y: np.ndarray

    @property
    def m(self):
        return self.y.size


class RidgeMethod:
    """Weighted least squares on a toy regression; loss is the squared residual."""

    name = "ridge"

    def fit(self, data, weights=None):
        beta = weighted_ridge(DesignProblem(data.phi, data.y, weights), 0.0, standardize=False).beta
        return ScoreMatrix(np.zeros((1, 1)), model=beta)

    def per_sample_loss(self, data, scores):
        return (data.y - data.phi @ scores.model) ** 2


class FrozenLoss:
    """Ignores the weights and always reports the same losses."""

    name = "frozen"

    def __init__(self, losses):
        self.losses = np.asarray(losses, dtype=float)
        self.seen = []

    def fit(self, data, weights=None):
        self.seen.append(None if weights is None else np.array(weights))
        return ScoreMatrix(np.zeros((1, 1)))

    def per_sample_loss(self, data, scores):
        return self.losses.copy()


class _Data:
    def __init__(self, m):
        self.m = m


def _linear(m=60, outliers=10, seed=0):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(m, 3))
    y = phi @ np.array([1.0, -2.0, 0.5])
    y[:outliers] += rng.normal(0, 5, outliers)
    return Linear(phi, y)


def test_weight_update_examples():
    assert update_weights([0.5], 1.0).tolist() == [0.5]
    assert update_weights([0.0, 1.0, 2.0], 1.0).tolist() == [1.0, 0.0, 0.0]
    w = update_weights([1.0, 10.0, 1e6], 1e12)
    assert np.all(w >= 1 - 1e-6) and np.all(w <= 1)


def test_weight_update_is_per_sample_minimizer():
    losses = np.array([0.0, 0.2, 0.7, 1.3])
    grid = np.linspace(0, 1, 10_001)
    for lam in (0.5, 1.0, 2.0):
        v = update_weights(losses, lam)
        for L, vt in zip(losses, v):
            obj = grid * L + 0.5 * lam * (grid**2 - 2 * grid)
            assert abs(vt - grid[np.argmin(obj)]) <= 1e-4


def test_weight_update_errors():
    with pytest.raises(ParameterError):
        update_weights([1.0], 0.0)
    with pytest.raises(ParameterError):
        update_weights([-0.1], 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=30), st.floats(1e-6, 1e6))
def test_weights_bounded_and_monotone(losses, lam):
    v = update_weights(losses, lam)
    assert np.all((v >= 0) & (v <= 1))
    order = np.argsort(losses, kind="stable")
    assert np.all(np.diff(v[order]) <= 0)  # larger loss, smaller weight
    assert np.all(update_weights(losses, lam * 2) >= v)  # larger pace, larger weight


def test_init_lambda():
    assert init_lambda([1, 2, 3, 4]) == pytest.approx(3.25)
    assert init_lambda([2.0] * 5) == 2.0
    assert init_lambda([0.0, 0.0]) == 1e-12


def test_otsu_lambda_splits_two_clusters():
    losses = np.r_[np.full(30, 1e-6), np.full(10, 1e-2)]
    assert otsu_lambda(losses) == pytest.approx(1e-4)
    assert otsu_lambda([3.0, 3.0]) == pytest.approx(3.0)
    lam = otsu_lambda(np.r_[np.geomspace(1e-7, 1e-5, 50), np.geomspace(1e-2, 1e-1, 20)])
    assert 1e-5 < lam < 1e-2


def test_positive_only_lambda_ignores_zero_losses():
    losses = np.r_[np.zeros(90), np.arange(1.0, 11.0)]
    method = FrozenLoss(losses)
    res = run_manie(method, _Data(100), ManieConfig(max_outer=1, lambda_positive_only=True))
    assert res.lambda_trajectory[0] == pytest.approx(init_lambda(np.arange(1.0, 11.0)))
    res = run_manie(method, _Data(100), ManieConfig(max_outer=1))
    assert res.lambda_trajectory[0] == 1e-12 and not res.v_final[90:].any()


def test_config_validation():
    for kw in ({"lambda0": 0.0}, {"c": 1.0}, {"eps": 0.0}, {"max_outer": 0},
               {"lambda_quantile": 1.5}, {"lambda_rule": "median"}):
        with pytest.raises(ParameterError):
            ManieConfig(**kw)


def test_frozen_losses_monotone_inclusion():
    losses = np.array([0.1, 0.5, 1.0, 2.0, 4.0])
    method = FrozenLoss(losses)
    res = run_manie(method, _Data(5), ManieConfig(lambda0=0.3, c=1.5, max_outer=20))
    assert np.array_equal(method.seen[0], np.ones(5))
    supports = [v > 0 for v in res.v_trajectory]
    for a, b in zip(supports, supports[1:]):
        assert np.all(b >= a)
    assert np.allclose(res.lambda_trajectory, 0.3 * 1.5 ** np.arange(res.iterations))
    assert len(res.v_trajectory) == len(res.loss_trajectory) == res.iterations


def test_all_rejected_aborts():
    cfg = ManieConfig(lambda0=1e-3, c=1.05, max_empty_retries=10)
    with pytest.raises(ManieError, match="rejected"):
        run_manie(FrozenLoss([1.0, 2.0]), _Data(2), cfg)
    # 0.7 -> 0.875 -> 1.09 admits the smaller loss after two retries
    res = run_manie(FrozenLoss([1.0, 2.0]), _Data(2), ManieConfig(lambda0=0.7, c=1.25, max_outer=3))
    assert res.lambda_trajectory[0] == pytest.approx(0.7 * 1.25**2)


def test_non_finite_losses_raise():
    with pytest.raises(ManieError, match="non-finite"):
        run_manie(FrozenLoss([1.0, np.nan]), _Data(2))


def test_method_failure_is_wrapped():
    class Broken(FrozenLoss):
        def fit(self, data, weights=None):
            raise np.linalg.LinAlgError("singular")

    with pytest.raises(ManieError, match="singular") as info:
        run_manie(Broken([1.0]), _Data(1))
    assert isinstance(info.value.__cause__, np.linalg.LinAlgError)


def test_clean_exact_fit_converges_fast():
    res = run_manie(RidgeMethod(), _linear(outliers=0))
    assert res.converged and res.iterations <= 3
    assert np.allclose(res.v_final, 1.0)


def test_outliers_downweighted():
    data = _linear()
    res = run_manie(RidgeMethod(), data)
    assert res.v_final[:10].max() < res.v_final[10:].min()
    assert np.allclose(res.scores.model, [1.0, -2.0, 0.5], atol=1e-8)


def test_half_steps_never_increase_objective():
    data = _linear(seed=3)
    res = run_manie(RidgeMethod(), data, ManieConfig(c=1.05))
    v_prev = np.ones(data.m)
    for k in range(res.iterations):
        lam, L, v = res.lambda_trajectory[k], res.loss_trajectory[k], res.v_trajectory[k]
        # weight step at fixed losses
        assert self_paced_objective(v, L, lam) <= self_paced_objective(v_prev, L, lam) + 1e-12
        if k:
            # fit step at fixed weights: weighted squared error cannot grow
            assert v_prev @ L <= v_prev @ res.loss_trajectory[k - 1] + 1e-9
        v_prev = v
