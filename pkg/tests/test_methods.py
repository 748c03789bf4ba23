import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manie.dynamics import BinaryTimeSeries, EgRecord, TimeSeries, pdg, simulate_eg, simulate_kuramoto_segments, simulate_sis
from manie.graphgen import Network, gen_er, load_fixture
from manie.methods import (
    ArniMethod,
    EgMethod,
    EpidemicMethod,
    LowRankWarning,
    ScoreMatrix,
    UnidentifiableNodeWarning,
    arni_infer,
    arni_per_sample_loss,
    eg_infer,
    eg_per_sample_loss,
    epidemic_infer,
    epidemic_per_sample_loss,
    estimate_derivatives,
)
from manie.metrics import auc, auc_from_labels
from manie.noise import add_awgn_local, flip_bits


@pytest.fixture(scope="module")
def zk():
    return load_fixture("zachary")


@pytest.fixture(scope="module")
def k1_clean(zk):
    return simulate_kuramoto_segments(zk, "K1", 30, 5, 0.1, seed=3)


# --- evolutionary games -----------------------------------------------------


def test_eg_noise_free_exact_recovery():
    net = gen_er(10, 0.3, seed=2)
    eg = simulate_eg(net, pdg(1.2), rounds=10, reps=6, seed=2)
    assert auc(eg_infer(eg, "stridge"), net).auc == 1.0


def test_eg_ones_weights_match_unweighted(zk):
    eg = simulate_eg(zk, pdg(1.2), rounds=10, reps=5, seed=1)
    for solver, pen in (("stridge", 1e-6), ("lasso", 0.01)):
        a = eg_infer(eg, solver, pen)
        b = eg_infer(eg, solver, pen, weights=np.ones(eg.m))
        assert np.array_equal(a.scores, b.scores)


def test_eg_true_model_has_zero_loss(zk):
    eg = simulate_eg(zk, pdg(1.2), rounds=10, reps=5, seed=1)
    loss = eg_per_sample_loss(eg, ScoreMatrix(zk.adj.copy()))
    assert loss.shape == (eg.m,) and loss.max() < 1e-16


def test_eg_loss_by_hand():
    # 2 nodes, 2 rounds; node 0 payoffs regress on P(S_0, S_1)
    strategies = np.array([[1, 0], [1, 1]], dtype=np.int8)
    payoffs = np.array([[2.0, 1.0], [0.0, 0.5]])
    eg = EgRecord(strategies, payoffs, pdg(1.5))
    scores = ScoreMatrix(np.array([[0.0, 1.0], [0.5, 0.0]]))
    # round 0: P(C,C)=1 for both -> residuals (2-1, 0-0.5); round 1: node0 D vs C -> 1.5, node1 C vs D -> 0
    expected = [(2 - 1) ** 2 + (0 - 0.5) ** 2, (1 - 1.5) ** 2 + (0.5 - 0) ** 2]
    assert np.allclose(eg_per_sample_loss(eg, scores), expected)
    zero = EgRecord(strategies, np.zeros((2, 2)), pdg(1.5))
    assert not eg_per_sample_loss(zero, ScoreMatrix(np.zeros((2, 2)))).any()


def test_eg_degenerate_design_warns():
    eg = EgRecord(np.ones((3, 4), dtype=np.int8), np.zeros((3, 4)), pdg())
    with pytest.warns(LowRankWarning):
        eg_infer(eg, "lasso", 0.1)


def test_eg_zero_weight_equals_deletion(zk):
    eg = simulate_eg(zk, pdg(1.2), rounds=10, reps=6, seed=4)
    keep = np.arange(eg.m) % 3 != 0
    cut = EgRecord(eg.strategies[:, keep], eg.payoffs[:, keep], eg.game)
    a = eg_infer(eg, "stridge", weights=keep.astype(float))
    assert np.allclose(a.scores, eg_infer(cut, "stridge").scores, atol=1e-10)


# --- epidemics --------------------------------------------------------------


def test_cs_star_centre_row():
    # star centre 0 with leaves 1-6; each leaf also touches one node of a clique
    # (7-12), which keeps the epidemic endemic and gives the centre non-links
    adj = np.zeros((13, 13))
    adj[0, 1:7] = adj[1:7, 0] = 1
    adj[7:, 7:] = 1
    for k in range(6):
        adj[1 + k, 7 + k] = adj[7 + k, 1 + k] = 1
    np.fill_diagonal(adj, 0)
    bts = simulate_sis(Network(adj), 0.3, 0.3, [0, 7, 8], 2000, seed=0)
    row = epidemic_infer(bts, beta_hat=0.3, penalty=0.5).scores[0, 1:]
    assert auc_from_labels(row, adj[0, 1:] > 0) == 1.0


def test_cs_flipped_losses_are_larger(zk):
    bts = simulate_sis(zk, 0.2, 0.2, [0, 5, 12, 30], 600, seed=2)
    method = EpidemicMethod(beta_hat=0.2, penalty=1.0)
    fit = method.fit(bts)
    flipped, _ = flip_bits(bts, 1.0, seed=0)
    assert method.per_sample_loss(flipped, fit).mean() > method.per_sample_loss(bts, fit).mean()


def test_cs_all_zero_states_unidentifiable():
    bts = BinaryTimeSeries(np.ones((4, 10), dtype=np.int8))
    with pytest.warns(UnidentifiableNodeWarning):
        res = epidemic_infer(bts, beta_hat=0.2)
    assert res.unidentifiable.all() and not res.scores.any()


def test_cs_loss_by_hand():
    # 2 nodes, 3 steps; scores a_01 = 2, beta_hat = 0.25 -> P(0 infected | 1 infected) = 0.5
    states = np.array([[0, 0, 1], [1, 1, 0]], dtype=np.int8)
    scores = ScoreMatrix(np.array([[0.0, 2.0], [1.0, 0.0]]))
    loss = epidemic_per_sample_loss(BinaryTimeSeries(states), scores, beta_hat=0.25)
    # t=0: node0 susceptible, stays 0 -> (0-0.5)^2; t=1: node0 becomes 1 -> (1-0.5)^2; trailing pad 0
    assert np.allclose(loss, [0.25, 0.25, 0.0])
    assert not epidemic_per_sample_loss(BinaryTimeSeries(np.zeros((2, 3), dtype=np.int8)),
                                        ScoreMatrix(np.zeros((2, 2))), 0.2).any()


def test_cs_missing_rows_excluded(zk):
    bts = simulate_sis(zk, 0.2, 0.2, [0, 5, 12, 30], 300, seed=1)
    missing = np.zeros(zk.n, dtype=bool)
    missing[[3, 7]] = True
    res = epidemic_infer(BinaryTimeSeries(bts.states, missing), beta_hat=0.2)
    assert not res.scores[[3, 7]].any() and not res.scores[:, [3, 7]].any()
    assert np.array_equal(res.excluded, missing)


# --- model-free ------------------------------------------------------------


def test_derivative_schemes():
    t = np.arange(50.0)
    lin = TimeSeries(np.vstack([3 * t, np.full(50, 2.0)]), 1.0)
    for scheme in ("forward", "central"):
        d = estimate_derivatives(lin, scheme).deriv
        assert np.allclose(d[0], 3) and np.allclose(d[1], 0)
    tt = np.arange(0, 2 * np.pi, 0.01)
    sin = TimeSeries(np.sin(tt)[None, :], 0.01)
    err = np.abs(estimate_derivatives(sin, "central").deriv[0, 1:-1] - np.cos(tt[1:-1]))
    assert err.max() < 1e-3


def test_derivatives_respect_segments():
    x = np.array([[0.0, 1.0, 2.0, 10.0, 10.5, 11.0]])
    ts = TimeSeries(x, 1.0, segments=np.array([0, 0, 0, 1, 1, 1]))
    assert estimate_derivatives(ts, "forward").deriv.tolist() == [[1, 1, 1, 0.5, 0.5, 0.5]]


def test_arni_noise_free_recovery(zk, k1_clean):
    assert auc(arni_infer(k1_clean), zk).auc >= 0.99


def test_arni_exact_fit_losses(k1_clean):
    loss = arni_per_sample_loss(k1_clean, arni_infer(k1_clean))
    assert loss.shape == (k1_clean.m,) and loss.max() < 1e-10


def test_arni_isolated_node_selects_nothing():
    adj = gen_er(8, 0.4, seed=1).adj.copy()
    adj[0, :] = 0  # node 0 has no incoming links
    net = Network(adj, directed=True)
    ts = simulate_kuramoto_segments(net, "K1", 30, 5, 0.1, seed=2)
    res = arni_infer(ts)
    assert res.model["nodes"][0].selected == [] and not res.scores[0].any()


def test_arni_zero_weight_equals_single_segment(zk):
    ts = simulate_kuramoto_segments(zk, "K1", 40, 5, 0.1, seed=7)
    ts = TimeSeries(ts.values, ts.dt, None, ts.segments)
    keep = ts.segments < 30
    a = arni_infer(ts, weights=keep.astype(float))
    b = arni_infer(ts.select(np.flatnonzero(keep)))
    assert np.allclose(a.scores, b.scores, atol=1e-9)


def test_arni_noisy_steps_have_larger_loss(zk):
    ts = simulate_kuramoto_segments(zk, "K1", 50, 5, 0.1, seed=8)
    noisy, mask = add_awgn_local(ts, 10.0, 0.5, seed=9)
    loss = arni_per_sample_loss(noisy, arni_infer(noisy))
    assert loss[mask.noisy_samples].mean() > loss[~mask.noisy_samples].mean()


def test_arni_loss_drops_from_random_to_fitted(zk, k1_clean):
    fit = arni_infer(k1_clean)
    rng = np.random.default_rng(0)
    shuffled = ScoreMatrix(fit.scores, model={**fit.model, "nodes": [
        type(nd)(nd.selected, rng.normal(size=nd.coef.shape)) for nd in fit.model["nodes"]]})
    assert arni_per_sample_loss(k1_clean, fit).mean() < arni_per_sample_loss(k1_clean, shuffled).mean()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_method_contract(seed):
    net = gen_er(8, 0.3, seed=seed)
    rng = np.random.default_rng(seed)
    ts = simulate_kuramoto_segments(net, "K1", 8, 5, 0.1, seed=seed)
    ts = TimeSeries(ts.values, ts.dt, None, ts.segments)
    eg = simulate_eg(net, pdg(1.2), rounds=5, reps=4, seed=seed)
    bts = simulate_sis(net, 0.3, 0.2, [0, 1], 60, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for method, data in ((ArniMethod(), ts), (EgMethod(), eg), (EpidemicMethod(beta_hat=0.3), bts)):
            base = method.fit(data)
            ones = method.fit(data, np.ones(data.m))
            assert np.array_equal(base.scores, ones.scores)
            assert np.all(np.diag(base.scores) == 0)
            w = rng.uniform(0, 1, data.m)
            loss = method.per_sample_loss(data, method.fit(data, w))
            assert loss.shape == (data.m,) and np.all(loss >= 0) and np.all(np.isfinite(loss))
