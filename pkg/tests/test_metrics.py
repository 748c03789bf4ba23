import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manie.graphgen import Network, gen_er
from manie.metrics import UndefinedMetricError, auc, auc_from_labels, candidate_entries, neg_log2


def test_hand_example():
    # positives (0.9, 0.4) vs negatives (0.5, 0.1): 3 of 4 pairs concordant
    assert auc_from_labels([0.9, 0.4, 0.5, 0.1], [1, 1, 0, 0]) == 0.75


def test_ties_and_extremes():
    assert auc_from_labels([1.0, 1.0, 1.0], [1, 0, 0]) == 0.5
    assert auc_from_labels([3, 2, 1], [1, 0, 0]) == 1.0
    assert auc_from_labels([1, 2, 3], [1, 0, 0]) == 0.0


def test_neg_log2():
    assert neg_log2(1.0) == 0.0
    assert neg_log2(0.5) == 1.0
    assert neg_log2(0.8) == pytest.approx(0.32193, abs=1e-5)
    with pytest.raises(ValueError):
        neg_log2(0.0)


def test_undefined():
    with pytest.raises(UndefinedMetricError):
        auc_from_labels([0.1, 0.2], [1, 1])
    with pytest.raises(UndefinedMetricError):
        auc(np.zeros((3, 3)), Network(np.zeros((3, 3))))


def test_undirected_uses_pair_sum():
    net = Network(np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0.0]]))
    s = np.array([[0, 0, 0.6], [0.5, 0, 0], [0, 0, 0]])  # pair (0,1) scores 0.5, pair (0,2) 0.6
    vals, labels = candidate_entries(net, s)
    assert vals.tolist() == [0.5, 0.6, 0.0] and labels.tolist() == [True, False, False]
    assert auc(s, net).auc == 0.5


def test_sign_is_ignored():
    net = gen_er(12, 0.3, False, 0)
    s = np.random.default_rng(1).normal(size=(12, 12))
    assert auc(s, net).auc == auc(np.abs(s), net).auc


def test_excluded_nodes_dropped():
    net = gen_er(10, 0.4, True, 2)
    s = np.random.default_rng(3).random((10, 10))
    ex = np.zeros(10, dtype=bool)
    ex[[1, 4]] = True
    rep = auc(s, net, ex)
    assert rep.n_pos + rep.n_neg == 8 * 7
    keep = np.flatnonzero(~ex)
    sub = Network(net.adj[np.ix_(keep, keep)], directed=True)
    assert rep.auc == auc(s[np.ix_(keep, keep)], sub).auc


def _brute(scores, labels):
    pos, neg = scores[labels], scores[~labels]
    d = pos[:, None] - neg[None, :]
    return ((d > 0) + 0.5 * (d == 0)).mean()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 40))
def test_matches_brute_force_and_complement(seed, n):
    rng = np.random.default_rng(seed)
    labels = rng.random(n) < 0.4
    labels[0], labels[1] = True, False
    scores = rng.integers(0, 5, n).astype(float)  # coarse values force ties
    a = auc_from_labels(scores, labels)
    assert a == pytest.approx(_brute(scores, labels), abs=1e-12)
    assert a + auc_from_labels(-scores, labels) == pytest.approx(1.0, abs=1e-12)
    assert a == pytest.approx(auc_from_labels(2 * scores + 5, labels), abs=1e-12)
    assert a == pytest.approx(auc_from_labels(scores**3, labels), abs=1e-12)
