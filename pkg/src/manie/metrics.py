"""Reconstruction scoring: mid-rank ROC-AUC over candidate links."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .graphgen import Network


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    auc: float
    neg_log2_auc: float
    n_pos: int
    n_neg: int


def neg_log2(auc: float) -> float:
    if not 0 < auc <= 1:
        raise ValueError(f"-log2(AUC) needs AUC in (0, 1], got {auc}")
    return -math.log2(auc) if auc < 1 else 0.0


def auc_from_labels(scores, labels) -> float:
    """Mann-Whitney AUC with mid-ranks for ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"AUC undefined with {n_pos} positives and {n_neg} negatives")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def candidate_entries(truth: Network, scores: np.ndarray, exclude=None):
    """Flatten (score, label) pairs for the evaluable candidate links.

    Directed truths use every off-diagonal entry. Undirected truths use the
    upper triangle with ``|s_ij| + |s_ji|`` as the pair's score. Nodes flagged
    in ``exclude`` are dropped from both ends.
    """
    s = np.abs(np.asarray(scores, dtype=float))
    n = truth.n
    if s.shape != (n, n):
        raise ValueError(f"score matrix shape {s.shape} does not match network size {n}")
    keep = np.ones((n, n), dtype=bool)
    np.fill_diagonal(keep, False)
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=bool)
        keep[exclude, :] = False
        keep[:, exclude] = False
    links = truth.adj != 0
    if not truth.directed:
        s = s + s.T
        keep &= np.triu(np.ones((n, n), dtype=bool), k=1)
    return s[keep], links[keep]


def auc(scores, truth: Network, exclude=None) -> EvalReport:
    """AUC of ``|scores|`` against the true links; ``exclude`` masks out nodes."""
    if hasattr(scores, "scores"):
        if exclude is None:
            exclude = scores.excluded
        scores = scores.scores
    vals, labels = candidate_entries(truth, scores, exclude)
    a = auc_from_labels(vals, labels)
    n_pos = int(labels.sum())
    return EvalReport(a, neg_log2(a) if a > 0 else math.inf, n_pos, labels.size - n_pos)
