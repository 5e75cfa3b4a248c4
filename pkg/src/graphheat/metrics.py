"""Clustering error and edge-recovery scores, aligned up to label permutation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_EDGE_THRESHOLD = 1e-4
_EXHAUSTIVE_MAX_K = 8


@dataclass(frozen=True)
class EvalReport:
    clustering_nmse_percent: float
    per_cluster_f_measure: tuple
    mean_f_measure: float
    matched_permutation: tuple

    def as_dict(self) -> dict:
        return {
            "clustering_nmse_percent": self.clustering_nmse_percent,
            "per_cluster_f_measure": list(self.per_cluster_f_measure),
            "mean_f_measure": self.mean_f_measure,
            "matched_permutation": list(self.matched_permutation),
        }


def confusion(true_labels, predicted_labels, K: int) -> np.ndarray:
    """``C[p, t]`` counts signals predicted ``p`` with true label ``t``."""
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (np.asarray(predicted_labels), np.asarray(true_labels)), 1)
    return C


def match_clusters(true_labels, predicted_labels, K: int) -> tuple:
    """Permutation ``perm`` with ``perm[p]`` = true label assigned to predicted ``p``.

    Exhaustive for K <= 8 (ties -> lexicographically first permutation),
    optimal assignment on the confusion matrix otherwise.
    """
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.shape != p.shape:
        raise ValueError("label vectors must have equal length")
    C = confusion(t, p, K)
    if K <= _EXHAUSTIVE_MAX_K:
        best, best_hits = None, -1
        for perm in itertools.permutations(range(K)):
            hits = C[np.arange(K), perm].sum()
            if hits > best_hits:
                best, best_hits = perm, hits
        return tuple(int(x) for x in best)
    rows, cols = linear_sum_assignment(-C)
    perm = np.empty(K, dtype=int)
    perm[rows] = cols
    return tuple(int(x) for x in perm)


def clustering_nmse(true_labels, predicted_labels, K: int, perm=None) -> float:
    """Percentage of signals misassigned after optimal label matching.

    For one-hot cluster indicators the normalized mean-square difference
    equals the mismatch rate, which is what is reported.
    """
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.size == 0:
        return 0.0
    if perm is None:
        perm = match_clusters(t, p, K)
    mapped = np.asarray(perm)[p]
    return 100.0 * float(np.mean(mapped != t))


def _weights(g):
    return g.weights if hasattr(g, "weights") else np.asarray(g, dtype=float)


def edge_f_measure(true_graph, learned_graph, edge_threshold: float = DEFAULT_EDGE_THRESHOLD) -> float:
    """F-measure of the learned edge set (``w > edge_threshold * max w``)."""
    Wt, Wl = _weights(true_graph), _weights(learned_graph)
    if Wt.shape != Wl.shape:
        raise ValueError("graphs must have the same number of nodes")
    iu = np.triu_indices(Wt.shape[0], k=1)
    truth = Wt[iu] > 0
    w = Wl[iu]
    wmax = float(w.max()) if w.size else 0.0
    learned = (w > edge_threshold * wmax) if wmax > 0 else np.zeros_like(truth)
    tp = int(np.sum(truth & learned))
    n_learned, n_true = int(learned.sum()), int(truth.sum())
    precision = tp / n_learned if n_learned else 0.0
    recall = tp / n_true if n_true else 0.0
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(true_labels, predicted_labels, true_graphs, learned_graphs, edge_threshold=DEFAULT_EDGE_THRESHOLD):
    """Full report; learned graph ``p`` is scored against true graph ``perm[p]``."""
    K = len(true_graphs)
    if len(learned_graphs) != K:
        raise ValueError("need one learned graph per true graph")
    perm = match_clusters(true_labels, predicted_labels, K)
    nmse = clustering_nmse(true_labels, predicted_labels, K, perm)
    f = [0.0] * K
    for p, t in enumerate(perm):
        f[t] = edge_f_measure(true_graphs[t], learned_graphs[p], edge_threshold)
    return EvalReport(nmse, tuple(f), float(np.mean(f)), perm)
