import numpy as np
import pytest

from graphheat import em
from graphheat.baselines import (
    assign,
    gmm_fit,
    graphs_from_labels,
    kmeans,
    kmeans_then_graphs,
    precision_graph,
)
from graphheat.metrics import clustering_nmse
from graphheat.model import FistaConfig, FitConfig, HeatMixtureModel, ResponsibilityMatrix
from graphheat.synth import random_connected_er_graph, sample_signals


def separated_data(seed, M=200, n=10, sep=5.0):
    r = np.random.default_rng(seed)
    graphs = tuple(random_connected_er_graph(n, 0.5, r) for _ in range(2))
    means = np.stack([np.full(n, sep), np.full(n, -sep)])
    model = HeatMixtureModel([0.5, 0.5], means, graphs, 0.5)
    return sample_signals(model, M, r, exact_counts=True)


def cfg(K, **kw):
    return FitConfig(K=K, tau=0.5, n_restarts=3, **kw)


def test_gmm_diagonal_covariance_gives_sparse_precision():
    rng = np.random.default_rng(0)
    sd = np.array([1.0, 1.5, 0.7, 1.2])
    X = (rng.standard_normal((10_000, 4)) * sd).T
    res = gmm_fit(X, 1, cfg(1))
    W = res.graphs[0].weights
    P = np.linalg.inv(np.cov(X, bias=True))
    # off-diagonal precision shrinks like 1/sqrt(M) relative to the diagonal
    assert W.max() <= 5 * np.diag(P).max() / np.sqrt(10_000)
    assert gmm_fit(X, 1, cfg(1), edge_threshold=0.1).graphs[0].n_edges() == 0


def test_gmm_separated_clusters():
    X, _ = separated_data(7)
    res = gmm_fit(X, 2, cfg(2))
    assert clustering_nmse(X.labels, res.predicted_labels, 2) <= 1.0
    assert set(np.unique(res.predicted_labels)) <= {0, 1}
    for g in res.graphs:
        W = g.weights
        assert np.all(W >= 0) and np.all(np.diag(W) == 0) and np.array_equal(W, W.T)


def test_gmm_duplicate_signals_survive():
    X = np.tile(np.array([[1.0], [2.0], [3.0]]), (1, 20))
    res = gmm_fit(X, 1, cfg(1))
    assert np.all(np.isfinite(res.graphs[0].weights))


def test_gmm_is_deterministic():
    X, _ = separated_data(1, M=60, n=5, sep=1.0)
    a, b = gmm_fit(X, 2, cfg(2, seed=3)), gmm_fit(X, 2, cfg(2, seed=3))
    np.testing.assert_array_equal(a.predicted_labels, b.predicted_labels)
    assert all(x == y for x, y in zip(a.graphs, b.graphs))


def test_precision_graph_relative_threshold():
    S = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
    g = precision_graph(S, edge_threshold=1e-4)
    assert g.edges()[0][:2] == (0, 1) and g.n_edges() == 1
    P = np.linalg.inv(S + 1e-6 * np.trace(S) / 3 * np.eye(3))
    assert g.weights[0, 1] == pytest.approx(abs(P[0, 1]), rel=1e-12)


def test_kmeans_single_cluster_matches_em_graph_step():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((5, 40)) + np.arange(5)[:, None]
    c = cfg(1, fista=FistaConfig(beta=0.1, tol=1e-12, max_iters=20000))
    res = kmeans_then_graphs(X, 1, c)
    np.testing.assert_array_equal(res.predicted_labels, 0)
    G = np.ones((40, 1))
    (direct,) = em.m_step_graphs(em.m_step_covariances(G, X, em.m_step_means(G, X)), 0.5, c.fista)
    assert res.graphs[0] == direct
    fitted = em.fit(X, c)
    np.testing.assert_allclose(res.graphs[0].weights, fitted.model.graphs[0].weights, atol=1e-5)


@pytest.mark.parametrize("c", [1e-6, 1.0, 1e6])
def test_kmeans_point_masses(c):
    X = np.hstack([np.full((3, 5), c), np.full((3, 7), -c)])
    _, labels, _ = kmeans(X, 2, n_restarts=2)
    truth = np.r_[np.zeros(5, int), np.ones(7, int)]
    assert clustering_nmse(truth, labels, 2) == 0.0


def test_kmeans_tie_goes_to_lower_index():
    centroids = np.array([[-1.0, 0.0], [1.0, 0.0]])
    data = np.array([[0.0, 5.0], [0.0, 0.0]])
    labels, _ = assign(data, centroids)
    np.testing.assert_array_equal(labels, [0, 1])
    for _ in range(3):
        assert assign(data, centroids)[0][0] == 0


def test_kmeans_deterministic_and_handles_duplicates():
    X, _ = separated_data(2, M=40, n=4, sep=1.0)
    a, b = kmeans(X, 3, seed=5), kmeans(X, 3, seed=5)
    np.testing.assert_array_equal(a[1], b[1])
    # fewer distinct points than clusters still yields K centroids
    dup = np.tile(np.array([[0.0], [1.0]]), (1, 6))
    dup[:, 0] = 5.0
    _, labels, cent = kmeans(dup, 3, n_restarts=1)
    assert cent.shape == (3, 2) and np.all(np.isfinite(cent))


def test_kmeans_gl_with_true_labels_reproduces_m_step():
    X, _ = separated_data(3, M=80, n=6)
    c = cfg(2)
    graphs = graphs_from_labels(X, X.labels, 2, c)
    G = ResponsibilityMatrix.from_labels(X.labels, 2)
    covs = em.m_step_covariances(G, X, em.m_step_means(G, X))
    direct = em.m_step_graphs(covs, c.tau, c.fista)
    assert all(a == b for a, b in zip(graphs, direct))


def test_kmeans_gl_separated_clusters():
    X, _ = separated_data(8, M=100, n=6)
    res = kmeans_then_graphs(X, 2, cfg(2))
    assert clustering_nmse(X.labels, res.predicted_labels, 2) == 0.0
    assert res.method == "kmeans-gl"
    fr = res.to_fit_result(0.5)
    np.testing.assert_array_equal(fr.labels(), res.predicted_labels)


def test_kmeans_gl_needs_k_signals(rng):
    with pytest.raises(ValueError):
        kmeans_then_graphs(rng.standard_normal((3, 2)), 3, cfg(3))
