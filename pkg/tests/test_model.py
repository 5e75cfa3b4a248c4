import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from graphheat.model import (
    FistaConfig,
    FitConfig,
    HeatMixtureModel,
    ResponsibilityMatrix,
    SignalSet,
    WeightedGraph,
    laplacian,
    log_likelihood,
)
from graphheat.spectral import sym_expm

from conftest import random_weights


def random_model(rng, K, n, tau=0.4):
    a = rng.random(K) + 0.2
    graphs = tuple(WeightedGraph(random_weights(rng, n)) for _ in range(K))
    return HeatMixtureModel(a / a.sum(), rng.standard_normal((K, n)), graphs, tau)


def dense_loglik(model, X):
    total = 0.0
    for x in X.T:
        p = 0.0
        for a, mu, g in zip(model.alphas, model.means, model.graphs):
            S = sym_expm(g.laplacian(), -2 * model.tau)
            p += a * multivariate_normal(mu, S).pdf(x)
        total += np.log(p)
    return total


def test_two_node_laplacian():
    L = laplacian(WeightedGraph([[0, 1], [1, 0]]))
    np.testing.assert_array_equal(L, [[1, -1], [-1, 1]])


def test_empty_laplacian():
    np.testing.assert_array_equal(laplacian(WeightedGraph.empty(3)), np.zeros((3, 3)))


def test_triangle_laplacian_is_psd():
    W = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
    L = WeightedGraph(W).laplacian()
    np.testing.assert_array_equal(np.diag(L), [3, 4, 5])
    assert np.linalg.eigvalsh(L).min() >= -1e-9


@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_laplacian_rows_sum_to_zero(n, seed):
    L = laplacian(WeightedGraph(random_weights(np.random.default_rng(seed), n)))
    assert np.all(np.abs(L.sum(axis=1)) <= 1e-12)
    assert np.linalg.eigvalsh(L).min() >= -1e-9
    W = -L + np.diag(np.diag(L))
    assert np.all(W >= 0)


@pytest.mark.parametrize(
    "W",
    [
        [[0, 1], [2, 0]],
        [[1, 0], [0, 0]],
        [[0, -1], [-1, 0]],
        [[0, np.nan], [np.nan, 0]],
        [[0, 1, 0]],
    ],
)
def test_invalid_graphs_rejected(W):
    with pytest.raises(ValueError):
        WeightedGraph(np.asarray(W, dtype=float))


def test_graph_is_frozen_and_symmetrized():
    W = np.array([[0, 1.0], [1.0 + 1e-12, 0]])
    g = WeightedGraph(W)
    assert g.weights[0, 1] == g.weights[1, 0]
    with pytest.raises(ValueError):
        g.weights[0, 1] = 5.0


def test_graph_edges():
    g = WeightedGraph([[0, 0.5, 0], [0.5, 0, 2.0], [0, 2.0, 0]])
    assert g.edges() == [(0, 1, 0.5), (1, 2, 2.0)]
    assert g.n_edges(threshold=1.0) == 1


def test_signal_set_validation():
    with pytest.raises(ValueError):
        SignalSet(np.array([[1.0, np.inf]]))
    with pytest.raises(ValueError):
        SignalSet(np.zeros((2, 0)))
    with pytest.raises(ValueError):
        SignalSet(np.zeros((2, 3)), labels=[0, 1])
    X = SignalSet(np.arange(6.0).reshape(2, 3), labels=[0, 1, 1], timestamps=["a", "b", "c"])
    sub = X.take([2, 0])
    np.testing.assert_array_equal(sub.data, [[2, 0], [5, 3]])
    assert sub.timestamps == ("c", "a")
    np.testing.assert_array_equal(sub.labels, [1, 0])


def test_model_validation():
    g = WeightedGraph.empty(2)
    with pytest.raises(ValueError):
        HeatMixtureModel([0.5, 0.6], np.zeros((2, 2)), (g, g), 1.0)
    with pytest.raises(ValueError):
        HeatMixtureModel([1.0], np.zeros((1, 3)), (g,), 1.0)
    with pytest.raises(ValueError):
        HeatMixtureModel([1.0], np.zeros((1, 2)), (g,), 0.0)
    HeatMixtureModel([0.5, 0.5 + 5e-13], np.zeros((2, 2)), (g, g), 1.0)


def test_responsibility_validation():
    with pytest.raises(ValueError):
        ResponsibilityMatrix([[0.5, 0.6]])
    with pytest.raises(ValueError):
        ResponsibilityMatrix([[1.5, -0.5]])
    R = ResponsibilityMatrix.from_labels([1, 0, 1], 2)
    np.testing.assert_array_equal(R.hard_labels(), [1, 0, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(K=0, tau=1.0)
    with pytest.raises(ValueError):
        FitConfig(K=2, tau=1.0, em_tol=0.0)
    with pytest.raises(ValueError):
        FitConfig(K=2, tau=1.0, n_restarts=0)
    with pytest.raises(ValueError):
        FistaConfig(tol=0.0)
    with pytest.raises(ValueError):
        FistaConfig(step_rule="newton")
    with pytest.raises(ValueError):
        FistaConfig(beta=-1.0)
    assert FitConfig(K=2, tau=1.0).with_(seed=3).seed == 3


def test_default_beta_scales_with_tau_squared():
    cfg = FistaConfig()
    assert cfg.beta_for(0.5) == pytest.approx(4 * cfg.beta_for(0.25), rel=1e-15)
    assert FistaConfig(beta=0.3).beta_for(0.5) == 0.3
    assert FistaConfig(beta=0.0).beta_for(2.0) == 0.0


def test_loglik_standard_normal():
    model = HeatMixtureModel([1.0], np.zeros((1, 2)), (WeightedGraph.empty(2),), 1.0)
    assert log_likelihood(model, np.zeros((2, 1))) == pytest.approx(-np.log(2 * np.pi), abs=1e-14)


def test_loglik_duplicate_components_match_single(rng):
    single = random_model(rng, 1, 4)
    X = rng.standard_normal((4, 7))
    g, mu = single.graphs[0], single.means[0]
    double = HeatMixtureModel([0.5, 0.5], np.stack([mu, mu]), (g, g), single.tau)
    assert log_likelihood(double, X) == pytest.approx(log_likelihood(single, X), abs=1e-10)


def test_loglik_matches_dense_oracle(rng):
    model = random_model(rng, 2, 4)
    X = rng.standard_normal((4, 3))
    assert log_likelihood(model, X) == pytest.approx(dense_loglik(model, X), abs=1e-8)


@given(st.integers(1, 4), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_loglik_component_permutation_invariance(K, n, seed):
    r = np.random.default_rng(seed)
    model = random_model(r, K, n)
    X = r.standard_normal((n, 5))
    order = r.permutation(K)
    a, b = log_likelihood(model, X), log_likelihood(model.permuted(order), X)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_loglik_split_component_invariance(K, seed):
    r = np.random.default_rng(seed)
    model = random_model(r, K, 3)
    X = r.standard_normal((3, 6))
    k = int(r.integers(K))
    alphas = np.concatenate([model.alphas, [model.alphas[k] / 2]])
    alphas[k] /= 2
    means = np.vstack([model.means, model.means[k]])
    split = HeatMixtureModel(alphas, means, model.graphs + (model.graphs[k],), model.tau)
    assert log_likelihood(split, X) == pytest.approx(log_likelihood(model, X), abs=1e-10)
