import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from graphheat.graphlearn import (
    GraphLearnProblem,
    lipschitz_constant,
    objective,
    prox_l1_feasible,
    smooth_gradient,
    smooth_objective,
    solve,
    solve_with_state,
)
from graphheat.model import FistaConfig, WeightedGraph
from graphheat.spectral import sym_expm, sym_logm_psd

from conftest import dense_laplacian, random_weights


def sym_noise(rng, n, scale):
    E = rng.standard_normal((n, n)) * scale
    return E + E.T


def fd_edge_derivative(p, W, i, j, h=1e-6):
    E = np.zeros_like(W)
    E[i, j] = E[j, i] = h
    return (smooth_objective(p, W + E) - smooth_objective(p, W - E)) / (2 * h)


def test_objective_zero_at_exact_fit(rng):
    W0 = random_weights(rng, 5)
    p = GraphLearnProblem(-2 * 0.3 * dense_laplacian(W0), 0.3, 0.0)
    assert objective(p, W0) == pytest.approx(0.0, abs=1e-24)


def test_objective_at_empty_graph(rng):
    C = sym_noise(rng, 4, 1.0)
    p = GraphLearnProblem(C, 0.7, 0.0)
    assert objective(p, np.zeros((4, 4))) == pytest.approx(np.sum(C**2), rel=1e-14)


def test_objective_matches_elementwise_sum(rng):
    n, tau, beta = 4, 0.45, 0.3
    C = sym_noise(rng, n, 1.0)
    W = random_weights(rng, n)
    total = 0.0
    for i in range(n):
        for j in range(n):
            lij = sum(W[i]) if i == j else -W[i, j]
            total += (C[i, j] + 2 * tau * lij) ** 2 + beta * W[i, j]
    assert objective(GraphLearnProblem(C, tau, beta), W) == pytest.approx(total, rel=1e-10)


def test_gradient_zero_at_exact_fit(rng):
    W0 = random_weights(rng, 6)
    p = GraphLearnProblem(-2 * 0.5 * dense_laplacian(W0), 0.5)
    np.testing.assert_allclose(smooth_gradient(p, W0), 0.0, atol=1e-12)


def test_gradient_single_edge_symbolic():
    w, tau = sympy.symbols("w tau", positive=True)
    c = sympy.Matrix(2, 2, sympy.symbols("c11 c12 c12 c22"))
    B = sympy.Matrix([[1, -1], [-1, 1]])
    R = c + 2 * tau * w * B
    f = sum(R[i, j] ** 2 for i in range(2) for j in range(2))
    deriv = sympy.diff(f, w)
    vals = {"c11": 0.3, "c12": -0.7, "c22": 1.1}
    subs = {sympy.Symbol(k): v for k, v in vals.items()}
    subs.update({tau: 0.4, w: 0.25})
    expected = float(deriv.subs(subs))
    C = np.array([[0.3, -0.7], [-0.7, 1.1]])
    G = smooth_gradient(GraphLearnProblem(C, 0.4), np.array([[0, 0.25], [0.25, 0]]))
    # one edge variable drives both W_12 and W_21
    assert 2 * G[0, 1] == pytest.approx(expected, rel=1e-12)
    assert G[0, 1] == G[1, 0]
    assert G[0, 0] == G[1, 1] == 0


def test_gradient_matches_finite_differences(rng):
    n = 5
    p = GraphLearnProblem(sym_noise(rng, n, 1.0), 0.35, 0.2)
    W = random_weights(rng, n, p=1.0)
    G = smooth_gradient(p, W)
    for i in range(n):
        for j in range(i + 1, n):
            fd = fd_edge_derivative(p, W, i, j)
            assert abs(2 * G[i, j] - fd) <= 1e-5 * max(abs(fd), 1e-8)


@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_gradient_finite_difference_property(n, seed):
    r = np.random.default_rng(seed)
    p = GraphLearnProblem(sym_noise(r, n, 1.0), r.uniform(0.1, 0.8))
    W = random_weights(r, n, p=1.0)
    G = smooth_gradient(p, W)
    iu = np.triu_indices(n, 1)
    fd = np.array([fd_edge_derivative(p, W, i, j) for i, j in zip(*iu)])
    scale = np.maximum(np.abs(fd), 1e-3 * np.max(np.abs(fd)))
    assert np.max(np.abs(2 * G[iu] - fd) / scale) <= 1e-5


def test_gradient_is_symmetric_zero_diagonal(rng):
    p = GraphLearnProblem(sym_noise(rng, 6, 1.0), 0.2)
    G = smooth_gradient(p, random_weights(rng, 6))
    np.testing.assert_array_equal(G, G.T)
    np.testing.assert_array_equal(np.diag(G), 0.0)


@pytest.mark.parametrize("n,tau", [(3, 0.1), (5, 0.4), (12, 0.8)])
def test_power_iteration_lipschitz(n, tau):
    assert lipschitz_constant(tau, n) == pytest.approx(8 * tau**2 * n, rel=1e-9)


def test_prox_identity_on_feasible(rng):
    W = random_weights(rng, 5)
    np.testing.assert_array_equal(prox_l1_feasible(W, 0.0), W)


def test_prox_scalar_cases():
    W = np.array([[0.0, 0.5, -0.4], [0.5, 0.0, 0.0], [-0.4, 0.0, 0.0]])
    out = prox_l1_feasible(W, 0.2)
    assert out[0, 1] == pytest.approx(0.3)
    assert out[0, 2] == 0.0
    assert prox_l1_feasible(W, 5.0)[0, 2] == 0.0


def test_prox_asymmetric_matches_elementwise(rng):
    A = rng.standard_normal((6, 6))
    thr = 0.15
    out = prox_l1_feasible(A, thr)
    for i in range(6):
        for j in range(6):
            expected = 0.0 if i == j else max(0.0, (A[i, j] + A[j, i]) / 2 - thr)
            assert out[i, j] == expected
    assert np.array_equal(out, out.T)
    assert np.all(np.diag(out) == 0) and np.all(out >= 0)


@pytest.mark.parametrize("step_rule", ["power", "backtracking"])
def test_solve_noiseless_exact_recovery(rng, step_rule):
    W0 = random_weights(rng, 5)
    tau = 0.4
    C = sym_logm_psd(sym_expm(dense_laplacian(W0), -2 * tau), 1e-300)
    g = solve(GraphLearnProblem(C, tau, 0.0), np.zeros((5, 5)), FistaConfig(beta=0.0, step_rule=step_rule))
    assert np.linalg.norm(g.weights - W0) <= 1e-4 * np.linalg.norm(W0)


def test_solve_large_beta_gives_empty_graph(rng):
    p0 = GraphLearnProblem(sym_noise(rng, 6, 1.0), 0.5, 0.0)
    beta = 2 * np.max(np.abs(smooth_gradient(p0, np.zeros((6, 6)))))
    p = GraphLearnProblem(p0.log_cov, p0.tau, beta)
    g = solve(p, random_weights(rng, 6), FistaConfig(beta=beta))
    assert g.n_edges() == 0


def test_solve_history_monotone_and_feasible(rng):
    p = GraphLearnProblem(sym_noise(rng, 7, 1.0), 0.3, 0.1)
    init = random_weights(rng, 7)
    g, state = solve_with_state(p, init, FistaConfig(beta=0.1))
    h = np.asarray(state.objective_history)
    assert np.all(np.diff(h) <= 0)
    assert h[-1] <= objective(p, init)
    assert h[-1] == pytest.approx(objective(p, g))
    W = g.weights
    assert np.array_equal(W, W.T) and np.all(np.diag(W) == 0) and np.all(W >= 0)
    assert state.converged


def test_solve_max_iters_flagged(rng):
    p = GraphLearnProblem(sym_noise(rng, 8, 1.0), 0.3, 0.01)
    g, state = solve_with_state(p, np.zeros((8, 8)), FistaConfig(beta=0.01, max_iters=3, tol=1e-300))
    assert state.hit_max_iters and not state.converged
    assert state.iteration == 3
    assert isinstance(g, WeightedGraph)


def test_solve_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        solve(GraphLearnProblem(np.zeros((3, 3)), 0.5), np.zeros((4, 4)))


@given(st.integers(3, 7), st.integers(0, 2**32 - 1), st.floats(0.2, 5.0))
def test_scale_covariance_of_objective(n, seed, c):
    r = np.random.default_rng(seed)
    p = GraphLearnProblem(sym_noise(r, n, 1.0), r.uniform(0.1, 0.8), r.uniform(0.0, 0.5))
    W = random_weights(r, n)
    rhs = c**2 * objective(p, W)
    assert abs(objective(p.scaled(c), W) - rhs) <= 1e-10 * max(1.0, abs(rhs))


@given(st.integers(3, 7), st.integers(0, 2**32 - 1), st.floats(0.2, 5.0))
def test_tau_times_laplacian_invariance(n, seed, c):
    r = np.random.default_rng(seed)
    p = GraphLearnProblem(sym_noise(r, n, 1.0), r.uniform(0.1, 0.8), r.uniform(0.0, 0.5))
    W = random_weights(r, n)
    rhs = objective(p, W)
    assert abs(objective(p.with_tau_scaled(c), W / c) - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_scale_covariance_of_minimizer(rng):
    p = GraphLearnProblem(sym_noise(rng, 6, 0.5) - 0.8 * dense_laplacian(random_weights(rng, 6)), 0.4, 0.1)
    c = 2.5
    cfg = FistaConfig(tol=1e-14, max_iters=20000)
    W = solve(p, np.zeros((6, 6)), cfg).weights
    assert np.count_nonzero(W) > 0
    np.testing.assert_allclose(solve(p.scaled(c), np.zeros((6, 6)), cfg).weights, W, atol=1e-7)
    np.testing.assert_allclose(solve(p.with_tau_scaled(c), np.zeros((6, 6)), cfg).weights, W / c, atol=1e-7)
