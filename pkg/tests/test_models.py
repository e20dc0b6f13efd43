import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperinject.errors import EmptyMask, InvalidConfig, ShapeMismatch
from hyperinject.hypergraph import Hypergraph, InjectionPlan, build_incidence, inject_nodes
from hyperinject.models import (
    MEAN,
    SPECTRAL,
    HgnnParams,
    TrainConfig,
    evaluate,
    hgnn_forward,
    mean_aggregation_forward,
    normalized_operator,
    predict,
    train,
    training_loss,
    propagator_for,
)
from hyperinject.autodiff import finite_difference_check
from hyperinject.synthetic import SyntheticSpec, generate_synthetic

from conftest import random_hypergraph


def dense_spectral(H, w):
    dv = H @ w
    de = H.sum(axis=0)
    s = np.array([1 / np.sqrt(d) if d > 0 else 0.0 for d in dv])
    return np.diag(s) @ H @ np.diag(w) @ np.diag(1 / de) @ H.T @ np.diag(s)


def loop_mean(H, Y):
    n, m = H.shape
    edge_mean = np.array([Y[H[:, j] > 0].mean(axis=0) for j in range(m)])
    out = np.zeros_like(Y)
    for i in range(n):
        edges = np.flatnonzero(H[i])
        out[i] = Y[i] if edges.size == 0 else edge_mean[edges].mean(axis=0)
    return out


def test_single_edge_operator():
    G = Hypergraph.from_hyperedges([[0, 1]], 2, np.zeros((2, 1)))
    np.testing.assert_allclose(normalized_operator(G), [[0.5, 0.5], [0.5, 0.5]])


def test_isolated_node_row_is_zero():
    G = Hypergraph.from_hyperedges([[0, 1]], 3, np.zeros((3, 1)))
    P = normalized_operator(G)
    np.testing.assert_array_equal(P[2], 0.0)
    np.testing.assert_array_equal(P[:, 2], 0.0)


def test_operator_matches_dense_formula(rng):
    for _ in range(15):
        G = random_hypergraph(rng)
        w = rng.uniform(0.5, 2.0, size=G.num_hyperedges)
        H = G.incidence.dense()
        np.testing.assert_allclose(normalized_operator(G, w), dense_spectral(H, w), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_operator_symmetric_and_contracting(seed):
    G = random_hypergraph(np.random.default_rng(seed))
    P = normalized_operator(G)
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    assert np.all(P >= -1e-15)
    # spectral radius of the unweighted operator is at most 1
    assert np.max(np.abs(np.linalg.eigvalsh(P))) <= 1 + 1e-10


def test_rmatvec_is_transpose(rng):
    G = random_hypergraph(rng)
    for kind in (SPECTRAL, MEAN):
        op = propagator_for(G, kind)
        D = op.dense()
        y = rng.normal(size=(G.num_nodes, 2))
        np.testing.assert_allclose(op.rmatvec(y), D.T @ y, atol=1e-12)


def _params(rng, f, h, c, kind):
    return HgnnParams(rng.normal(size=(f, h)), rng.normal(size=(h, c)), kind)


def test_hgnn_forward_dense_oracle(tiny, rng):
    p = _params(rng, 2, 4, 2, SPECTRAL)
    P = dense_spectral(tiny.incidence.dense(), np.ones(2))
    expect = P @ np.maximum(P @ tiny.features @ p.theta0, 0) @ p.theta1
    np.testing.assert_allclose(hgnn_forward(tiny, p), expect, atol=1e-12)


def test_mean_forward_loop_oracle(rng):
    G = random_hypergraph(rng, n=25, m=10)
    p = _params(rng, G.num_features, 5, 3, MEAN)
    H = G.incidence.dense()
    hid = np.maximum(loop_mean(H, G.features @ p.theta0), 0)
    np.testing.assert_allclose(mean_aggregation_forward(G, p), loop_mean(H, hid @ p.theta1), atol=1e-12)


def test_forward_kind_and_shape_checks(tiny, rng):
    with pytest.raises(InvalidConfig):
        hgnn_forward(tiny, _params(rng, 2, 3, 2, MEAN))
    with pytest.raises(ShapeMismatch):
        hgnn_forward(tiny, _params(rng, 5, 3, 2, SPECTRAL))


@pytest.mark.parametrize("kind", [SPECTRAL, MEAN])
def test_permutation_equivariance(kind, rng):
    G = random_hypergraph(rng, n=20, m=12)
    perm = rng.permutation(G.num_nodes)
    inv = np.argsort(perm)
    edges = [[int(inv[v]) for v in e] for e in G.incidence.hyperedges()]
    Gp = Hypergraph(build_incidence(edges, G.num_nodes), G.features[perm])
    p = _params(rng, G.num_features, 6, 3, kind)
    fwd = hgnn_forward if kind == SPECTRAL else mean_aggregation_forward
    np.testing.assert_allclose(fwd(Gp, p), fwd(G, p)[perm], atol=1e-12)


@pytest.mark.parametrize("kind", [SPECTRAL, MEAN])
def test_untouched_component_is_invariant(kind, rng):
    # two disjoint blocks; injecting into block B cannot change block A outputs
    edges = [[0, 1], [1, 2], [3, 4], [4, 5]]
    G = Hypergraph.from_hyperedges(edges, 6, rng.normal(size=(6, 3)))
    A = inject_nodes(G, InjectionPlan([3], [[9.0, -9.0, 9.0]]))
    p = _params(rng, 3, 4, 2, kind)
    fwd = hgnn_forward if kind == SPECTRAL else mean_aggregation_forward
    np.testing.assert_allclose(fwd(A, p)[:3], fwd(G, p)[:3], atol=1e-12)
    assert not np.allclose(fwd(A, p)[3:6], fwd(G, p)[3:6])


def test_training_loss_gradient(rng):
    G = random_hypergraph(rng, n=15, m=8)
    op = propagator_for(G, SPECTRAL)
    params = {"theta0": rng.normal(size=(G.num_features, 5)), "theta1": rng.normal(size=(5, 3))}
    mask = G.mask("train") | G.mask("val")

    def fwd(p):
        g, loss, _ = training_loss(G, op, p, G.labels, mask, 5e-4)
        return g, loss

    for name in params:
        assert finite_difference_check(fwd, params, name) <= 1e-4


def test_predict_ties_take_lowest_index():
    np.testing.assert_array_equal(predict(np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]])), [0, 1])


def _separable():
    spec = SyntheticSpec(num_nodes=60, num_classes=2, num_hyperedges=80, p_in=1.0,
                         num_features=8, signal=1.0, flip=0.0, seed=3)
    return generate_synthetic(spec)


@pytest.mark.parametrize("kind", [SPECTRAL, MEAN])
def test_train_fits_separable_fixture(kind):
    G = _separable()
    assert G.incidence.hyperdegrees.min() > 0
    params, trace = train(G, kind, TrainConfig(hidden=16, epochs=100, seed=1))
    assert trace.train_accuracy[-1] == 1.0
    assert evaluate(params, G, G.mask("test")).accuracy == 1.0
    assert trace.loss[-1] < trace.loss[0]


def test_train_is_deterministic():
    G = _separable()
    a, _ = train(G, SPECTRAL, TrainConfig(hidden=8, epochs=20, seed=4))
    b, _ = train(G, SPECTRAL, TrainConfig(hidden=8, epochs=20, seed=4))
    np.testing.assert_array_equal(a.theta0, b.theta0)
    np.testing.assert_array_equal(a.theta1, b.theta1)


def test_train_config_validation():
    with pytest.raises(InvalidConfig):
        TrainConfig(epochs=0)
    with pytest.raises(InvalidConfig):
        TrainConfig(lr=0.0)
    with pytest.raises(InvalidConfig):
        train(_separable(), "gcn", TrainConfig(epochs=1))


def test_evaluate_all_zero_predictions():
    # one hyperedge, zero features -> equal logits -> argmax 0 for every node
    G = Hypergraph.from_hyperedges([[0, 1, 2, 3]], 4, np.zeros((4, 2)), labels=[0, 0, 1, 1],
                                   masks={"test": [True] * 4})
    p = HgnnParams(np.ones((2, 3)), np.ones((3, 2)), SPECTRAL)
    m = evaluate(p, G, G.mask("test"))
    assert m.accuracy == 0.5
    assert m.macro_f1 == pytest.approx(1 / 3)


def test_evaluate_rejects_injected_and_empty(tiny):
    A = inject_nodes(tiny, InjectionPlan([0], np.ones((1, 2))))
    p = HgnnParams(np.ones((2, 3)), np.ones((3, 2)), SPECTRAL)
    with pytest.raises(ValueError):
        evaluate(p, A, np.array([False, False, False, True]))
    with pytest.raises(EmptyMask):
        evaluate(p, tiny, np.zeros(3, bool))
