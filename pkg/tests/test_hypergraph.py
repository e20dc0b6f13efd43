import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperinject.errors import (
    DuplicateTargetHyperedge,
    EmptyHyperedge,
    FeatureDimensionMismatch,
    HyperedgeIdOutOfRange,
    NodeIdOutOfRange,
    NonPositiveWeight,
    WeightDimensionMismatch,
)
from hyperinject.hypergraph import (
    Hypergraph,
    InjectionPlan,
    build_incidence,
    degree_profile,
    inject_nodes,
    node_hyperdegree,
    validate,
)


@st.composite
def hyperedge_lists(draw, max_nodes=12, max_edges=10):
    n = draw(st.integers(1, max_nodes))
    edges = draw(st.lists(st.lists(st.integers(0, n - 1), min_size=1, max_size=6), max_size=max_edges))
    return edges, n


def test_two_edge_example():
    inc = build_incidence([[0, 1], [1, 2]], 3)
    np.testing.assert_array_equal(inc.dense(), [[1, 0], [1, 1], [0, 1]])


def test_duplicate_members_collapse():
    inc = build_incidence([[2, 0, 2, 0]], 3)
    assert inc.hyperedges() == [[0, 2]]
    assert inc.dense().max() == 1


def test_construction_errors():
    with pytest.raises(EmptyHyperedge):
        build_incidence([[0], []], 2)
    with pytest.raises(NodeIdOutOfRange):
        build_incidence([[0, 3]], 3)
    with pytest.raises(NodeIdOutOfRange):
        build_incidence([[-1]], 3)


def test_degree_profile_examples():
    inc = build_incidence([[0, 1], [1, 2]], 3)
    p = degree_profile(inc)
    np.testing.assert_array_equal(p.node_degrees, [1, 2, 1])
    np.testing.assert_array_equal(p.hyperedge_degrees, [2, 2])
    p2 = degree_profile(inc, 2 * np.eye(2))
    np.testing.assert_array_equal(p2.node_degrees, [2, 4, 2])
    np.testing.assert_array_equal(p2.hyperedge_degrees, [2, 2])


def test_degree_profile_errors():
    inc = build_incidence([[0, 1], [1, 2]], 3)
    with pytest.raises(WeightDimensionMismatch):
        degree_profile(inc, np.ones(3))
    with pytest.raises(NonPositiveWeight):
        degree_profile(inc, [1.0, 0.0])


def test_hyperdegree(tiny):
    assert [node_hyperdegree(tiny, v) for v in range(3)] == [1, 2, 1]
    with pytest.raises(NodeIdOutOfRange):
        node_hyperdegree(tiny, 3)
    iso = build_incidence([[0]], 2)
    assert node_hyperdegree(iso, 1) == 0


@given(hyperedge_lists())
def test_round_trip_through_edge_lists(data):
    edges, n = data
    inc = build_incidence(edges, n)
    assert inc.hyperedges() == [sorted(set(e)) for e in edges]
    assert build_incidence(inc.hyperedges(), n) == inc


@given(hyperedge_lists(), st.data())
def test_double_counting(data, draw):
    edges, n = data
    inc = build_incidence(edges, n)
    w = np.array(draw.draw(st.lists(st.floats(0.1, 5.0), min_size=len(edges), max_size=len(edges))))
    p = degree_profile(inc, w)
    H = inc.dense()
    np.testing.assert_allclose(p.node_degrees, H @ w, atol=1e-12)
    np.testing.assert_array_equal(p.hyperedge_degrees, H.sum(axis=0))
    assert inc.hyperdegrees.sum() == inc.edge_sizes.sum() == inc.nnz


@given(hyperedge_lists(), st.data())
@settings(max_examples=60)
def test_injection_preserves_clean_block(data, draw):
    edges, n = data
    m_edges = len(edges)
    G = Hypergraph(build_incidence(edges, n), np.arange(n * 2, dtype=float).reshape(n, 2),
                   labels=np.zeros(n, dtype=int), masks={"train": np.ones(n, bool)})
    targets = draw.draw(st.lists(st.integers(0, max(m_edges - 1, 0)), unique=True, max_size=m_edges)) if m_edges else []
    feats = np.full((len(targets), 2), -1.0)
    A = inject_nodes(G, InjectionPlan(targets, feats))
    m = len(targets)
    H, Ha = G.incidence.dense(), A.incidence.dense()
    assert Ha.shape == (n + m, m_edges)
    np.testing.assert_array_equal(Ha[:n], H)
    np.testing.assert_array_equal(Ha[n:].sum(axis=1), np.ones(m))
    for k, j in enumerate(targets):
        assert Ha[n + k, j] == 1
        assert A.origin_map[n + k] == j
    bumped = np.zeros(m_edges, dtype=int)
    bumped[targets] = 1
    np.testing.assert_array_equal(Ha.sum(axis=0), H.sum(axis=0) + bumped)
    np.testing.assert_array_equal(A.features[:n], G.features)
    assert A.num_original == n and A.injected_count == m
    assert np.all(A.labels[n:] == -1) and not A.mask("train")[n:].any()
    assert validate(A) == []


def test_injection_errors(tiny):
    with pytest.raises(DuplicateTargetHyperedge):
        inject_nodes(tiny, InjectionPlan([0, 0], np.zeros((2, 2))))
    with pytest.raises(HyperedgeIdOutOfRange):
        inject_nodes(tiny, InjectionPlan([5], np.zeros((1, 2))))
    with pytest.raises(FeatureDimensionMismatch):
        inject_nodes(tiny, InjectionPlan([0], np.zeros((1, 3))))


def test_empty_plan_is_identity(tiny):
    A = inject_nodes(tiny, InjectionPlan.empty(2))
    assert A.incidence == tiny.incidence and A.injected_count == 0
    np.testing.assert_array_equal(A.features, tiny.features)


def test_repeated_injection_merges_origins(tiny):
    A = inject_nodes(tiny, InjectionPlan([1], np.ones((1, 2))))
    B = inject_nodes(A, InjectionPlan([0], np.ones((1, 2))))
    assert B.origin_map == {3: 1, 4: 0}
    assert B.num_original == 3


def test_validate_flags_problems(tiny):
    assert validate(tiny) == []
    bad = Hypergraph(tiny.incidence, np.array([[np.nan, 0], [0, 0], [0, 0]]),
                     labels=[0, 5, 1], num_classes=2,
                     masks={"train": [True, False, False], "test": [True, False, True]})
    kinds = {v.kind for v in validate(bad)}
    assert {"NonFiniteFeature", "LabelOutOfRange", "OverlappingMasks"} <= kinds
    short = Hypergraph(tiny.incidence, np.zeros((2, 2)))
    assert "FeatureRowMismatch" in {v.kind for v in validate(short)}


def test_validate_rejects_mask_on_injected_node(tiny):
    A = inject_nodes(tiny, InjectionPlan([0], np.ones((1, 2))))
    masks = {k: np.array(v) for k, v in A.masks.items()}
    masks["test"][3] = True
    forged = type(A)(A.incidence, A.features, A.labels, masks, A.num_classes, A.name,
                     injected_count=A.injected_count, origin_map=A.origin_map)
    assert "MaskOnInjectedNode" in {v.kind for v in validate(forged)}


def test_arrays_are_read_only(tiny):
    with pytest.raises(ValueError):
        tiny.features[0, 0] = 5.0
    with pytest.raises(ValueError):
        tiny.incidence.edge_idx[0] = 2
