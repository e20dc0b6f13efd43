"""Hypergraph containers, degree structures and node injection."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import (
    DuplicateTargetHyperedge,
    EmptyHyperedge,
    FeatureDimensionMismatch,
    HyperedgeIdOutOfRange,
    NodeIdOutOfRange,
    NonPositiveWeight,
    WeightDimensionMismatch,
)

SPLITS = ("train", "val", "test")


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Incidence:
    """Binary incidence in hyperedge-major CSR form.

    ``edge_idx[edge_ptr[j]:edge_ptr[j+1]]`` holds the sorted, unique member
    ids of hyperedge ``j``.  The node-major index is derived lazily.
    """

    num_nodes: int
    edge_ptr: np.ndarray
    edge_idx: np.ndarray

    @property
    def num_hyperedges(self) -> int:
        return self.edge_ptr.size - 1

    @property
    def nnz(self) -> int:
        return int(self.edge_idx.size)

    @cached_property
    def _node_index(self):
        ptr, idx = kernels.transpose_csr(self.edge_ptr, self.edge_idx, self.num_nodes)
        return _frozen(ptr), _frozen(idx)

    @property
    def node_ptr(self) -> np.ndarray:
        return self._node_index[0]

    @property
    def node_idx(self) -> np.ndarray:
        return self._node_index[1]

    @cached_property
    def hyperdegrees(self) -> np.ndarray:
        """Number of hyperedges containing each node."""
        return _frozen(np.bincount(self.edge_idx, minlength=self.num_nodes))

    @cached_property
    def edge_sizes(self) -> np.ndarray:
        return _frozen(np.diff(self.edge_ptr))

    def members(self, j: int) -> np.ndarray:
        return self.edge_idx[self.edge_ptr[j]:self.edge_ptr[j + 1]]

    def edges_of(self, v: int) -> np.ndarray:
        return self.node_idx[self.node_ptr[v]:self.node_ptr[v + 1]]

    def hyperedges(self) -> list[list[int]]:
        return [self.members(j).tolist() for j in range(self.num_hyperedges)]

    def dense(self) -> np.ndarray:
        H = np.zeros((self.num_nodes, self.num_hyperedges))
        cols = np.repeat(np.arange(self.num_hyperedges), self.edge_sizes)
        H[self.edge_idx, cols] = 1.0
        return H

    def __eq__(self, other):
        if not isinstance(other, Incidence):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self.edge_ptr, other.edge_ptr)
                and np.array_equal(self.edge_idx, other.edge_idx))

    __hash__ = None


def build_incidence(hyperedges: Sequence[Sequence[int]], num_nodes: int) -> Incidence:
    """Build the incidence structure; duplicate ids inside a hyperedge collapse."""
    ptr = [0]
    idx = []
    for j, edge in enumerate(hyperedges):
        members = sorted(set(int(v) for v in edge))
        if not members:
            raise EmptyHyperedge(f"hyperedge {j} is empty")
        if members[0] < 0 or members[-1] >= num_nodes:
            bad = members[0] if members[0] < 0 else members[-1]
            raise NodeIdOutOfRange(f"hyperedge {j} references node {bad}, num_nodes={num_nodes}")
        idx.extend(members)
        ptr.append(len(idx))
    return Incidence(int(num_nodes), _frozen(ptr, np.int64), _frozen(idx, np.int64))


def _csr_incidence(num_nodes, edge_ptr, edge_idx) -> Incidence:
    return Incidence(int(num_nodes), _frozen(edge_ptr, np.int64), _frozen(edge_idx, np.int64))


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Incidence plus node data.

    ``labels`` uses ``-1`` for unlabeled nodes; ``masks`` maps each of
    ``train``/``val``/``test`` to a boolean vector over nodes.
    """

    incidence: Incidence
    features: np.ndarray
    labels: np.ndarray | None = None
    masks: dict | None = None
    num_classes: int | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(np.asarray(self.features, dtype=np.float64)))
        if self.features.ndim != 2:
            raise FeatureDimensionMismatch("features must be a 2-D matrix")
        if self.labels is not None:
            object.__setattr__(self, "labels", _frozen(self.labels, np.int64))
            if self.num_classes is None:
                known = self.labels[self.labels >= 0]
                object.__setattr__(self, "num_classes", int(known.max()) + 1 if known.size else 0)
        if self.masks is not None:
            # missing splits become all-False so a split file round-trips exactly
            n = self.incidence.num_nodes
            object.__setattr__(self, "masks", {
                k: _frozen(self.masks[k], bool) if k in self.masks else _frozen(np.zeros(n, bool))
                for k in SPLITS})

    @classmethod
    def from_hyperedges(cls, hyperedges, num_nodes, features=None, **kw) -> "Hypergraph":
        inc = build_incidence(hyperedges, num_nodes)
        if features is None:
            features = np.zeros((num_nodes, 0))
        return cls(inc, features, **kw)

    @property
    def num_nodes(self) -> int:
        return self.incidence.num_nodes

    @property
    def num_hyperedges(self) -> int:
        return self.incidence.num_hyperedges

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_original(self) -> int:
        return self.num_nodes

    def mask(self, split: str) -> np.ndarray:
        if self.masks is None or split not in self.masks:
            return np.zeros(self.num_nodes, dtype=bool)
        return self.masks[split]

    def hyperdegree(self, v: int) -> int:
        return node_hyperdegree(self, v)

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        if type(self) is not type(other):
            return False
        if self.incidence != other.incidence or not np.array_equal(self.features, other.features):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        if self.num_classes != other.num_classes:
            return False
        mine, theirs = self.masks or {}, other.masks or {}
        if mine.keys() != theirs.keys():
            return False
        return all(np.array_equal(mine[k], theirs[k]) for k in mine)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AttackedHypergraph(Hypergraph):
    """Hypergraph with ``injected_count`` malicious nodes appended at the end.

    ``origin_map`` maps each injected node id to the hyperedge it joined.
    """

    injected_count: int = 0
    origin_map: dict = field(default_factory=dict)

    @property
    def num_original(self) -> int:
        return self.num_nodes - self.injected_count

    @property
    def injected_node_ids(self) -> np.ndarray:
        return np.arange(self.num_original, self.num_nodes)

    def __eq__(self, other):
        if not isinstance(other, AttackedHypergraph):
            return NotImplemented
        return (super().__eq__(other)
                and self.injected_count == other.injected_count
                and self.origin_map == other.origin_map)

    __hash__ = None


@dataclass(frozen=True)
class DegreeProfile:
    node_degrees: np.ndarray
    hyperedge_degrees: np.ndarray
    hyperedge_weights: np.ndarray


def node_hyperdegree(G, v: int) -> int:
    inc = G.incidence if isinstance(G, Hypergraph) else G
    if not 0 <= v < inc.num_nodes:
        raise NodeIdOutOfRange(f"node {v} not in [0, {inc.num_nodes})")
    return int(inc.hyperdegrees[v])


def _check_weights(weights, m):
    if weights is None:
        return np.ones(m)
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 2:
        if w.shape != (m, m):
            raise WeightDimensionMismatch(f"weight matrix shape {w.shape}, expected ({m}, {m})")
        w = np.diag(w).copy()
    if w.shape != (m,):
        raise WeightDimensionMismatch(f"{w.size} weights for {m} hyperedges")
    if np.any(w <= 0):
        raise NonPositiveWeight("hyperedge weights must be > 0")
    return w


def degree_profile(G, weights=None) -> DegreeProfile:
    """Node degrees ``sum_j w_j H_ij`` and hyperedge degrees ``sum_i H_ij``.

    ``weights`` may be a length-M vector or an M x M diagonal matrix; the
    default is all ones.
    """
    inc = G.incidence if isinstance(G, Hypergraph) else G
    w = _check_weights(weights, inc.num_hyperedges)
    d_e = inc.edge_sizes.astype(np.float64)
    d_v = np.bincount(inc.edge_idx, weights=np.repeat(w, inc.edge_sizes), minlength=inc.num_nodes)
    return DegreeProfile(_frozen(d_v), _frozen(d_e), _frozen(w))


@dataclass(frozen=True)
class InjectionPlan:
    """Target hyperedges and the malicious feature vector for each."""

    hyperedges: tuple
    features: np.ndarray
    budget: int = 0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hyperedges", tuple(int(j) for j in self.hyperedges))
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.size == 0:
            feats = feats.reshape(len(self.hyperedges), -1) if self.hyperedges else feats.reshape(0, 0)
        object.__setattr__(self, "features", _frozen(feats))

    def __len__(self):
        return len(self.hyperedges)

    @classmethod
    def empty(cls, num_features=0):
        return cls((), np.zeros((0, num_features)))


def inject_nodes(G: Hypergraph, plan: InjectionPlan) -> AttackedHypergraph:
    """Append one malicious node per plan entry to its target hyperedge."""
    m = len(plan)
    n, n_edges, f = G.num_nodes, G.num_hyperedges, G.num_features
    targets = np.asarray(plan.hyperedges, dtype=np.int64)
    if m:
        if targets.min() < 0 or targets.max() >= n_edges:
            raise HyperedgeIdOutOfRange(f"plan targets outside [0, {n_edges})")
        if np.unique(targets).size != m:
            raise DuplicateTargetHyperedge("a hyperedge is targeted more than once")
        if plan.features.shape != (m, f):
            raise FeatureDimensionMismatch(f"malicious features {plan.features.shape}, expected ({m}, {f})")

    inc = G.incidence
    extra = np.zeros(n_edges, dtype=np.int64)
    new_id = np.full(n_edges, -1, dtype=np.int64)
    extra[targets] = 1
    new_id[targets] = n + np.arange(m)
    sizes = inc.edge_sizes + extra
    ptr = np.zeros(n_edges + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    idx = np.empty(ptr[-1], dtype=np.int64)
    for j in range(n_edges):
        old = inc.members(j)
        idx[ptr[j]:ptr[j] + old.size] = old
        if extra[j]:
            idx[ptr[j + 1] - 1] = new_id[j]  # new id exceeds all originals -> stays sorted

    features = np.vstack([G.features, plan.features.reshape(m, f)]) if m else G.features
    labels = None
    if G.labels is not None:
        labels = np.concatenate([G.labels, np.full(m, -1, dtype=np.int64)])
    masks = None
    if G.masks is not None:
        masks = {k: np.concatenate([v, np.zeros(m, dtype=bool)]) for k, v in G.masks.items()}
    origin = {int(n + k): int(j) for k, j in enumerate(targets)}
    prior = getattr(G, "origin_map", {})
    return AttackedHypergraph(
        _csr_incidence(n + m, ptr, idx), features, labels, masks, G.num_classes, G.name,
        injected_count=getattr(G, "injected_count", 0) + m,
        origin_map={**prior, **origin},
    )


class Violation(NamedTuple):
    kind: str
    index: int | None = None
    detail: str = ""

    def __str__(self):
        loc = "" if self.index is None else f"({self.index})"
        return f"{self.kind}{loc}" + (f": {self.detail}" if self.detail else "")


def validate(G: Hypergraph) -> list[Violation]:
    """Return one violation per broken invariant; empty when ``G`` is well-formed."""
    out = []
    inc = G.incidence
    ptr, idx = np.asarray(inc.edge_ptr), np.asarray(inc.edge_idx)
    if ptr.size == 0 or ptr[0] != 0 or np.any(np.diff(ptr) < 0) or ptr[-1] != idx.size:
        return [Violation("MalformedIndex", None, "edge_ptr is not a valid CSR pointer")]
    for j in np.flatnonzero(np.diff(ptr) == 0):
        out.append(Violation("EmptyHyperedge", int(j)))
    if idx.size and (idx.min() < 0 or idx.max() >= inc.num_nodes):
        bad = np.flatnonzero((idx < 0) | (idx >= inc.num_nodes))
        for k in bad:
            j = int(np.searchsorted(ptr, k, side="right") - 1)
            out.append(Violation("NodeIdOutOfRange", j, f"node {int(idx[k])}"))
    for j in range(inc.num_hyperedges):
        seg = idx[ptr[j]:ptr[j + 1]]
        if seg.size > 1 and np.any(np.diff(seg) <= 0):
            out.append(Violation("NonBinaryIncidence", j, "members not strictly increasing"))
    if G.features.shape[0] != inc.num_nodes:
        out.append(Violation("FeatureRowMismatch", None, f"{G.features.shape[0]} rows for {inc.num_nodes} nodes"))
    elif not np.all(np.isfinite(G.features)):
        out.append(Violation("NonFiniteFeature", int(np.flatnonzero(~np.isfinite(G.features).all(axis=1))[0])))
    if G.labels is not None:
        if G.labels.shape != (inc.num_nodes,):
            out.append(Violation("LabelCountMismatch", None, f"{G.labels.size} labels for {inc.num_nodes} nodes"))
        else:
            c = G.num_classes
            for i in np.flatnonzero((G.labels < -1) | (G.labels >= c)):
                out.append(Violation("LabelOutOfRange", int(i), f"label {int(G.labels[i])} with C={c}"))
    if G.masks is not None:
        n_orig = G.num_original
        for k, v in G.masks.items():
            if v.shape != (inc.num_nodes,):
                out.append(Violation("MaskSizeMismatch", None, k))
        if not out or all(v.kind != "MaskSizeMismatch" for v in out):
            keys = list(G.masks)
            for a in range(len(keys)):
                for b in range(a + 1, len(keys)):
                    both = np.flatnonzero(G.masks[keys[a]] & G.masks[keys[b]])
                    if both.size:
                        out.append(Violation("OverlappingMasks", int(both[0]), f"{keys[a]}/{keys[b]}"))
            for k, v in G.masks.items():
                if np.any(v[n_orig:]):
                    out.append(Violation("MaskOnInjectedNode", int(n_orig + np.flatnonzero(v[n_orig:])[0]), k))
    return out
