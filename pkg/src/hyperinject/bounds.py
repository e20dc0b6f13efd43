"""Numeric checks for perturbation propagation through hyperedge -> node aggregation.

For a node ``v`` with weighted degree ``d_v`` the aggregated perturbation is
``dx_v = d_v^-1/2 * sum_{e ∋ v} w_e dz_e``.  Three facts are checked:

* the triangle-inequality upper bound ``|dx_v| <= d_v^-1/2 sum w_e |dz_e|``
  (always true);
* the single-path identity ``|dx_v| = w_e d_v^-1/2 |dz_e|`` for nodes in
  exactly one hyperedge; the min-term lower bound for nodes with a few
  hyperedges is reported but can fail under cancellation;
* injection never raises ``max_j 1 / De_jj``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NotDerivedFrom
from .hypergraph import Hypergraph, Incidence, build_incidence, degree_profile

UPPER_TOL = 1e-10
EXACT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PerturbationScenario:
    incidence: Incidence
    delta_z: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        dz = np.ascontiguousarray(self.delta_z, dtype=np.float64)
        if dz.ndim != 2 or dz.shape[0] != self.incidence.num_hyperedges:
            raise ValueError(f"delta_z must be {self.incidence.num_hyperedges} x d, got {dz.shape}")
        object.__setattr__(self, "delta_z", dz)
        prof = degree_profile(self.incidence, self.weights)
        object.__setattr__(self, "weights", prof.hyperedge_weights)
        object.__setattr__(self, "_node_degrees", prof.node_degrees)

    @property
    def node_degrees(self) -> np.ndarray:
        return self._node_degrees

    @property
    def delta_x(self) -> np.ndarray:
        inc = self.incidence
        agg = kernels.segment_sum(inc.node_ptr, inc.node_idx, self.weights[:, None] * self.delta_z)
        d = self.node_degrees
        scale = np.zeros_like(d)
        np.divide(1.0, np.sqrt(d), out=scale, where=d > 0)
        return agg * scale[:, None]

    def to_dict(self):
        return {
            "num_nodes": self.incidence.num_nodes,
            "hyperedges": self.incidence.hyperedges(),
            "delta_z": self.delta_z.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        inc = build_incidence(d["hyperedges"], d["num_nodes"])
        return cls(inc, np.array(d["delta_z"], dtype=np.float64), np.array(d["weights"], dtype=np.float64))


def random_scenario(rng, num_nodes: int = 30, num_hyperedges: int = 20, dim: int = 8,
                    aligned: bool = False, max_size: int | None = None) -> PerturbationScenario:
    """Random hypergraph, positive weights and Gaussian (or nonnegative) perturbations."""
    max_size = max_size or max(2, min(num_nodes, 6))
    edges = []
    for _ in range(num_hyperedges):
        size = int(rng.integers(1, max_size + 1))
        edges.append(rng.choice(num_nodes, size=size, replace=False).tolist())
    inc = build_incidence(edges, num_nodes)
    weights = rng.uniform(0.1, 3.0, size=num_hyperedges)
    dz = rng.normal(size=(num_hyperedges, dim))
    if aligned:
        dz = np.abs(dz)
    return PerturbationScenario(inc, dz, weights)


@dataclass
class UpperBoundReport:
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    nodes: np.ndarray
    skipped: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return bool(np.all(self.slack >= -UPPER_TOL))

    @property
    def min_slack(self) -> float:
        return float(self.slack.min()) if self.slack.size else 0.0

    @property
    def violations(self) -> list:
        return self.nodes[self.slack < -UPPER_TOL].tolist()


def check_upper_bound(s: PerturbationScenario) -> UpperBoundReport:
    inc = s.incidence
    d = s.node_degrees
    nodes = np.flatnonzero(d > 0)
    lhs = np.linalg.norm(s.delta_x, axis=1)
    term = s.weights * np.linalg.norm(s.delta_z, axis=1)
    rhs_sum = kernels.segment_sum(inc.node_ptr, inc.node_idx, term[:, None])[:, 0]
    rhs = np.zeros_like(d)
    np.divide(rhs_sum, np.sqrt(d), out=rhs, where=d > 0)
    return UpperBoundReport(lhs[nodes], rhs[nodes], rhs[nodes] - lhs[nodes], nodes,
                            skipped=np.flatnonzero(d <= 0).tolist())


@dataclass
class SinglePathReport:
    exact_nodes: list
    max_exact_error: float
    checked_nodes: list
    counterexamples: list

    @property
    def exact_holds(self) -> bool:
        return self.max_exact_error <= EXACT_TOL


def check_single_path_amplification(s: PerturbationScenario, tau: int) -> SinglePathReport:
    """Exact identity for hyperdegree-1 nodes; informational lower bound for ``1 < d_h <= tau``."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    inc = s.incidence
    d_h = inc.hyperdegrees
    d = s.node_degrees
    lhs = np.linalg.norm(s.delta_x, axis=1)
    term = s.weights * np.linalg.norm(s.delta_z, axis=1)
    exact, worst = [], 0.0
    checked, flagged = [], []
    for v in np.flatnonzero((d_h >= 1) & (d_h <= tau)):
        edges = inc.edges_of(v)
        if d_h[v] == 1:
            expected = term[edges[0]] / np.sqrt(d[v])
            worst = max(worst, abs(lhs[v] - expected))
            exact.append(int(v))
        else:
            bound = term[edges].min() / np.sqrt(d[v])
            checked.append(int(v))
            if lhs[v] < bound - UPPER_TOL:
                flagged.append({"node": int(v), "norm": float(lhs[v]), "bound": float(bound)})
    return SinglePathReport(exact, float(worst), checked, flagged)


@dataclass(frozen=True)
class ShrinkageResult:
    holds: bool
    rho_clean: float
    rho_attacked: float

    def __bool__(self):
        return self.holds


def _check_derived(G: Hypergraph, A) -> None:
    n = G.num_nodes
    if getattr(A, "num_original", A.num_nodes) != n or A.num_hyperedges != G.num_hyperedges:
        raise NotDerivedFrom("node or hyperedge counts do not match the clean graph")
    origin = getattr(A, "origin_map", {})
    if len(origin) != A.num_nodes - n:
        raise NotDerivedFrom("origin_map does not cover the injected nodes")
    ia, ig = A.incidence, G.incidence
    for j in range(G.num_hyperedges):
        mem = ia.members(j)
        if not np.array_equal(mem[mem < n], ig.members(j)):
            raise NotDerivedFrom(f"hyperedge {j}: original membership changed")
        for v in mem[mem >= n]:
            if origin.get(int(v)) != j:
                raise NotDerivedFrom(f"injected node {int(v)} sits in hyperedge {j} but origin_map disagrees")
    for v, j in origin.items():
        if ia.hyperdegrees[v] != 1 or v not in ia.members(j):
            raise NotDerivedFrom(f"injected node {v} is not exactly in hyperedge {j}")


def check_spectral_shrinkage(G: Hypergraph, A) -> ShrinkageResult:
    """``max_j 1/De_jj`` of the attacked graph does not exceed the clean one."""
    _check_derived(G, A)
    if G.num_hyperedges == 0:
        return ShrinkageResult(True, 0.0, 0.0)
    rho_clean = float(np.max(1.0 / G.incidence.edge_sizes))
    rho_att = float(np.max(1.0 / A.incidence.edge_sizes))
    return ShrinkageResult(rho_att <= rho_clean, rho_clean, rho_att)
