"""Victim models: the spectral HGNN and a mean-aggregation transfer model.

Both are two-layer networks ``P relu(P X T0) T1`` that differ only in the
propagation operator ``P``:

* spectral: ``Dv^-1/2 H W De^-1 H^T Dv^-1/2`` with zero rows/columns for
  isolated nodes;
* mean: node -> hyperedge mean followed by hyperedge -> node mean, with
  isolated nodes passed through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .autodiff import AdamState, Graph, adam_step
from .errors import EmptyMask, InvalidConfig, MissingLabels, ShapeMismatch
from .hypergraph import Hypergraph, degree_profile
from .metrics import Metrics, classification_metrics

SPECTRAL = "spectral"
MEAN = "mean"
MODEL_KINDS = (SPECTRAL, MEAN)


class Propagator:
    """``diag(left) H diag(mid) H^T diag(right) + diag(passthrough)`` kept in CSR form."""

    def __init__(self, incidence, left, mid, right, passthrough=None):
        self.incidence = incidence
        self.left = np.ascontiguousarray(left, dtype=np.float64)
        self.mid = np.ascontiguousarray(mid, dtype=np.float64)
        self.right = np.ascontiguousarray(right, dtype=np.float64)
        self.passthrough = None if passthrough is None else np.asarray(passthrough, dtype=np.float64)
        n = incidence.num_nodes
        self.shape = (n, n)

    def _run(self, a, b, y):
        y = np.ascontiguousarray(y, dtype=np.float64)
        squeeze = y.ndim == 1
        if squeeze:
            y = y[:, None]
        if y.shape[0] != self.shape[1]:
            raise ShapeMismatch(f"operator {self.shape} x {y.shape}")
        inc = self.incidence
        out = kernels.propagate(inc.edge_ptr, inc.edge_idx, a, self.mid, b, y)
        if self.passthrough is not None:
            out += self.passthrough[:, None] * y
        return out[:, 0] if squeeze else out

    def matvec(self, y):
        return self._run(self.left, self.right, y)

    def rmatvec(self, g):
        return self._run(self.right, self.left, g)

    def dense(self):
        return self.matvec(np.eye(self.shape[0]))


def spectral_propagator(G, weights=None) -> Propagator:
    prof = degree_profile(G, weights)
    d_v = prof.node_degrees
    inv_sqrt = np.zeros_like(d_v)
    np.divide(1.0, np.sqrt(d_v), out=inv_sqrt, where=d_v > 0)
    return Propagator(G.incidence, inv_sqrt, prof.hyperedge_weights / prof.hyperedge_degrees, inv_sqrt)


def mean_propagator(G) -> Propagator:
    inc = G.incidence
    d_h = inc.hyperdegrees.astype(np.float64)
    left = np.zeros_like(d_h)
    np.divide(1.0, d_h, out=left, where=d_h > 0)
    mid = 1.0 / inc.edge_sizes
    return Propagator(inc, left, mid, np.ones_like(d_h), passthrough=(d_h == 0).astype(np.float64))


def propagator_for(G, kind: str, weights=None) -> Propagator:
    if kind == SPECTRAL:
        return spectral_propagator(G, weights)
    if kind == MEAN:
        return mean_propagator(G)
    raise InvalidConfig(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def normalized_operator(G, weights=None) -> np.ndarray:
    """Dense ``Dv^-1/2 H W De^-1 H^T Dv^-1/2``; isolated nodes get zero rows and columns."""
    return spectral_propagator(G, weights).dense()


def hyperedge_features_simplified(G) -> np.ndarray:
    """``H^T X``: each hyperedge's feature is the plain sum of its members' features."""
    inc = G.incidence
    return kernels.segment_sum(inc.edge_ptr, inc.edge_idx, np.ascontiguousarray(G.features))


@dataclass(frozen=True)
class HgnnParams:
    theta0: np.ndarray
    theta1: np.ndarray
    kind: str = SPECTRAL
    activations: tuple = ("relu", "identity")

    @property
    def hidden(self) -> int:
        return self.theta0.shape[1]

    def as_dict(self):
        return {"theta0": self.theta0, "theta1": self.theta1}


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 64
    epochs: int = 200
    lr: float = 0.01
    weight_decay: float = 5e-4
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise InvalidConfig(f"learning rate must be > 0, got {self.lr}")
        if self.hidden < 1:
            raise InvalidConfig(f"hidden must be >= 1, got {self.hidden}")
        if self.weight_decay < 0:
            raise InvalidConfig("weight_decay must be >= 0")


@dataclass
class TrainTrace:
    loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1


def _logits_node(g: Graph, op, X, t0, t1):
    h = g.relu(g.apply(op, g.matmul(X, t0)))
    return g.apply(op, g.matmul(h, t1))


def forward(G, params: HgnnParams, op: Propagator | None = None) -> np.ndarray:
    if params.theta0.shape[0] != G.num_features or params.theta1.shape[0] != params.theta0.shape[1]:
        raise ShapeMismatch(
            f"parameters {params.theta0.shape}/{params.theta1.shape} for {G.num_features} features")
    if op is None:
        op = propagator_for(G, params.kind)
    h = np.maximum(op.matvec(G.features @ params.theta0), 0.0)
    return op.matvec(h @ params.theta1)


def hgnn_forward(G, params: HgnnParams, weights=None) -> np.ndarray:
    if params.kind != SPECTRAL:
        raise InvalidConfig(f"hgnn_forward needs spectral parameters, got {params.kind!r}")
    return forward(G, params, spectral_propagator(G, weights))


def mean_aggregation_forward(G, params: HgnnParams) -> np.ndarray:
    if params.kind != MEAN:
        raise InvalidConfig(f"mean_aggregation_forward needs mean parameters, got {params.kind!r}")
    return forward(G, params, mean_propagator(G))


def predict(logits) -> np.ndarray:
    # argmax picks the lowest index among ties
    return np.argmax(logits, axis=1)


def init_params(num_features, hidden, num_classes, kind, rng) -> HgnnParams:
    b0 = np.sqrt(1.0 / num_features)
    b1 = np.sqrt(1.0 / hidden)
    t0 = rng.uniform(-b0, b0, size=(num_features, hidden))
    t1 = rng.uniform(-b1, b1, size=(hidden, num_classes))
    return HgnnParams(t0, t1, kind)


def training_loss(G, op, params: dict, labels, mask, weight_decay):
    """Tape for masked cross-entropy plus ``weight_decay * (|T0|^2 + |T1|^2)``."""
    g = Graph()
    t0 = g.param(params["theta0"], "theta0")
    t1 = g.param(params["theta1"], "theta1")
    logits = _logits_node(g, op, g.const(G.features), t0, t1)
    loss = g.masked_cross_entropy(logits, labels, mask)
    if weight_decay:
        reg = g.add(g.sq_norm(t0), g.sq_norm(t1))
        loss = g.add(loss, g.scale(reg, weight_decay))
    return g, loss, logits


def _check_supervision(G, mask, split):
    if not mask.any():
        raise EmptyMask(f"{split} mask is empty")
    if G.labels is None or np.any(G.labels[mask] < 0):
        raise MissingLabels(f"{split} nodes without labels")


def train(G: Hypergraph, kind: str = SPECTRAL, config: TrainConfig | None = None):
    """Full-batch Adam training; keeps the parameters with the best validation accuracy."""
    config = config or TrainConfig()
    train_mask = G.mask("train")
    _check_supervision(G, train_mask, "train")
    val_mask = G.mask("val")
    has_val = bool(val_mask.any()) and not np.any(G.labels[val_mask] < 0)
    rng = np.random.default_rng(config.seed)
    op = propagator_for(G, kind)
    init = init_params(G.num_features, config.hidden, G.num_classes, kind, rng)
    params = init.as_dict()
    state = AdamState(lr=config.lr)
    trace = TrainTrace()
    labels = G.labels
    best_acc, best = -1.0, None

    for epoch in range(int(config.epochs)):
        g, loss, logits = training_loss(G, op, params, labels, train_mask, config.weight_decay)
        pred = predict(logits.value)
        trace.loss.append(float(loss.value))
        trace.train_accuracy.append(float(np.mean(pred[train_mask] == labels[train_mask])))
        if has_val:
            acc = float(np.mean(pred[val_mask] == labels[val_mask]))
            trace.val_accuracy.append(acc)
            if acc > best_acc:
                best_acc, best, trace.best_epoch = acc, params, epoch
        grads = g.backward(loss)
        params, state = adam_step(params, grads, state)

    if best is None:
        best, trace.best_epoch = params, int(config.epochs)
    return HgnnParams(best["theta0"], best["theta1"], kind), trace


def evaluate(params: HgnnParams, G: Hypergraph, mask) -> Metrics:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("evaluation mask is empty")
    if np.any(mask[G.num_original:]):
        raise ValueError("evaluation mask includes injected nodes")
    if G.labels is None or np.any(G.labels[mask] < 0):
        raise MissingLabels("evaluation nodes without labels")
    pred = predict(forward(G, params))
    return classification_metrics(G.labels[mask], pred[mask], G.num_classes)
