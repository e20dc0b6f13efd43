"""Node-injection attack on pivotal hyperedges.

Pipeline: find hyperedges that hold a low-hyperdegree node, draw the budget
from them, seed one feature vector per target from the element-wise product
of its members plus Gaussian noise, push the seeds through a shared MLP
trained to point away from the hyperedge's summed feature, then inject one
node per target.  Only the hypergraph itself is consulted; no victim model
is involved anywhere in this module.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .autodiff import AdamState, Graph, adam_step, row_softmax
from .errors import EmptyCandidateSet, HyperedgeIdOutOfRange, InvalidConfig, ZeroNormHyperedgeFeature
from .hypergraph import AttackedHypergraph, Hypergraph, InjectionPlan, inject_nodes
from .models import hyperedge_features_simplified

MAX_ETA = 0.05


class BudgetClipped(UserWarning):
    """Fewer candidate hyperedges than the injection budget."""


class DroppedTargets(UserWarning):
    """Targets removed because their hyperedge feature has zero norm."""


@dataclass(frozen=True)
class AttackConfig:
    eta: float = 0.05
    tau: int = 2
    lam: float = 0.1
    t: float = 0.9
    mu: float = 0.1
    hidden: int = 128
    depth: int = 2
    epochs: int = 300
    lr: float = 0.01
    seed: int = 0
    disable_recognizer: bool = False
    disable_inverter: bool = False
    disable_cosine_loss: bool = False
    match_scale: bool = False

    def __post_init__(self):
        if not 0 < self.eta <= MAX_ETA:
            raise InvalidConfig(f"eta must lie in (0, {MAX_ETA}], got {self.eta}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise InvalidConfig(f"tau must be an integer >= 1, got {self.tau}")
        if not 0 <= self.t <= 1:
            raise InvalidConfig(f"t must lie in [0, 1], got {self.t}")
        if self.lam < 0:
            raise InvalidConfig(f"lambda must be >= 0, got {self.lam}")
        if self.mu < 0:
            raise InvalidConfig(f"mu must be >= 0, got {self.mu}")
        if self.hidden < 1 or self.depth < 0 or self.epochs < 0 or not self.lr > 0:
            raise InvalidConfig("inverter hidden >= 1, depth >= 0, epochs >= 0 and lr > 0 required")

    def as_dict(self):
        return asdict(self)


@dataclass
class AttackReport:
    budget: int
    tau: int
    num_candidates: int
    targets: list
    dropped: list = field(default_factory=list)
    clipped: bool = False
    loss_trace: list = field(default_factory=list)
    mean_cosine: float | None = None
    wall_time: float = 0.0
    method: str = "th-attack"

    def as_dict(self):
        return asdict(self)


def _rngs(seed):
    """Independent streams for selection, seed noise and inverter init."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def attack_budget(eta: float, num_nodes: int) -> int:
    # tolerance keeps e.g. 0.07 * 100 from landing on 6
    return int(math.floor(eta * num_nodes + 1e-9))


# hyperedge recognizer -----------------------------------------------------------

def recognize_pivotal(G: Hypergraph, tau: int) -> np.ndarray:
    """Sorted ids of hyperedges that contain a node of hyperdegree <= ``tau``."""
    if tau < 1:
        raise InvalidConfig(f"tau must be >= 1, got {tau}")
    inc = G.incidence
    mask = kernels.pivotal_mask(inc.edge_ptr, inc.edge_idx, inc.hyperdegrees, int(tau))
    return np.flatnonzero(mask)


def _draw_order(candidates, rng):
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    return cand[rng.permutation(cand.size)]


def select_budget(candidates, eta: float, num_nodes: int, seed=None) -> np.ndarray:
    """Draw ``min(floor(eta*N), |candidates|)`` hyperedges uniformly without replacement."""
    if not eta > 0:
        raise InvalidConfig(f"eta must be > 0, got {eta}")
    cand = np.unique(np.asarray(list(candidates), dtype=np.int64))
    if cand.size == 0:
        raise EmptyCandidateSet("no pivotal hyperedges; increase tau")
    budget = attack_budget(eta, num_nodes)
    if cand.size < budget:
        warnings.warn(f"budget {budget} clipped to {cand.size} candidate hyperedges", BudgetClipped, stacklevel=2)
    order = _draw_order(cand, _as_rng(seed))
    return np.sort(order[:budget])


# feature inverter -----------------------------------------------------------------

def init_features_batch(G: Hypergraph, targets, mu: float, rng) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size and (targets.min() < 0 or targets.max() >= G.num_hyperedges):
        raise HyperedgeIdOutOfRange(f"targets outside [0, {G.num_hyperedges})")
    inc = G.incidence
    sizes = inc.edge_sizes[targets]
    ptr = np.zeros(targets.size + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    idx = np.concatenate([inc.members(j) for j in targets]) if targets.size else np.zeros(0, np.int64)
    prod = kernels.segment_prod(ptr, idx, np.ascontiguousarray(G.features))
    return prod + rng.normal(0.0, mu, size=prod.shape)


def init_features(G: Hypergraph, j: int, mu: float, seed=None) -> np.ndarray:
    """Element-wise product of member features plus ``N(0, mu^2)`` noise."""
    return init_features_batch(G, [j], mu, _as_rng(seed))[0]


@dataclass(frozen=True)
class InverterParams:
    weights: tuple
    biases: tuple

    @property
    def depth(self):
        return len(self.weights)

    def as_dict(self):
        out = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"W{k}"] = w
            out[f"b{k}"] = b
        return out

    @classmethod
    def from_dict(cls, d):
        n = sum(1 for k in d if k.startswith("W"))
        return cls(tuple(d[f"W{k}"] for k in range(n)), tuple(d[f"b{k}"] for k in range(n)))


def init_inverter(num_features, hidden, depth, rng) -> InverterParams:
    dims = [num_features] + [hidden] * depth + [num_features]
    ws, bs = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return InverterParams(tuple(ws), tuple(bs))


def _inverter_tape(params: dict, x_ini, z, lam, t):
    g = Graph()
    h = g.const(x_ini)
    n_layers = sum(1 for k in params if k.startswith("W"))
    for k in range(n_layers):
        w = g.param(params[f"W{k}"], f"W{k}")
        b = g.param(params[f"b{k}"], f"b{k}")
        h = g.leaky_relu(g.add_row(g.matmul(h, w), b))
    x_mal = g.row_softmax(h)
    cos = g.cosine_rows(x_mal, g.const(z))
    loss = g.mean(g.add(cos, g.scale(g.hinge(cos, t), lam)))
    return g, loss, x_mal, cos


def inverter_loss(params: dict, x_ini, z, lam=0.1, t=0.9):
    """Tape of the mean ``cos + lam * max(cos - t, 0)`` loss; returns ``(graph, loss)``."""
    g, loss, _, _ = _inverter_tape(params, x_ini, z, lam, t)
    return g, loss


def cos_dis_loss(x_mal, z, lam=0.1, t=0.9) -> float:
    from .autodiff import cosine_similarity
    c = cosine_similarity(x_mal, z)
    return c + lam * max(c - t, 0.0)


def apply_inverter(params: InverterParams, x_ini) -> np.ndarray:
    h = np.asarray(x_ini, dtype=np.float64)
    for w, b in zip(params.weights, params.biases):
        h = h @ w + b
        h = np.where(h > 0, h, 0.01 * h)
    return row_softmax(h)


@dataclass
class InversionResult:
    features: dict
    trace: list
    params: InverterParams
    cosines: dict
    dropped: list


def invert_features(G: Hypergraph, targets, config: AttackConfig, x_ini=None, epochs=None,
                    rng=None) -> InversionResult:
    """Train one shared inverter MLP over all ``targets``.

    ``x_ini`` rows align with ``targets``; when omitted they are drawn from
    the config seed.  Targets with a zero hyperedge feature are dropped.
    """
    targets = [int(j) for j in targets]
    if not targets:
        raise ValueError("invert_features needs at least one target")
    _, noise_rng, mlp_rng = _rngs(config.seed)
    if rng is not None:
        mlp_rng = rng
    if x_ini is None:
        x_ini = init_features_batch(G, targets, config.mu, noise_rng)
    x_ini = np.asarray(x_ini, dtype=np.float64)
    z_all = hyperedge_features_simplified(G)
    z = z_all[targets]
    keep = np.linalg.norm(z, axis=1) > 0
    dropped = [j for j, k in zip(targets, keep) if not k]
    if dropped:
        warnings.warn(f"dropped {len(dropped)} targets with zero hyperedge feature", DroppedTargets, stacklevel=2)
        targets = [j for j, k in zip(targets, keep) if k]
        x_ini, z = x_ini[keep], z[keep]
        if not targets:
            raise ZeroNormHyperedgeFeature("every target hyperedge has a zero feature vector")

    params = init_inverter(G.num_features, config.hidden, config.depth, mlp_rng).as_dict()
    state = AdamState(lr=config.lr)
    n_epochs = config.epochs if epochs is None else int(epochs)
    trace = []
    for _ in range(n_epochs):
        g, loss, _, _ = _inverter_tape(params, x_ini, z, config.lam, config.t)
        trace.append(float(loss.value))
        params, state = adam_step(params, g.backward(loss), state)
    _, loss, x_mal, cos = _inverter_tape(params, x_ini, z, config.lam, config.t)
    trace.append(float(loss.value))
    return InversionResult(
        features={j: x_mal.value[k] for k, j in enumerate(targets)},
        trace=trace,
        params=InverterParams.from_dict(params),
        cosines={j: float(cos.value[k]) for k, j in enumerate(targets)},
        dropped=dropped,
    )


# full pipeline -----------------------------------------------------------------

def _scale_to_graph(G, feats):
    mass = np.abs(G.features).sum(axis=1).mean()
    return feats * mass


def th_attack(G: Hypergraph, config: AttackConfig | None = None):
    """Run the injection attack; returns ``(attacked_graph, report)``."""
    config = config or AttackConfig()
    start = time.perf_counter()
    sel_rng, noise_rng, mlp_rng = _rngs(config.seed)

    if config.disable_recognizer:
        candidates = np.arange(G.num_hyperedges)
    else:
        candidates = recognize_pivotal(G, config.tau)
    if candidates.size == 0:
        raise EmptyCandidateSet(f"no hyperedge contains a node of hyperdegree <= {config.tau}; increase tau")

    budget = attack_budget(config.eta, G.num_nodes)
    z_norm = np.linalg.norm(hyperedge_features_simplified(G), axis=1)
    targets, dropped = [], []
    for j in _draw_order(candidates, sel_rng):
        if len(targets) == budget:
            break
        (targets if z_norm[j] > 0 else dropped).append(int(j))
    targets.sort()
    clipped = len(targets) < budget
    if clipped:
        warnings.warn(f"budget {budget} clipped to {len(targets)} usable hyperedges", BudgetClipped, stacklevel=2)
    if dropped:
        warnings.warn(f"dropped {len(dropped)} targets with zero hyperedge feature", DroppedTargets, stacklevel=2)

    report = AttackReport(budget=budget, tau=int(config.tau), num_candidates=int(candidates.size),
                          targets=targets, dropped=dropped, clipped=clipped)
    if not targets:
        report.wall_time = time.perf_counter() - start
        return inject_nodes(G, InjectionPlan.empty(G.num_features)), report

    x_ini = init_features_batch(G, targets, config.mu, noise_rng)
    if config.disable_inverter:
        feats = row_softmax(x_ini)
        z = hyperedge_features_simplified(G)[targets]
        cos = np.sum(feats * z, axis=1) / (np.linalg.norm(feats, axis=1) * np.linalg.norm(z, axis=1))
        report.mean_cosine = float(cos.mean())
    else:
        epochs = 0 if config.disable_cosine_loss else config.epochs
        res = invert_features(G, targets, config, x_ini=x_ini, epochs=epochs, rng=mlp_rng)
        feats = np.stack([res.features[j] for j in targets])
        report.loss_trace = res.trace
        report.mean_cosine = float(np.mean(list(res.cosines.values())))
    if config.match_scale:
        feats = _scale_to_graph(G, feats)

    plan = InjectionPlan(tuple(targets), feats, budget=budget, seed=config.seed)
    attacked = inject_nodes(G, plan)
    report.wall_time = time.perf_counter() - start
    return attacked, report


def random_injection_baseline(G: Hypergraph, eta: float, mu: float = 0.1, seed=0):
    """Inject ``floor(eta*N)`` nodes into uniformly drawn hyperedges.

    Features are drawn per coordinate from a normal matched to the empirical
    mean/variance of the clean features, clamped to the clean value range.
    ``mu`` is accepted for signature parity and unused.
    """
    if not eta > 0:
        raise InvalidConfig(f"eta must be > 0, got {eta}")
    rng = np.random.default_rng(seed)
    budget = min(attack_budget(eta, G.num_nodes), G.num_hyperedges)
    targets = np.sort(rng.choice(G.num_hyperedges, size=budget, replace=False))
    X = G.features
    mean, std = X.mean(axis=0), X.std(axis=0)
    feats = rng.normal(mean, std, size=(budget, G.num_features))
    feats = np.clip(feats, X.min(), X.max()) if X.size else feats
    plan = InjectionPlan(tuple(int(j) for j in targets), feats, budget=budget, seed=seed)
    return inject_nodes(G, plan)
