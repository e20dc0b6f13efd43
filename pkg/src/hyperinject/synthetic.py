"""Planted-partition hypergraphs with class-block binary features."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidSpec
from .hypergraph import Hypergraph, build_incidence


@dataclass(frozen=True)
class SyntheticSpec:
    num_nodes: int = 400
    num_classes: int = 4
    num_hyperedges: int = 200
    p_in: float = 0.9
    size_min: int = 2
    size_max: int = 6
    num_features: int = 32
    signal: float = 0.5
    flip: float = 0.02
    seed: int = 0
    allow_singletons: bool = False

    def check(self):
        if not 0 <= self.p_in <= 1:
            raise InvalidSpec(f"p_in must lie in [0, 1], got {self.p_in}")
        for name in ("signal", "flip"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidSpec(f"{name} must lie in [0, 1], got {v}")
        if self.num_classes < 1 or self.num_nodes < self.num_classes:
            raise InvalidSpec("need num_nodes >= num_classes >= 1")
        if self.num_hyperedges < 1:
            raise InvalidSpec("num_hyperedges must be >= 1")
        lo = 1 if self.allow_singletons else 2
        if self.size_min < lo or self.size_max < self.size_min:
            raise InvalidSpec(f"size range [{self.size_min}, {self.size_max}] invalid (minimum {lo})")
        if self.size_max > self.num_nodes // self.num_classes:
            raise InvalidSpec("size_max exceeds the smallest class size")
        if self.num_features < self.num_classes:
            raise InvalidSpec("num_features must be >= num_classes")

    def as_dict(self):
        return asdict(self)


def _stratified_masks(labels, num_classes, rng):
    n = labels.size
    masks = {k: np.zeros(n, dtype=bool) for k in ("train", "val", "test")}
    for c in range(num_classes):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        n_train = int(round(0.5 * members.size))
        n_val = int(round(0.25 * members.size))
        masks["train"][members[:n_train]] = True
        masks["val"][members[n_train:n_train + n_val]] = True
        masks["test"][members[n_train + n_val:]] = True
    return masks


def generate_synthetic(spec: SyntheticSpec | None = None) -> Hypergraph:
    """Round-robin classes, mostly single-class hyperedges, noisy class-indicator features."""
    spec = spec or SyntheticSpec()
    spec.check()
    rng = np.random.default_rng(spec.seed)
    n, c = spec.num_nodes, spec.num_classes
    labels = np.arange(n) % c
    by_class = [np.flatnonzero(labels == k) for k in range(c)]

    hyperedges = []
    for _ in range(spec.num_hyperedges):
        size = int(rng.integers(spec.size_min, spec.size_max + 1))
        if rng.random() < spec.p_in:
            pool = by_class[int(rng.integers(c))]
        else:
            pool = np.arange(n)
        hyperedges.append(np.sort(rng.choice(pool, size=size, replace=False)).tolist())

    width = spec.num_features // c
    block = np.zeros((c, spec.num_features), dtype=bool)
    for k in range(c):
        block[k, k * width:(k + 1) * width] = True
    prob = np.where(block[labels], spec.signal, spec.flip)
    features = (rng.random((n, spec.num_features)) < prob).astype(np.float64)

    masks = _stratified_masks(labels, c, rng)
    return Hypergraph(build_incidence(hyperedges, n), features, labels, masks, c, name=f"synthetic-{spec.seed}")
