"""A small reverse-mode differentiation tape over dense float64 arrays.

Only the primitives the victim models and the feature inverter need are
provided.  Nodes are recorded in construction order, which is also a
valid topological order, so ``backward`` simply walks the tape in reverse.

    g = Graph()
    w = g.param(np.ones((3, 2)), "w")
    loss = g.sum(g.matmul(g.const(x), w))
    grads = g.backward(loss)          # {"w": ...}
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMask, NonScalarLoss, ShapeMismatch, ZeroNormVector

LEAKY_SLOPE = 0.01


class Node:
    __slots__ = ("graph", "id", "value", "parents", "vjp", "name")

    def __init__(self, graph, value, parents=(), vjp=None, name=None):
        self.graph = graph
        self.id = len(graph.nodes)
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Node {self.id}{tag} shape={self.value.shape}>"


def _as_array(x):
    a = np.asarray(x, dtype=np.float64)
    return a


class Graph:
    """Computation tape.  Single-use: build, call ``backward`` once or more."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.params: dict[str, Node] = {}
        # pre-activation values of non-smooth ops; used to skip kink coordinates
        self.kinks: list[np.ndarray] = []

    def _add(self, value, parents=(), vjp=None, name=None):
        node = Node(self, value, parents, vjp, name)
        self.nodes.append(node)
        return node

    # leaves ---------------------------------------------------------------

    def param(self, value, name):
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        node = self._add(_as_array(value).copy(), name=name)
        self.params[name] = node
        return node

    def const(self, value):
        return self._add(_as_array(value))

    # linear algebra -------------------------------------------------------

    def matmul(self, a, b):
        if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatch(f"matmul {a.shape} x {b.shape}")
        av, bv = a.value, b.value
        return self._add(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))

    def apply(self, op, x):
        """Left-multiply by a constant linear operator with ``matvec`` / ``rmatvec``."""
        if op.shape[1] != x.shape[0]:
            raise ShapeMismatch(f"operator {op.shape} x {x.shape}")
        return self._add(op.matvec(x.value), (x,), lambda g: (op.rmatvec(g),))

    def add(self, a, b):
        if a.shape != b.shape:
            raise ShapeMismatch(f"add {a.shape} + {b.shape}")
        return self._add(a.value + b.value, (a, b), lambda g: (g, g))

    def add_row(self, x, bias):
        """``x + bias`` with a 1-D bias broadcast over rows."""
        if bias.value.ndim != 1 or x.value.ndim != 2 or x.shape[1] != bias.shape[0]:
            raise ShapeMismatch(f"bias {bias.shape} for {x.shape}")
        return self._add(x.value + bias.value, (x, bias), lambda g: (g, g.sum(axis=0)))

    def scale(self, x, c: float):
        c = float(c)
        return self._add(x.value * c, (x,), lambda g: (g * c,))

    def sum(self, x):
        shape = x.shape
        return self._add(np.asarray(x.value.sum()), (x,), lambda g: (np.full(shape, float(g)),))

    def mean(self, x):
        shape, n = x.shape, x.value.size
        return self._add(np.asarray(x.value.mean()), (x,), lambda g: (np.full(shape, float(g) / n),))

    def sq_norm(self, x):
        v = x.value
        return self._add(np.asarray(np.sum(v * v)), (x,), lambda g: (2.0 * float(g) * v,))

    # nonlinearities -------------------------------------------------------

    def relu(self, x):
        v = x.value
        self.kinks.append(v)
        pos = v > 0
        return self._add(np.where(pos, v, 0.0), (x,), lambda g: (np.where(pos, g, 0.0),))

    def leaky_relu(self, x, slope: float = LEAKY_SLOPE):
        v = x.value
        self.kinks.append(v)
        pos = v > 0
        return self._add(np.where(pos, v, slope * v), (x,), lambda g: (np.where(pos, g, slope * g),))

    def hinge(self, x, t: float):
        """``max(x - t, 0)`` elementwise."""
        v = x.value - t
        self.kinks.append(v)
        pos = v > 0
        return self._add(np.where(pos, v, 0.0), (x,), lambda g: (np.where(pos, g, 0.0),))

    def row_softmax(self, x):
        s = row_softmax(x.value)

        def vjp(g):
            return (s * (g - np.sum(g * s, axis=1, keepdims=True)),)

        return self._add(s, (x,), vjp)

    def cosine_rows(self, u, v):
        """Row-wise cosine similarity, returning a vector of length ``rows``."""
        if u.shape != v.shape or u.value.ndim != 2:
            raise ShapeMismatch(f"cosine {u.shape} vs {v.shape}")
        uv, vv = u.value, v.value
        nu = np.linalg.norm(uv, axis=1)
        nv = np.linalg.norm(vv, axis=1)
        if np.any(nu == 0) or np.any(nv == 0):
            raise ZeroNormVector("cosine similarity of a zero vector")
        dot = np.sum(uv * vv, axis=1)
        c = dot / (nu * nv)

        def vjp(g):
            g = g[:, None]
            du = g * (vv / (nu * nv)[:, None] - (c / nu**2)[:, None] * uv)
            dv = g * (uv / (nu * nv)[:, None] - (c / nv**2)[:, None] * vv)
            return du, dv

        return self._add(c, (u, v), vjp)

    def masked_cross_entropy(self, logits, labels, mask):
        """Mean negative log-likelihood over rows selected by ``mask``."""
        rows = np.flatnonzero(np.asarray(mask, dtype=bool))
        if rows.size == 0:
            raise EmptyMask("cross-entropy over an empty mask")
        y = np.asarray(labels)[rows]
        z = logits.value[rows]
        shift = z - z.max(axis=1, keepdims=True)
        logp = shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))
        loss = -logp[np.arange(rows.size), y].mean()
        shape = logits.shape

        def vjp(g):
            p = np.exp(logp)
            p[np.arange(rows.size), y] -= 1.0
            out = np.zeros(shape)
            out[rows] = p * (float(g) / rows.size)
            return (out,)

        return self._add(np.asarray(loss), (logits,), vjp)

    # reverse pass ---------------------------------------------------------

    def backward(self, loss) -> dict[str, np.ndarray]:
        if loss.value.ndim != 0:
            raise NonScalarLoss(f"loss has shape {loss.shape}")
        grads: dict[int, np.ndarray] = {loss.id: np.asarray(1.0)}
        for node in reversed(self.nodes[: loss.id + 1]):
            g = grads.pop(node.id, None)
            if g is None or node.vjp is None:
                if g is not None and node.name is not None:
                    grads[node.id] = g
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if parent.id in grads:
                    grads[parent.id] = grads[parent.id] + pg
                else:
                    grads[parent.id] = pg
        return {
            name: np.asarray(grads.get(node.id, np.zeros(node.shape)), dtype=np.float64).reshape(node.shape)
            for name, node in self.params.items()
        }


# plain-array helpers --------------------------------------------------------

def matmul(a, b):
    a, b = _as_array(a), _as_array(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul {a.shape} x {b.shape}")
    return a @ b


def leaky_relu(x, slope: float = LEAKY_SLOPE):
    x = _as_array(x)
    return np.where(x > 0, x, slope * x)


def row_softmax(x):
    x = _as_array(x)
    if x.ndim == 1:
        return row_softmax(x[None, :])[0]
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cosine_similarity(u, v) -> float:
    u, v = _as_array(u).ravel(), _as_array(v).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroNormVector("cosine similarity of a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


# optimizer ------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected Adam update.  Returns new parameter arrays and ``state``."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient {g.shape} for parameter {name!r} {p.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        if m.shape != p.shape:
            raise ShapeMismatch(f"moment shape {m.shape} for parameter {name!r} {p.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        out[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out, state


# gradient verification --------------------------------------------------------

def finite_difference_check(forward, params: dict, name: str, step: float = 1e-5,
                            kink_tol: float = 1e-6, coords=None, report=None, floor: float = 1e-6) -> float:
    """Max relative error between ``backward`` and central differences.

    ``forward(params) -> (graph, loss_node)`` must rebuild the tape from the
    given parameter arrays.  A coordinate is skipped when either perturbation
    moves a non-smooth pre-activation across, or within ``kink_tol`` of, its
    kink.  Pass a dict as ``report`` to receive checked/skipped counts.

    The error is ``|a - n| / max(floor, |a| + |n|)``: below ``floor`` the
    central difference is dominated by float64 rounding (about
    ``eps * |loss| / step``), so tiny gradients are compared absolutely.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    graph, loss = forward(params)
    analytic = graph.backward(loss)[name]
    base_kinks = graph.kinks
    base = params[name]
    worst, checked, skipped = 0.0, 0, 0
    for k in (range(base.size) if coords is None else coords):
        vals = []
        near_kink = False
        for sign in (1.0, -1.0):
            p = base.copy()
            p.flat[k] += sign * step
            g2, l2 = forward({**params, name: p})
            vals.append(float(l2.value))
            # only entries this coordinate actually moves can spoil the difference
            near_kink = near_kink or any(
                np.any((a != b) & ((np.abs(a) < kink_tol) | (np.abs(b) < kink_tol) | ((a > 0) != (b > 0))))
                for a, b in zip(base_kinks, g2.kinks)
            )
        if near_kink:
            skipped += 1
            continue
        numeric = (vals[0] - vals[1]) / (2 * step)
        a = float(analytic.flat[k])
        worst = max(worst, abs(a - numeric) / max(floor, abs(a) + abs(numeric)))
        checked += 1
    if report is not None:
        report.update(checked=checked, skipped=skipped)
    return worst
