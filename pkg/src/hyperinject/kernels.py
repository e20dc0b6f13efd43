"""Incidence-structure kernels.

Every kernel works on a hyperedge-major CSR layout: ``ptr`` has length
``M + 1`` and ``idx[ptr[j]:ptr[j+1]]`` are the sorted member node ids of
hyperedge ``j``.

Each kernel has a numba implementation and a pure-numpy one.  The numba
path is used when numba imports cleanly and ``HYPERINJECT_DISABLE_NUMBA``
is unset (or ``0``).  Both paths are importable directly as
``<name>_numba`` / ``<name>_numpy`` for testing and benchmarking.
"""

import os

import numpy as np

_DISABLE = os.environ.get("HYPERINJECT_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _nb
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _DISABLE in ("", "0", "false", "no")


def _njit(fn):
    if HAVE_NUMBA:
        return _nb.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# transpose: hyperedge-major CSR -> node-major CSR

@_njit
def transpose_csr_numba(ptr, idx, n_nodes):
    counts = np.zeros(n_nodes + 1, dtype=np.int64)
    for k in range(idx.size):
        counts[idx[k] + 1] += 1
    for i in range(n_nodes):
        counts[i + 1] += counts[i]
    out_ptr = counts.copy()
    fill = counts[:-1].copy()
    out_idx = np.empty(idx.size, dtype=np.int64)
    n_edges = ptr.size - 1
    for j in range(n_edges):
        for k in range(ptr[j], ptr[j + 1]):
            v = idx[k]
            out_idx[fill[v]] = j
            fill[v] += 1
    return out_ptr, out_idx


def transpose_csr_numpy(ptr, idx, n_nodes):
    n_edges = ptr.size - 1
    edge_of = np.repeat(np.arange(n_edges, dtype=np.int64), np.diff(ptr))
    order = np.argsort(idx, kind="stable")
    out_idx = edge_of[order]
    counts = np.bincount(idx, minlength=n_nodes)
    out_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=out_ptr[1:])
    return out_ptr, out_idx


# ---------------------------------------------------------------------------
# segment sum: Z = H^T X

@_njit
def segment_sum_numba(ptr, idx, values):
    n_seg = ptr.size - 1
    f = values.shape[1]
    out = np.zeros((n_seg, f))
    for j in range(n_seg):
        for k in range(ptr[j], ptr[j + 1]):
            row = values[idx[k]]
            for c in range(f):
                out[j, c] += row[c]
    return out


def segment_sum_numpy(ptr, idx, values):
    n_seg = ptr.size - 1
    out = np.zeros((n_seg, values.shape[1]))
    sizes = np.diff(ptr)
    nonempty = sizes > 0
    if idx.size:
        out[nonempty] = np.add.reduceat(values[idx], ptr[:-1][nonempty], axis=0)
    return out


# ---------------------------------------------------------------------------
# segment product: elementwise product of member rows

@_njit
def segment_prod_numba(ptr, idx, values):
    n_seg = ptr.size - 1
    f = values.shape[1]
    out = np.ones((n_seg, f))
    for j in range(n_seg):
        for k in range(ptr[j], ptr[j + 1]):
            row = values[idx[k]]
            for c in range(f):
                out[j, c] *= row[c]
    return out


def segment_prod_numpy(ptr, idx, values):
    n_seg = ptr.size - 1
    out = np.ones((n_seg, values.shape[1]))
    sizes = np.diff(ptr)
    nonempty = sizes > 0
    if idx.size:
        out[nonempty] = np.multiply.reduceat(values[idx], ptr[:-1][nonempty], axis=0)
    return out


# ---------------------------------------------------------------------------
# propagate: out = diag(left) H diag(mid) H^T diag(right) Y

@_njit
def propagate_numba(ptr, idx, left, mid, right, y):
    n_edges = ptr.size - 1
    n, f = y.shape
    out = np.zeros((n, f))
    z = np.empty(f)
    for j in range(n_edges):
        for c in range(f):
            z[c] = 0.0
        for k in range(ptr[j], ptr[j + 1]):
            i = idx[k]
            r = right[i]
            for c in range(f):
                z[c] += r * y[i, c]
        w = mid[j]
        for c in range(f):
            z[c] *= w
        for k in range(ptr[j], ptr[j + 1]):
            i = idx[k]
            s = left[i]
            for c in range(f):
                out[i, c] += s * z[c]
    return out


def propagate_numpy(ptr, idx, left, mid, right, y):
    z = segment_sum_numpy(ptr, idx, right[:, None] * y) * mid[:, None]
    out = np.zeros(y.shape)
    np.add.at(out, idx, np.repeat(z, np.diff(ptr), axis=0))
    return out * left[:, None]


# ---------------------------------------------------------------------------
# pivotal scan: hyperedges holding a member with hyperdegree <= tau

@_njit
def pivotal_mask_numba(ptr, idx, degrees, tau):
    n_edges = ptr.size - 1
    out = np.zeros(n_edges, dtype=np.bool_)
    for j in range(n_edges):
        for k in range(ptr[j], ptr[j + 1]):
            if degrees[idx[k]] <= tau:
                out[j] = True
                break
    return out


def pivotal_mask_numpy(ptr, idx, degrees, tau):
    n_edges = ptr.size - 1
    out = np.zeros(n_edges, dtype=bool)
    if idx.size:
        hit = (degrees[idx] <= tau).astype(np.int64)
        nonempty = np.diff(ptr) > 0
        out[nonempty] = np.add.reduceat(hit, ptr[:-1][nonempty]) > 0
    return out


_NAMES = ("transpose_csr", "segment_sum", "segment_prod", "propagate", "pivotal_mask")

if USE_NUMBA:
    transpose_csr = transpose_csr_numba
    segment_sum = segment_sum_numba
    segment_prod = segment_prod_numba
    propagate = propagate_numba
    pivotal_mask = pivotal_mask_numba
else:
    transpose_csr = transpose_csr_numpy
    segment_sum = segment_sum_numpy
    segment_prod = segment_prod_numpy
    propagate = propagate_numpy
    pivotal_mask = pivotal_mask_numpy


def backend():
    return "numba" if USE_NUMBA else "numpy"
