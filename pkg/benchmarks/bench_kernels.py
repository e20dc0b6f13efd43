"""Time the numba kernels against their numpy fallbacks on a random hypergraph.

    python3 benchmarks/bench_kernels.py --nodes 50000 --hyperedges 25000
"""

import argparse
import time

import numpy as np

from hyperinject import kernels
from hyperinject.attack import AttackConfig, th_attack
from hyperinject.hypergraph import build_incidence
from hyperinject.synthetic import SyntheticSpec, generate_synthetic


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile for numba)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=50_000)
    ap.add_argument("--hyperedges", type=int, default=25_000)
    ap.add_argument("--max-size", type=int, default=8)
    ap.add_argument("--features", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sizes = rng.integers(2, args.max_size + 1, size=args.hyperedges)
    edges = [rng.choice(args.nodes, size=s, replace=False) for s in sizes]
    inc = build_incidence(edges, args.nodes)
    X = rng.random((args.nodes, args.features))
    n, m = inc.num_nodes, inc.num_hyperedges
    left, right, mid = rng.random(n), rng.random(n), rng.random(m)

    cases = {
        "transpose_csr": (inc.edge_ptr, inc.edge_idx, n),
        "segment_sum": (inc.edge_ptr, inc.edge_idx, X),
        "segment_prod": (inc.edge_ptr, inc.edge_idx, X),
        "propagate": (inc.edge_ptr, inc.edge_idx, left, mid, right, X),
        "pivotal_mask": (inc.edge_ptr, inc.edge_idx, inc.hyperdegrees, 2),
    }
    print(f"N={n} M={m} nnz={inc.nnz} F={args.features} numba={'yes' if kernels.HAVE_NUMBA else 'no'}")
    print(f"{'kernel':<15}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, case in cases.items():
        fast = best_of(getattr(kernels, f"{name}_numba"), case, args.repeat)
        slow = best_of(getattr(kernels, f"{name}_numpy"), case, args.repeat)
        print(f"{name:<15}{1e3 * fast:>12.2f}{1e3 * slow:>12.2f}{slow / fast:>9.1f}x")

    # end-to-end attack on the default synthetic graph with the active backend
    G = generate_synthetic(SyntheticSpec())
    t = time.perf_counter()
    th_attack(G, AttackConfig())
    print(f"th_attack on default synthetic graph ({kernels.backend()} backend): "
          f"{time.perf_counter() - t:.2f}s")


if __name__ == "__main__":
    main()
