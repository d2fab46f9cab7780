"""Timing comparison of the pure-Python and compiled betweenness kernels.

Builds a random connected graph, runs the full per-source accumulation with
each kernel, checks the results are bit-identical, and prints timings.

    python benchmarks/bench_kernels.py [--nodes N] [--degree D] [--sources S]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from streetrisk import _kernels
from streetrisk._kernels import _pure
from streetrisk.geo import GeoPoint
from streetrisk.network import Network, NetworkEdge, NetworkNode


def random_network(n_nodes: int, degree: int, seed: int) -> Network:
    rng = np.random.default_rng(seed)
    nodes = [
        NetworkNode(id=f"n{i}", point=GeoPoint(0.0, 0.0), population=1.0, poi_mass=1.0)
        for i in range(n_nodes)
    ]
    edges = []
    seen = set()
    # random spanning tree first so every node is reachable
    order = rng.permutation(n_nodes)
    for i in range(1, n_nodes):
        u, v = int(order[rng.integers(0, i)]), int(order[i])
        seen.add((min(u, v), max(u, v)))
    extra = n_nodes * max(degree - 2, 0) // 2
    while len(seen) < n_nodes - 1 + extra:
        u, v = int(rng.integers(0, n_nodes)), int(rng.integers(0, n_nodes))
        if u != v:
            seen.add((min(u, v), max(u, v)))
    for k, (u, v) in enumerate(sorted(seen)):
        length = float(rng.uniform(10.0, 200.0))
        edges.append(NetworkEdge(id=f"e{k}", u=f"n{u}", v=f"n{v}", length_m=length, speed_mps=None))
    return Network(nodes, edges)


def run(kernel, net: Network, sources, demand_value: float):
    indptr, nbr, eidx, weights = net.csr({e.id: e.length_m for e in net.edges})
    scores = np.zeros(len(net.edges))
    demand = np.full(net.n_nodes, demand_value)
    t0 = time.perf_counter()
    for s in sources:
        d = demand.copy()
        d[s] = 0.0
        kernel.brandes_source(indptr, nbr, eidx, weights, s, d, scores)
    return time.perf_counter() - t0, scores


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--degree", type=int, default=4)
    ap.add_argument("--sources", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    net = random_network(args.nodes, args.degree, args.seed)
    sources = list(range(min(args.sources, net.n_nodes)))
    print(f"graph: {net.n_nodes} nodes, {len(net.edges)} edges, {len(sources)} sources")
    print(f"compiled kernel available: {_kernels.KERNEL_COMPILED}")

    t_pure, s_pure = run(_pure, net, sources, 1.0)
    print(f"pure python: {t_pure:.3f} s")
    if _kernels.KERNEL_COMPILED:
        t_fast, s_fast = run(_kernels, net, sources, 1.0)
        print(f"compiled:    {t_fast:.3f} s  ({t_pure / t_fast:.1f}x faster)")
        if np.array_equal(s_pure, s_fast):
            print("results bit-identical")
        else:
            diff = np.max(np.abs(s_pure - s_fast))
            print(f"RESULTS DIFFER, max abs diff {diff}")
            raise SystemExit(1)
    else:
        print("compiled kernel not built; rebuild the package to compare")


if __name__ == "__main__":
    main()
