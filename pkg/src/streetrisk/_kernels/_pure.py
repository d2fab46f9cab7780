"""Pure-Python shortest-path kernels (fallback for the compiled extension).

Both implementations must stay operation-for-operation identical so results
are bit-equal: same heap key ordering (distance, node index), same relax
conditions, same accumulation order.  Graphs arrive as CSR adjacency built
by streetrisk.network: ``indptr[u]:indptr[u+1]`` slices ``nbr``/``eidx``/
``weights`` with the neighbors of u in edge-input order.

Equal shortest-path weights are detected with an absolute tolerance on the
accumulated weight; edge weights are assumed to be much larger than the
tolerance (true for meter/second-scale city networks).
"""

from __future__ import annotations

import math
from heapq import heappop, heappush

import numpy as np

COMPILED = False


def shortest_path_distances(indptr, nbr, weights, source: int) -> np.ndarray:
    """Dijkstra distances from ``source``; unreachable nodes get +inf."""
    indptr_l = indptr.tolist()
    nbr_l = nbr.tolist()
    w_l = weights.tolist()
    n = len(indptr_l) - 1
    dist = [math.inf] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for k in range(indptr_l[v], indptr_l[v + 1]):
            u = nbr_l[k]
            nd = d + w_l[k]
            if nd < dist[u]:
                dist[u] = nd
                heappush(heap, (nd, u))
    return np.asarray(dist, dtype=float)


def brandes_source(indptr, nbr, eidx, weights, source: int, demand, edge_score, tol: float = 1e-9):
    """Accumulate one source's demand-weighted shortest-path load onto edges.

    For every target t, the demand ``demand[t]`` is split over all
    minimum-weight source->t paths proportionally to path counts; each edge
    on such a path receives its share, added into ``edge_score`` in place.
    Two path weights are considered equal within ``tol`` (absolute).
    """
    indptr_l = indptr.tolist()
    nbr_l = nbr.tolist()
    eidx_l = eidx.tolist()
    w_l = weights.tolist()
    dem = demand.tolist()
    n = len(indptr_l) - 1

    dist = [math.inf] * n
    sigma = [0.0] * n
    done = [False] * n
    pred_node: list[list[int]] = [[] for _ in range(n)]
    pred_edge: list[list[int]] = [[] for _ in range(n)]
    order: list[int] = []

    dist[source] = 0.0
    sigma[source] = 1.0
    heap = [(0.0, source)]
    while heap:
        d, v = heappop(heap)
        if done[v]:
            continue
        done[v] = True
        order.append(v)
        sv = sigma[v]
        for k in range(indptr_l[v], indptr_l[v + 1]):
            u = nbr_l[k]
            nd = d + w_l[k]
            if nd < dist[u] - tol:
                dist[u] = nd
                sigma[u] = sv
                pred_node[u] = [v]
                pred_edge[u] = [eidx_l[k]]
                heappush(heap, (nd, u))
            elif nd <= dist[u] + tol and not done[u]:
                sigma[u] += sv
                pred_node[u].append(v)
                pred_edge[u].append(eidx_l[k])

    delta = [0.0] * n
    for idx in range(len(order) - 1, -1, -1):
        w = order[idx]
        if w == source:
            continue
        coeff = (dem[w] + delta[w]) / sigma[w]
        pn = pred_node[w]
        pe = pred_edge[w]
        for j in range(len(pn)):
            v = pn[j]
            c = sigma[v] * coeff
            edge_score[pe[j]] += c
            delta[v] += c
    return edge_score
