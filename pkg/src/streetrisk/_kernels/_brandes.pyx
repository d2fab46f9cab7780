# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled shortest-path kernels.

Operation-for-operation identical to streetrisk._kernels._pure: the heap
pops entries in (distance, node) lexicographic order, relaxations use the
same tolerance logic, and the accumulation walks predecessors in the same
order, so results are bit-equal to the pure-Python kernel (no fast-math).
"""

from libc.stdint cimport int64_t

import numpy as np

COMPILED = True


cdef struct Heap:
    double* d
    int64_t* v
    Py_ssize_t size


cdef inline bint _less(Heap* h, Py_ssize_t i, Py_ssize_t j) nogil:
    if h.d[i] != h.d[j]:
        return h.d[i] < h.d[j]
    return h.v[i] < h.v[j]


cdef inline void _swap(Heap* h, Py_ssize_t i, Py_ssize_t j) nogil:
    cdef double td = h.d[i]
    cdef int64_t tv = h.v[i]
    h.d[i] = h.d[j]
    h.v[i] = h.v[j]
    h.d[j] = td
    h.v[j] = tv


cdef inline void _push(Heap* h, double d, int64_t v) nogil:
    cdef Py_ssize_t i = h.size
    cdef Py_ssize_t parent
    h.d[i] = d
    h.v[i] = v
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(h, i, parent):
            _swap(h, i, parent)
            i = parent
        else:
            break


cdef inline void _pop(Heap* h, double* d_out, int64_t* v_out) nogil:
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t left, right, smallest
    d_out[0] = h.d[0]
    v_out[0] = h.v[0]
    h.size -= 1
    if h.size == 0:
        return
    h.d[0] = h.d[h.size]
    h.v[0] = h.v[h.size]
    while True:
        left = 2 * i + 1
        right = left + 1
        smallest = i
        if left < h.size and _less(h, left, smallest):
            smallest = left
        if right < h.size and _less(h, right, smallest):
            smallest = right
        if smallest == i:
            break
        _swap(h, i, smallest)
        i = smallest


def shortest_path_distances(indptr, nbr, weights, source):
    """Dijkstra distances from ``source``; unreachable nodes get +inf."""
    cdef int64_t[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] nbr_v = np.ascontiguousarray(nbr, dtype=np.int64)
    cdef double[::1] w_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = indptr_v.shape[0] - 1
    cdef Py_ssize_t m = nbr_v.shape[0]

    dist_arr = np.full(n, np.inf, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    done_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] done = done_arr
    heap_d_arr = np.empty(m + n + 1, dtype=np.float64)
    heap_v_arr = np.empty(m + n + 1, dtype=np.int64)
    cdef double[::1] heap_d = heap_d_arr
    cdef int64_t[::1] heap_v = heap_v_arr

    cdef Heap h
    h.d = &heap_d[0]
    h.v = &heap_v[0]
    h.size = 0

    cdef int64_t s = source
    cdef double d, nd
    cdef int64_t v, u
    cdef Py_ssize_t k

    dist[s] = 0.0
    _push(&h, 0.0, s)
    while h.size > 0:
        _pop(&h, &d, &v)
        if done[v]:
            continue
        done[v] = 1
        for k in range(indptr_v[v], indptr_v[v + 1]):
            u = nbr_v[k]
            nd = d + w_v[k]
            if nd < dist[u]:
                dist[u] = nd
                _push(&h, nd, u)
    return dist_arr


def brandes_source(indptr, nbr, eidx, weights, source, demand, edge_score, tol=1e-9):
    """Accumulate one source's demand-weighted shortest-path load onto edges.

    Same contract as the pure-Python kernel: demand[t] split over all
    minimum-weight source->t paths (equality within ``tol`` absolute),
    added into ``edge_score`` in place.
    """
    cdef int64_t[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] nbr_v = np.ascontiguousarray(nbr, dtype=np.int64)
    cdef int64_t[::1] eidx_v = np.ascontiguousarray(eidx, dtype=np.int64)
    cdef double[::1] w_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    cdef double[::1] score = edge_score
    cdef Py_ssize_t n = indptr_v.shape[0] - 1
    cdef Py_ssize_t m = nbr_v.shape[0]
    cdef double tolerance = tol

    dist_arr = np.full(n, np.inf, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    sigma_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] sigma = sigma_arr
    done_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] done = done_arr
    # Predecessor entries for node u live at indptr[u] .. indptr[u]+pred_cnt[u]:
    # each incident edge contributes at most once, so deg(u) slots suffice.
    pred_node_arr = np.empty(m, dtype=np.int64)
    pred_edge_arr = np.empty(m, dtype=np.int64)
    pred_cnt_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] pred_node = pred_node_arr
    cdef int64_t[::1] pred_edge = pred_edge_arr
    cdef int64_t[::1] pred_cnt = pred_cnt_arr
    order_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] order = order_arr
    delta_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] delta = delta_arr
    heap_d_arr = np.empty(m + n + 1, dtype=np.float64)
    heap_v_arr = np.empty(m + n + 1, dtype=np.int64)
    cdef double[::1] heap_d = heap_d_arr
    cdef int64_t[::1] heap_v = heap_v_arr

    cdef Heap h
    h.d = &heap_d[0]
    h.v = &heap_v[0]
    h.size = 0

    cdef int64_t s = source
    cdef double d, nd, sv, coeff, c
    cdef int64_t v, u, w
    cdef Py_ssize_t k, n_order = 0, idx, j, base

    dist[s] = 0.0
    sigma[s] = 1.0
    _push(&h, 0.0, s)
    while h.size > 0:
        _pop(&h, &d, &v)
        if done[v]:
            continue
        done[v] = 1
        order[n_order] = v
        n_order += 1
        sv = sigma[v]
        for k in range(indptr_v[v], indptr_v[v + 1]):
            u = nbr_v[k]
            nd = d + w_v[k]
            if nd < dist[u] - tolerance:
                dist[u] = nd
                sigma[u] = sv
                pred_node[indptr_v[u]] = v
                pred_edge[indptr_v[u]] = eidx_v[k]
                pred_cnt[u] = 1
                _push(&h, nd, u)
            elif nd <= dist[u] + tolerance and not done[u]:
                sigma[u] += sv
                base = indptr_v[u] + pred_cnt[u]
                pred_node[base] = v
                pred_edge[base] = eidx_v[k]
                pred_cnt[u] += 1

    for idx in range(n_order - 1, -1, -1):
        w = order[idx]
        if w == s:
            continue
        coeff = (dem[w] + delta[w]) / sigma[w]
        base = indptr_v[w]
        for j in range(pred_cnt[w]):
            v = pred_node[base + j]
            c = sigma[v] * coeff
            score[pred_edge[base + j]] += c
            delta[v] += c
    return edge_score
