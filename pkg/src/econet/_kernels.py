# Compiled inner loops for the graph metrics. Graphs arrive as CSR arrays
# (indptr, indices) over nodes 0..n-1, undirected (each edge stored twice).
import numpy as np
from numba import njit


@njit(cache=True)
def brandes_accumulate(indptr, indices, sources):
    """Sum of single-source dependencies over ``sources``, in the given order.

    Ordered-pair totals: for an undirected graph halve the result to count
    each unordered pair once.
    """
    n = indptr.shape[0] - 1
    cb = np.zeros(n, dtype=np.float64)
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n, dtype=np.float64)
    delta = np.zeros(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    for si in range(sources.shape[0]):
        s = sources[si]
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v] + 1
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if dist[w] < 0:
                    dist[w] = dv
                    order[tail] = w
                    tail += 1
                if dist[w] == dv:
                    sigma[w] += sigma[v]
        # reverse BFS order; successors of v are neighbours one level further
        for i in range(tail - 1, -1, -1):
            v = order[i]
            dv = dist[v] + 1
            acc = 0.0
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if dist[w] == dv:
                    acc += (1.0 + delta[w]) / sigma[w]
            delta[v] = sigma[v] * acc
            if v != s:
                cb[v] += delta[v]
        for i in range(tail):
            v = order[i]
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
    return cb


@njit(cache=True)
def triangle_counts(indptr, indices):
    """Per-node number of triangles containing the node."""
    n = indptr.shape[0] - 1
    tri = np.zeros(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        for j in range(indptr[u], indptr[u + 1]):
            mark[indices[j]] = u
        closed = 0
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            for k in range(indptr[v], indptr[v + 1]):
                if mark[indices[k]] == u:
                    closed += 1
        # every neighbour edge was seen from both ends
        tri[u] = closed // 2
    return tri
