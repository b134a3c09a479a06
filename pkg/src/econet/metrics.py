"""Whole-network and per-node metrics of an :class:`EcosystemGraph`."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as _cc

from . import _kernels
from .graph import EcosystemGraph

AUTHOR = "author"
PROJECT = "project"
UNION = "union"
COLLABORATION = "collaboration"
EXACT_MAX_NODES = 10_000


@dataclass(frozen=True)
class NetworkMetrics:
    author_count: int
    project_count: int
    collaboration_count: int
    contribution_count: int
    component_sizes: tuple[int, ...]
    largest_component_fraction: float
    collaboration_density: float
    contribution_density: float

    @property
    def largest_component_size(self) -> int:
        return self.component_sizes[0] if self.component_sizes else 0


@dataclass(frozen=True)
class NodeMetrics:
    node_id: str
    node_kind: str
    contribution_degree: int
    collaboration_degree: int | None
    betweenness: float
    clustering: float | None


class IndexedGraph:
    """Integer view of a graph: authors ``0..na-1`` then projects ``na..``.

    Both blocks are in node-id order so results do not depend on set
    iteration order.
    """

    def __init__(self, g: EcosystemGraph):
        self.authors = sorted(g.authors)
        self.projects = sorted(g.projects)
        self.na = len(self.authors)
        self.n = self.na + len(self.projects)
        a_idx = {a: i for i, a in enumerate(self.authors)}
        p_idx = {p: self.na + i for i, p in enumerate(self.projects)}
        self.contrib = np.array(
            [(a_idx[a], p_idx[p]) for a, p in g.contribution_edges], dtype=np.int64
        ).reshape(-1, 2)
        self.collab = np.array(
            [(a_idx[a], a_idx[b]) for a, b in g.collaboration_edges], dtype=np.int64
        ).reshape(-1, 2)

    def node(self, i: int) -> tuple[str, str]:
        if i < self.na:
            return self.authors[i], AUTHOR
        return self.projects[i - self.na], PROJECT

    def csr(self, which: str = UNION, n: int | None = None):
        if which == UNION:
            edges = np.concatenate([self.contrib, self.collab])
            n = self.n if n is None else n
        elif which == COLLABORATION:
            edges = self.collab
            n = self.na if n is None else n
        else:
            raise ValueError(f"unknown edge set {which!r}")
        return _csr(edges, n)


def _csr(edges: np.ndarray, n: int):
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(dst, dtype=np.int64)


def _components(ig: IndexedGraph) -> np.ndarray:
    if ig.n == 0:
        return np.zeros(0, dtype=np.int64)
    edges = np.concatenate([ig.contrib, ig.collab])
    adj = sparse.coo_matrix(
        (np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(ig.n, ig.n)
    )
    _, labels = _cc(adj, directed=False)
    return labels


def connected_components(g: EcosystemGraph) -> list[set[tuple[str, str]]]:
    """Components as sets of ``(node_id, kind)``, largest first."""
    ig = IndexedGraph(g)
    labels = _components(ig)
    groups: dict[int, set] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), set()).add(ig.node(i))
    return sorted(groups.values(), key=lambda c: (-len(c), min(c)))


def network_metrics(g: EcosystemGraph) -> NetworkMetrics:
    ig = IndexedGraph(g)
    na, npj = ig.na, ig.n - ig.na
    n_collab, n_contrib = len(g.collaboration_edges), len(g.contribution_edges)
    labels = _components(ig)
    sizes = tuple(sorted((int(c) for c in np.bincount(labels)), reverse=True)) if ig.n else ()
    return NetworkMetrics(
        author_count=na,
        project_count=npj,
        collaboration_count=n_collab,
        contribution_count=n_contrib,
        component_sizes=sizes,
        largest_component_fraction=sizes[0] / ig.n if ig.n else 0.0,
        collaboration_density=n_collab / (na * (na - 1) // 2) if na >= 2 else 0.0,
        contribution_density=n_contrib / (na * npj) if na and npj else 0.0,
    )


def _degrees(ig: IndexedGraph) -> tuple[np.ndarray, np.ndarray]:
    contrib = np.bincount(ig.contrib.ravel(), minlength=ig.n)
    collab = np.bincount(ig.collab.ravel(), minlength=ig.n)
    return contrib, collab


def degrees(g: EcosystemGraph) -> dict[tuple[str, str], tuple[int, int | None]]:
    """``(node_id, kind) -> (contribution_degree, collaboration_degree)``.

    Projects carry ``None`` for the collaboration degree.
    """
    ig = IndexedGraph(g)
    contrib, collab = _degrees(ig)
    out = {}
    for i in range(ig.n):
        key = ig.node(i)
        out[key] = (int(contrib[i]), int(collab[i]) if i < ig.na else None)
    return out


def default_pivots(n: int) -> int:
    return min(n, max(100, math.ceil(n / 100)))


def _traversal(ig: IndexedGraph, edges: str):
    if edges == UNION:
        return ig.csr(UNION), ig.n
    if edges == COLLABORATION:
        return ig.csr(COLLABORATION), ig.na
    raise ValueError(f"unknown betweenness edge set {edges!r}")


def _betweenness_exact(ig: IndexedGraph, edges: str = UNION, max_nodes: int = EXACT_MAX_NODES) -> np.ndarray:
    (indptr, indices), m = _traversal(ig, edges)
    if m > max_nodes:
        raise ValueError(f"exact betweenness refused for {m} nodes (limit {max_nodes})")
    out = np.zeros(ig.n)
    if m:
        out[:m] = _kernels.brandes_accumulate(indptr, indices, np.arange(m, dtype=np.int64)) / 2.0
    return out


def _betweenness_approx(ig: IndexedGraph, pivots: int | None, seed: int, edges: str = UNION) -> np.ndarray:
    (indptr, indices), m = _traversal(ig, edges)
    out = np.zeros(ig.n)
    if m == 0:
        if pivots not in (None, 0):
            raise ValueError("pivot count out of range for an empty graph")
        return out
    k = default_pivots(m) if pivots is None else pivots
    if not 1 <= k <= m:
        raise ValueError(f"pivot count {k} out of range 1..{m}")
    rng = np.random.default_rng(seed)
    sources = np.sort(rng.choice(m, size=k, replace=False)).astype(np.int64)
    acc = _kernels.brandes_accumulate(indptr, indices, sources)
    out[:m] = acc * (m / k) / 2.0
    return out


def _by_node(ig: IndexedGraph, values) -> dict[tuple[str, str], float]:
    return {ig.node(i): float(values[i]) for i in range(ig.n)}


def betweenness_exact(g: EcosystemGraph, edges: str = UNION, max_nodes: int = EXACT_MAX_NODES):
    """Unnormalized betweenness, unordered pairs counted once, endpoints excluded."""
    ig = IndexedGraph(g)
    return _by_node(ig, _betweenness_exact(ig, edges, max_nodes))


def betweenness_approx(g: EcosystemGraph, pivots: int | None = None, seed: int = 0, edges: str = UNION):
    """Pivot-sampled Brandes estimate, scaled by ``n / k``.

    Pivots are drawn uniformly without replacement from the traversal nodes
    (sorted order) with ``numpy.random.default_rng(seed)``.
    """
    ig = IndexedGraph(g)
    return _by_node(ig, _betweenness_approx(ig, pivots, seed, edges))


def _clustering(ig: IndexedGraph) -> np.ndarray:
    if ig.na == 0:
        return np.zeros(0)
    indptr, indices = ig.csr(COLLABORATION)
    tri = _kernels.triangle_counts(indptr, indices)
    deg = np.diff(indptr)
    out = np.zeros(ig.na)
    ok = deg >= 2
    out[ok] = 2.0 * tri[ok] / (deg[ok] * (deg[ok] - 1))
    return out


def local_clustering(g: EcosystemGraph) -> dict[str, float]:
    """Clustering coefficient of every author over collaboration edges (0 below degree 2)."""
    ig = IndexedGraph(g)
    vals = _clustering(ig)
    return {a: float(vals[i]) for i, a in enumerate(ig.authors)}


def node_metrics(
    g: EcosystemGraph,
    pivots: int | None = None,
    seed: int = 0,
    edges: str = UNION,
    exact: bool = False,
) -> list[NodeMetrics]:
    """All per-node metrics, sorted by ``(node_id, kind)``."""
    ig = IndexedGraph(g)
    contrib, collab = _degrees(ig)
    if exact:
        btw = _betweenness_exact(ig, edges)
    else:
        btw = _betweenness_approx(ig, pivots, seed, edges)
    clus = _clustering(ig)
    rows = []
    for i in range(ig.n):
        nid, kind = ig.node(i)
        is_author = i < ig.na
        rows.append(
            NodeMetrics(
                node_id=nid,
                node_kind=kind,
                contribution_degree=int(contrib[i]),
                collaboration_degree=int(collab[i]) if is_author else None,
                betweenness=float(btw[i]),
                clustering=float(clus[i]) if is_author else None,
            )
        )
    rows.sort(key=lambda r: (r.node_id, r.node_kind))
    return rows
