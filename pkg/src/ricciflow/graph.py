"""Immutable weighted graphs and the metric/combinatorial queries curvatures need."""

from __future__ import annotations

import enum
import warnings
from collections.abc import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.sparse.csgraph import dijkstra

Vertex = Hashable
Edge = tuple  # (u, v) vertex labels, canonical order given by WeightedGraph.edges
Partition = list  # list of frozensets of vertex labels


class Reach(enum.Enum):
    UNREACHABLE = "unreachable"

    def __repr__(self) -> str:
        return "UNREACHABLE"


UNREACHABLE = Reach.UNREACHABLE


class GraphError(ValueError):
    """Invalid graph construction or query."""


class WeightedGraph:
    """Undirected simple graph with strictly positive edge weights.

    Vertices are opaque hashable labels mapped to dense indices in insertion
    order. Edges are stored once, as ``(i, j)`` index pairs with ``i < j``.
    Instances are never mutated after construction; every transformation
    returns a new graph.

    Parameters
    ----------
    vertices : iterable of hashable
        Vertex labels. Endpoints of ``edges`` missing here are appended.
    edges : iterable of (u, v) or (u, v, w)
        Edge list; weight defaults to 1.0. Repeated undirected pairs are
        collapsed to the minimum weight with a warning.
    """

    __slots__ = (
        "_labels", "_index", "_edges", "_weights", "_edge_id",
        "_indptr", "_nbr", "_nbr_edge", "_csr",
    )

    def __init__(self, vertices: Iterable[Vertex] = (), edges: Iterable[Sequence] = ()):
        labels: list = []
        index: dict = {}
        for v in vertices:
            if v not in index:
                index[v] = len(labels)
                labels.append(v)

        best: dict[tuple[int, int], float] = {}
        for item in edges:
            if len(item) == 2:
                u, v = item
                w = 1.0
            elif len(item) == 3:
                u, v, w = item
            else:
                raise GraphError(f"edge must be (u, v) or (u, v, w), got {item!r}")
            w = float(w)
            if u == v:
                raise GraphError(f"self-loop at {u!r}")
            if not np.isfinite(w) or w <= 0:
                raise GraphError(f"edge ({u!r}, {v!r}) has non-positive or non-finite weight {w}")
            for x in (u, v):
                if x not in index:
                    index[x] = len(labels)
                    labels.append(x)
            i, j = index[u], index[v]
            key = (i, j) if i < j else (j, i)
            if key in best:
                warnings.warn(
                    f"parallel edge ({u!r}, {v!r}) collapsed to minimum weight", stacklevel=2
                )
                best[key] = min(best[key], w)
            else:
                best[key] = w

        self._labels = tuple(labels)
        self._index = index
        keys = sorted(best)
        self._edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        self._weights = np.array([best[k] for k in keys], dtype=np.float64)
        self._weights.flags.writeable = False
        self._edges.flags.writeable = False
        self._edge_id = {k: e for e, k in enumerate(keys)}
        self._build_adjacency()

    def _build_adjacency(self) -> None:
        n = len(self._labels)
        m = len(self._edges)
        src = np.concatenate([self._edges[:, 0], self._edges[:, 1]])
        dst = np.concatenate([self._edges[:, 1], self._edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        src, dst, eid = src[order], dst[order], eid[order]
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._indptr, src + 1, 1)
        self._indptr = np.cumsum(self._indptr)
        self._nbr = dst.astype(np.int64)
        self._nbr_edge = eid.astype(np.int64)
        w = self._weights[eid] if m else np.zeros(0)
        self._csr = csr_matrix((w, (src, dst)), shape=(n, n))

    @classmethod
    def _from_arrays(cls, labels, index, edges, weights) -> "WeightedGraph":
        g = cls.__new__(cls)
        g._labels = labels
        g._index = index
        g._edges = edges
        g._weights = np.asarray(weights, dtype=np.float64).copy()
        g._weights.flags.writeable = False
        g._edge_id = {(int(i), int(j)): e for e, (i, j) in enumerate(edges)}
        g._build_adjacency()
        return g

    # ------------------------------------------------------------------
    # basic accessors
    # ------------------------------------------------------------------

    @property
    def vertices(self) -> tuple:
        return self._labels

    @property
    def edges(self) -> list[tuple]:
        lab = self._labels
        return [(lab[i], lab[j]) for i, j in self._edges]

    @property
    def weights(self) -> np.ndarray:
        """Read-only weight array aligned with :attr:`edges`."""
        return self._weights

    @property
    def edge_array(self) -> np.ndarray:
        """``(m, 2)`` vertex-index array aligned with :attr:`edges`."""
        return self._edges

    def number_of_vertices(self) -> int:
        return len(self._labels)

    def number_of_edges(self) -> int:
        return len(self._edges)

    def index(self, v: Vertex) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def label(self, i: int) -> Vertex:
        return self._labels[i]

    def __contains__(self, v) -> bool:
        return v in self._index

    def edge_id(self, u: Vertex, v: Vertex) -> int:
        i, j = self.index(u), self.index(v)
        key = (i, j) if i < j else (j, i)
        try:
            return self._edge_id[key]
        except KeyError:
            raise GraphError(f"unknown edge ({u!r}, {v!r})") from None

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        if u not in self._index or v not in self._index:
            return False
        i, j = self._index[u], self._index[v]
        return ((i, j) if i < j else (j, i)) in self._edge_id

    def weight(self, u: Vertex, v: Vertex) -> float:
        return float(self._weights[self.edge_id(u, v)])

    def neighbor_indices(self, i: int) -> np.ndarray:
        return self._nbr[self._indptr[i]:self._indptr[i + 1]]

    def incident_edge_ids(self, i: int) -> np.ndarray:
        return self._nbr_edge[self._indptr[i]:self._indptr[i + 1]]

    def neighbors(self, v: Vertex) -> list:
        return [self._labels[j] for j in self.neighbor_indices(self.index(v))]

    def degree(self, v: Vertex) -> int:
        i = self.index(v)
        return int(self._indptr[i + 1] - self._indptr[i])

    def weighted_degree(self, v: Vertex) -> float:
        return float(self._weights[self.incident_edge_ids(self.index(v))].sum())

    def csr(self) -> csr_matrix:
        return self._csr

    def __repr__(self) -> str:
        return f"WeightedGraph(|V|={len(self._labels)}, |E|={len(self._edges)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self._labels == other._labels
            and np.array_equal(self._edges, other._edges)
            and np.array_equal(self._weights, other._weights)
        )

    __hash__ = None

    # ------------------------------------------------------------------
    # derived graphs
    # ------------------------------------------------------------------

    def with_weights(self, weights: Sequence[float]) -> "WeightedGraph":
        """Same topology, new weights aligned with :attr:`edges`."""
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != self._weights.shape:
            raise GraphError("weight vector does not match edge count")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise GraphError("weights must be finite and positive")
        return WeightedGraph._from_arrays(self._labels, self._index, self._edges, w)

    def edge_subgraph(self, keep: np.ndarray, weights: Sequence[float] | None = None) -> "WeightedGraph":
        """Keep all vertices and the edges selected by boolean mask ``keep``."""
        keep = np.asarray(keep, dtype=bool)
        w = self._weights if weights is None else np.asarray(weights, dtype=np.float64)
        edges = self._edges[keep]
        edges.flags.writeable = False
        return WeightedGraph._from_arrays(self._labels, self._index, edges, w[keep])


def scale_weights(g: WeightedGraph, a: float) -> WeightedGraph:
    """Return ``g`` with every weight multiplied by ``a > 0``."""
    if not a > 0:
        raise GraphError(f"scale factor must be positive, got {a}")
    return g.with_weights(g.weights * a)


# ----------------------------------------------------------------------
# distances
# ----------------------------------------------------------------------

def shortest_path_distance(g: WeightedGraph, u: Vertex, v: Vertex):
    """Weighted shortest-path distance, or ``UNREACHABLE`` across components."""
    i, j = g.index(u), g.index(v)
    if i == j:
        return 0.0
    d = dijkstra(g.csr(), directed=False, indices=i)[j]
    return UNREACHABLE if np.isinf(d) else float(d)


class DistanceCache:
    """Memoized single-source Dijkstra rows for one graph.

    Rows are float arrays where unreachable entries are ``inf``; this is an
    internal representation only, callers of the public API see
    ``UNREACHABLE``. With a finite ``limit`` the search stops there and
    farther entries read ``inf`` as well.
    """

    def __init__(self, g: WeightedGraph, limit: float = np.inf):
        self.g = g
        self.limit = limit
        self._rows: dict[int, np.ndarray] = {}

    def prefetch(self, sources: Iterable[int]) -> None:
        todo = sorted({int(s) for s in sources} - self._rows.keys())
        if not todo:
            return
        block = 256
        for k in range(0, len(todo), block):
            idx = todo[k:k + block]
            rows = dijkstra(self.g.csr(), directed=False, indices=idx, limit=self.limit)
            rows = np.atleast_2d(rows)
            for s, row in zip(idx, rows):
                self._rows[s] = row

    def row(self, i: int) -> np.ndarray:
        r = self._rows.get(i)
        if r is None:
            self.prefetch([i])
            r = self._rows[i]
        return r

    def dist(self, i: int, j: int) -> float:
        return float(self.row(i)[j])

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        get = self._rows.get
        out = [get(int(r)) for r in rows]
        if any(r is None for r in out):
            self.prefetch(rows)
            out = [self._rows[int(r)] for r in rows]
        return np.stack(out)[:, cols]


# ----------------------------------------------------------------------
# combinatorics
# ----------------------------------------------------------------------

def component_labels(g: WeightedGraph) -> np.ndarray:
    """Component id per vertex index (ids ordered by smallest member index)."""
    n = g.number_of_vertices()
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    _, lab = _cc(g.csr(), directed=False)
    # relabel so component ids follow first appearance
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    return remap[lab]


def connected_components(g: WeightedGraph) -> Partition:
    """Connected components as frozensets; isolated vertices are singletons."""
    lab = component_labels(g)
    blocks: dict[int, list] = {}
    for i, c in enumerate(lab):
        blocks.setdefault(int(c), []).append(g.label(i))
    return [frozenset(blocks[c]) for c in sorted(blocks)]


def component_edges(g: WeightedGraph, e: Edge) -> list[tuple]:
    """All edges in the connected component containing edge ``e``."""
    g.edge_id(*e)
    lab = component_labels(g)
    c = lab[g.index(e[0])]
    ea = g.edge_array
    return [edge for edge, (i, _) in zip(g.edges, ea) if lab[i] == c]


def enumerate_triangles(g: WeightedGraph, e: Edge) -> list[frozenset]:
    """Vertex triples ``{x, y, z}`` with ``z`` adjacent to both endpoints of ``e``."""
    x, y = e
    g.edge_id(x, y)
    common = np.intersect1d(g.neighbor_indices(g.index(x)), g.neighbor_indices(g.index(y)))
    return [frozenset((x, y, g.label(int(z)))) for z in common]


def _simple_paths_idx(g: WeightedGraph, s: int, t: int, max_hops: int, excluded: int | None):
    """DFS over index space yielding ``(vertex_indices, length)``."""
    w = g.weights
    indptr, nbr, nbr_edge = g._indptr, g._nbr, g._nbr_edge
    path = [s]
    on_path = {s}
    # stack of (vertex, next neighbor offset, accumulated length)
    stack = [(s, indptr[s], 0.0)]
    while stack:
        v, off, length = stack[-1]
        if off >= indptr[v + 1] or len(path) > max_hops:
            stack.pop()
            on_path.discard(path.pop())
            continue
        stack[-1] = (v, off + 1, length)
        u = int(nbr[off])
        eid = int(nbr_edge[off])
        if eid == excluded or u in on_path:
            continue
        ln = length + w[eid]
        if u == t:
            yield path + [t], ln
            continue
        if len(path) < max_hops:
            path.append(u)
            on_path.add(u)
            stack.append((u, indptr[u], ln))


def enumerate_simple_paths(
    g: WeightedGraph, u: Vertex, v: Vertex, max_hops: int, excluded: Edge | None = None
) -> list[tuple[tuple, float]]:
    """All simple ``u``-``v`` paths with 1..``max_hops`` edges, with their lengths.

    ``excluded`` names an edge the paths may not traverse.
    """
    if max_hops < 1:
        raise GraphError(f"max_hops must be >= 1, got {max_hops}")
    s, t = g.index(u), g.index(v)
    ex = g.edge_id(*excluded) if excluded is not None else None
    if s == t:
        return []
    lab = g.label
    return [
        (tuple(lab(i) for i in p), float(ln))
        for p, ln in _simple_paths_idx(g, s, t, max_hops, ex)
    ]

