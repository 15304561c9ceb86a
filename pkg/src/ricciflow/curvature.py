"""Edge Ricci curvatures: Ollivier, Lin-Lu-Yau, Forman, Menger and Haantjes."""

from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph import DistanceCache, GraphError, WeightedGraph, _simple_paths_idx
from .transport import ProbabilityMeasure, min_cost_transport, transport_cost


class Kind(str, enum.Enum):
    OLLIVIER = "ollivier"
    LLY = "lly"
    FORMAN = "forman"
    MENGER = "menger"
    HAANTJES = "haantjes"


class CurvatureError(GraphError):
    pass


class DegenerateVertexError(CurvatureError):
    """Random-walk measure requested at a vertex without neighbours."""


class CurvatureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CurvatureSpec:
    """Which curvature to compute and with which parameters.

    ``forman_vertex_weight`` is ``"sum"`` (vertex weight = sum of incident
    edge weights) or ``"unit"``. ``menger_triangles`` is ``"graph"``
    (triangles of the graph containing the edge) or ``"metric"`` (every
    third vertex of the component, with graph distances as side lengths).
    """

    kind: Kind = Kind.OLLIVIER
    alpha: float = 0.5
    lly_eps: float = 1e-3
    forman_vertex_weight: str = "sum"
    menger_triangles: str = "graph"
    haantjes_max_hops: int = 3

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.OLLIVIER and not 0.0 <= self.alpha < 1.0:
            raise CurvatureError(
                f"alpha must lie in [0, 1) for Ollivier curvature, got {self.alpha}"
                " (use the Lin-Lu-Yau kind for the alpha -> 1 limit)"
            )
        if not 0.0 < self.lly_eps < 0.1:
            raise CurvatureError(f"lly_eps must lie in (0, 0.1), got {self.lly_eps}")
        if self.forman_vertex_weight not in ("sum", "unit"):
            raise CurvatureError(f"unknown Forman vertex weight mode {self.forman_vertex_weight!r}")
        if self.menger_triangles not in ("graph", "metric"):
            raise CurvatureError(f"unknown Menger triangle mode {self.menger_triangles!r}")
        if self.haantjes_max_hops < 2:
            raise CurvatureError(f"haantjes_max_hops must be >= 2, got {self.haantjes_max_hops}")

    @property
    def gamma(self) -> int:
        """Homogeneity degree under uniform weight scaling."""
        if self.kind in (Kind.OLLIVIER, Kind.LLY):
            return 0
        if self.kind is Kind.FORMAN:
            return 1 if self.forman_vertex_weight == "sum" else 0
        return -1

    def params(self) -> dict:
        k = self.kind
        if k is Kind.OLLIVIER:
            return {"alpha": self.alpha}
        if k is Kind.LLY:
            return {"eps": self.lly_eps}
        if k is Kind.FORMAN:
            return {"vertex_weight": self.forman_vertex_weight}
        if k is Kind.MENGER:
            return {"triangles": self.menger_triangles}
        return {"max_hops": self.haantjes_max_hops}


@dataclass
class CurvatureVector:
    """Per-edge curvature values aligned with ``edges``."""

    spec: CurvatureSpec
    edges: list
    values: np.ndarray
    flagged: list = field(default_factory=list)

    @property
    def gamma(self) -> int:
        return self.spec.gamma

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    def as_dict(self) -> dict:
        return {e: float(v) for e, v in zip(self.edges, self.values)}

    def __getitem__(self, e) -> float:
        for i, f in enumerate(self.edges):
            if f == tuple(e) or f == (e[1], e[0]):
                return float(self.values[i])
        raise KeyError(e)

    def __len__(self) -> int:
        return len(self.values)


# ----------------------------------------------------------------------
# random walks and Ollivier / Lin-Lu-Yau
# ----------------------------------------------------------------------

_NET_TOL = 1e-15


def _walk(g: WeightedGraph, i: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    nbr = g.neighbor_indices(i)
    if len(nbr) == 0:
        raise DegenerateVertexError(f"vertex {g.label(i)!r} has no neighbours")
    w = g.weights[g.incident_edge_ids(i)]
    support = np.concatenate(([i], nbr))
    mass = np.concatenate(([alpha], (1.0 - alpha) * w / w.sum()))
    return support, mass


def lazy_walk_measure(g: WeightedGraph, x, alpha: float) -> ProbabilityMeasure:
    """Keep ``alpha`` at ``x`` and spread ``1 - alpha`` over neighbours by weight."""
    if not 0.0 <= alpha <= 1.0:
        raise CurvatureError(f"alpha must lie in [0, 1], got {alpha}")
    support, mass = _walk(g, g.index(x), alpha)
    keep = mass > 0
    return ProbabilityMeasure(tuple(g.label(int(i)) for i in support[keep]), mass[keep])


def _ollivier_idx(g: WeightedGraph, dc: DistanceCache, i: int, j: int, alpha: float) -> float:
    si, mi = _walk(g, i, alpha)
    sj, mj = _walk(g, j, alpha)
    # W1 under a metric cost depends only on mu_x - mu_y, so mass both
    # walks put on the same vertex stays where it is
    both = np.union1d(si, sj)
    net = np.zeros(len(both))
    np.add.at(net, np.searchsorted(both, si), mi)
    np.subtract.at(net, np.searchsorted(both, sj), mj)
    src, dst = net > _NET_TOL, net < -_NET_TOL
    rho = dc.dist(i, j)
    if not src.any() or not dst.any():
        return 1.0
    C = dc.block(both[src], both[dst])
    cost, _ = transport_cost(net[src], -net[dst], C)
    return 1.0 - cost / rho


@numba.njit(cache=True, nogil=True)
def _walk_curvature_kernel(indptr, nbr, nbr_edge, w, ea, D, alphas, out):
    """Compiled ``_ollivier_idx`` over all edges and several laziness values.

    ``D`` is a dense distance matrix, exact at least up to three hops.
    ``out[e, k]`` is NaN when the transport problem has no finite solution.
    """
    n = indptr.shape[0] - 1
    net = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    src = np.empty(n, dtype=np.int64)
    dst = np.empty(n, dtype=np.int64)
    for e in range(ea.shape[0]):
        x = ea[e, 0]
        y = ea[e, 1]
        for k in range(alphas.shape[0]):
            alpha = alphas[k]
            nt = 0
            for end in range(2):
                v = x if end == 0 else y
                sign = 1.0 if end == 0 else -1.0
                tot = 0.0
                for p in range(indptr[v], indptr[v + 1]):
                    tot += w[nbr_edge[p]]
                net[v] += sign * alpha
                if not seen[v]:
                    seen[v] = True
                    touched[nt] = v
                    nt += 1
                for p in range(indptr[v], indptr[v + 1]):
                    u = nbr[p]
                    net[u] += sign * (1.0 - alpha) * w[nbr_edge[p]] / tot
                    if not seen[u]:
                        seen[u] = True
                        touched[nt] = u
                        nt += 1
            ns = 0
            nd = 0
            for q in range(nt):
                v = touched[q]
                if net[v] > 1e-15:
                    src[ns] = v
                    ns += 1
                elif net[v] < -1e-15:
                    dst[nd] = v
                    nd += 1
            if ns == 0 or nd == 0:
                out[e, k] = 1.0
            else:
                a = np.empty(ns)
                b = np.empty(nd)
                C = np.empty((ns, nd))
                for r in range(ns):
                    a[r] = net[src[r]]
                    for c in range(nd):
                        C[r, c] = D[src[r], dst[c]]
                for c in range(nd):
                    b[c] = -net[dst[c]]
                cost, _ = min_cost_transport(a, b, C, 1e-15, 1e-12)
                out[e, k] = 1.0 - cost / D[x, y] if np.isfinite(cost) else np.nan
            for q in range(nt):
                net[touched[q]] = 0.0
                seen[touched[q]] = False
    return out


def _walk_curvatures(g: WeightedGraph, alphas) -> np.ndarray:
    """Ollivier curvature of every edge at each laziness in ``alphas``."""
    limit = 3.0 * float(g.weights.max()) * (1 + 1e-9)
    D = dijkstra(g.csr(), directed=False, limit=limit)
    out = np.empty((g.number_of_edges(), len(alphas)))
    _walk_curvature_kernel(g._indptr, g._nbr, g._nbr_edge, g.weights, g.edge_array, D,
                           np.asarray(alphas, dtype=np.float64), out)
    bad = np.flatnonzero(np.isnan(out).any(axis=1))
    if len(bad):
        u, v = g.edges[bad[0]]
        raise CurvatureError(f"transport failed on edge ({u!r}, {v!r})")
    return out


def ollivier_curvature(g: WeightedGraph, e, alpha: float = 0.5,
                       distances: DistanceCache | None = None) -> float:
    """``1 - W(mu_x, mu_y) / d(x, y)`` for the alpha-lazy walks at the endpoints."""
    if not 0.0 <= alpha < 1.0:
        raise CurvatureError(f"alpha must lie in [0, 1), got {alpha}")
    g.edge_id(*e)
    dc = distances if distances is not None else DistanceCache(g)
    return _ollivier_idx(g, dc, g.index(e[0]), g.index(e[1]), alpha)


def _lly_idx(g, dc, i, j, eps) -> tuple[float, bool]:
    near = _ollivier_idx(g, dc, i, j, 1.0 - eps) / eps
    far = _ollivier_idx(g, dc, i, j, 1.0 - 10 * eps) / (10 * eps)
    ok = abs(near - far) <= 1e-6 * max(1.0, abs(near))
    return near, ok


def lly_curvature(g: WeightedGraph, e, eps: float = 1e-3,
                  distances: DistanceCache | None = None) -> float:
    """Lin-Lu-Yau curvature as ``kappa^alpha / (1 - alpha)`` at ``alpha = 1 - eps``.

    A second evaluation at ``1 - 10 eps`` guards the limit; disagreement
    beyond 1e-6 relative emits :class:`CurvatureWarning`.
    """
    g.edge_id(*e)
    dc = distances if distances is not None else DistanceCache(g)
    val, ok = _lly_idx(g, dc, g.index(e[0]), g.index(e[1]), eps)
    if not ok:
        warnings.warn(f"Lin-Lu-Yau limit not settled on edge {tuple(e)!r}", CurvatureWarning,
                      stacklevel=2)
    return val


# ----------------------------------------------------------------------
# Forman
# ----------------------------------------------------------------------

def _forman_idx(g: WeightedGraph, eid: int, mode: str) -> float:
    w = g.weights
    we = w[eid]
    total = 0.0
    for v in g.edge_array[eid]:
        inc = g.incident_edge_ids(int(v))
        others = inc[inc != eid]
        wv = w[inc].sum() if mode == "sum" else 1.0
        total += wv * (1.0 - np.sqrt(we / w[others]).sum())
    return float(total)


def forman_curvature(g: WeightedGraph, e, vertex_weight_mode: str = "sum") -> float:
    """Weighted Forman curvature of edge ``e``."""
    if vertex_weight_mode not in ("sum", "unit"):
        raise CurvatureError(f"unknown vertex weight mode {vertex_weight_mode!r}")
    return _forman_idx(g, g.edge_id(*e), vertex_weight_mode)


# ----------------------------------------------------------------------
# Menger
# ----------------------------------------------------------------------

def heron_curvature(a: float, b: float, c: float) -> float:
    """``sqrt(p(p-a)(p-b)(p-c)) / (abc)``; zero for singular triangles.

    Evaluated in Kahan's cancellation-free arrangement. A triangle whose
    triangle-inequality slack is below ``1e-12`` of its longest side counts
    as singular: graph distances along a shortest path add up exactly in
    real arithmetic, and rounding must not turn them into slivers.
    """
    x, y, z = sorted((a, b, c), reverse=True)
    slack = z - (x - y)
    if slack <= 1e-12 * x:
        return 0.0
    r = (x + (y + z)) * slack * (z + (x - y)) * (x + (y - z))
    return 0.25 * math.sqrt(r) / (a * b * c)


def _menger_idx(g: WeightedGraph, dc: DistanceCache, i: int, j: int, mode: str) -> float:
    ri, rj = dc.row(i), dc.row(j)
    a = ri[j]
    if mode == "graph":
        zs = np.intersect1d(g.neighbor_indices(i), g.neighbor_indices(j))
    else:
        mask = np.isfinite(ri)
        mask[i] = mask[j] = False
        zs = np.flatnonzero(mask)
    return float(sum(heron_curvature(a, rj[z], ri[z]) for z in zs))


def menger_curvature(g: WeightedGraph, e, triangles: str = "graph",
                     distances: DistanceCache | None = None) -> float:
    """Sum of Heron-formula triangle curvatures over triangles containing ``e``.

    Side lengths are graph distances, not raw edge weights.
    """
    if triangles not in ("graph", "metric"):
        raise CurvatureError(f"unknown triangle mode {triangles!r}")
    g.edge_id(*e)
    dc = distances if distances is not None else DistanceCache(g)
    return _menger_idx(g, dc, g.index(e[0]), g.index(e[1]), triangles)


# ----------------------------------------------------------------------
# Haantjes
# ----------------------------------------------------------------------

def _haantjes_idx(g: WeightedGraph, dc: DistanceCache, eid: int, max_hops: int) -> float:
    i, j = (int(v) for v in g.edge_array[eid])
    d = dc.dist(i, j)
    total = 0.0
    for _, length in _simple_paths_idx(g, i, j, max_hops, eid):
        excess = max(length - d, 0.0)
        total += math.sqrt(excess / d) / d
    return total


def haantjes_curvature(g: WeightedGraph, e, max_hops: int = 3,
                       distances: DistanceCache | None = None) -> float:
    """Sum over simple paths of 2..max_hops edges, avoiding ``e``, of
    ``sqrt((l - d) / d) / d`` with ``d = d(x, y)``."""
    if max_hops < 2:
        raise CurvatureError(f"max_hops must be >= 2, got {max_hops}")
    eid = g.edge_id(*e)
    dc = distances if distances is not None else DistanceCache(g)
    return _haantjes_idx(g, dc, eid, max_hops)


# ----------------------------------------------------------------------
# all edges
# ----------------------------------------------------------------------

# above this the dense distance matrix of the compiled path gets too big
DENSE_VERTEX_LIMIT = 6000


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RICCIFLOW_THREADS", "1")))
    except ValueError:
        return 1


def curvature_all(g: WeightedGraph, spec: CurvatureSpec | None = None,
                  threads: int | None = None) -> CurvatureVector:
    """Curvature of every edge of ``g``, aligned with ``g.edges``.

    Parameters
    ----------
    g : WeightedGraph
    spec : CurvatureSpec, optional
        Defaults to Ollivier with ``alpha = 0.5``.
    threads : int, optional
        Worker threads; defaults to ``RICCIFLOW_THREADS`` (1 if unset).
        Output order does not depend on it. Ollivier and Lin-Lu-Yau on
        graphs up to ``DENSE_VERTEX_LIMIT`` vertices run in one compiled
        loop and ignore it.
    """
    spec = spec or CurvatureSpec()
    m = g.number_of_edges()
    values = np.zeros(m)
    flagged: list = []
    if m == 0:
        return CurvatureVector(spec, [], values)

    kind = spec.kind
    if kind in (Kind.OLLIVIER, Kind.LLY) and g.number_of_vertices() <= DENSE_VERTEX_LIMIT:
        if kind is Kind.OLLIVIER:
            values = _walk_curvatures(g, [spec.alpha])[:, 0]
        else:
            eps = spec.lly_eps
            out = _walk_curvatures(g, [1.0 - eps, 1.0 - 10 * eps])
            values = out[:, 0] / eps
            far = out[:, 1] / (10 * eps)
            ok = np.abs(values - far) <= 1e-6 * np.maximum(1.0, np.abs(values))
            flagged = list(np.flatnonzero(~ok))
        return _finish(g, spec, values, flagged)

    if kind in (Kind.OLLIVIER, Kind.LLY):
        # every cost queried is d(x', y') <= w(x, x') + w(x, y) + w(y, y')
        dc = DistanceCache(g, limit=3.0 * float(g.weights.max()) * (1 + 1e-9))
    else:
        dc = DistanceCache(g)
    if kind is not Kind.FORMAN:
        used = np.unique(g.edge_array)
        if kind in (Kind.OLLIVIER, Kind.LLY):
            used = np.unique(np.concatenate([used, g._nbr]))
        dc.prefetch(used)
    ea = g.edge_array

    def one(eid: int) -> float:
        i, j = int(ea[eid, 0]), int(ea[eid, 1])
        if kind is Kind.OLLIVIER:
            return _ollivier_idx(g, dc, i, j, spec.alpha)
        if kind is Kind.LLY:
            val, ok = _lly_idx(g, dc, i, j, spec.lly_eps)
            if not ok:
                flagged.append(eid)
            return val
        if kind is Kind.FORMAN:
            return _forman_idx(g, eid, spec.forman_vertex_weight)
        if kind is Kind.MENGER:
            return _menger_idx(g, dc, i, j, spec.menger_triangles)
        return _haantjes_idx(g, dc, eid, spec.haantjes_max_hops)

    def run(chunk):
        for eid in chunk:
            try:
                values[eid] = one(eid)
            except GraphError as exc:
                u, v = g.label(int(ea[eid, 0])), g.label(int(ea[eid, 1]))
                raise CurvatureError(f"{kind.value} curvature failed on edge ({u!r}, {v!r}): {exc}") from exc

    nthreads = threads if threads is not None else _threads()
    if nthreads <= 1 or m < 64:
        run(range(m))
    else:
        chunks = np.array_split(np.arange(m), nthreads)
        with ThreadPoolExecutor(nthreads) as pool:
            list(pool.map(run, chunks))

    return _finish(g, spec, values, flagged)


def _finish(g: WeightedGraph, spec: CurvatureSpec, values: np.ndarray, flagged) -> CurvatureVector:
    edges = g.edges
    flagged_edges = [edges[e] for e in sorted(flagged)]
    if flagged_edges:
        warnings.warn(f"Lin-Lu-Yau limit not settled on {len(flagged_edges)} edge(s)",
                      CurvatureWarning, stacklevel=3)
    return CurvatureVector(spec, edges, values, flagged_edges)
