"""Exact discrete optimal transport between measures on graph vertices.

The transportation problem is solved as a min-cost flow on the bipartite
support graph with successive shortest augmenting paths (Dijkstra with node
potentials). Supports of lazy random-walk measures are one-hop
neighbourhoods, so the dense O((m + n)^2) Dijkstra is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .graph import DistanceCache, GraphError, WeightedGraph

MASS_TOL = 1e-12


class UnreachableMassError(GraphError):
    """Mass would have to cross between connected components."""


@dataclass(frozen=True)
class ProbabilityMeasure:
    """Finitely supported probability measure on graph vertices."""

    support: tuple
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if len(self.support) != len(mass):
            raise ValueError("support and mass lengths differ")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support vertices must be distinct")
        if np.any(mass < 0):
            raise ValueError("masses must be non-negative")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", mass)

    def as_dict(self) -> dict:
        return {v: float(m) for v, m in zip(self.support, self.mass)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbabilityMeasure):
            return NotImplemented
        a, b = self.as_dict(), other.as_dict()
        keys = set(a) | set(b)
        return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= MASS_TOL for k in keys)


@dataclass(frozen=True)
class TransportPlan:
    entries: list  # (source vertex, target vertex, mass)
    cost: float


@numba.njit(cache=True, nogil=True)
def min_cost_transport(a, b, C, tol, slack):
    """Optimal coupling of supplies ``a`` and demands ``b`` under cost ``C``.

    Successive shortest paths from the set of sources with residual supply
    to the nearest sink with residual demand. Reduced costs stay
    non-negative through the potential update ``pi += min(dist, dist_t)``.

    Returns ``(cost, flow)``; ``cost`` is ``inf`` if more than ``slack``
    mass can only travel along infinite-cost arcs or finds no demand left
    (the totals of ``a`` and ``b`` may differ by rounding up to ``slack``).
    """
    m = a.shape[0]
    n = b.shape[0]
    N = m + n
    F = np.zeros((m, n))
    sup = a.copy()
    dem = b.copy()
    pot = np.zeros(N)
    dist = np.empty(N)
    prev = np.empty(N, dtype=np.int64)
    done = np.empty(N, dtype=np.bool_)

    for _ in range(4 * N * N + 16):
        left = 0.0
        for i in range(m):
            if sup[i] > tol:
                left += sup[i]
        if left <= tol:
            break
        for k in range(N):
            dist[k] = np.inf
            prev[k] = -1
            done[k] = False
        for i in range(m):
            if sup[i] > tol:
                dist[i] = 0.0
        target = -1
        for _step in range(N):
            u = -1
            best = np.inf
            for k in range(N):
                if not done[k] and dist[k] < best:
                    best = dist[k]
                    u = k
            if u == -1:
                break
            done[u] = True
            if u >= m and dem[u - m] > tol:
                target = u
                break
            if u < m:
                for j in range(n):
                    v = m + j
                    if done[v] or not np.isfinite(C[u, j]):
                        continue
                    nd = best + C[u, j] + pot[u] - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        prev[v] = u
            else:
                j = u - m
                for i in range(m):
                    if done[i] or F[i, j] <= tol:
                        continue
                    nd = best - C[i, j] + pot[u] - pot[i]
                    if nd < dist[i]:
                        dist[i] = nd
                        prev[i] = u
        if target == -1:
            if left <= slack:
                break
            return np.inf, F
        dt = dist[target]
        for k in range(N):
            pot[k] += dist[k] if dist[k] < dt else dt

        delta = dem[target - m]
        v = target
        while prev[v] != -1:
            u = prev[v]
            if u >= m:
                f = F[v, u - m]
                if f < delta:
                    delta = f
            v = u
        start = v
        if sup[start] < delta:
            delta = sup[start]

        v = target
        while prev[v] != -1:
            u = prev[v]
            if u < m:
                F[u, v - m] += delta
            else:
                F[v, u - m] -= delta
                if F[v, u - m] <= tol:
                    F[v, u - m] = 0.0
            v = u
        sup[start] -= delta
        dem[target - m] -= delta
        if sup[start] <= tol:
            sup[start] = 0.0
        if dem[target - m] <= tol:
            dem[target - m] = 0.0

    cost = 0.0
    for i in range(m):
        for j in range(n):
            if F[i, j] > 0.0:
                cost += F[i, j] * C[i, j]
    return cost, F


def transport_cost(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> tuple[float, np.ndarray]:
    """Array-level entry point; raises when mass cannot be moved."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    cost, F = min_cost_transport(a, b, C, 1e-15, 1e-12)
    if not np.isfinite(cost):
        raise UnreachableMassError("measures are supported on different connected components")
    return float(cost), F


def wasserstein(
    g: WeightedGraph,
    mu1: ProbabilityMeasure,
    mu2: ProbabilityMeasure,
    distances: DistanceCache | None = None,
) -> tuple[float, TransportPlan]:
    """Earth mover's distance between two measures with graph distance as cost.

    Parameters
    ----------
    g : WeightedGraph
    mu1, mu2 : ProbabilityMeasure
        Both supports must lie in one connected component.
    distances : DistanceCache, optional
        Reused Dijkstra rows for ``g``.

    Returns
    -------
    cost : float
    plan : TransportPlan
        Non-zero entries of an optimal coupling.
    """
    dc = distances if distances is not None else DistanceCache(g)
    src = np.array([g.index(v) for v in mu1.support], dtype=np.int64)
    dst = np.array([g.index(v) for v in mu2.support], dtype=np.int64)
    C = dc.block(src, dst)
    cost, F = transport_cost(mu1.mass, mu2.mass, C)
    entries = [
        (mu1.support[i], mu2.support[j], float(F[i, j]))
        for i in range(len(src))
        for j in range(len(dst))
        if F[i, j] > 0
    ]
    return cost, TransportPlan(entries, cost)
