"""Planted-partition benchmark graphs with an LFR-style parameter surface.

Community sizes are uniform on ``[min_C, max_C]``, degrees are Poisson
around ``avg_degree`` clipped to ``[1, max_degree]``, and each vertex sends
a Binomial(k, mu) share of its edges outside its community. Edges are
realized by repeatedly joining a vertex with open stubs to an eligible
partner drawn in proportion to the partner's open stubs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .graph import WeightedGraph


class GenError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n: int = 500
    avg_degree: float = 20.0
    max_degree: int = 50
    min_C: int = 10
    max_C: int = 50
    mu: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise GenError("n must be at least 2")
        if not 0.0 <= self.mu <= 1.0:
            raise GenError(f"mu must lie in [0, 1], got {self.mu}")
        if not 1 <= self.min_C <= self.max_C <= self.n:
            raise GenError(f"need 1 <= min_C <= max_C <= n, got {self.min_C}, {self.max_C}, {self.n}")
        if not 0 < self.avg_degree <= self.max_degree < self.n:
            raise GenError("need 0 < avg_degree <= max_degree < n")
        # some k with k * min_C <= n <= k * max_C
        if self.n // self.min_C * self.max_C < self.n:
            raise GenError(f"cannot split {self.n} vertices into communities of size "
                           f"{self.min_C}..{self.max_C}")

    def to_dict(self) -> dict:
        return asdict(self)


def _community_sizes(cfg: GenConfig, rng: np.random.Generator) -> list[int]:
    sizes: list[int] = []
    total = 0
    while total < cfg.n:
        s = int(rng.integers(cfg.min_C, cfg.max_C + 1))
        sizes.append(s)
        total += s
    sizes[-1] -= total - cfg.n
    short = cfg.min_C - sizes[-1]
    if short > 0:
        # borrow single vertices from communities that can spare them
        for i in range(len(sizes) - 1):
            while short > 0 and sizes[i] > cfg.min_C:
                sizes[i] -= 1
                sizes[-1] += 1
                short -= 1
        if short > 0:
            # dissolve the remnant into communities with room
            rest = sizes.pop()
            for i in range(len(sizes)):
                take = min(rest, cfg.max_C - sizes[i])
                sizes[i] += take
                rest -= take
            if rest:
                raise GenError("community size constraints are infeasible")
    return sizes


def _connect(stubs: np.ndarray, group: np.ndarray, same: bool, adj: list[set],
             rng: np.random.Generator) -> None:
    """Greedily pair open stubs, inside (``same``) or across groups."""
    n = len(stubs)
    for v in rng.permutation(n):
        while stubs[v] > 0:
            ok = stubs > 0
            ok &= (group == group[v]) if same else (group != group[v])
            ok[v] = False
            if adj[v]:
                ok[list(adj[v])] = False
            cand = np.flatnonzero(ok)
            if len(cand) == 0:
                stubs[v] = 0
                break
            p = stubs[cand].astype(np.float64)
            u = int(cand[rng.choice(len(cand), p=p / p.sum())])
            adj[v].add(u)
            adj[u].add(v)
            stubs[v] -= 1
            stubs[u] -= 1


def generate(cfg: GenConfig) -> tuple[WeightedGraph, dict]:
    """One benchmark instance.

    Returns
    -------
    graph : WeightedGraph
        Simple, unit weights, vertices ``0..n-1``.
    truth : dict
        Vertex -> community id in ``1..k``.
    """
    rng = np.random.default_rng(cfg.seed)
    sizes = _community_sizes(cfg, rng)
    group = rng.permutation(np.repeat(np.arange(len(sizes)), sizes))
    size_of = np.asarray(sizes)[group]

    deg = np.clip(rng.poisson(cfg.avg_degree, cfg.n), 1, cfg.max_degree)
    k_out = rng.binomial(deg, cfg.mu)
    k_in = deg - k_out
    # a community of size s offers s - 1 internal partners; shrink the
    # vertex's degree rather than its mixing share
    over = k_in > size_of - 1
    if over.any():
        k_in[over] = size_of[over] - 1
        if cfg.mu < 1:
            k_out[over] = np.rint(k_in[over] * cfg.mu / (1 - cfg.mu)).astype(k_out.dtype)

    adj: list[set] = [set() for _ in range(cfg.n)]
    _connect(k_in.astype(np.int64), group, True, adj, rng)
    _connect(k_out.astype(np.int64), group, False, adj, rng)

    edges = sorted((v, u) for v in range(cfg.n) for u in adj[v] if v < u)
    g = WeightedGraph(range(cfg.n), edges)
    truth = {v: int(group[v]) + 1 for v in range(cfg.n)}
    return g, truth


def external_fraction(g: WeightedGraph, truth: dict) -> float:
    """Share of edges whose endpoints lie in different communities."""
    if g.number_of_edges() == 0:
        return 0.0
    return sum(truth[u] != truth[v] for u, v in g.edges) / g.number_of_edges()


@dataclass(frozen=True)
class Instance:
    mu: float
    repeat: int
    config: GenConfig
    graph: WeightedGraph
    truth: dict


def sweep(cfg_base: GenConfig, mu_values, repeats: int) -> list[Instance]:
    """``repeats`` instances per mixing value; repeat ``r`` uses seed ``seed + r``."""
    if repeats < 1:
        raise GenError("repeats must be >= 1")
    out = []
    for mu in mu_values:
        for r in range(repeats):
            cfg = replace(cfg_base, mu=float(mu), seed=cfg_base.seed + r)
            g, truth = generate(cfg)
            out.append(Instance(float(mu), r, cfg, g, truth))
    return out
