"""Partition comparison (NMI) and partition quality (modularity)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, WeightedGraph


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable:
    """Overlap counts ``m[i, j] = |U_i & W_j|`` between two labelings."""

    m: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @property
    def row_sums(self) -> np.ndarray:
        return self.m.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.m.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.m.sum())


@dataclass(frozen=True)
class MetricConfig:
    beta: float = 1.0


def contingency(u: dict, w: dict) -> ContingencyTable:
    """Contingency table of two vertex -> community labelings."""
    if set(u) != set(w):
        raise MetricError("labelings cover different vertex sets")
    rows = tuple(sorted(set(u.values()), key=repr))
    cols = tuple(sorted(set(w.values()), key=repr))
    ri = {r: i for i, r in enumerate(rows)}
    ci = {c: j for j, c in enumerate(cols)}
    m = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for v, a in u.items():
        m[ri[a], ci[w[v]]] += 1
    return ContingencyTable(m, rows, cols)


def _xlogx_ratio(x: np.ndarray, denom) -> np.ndarray:
    out = np.zeros(x.shape, dtype=np.float64)
    nz = x > 0
    out[nz] = x[nz] * np.log(x[nz] / np.broadcast_to(denom, x.shape)[nz])
    return out


def nmi(t: ContingencyTable) -> float | None:
    """Normalized mutual information of a contingency table.

    ``None`` when both partitions are a single block (the normalizer
    vanishes). Natural logarithms; ``0 log 0 = 0``.
    """
    n = t.n
    if n < 1:
        raise MetricError("empty contingency table")
    m = t.m.astype(np.float64)
    c = m.sum(axis=1)
    d = m.sum(axis=0)
    num = -2.0 * _xlogx_ratio(m, np.outer(c, d) / n).sum()
    den = _xlogx_ratio(c, n).sum() + _xlogx_ratio(d, n).sum()
    if den == 0.0:
        return None
    return float(num / den)


def nmi_labels(u: dict, w: dict) -> float | None:
    return nmi(contingency(u, w))


def modularity(g: WeightedGraph, labels: dict, cfg: MetricConfig | None = None) -> float:
    """Newman modularity from unweighted edge and degree counts.

    ``Q = sum_k (C_k / |E| - beta * (D_k / 2|E|)^2)`` with ``C_k`` the
    intra-community edge count and ``D_k`` the total degree of community k.
    """
    beta = (cfg or MetricConfig()).beta
    m = g.number_of_edges()
    if m == 0:
        raise GraphError("modularity is undefined on an edgeless graph")
    missing = [v for v in g.vertices if v not in labels]
    if missing:
        raise MetricError(f"{len(missing)} vertices lack a community label, e.g. {missing[0]!r}")
    comm = {}
    lab = np.array([comm.setdefault(labels[v], len(comm)) for v in g.vertices])
    ea = g.edge_array
    cu, cv = lab[ea[:, 0]], lab[ea[:, 1]]
    k = len(comm)
    intra = np.bincount(cu[cu == cv], minlength=k).astype(np.float64)
    deg = np.bincount(np.concatenate([cu, cv]), minlength=k).astype(np.float64)
    return float(np.sum(intra / m - beta * (deg / (2.0 * m)) ** 2))
