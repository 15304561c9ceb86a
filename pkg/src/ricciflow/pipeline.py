"""Community detection by Ricci flow with surgery, plus post-hoc checks of
the flow's long-time behaviour on a finished run."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureSpec, Kind, curvature_all
from .flow import (FlowConfig, FlowState, FlowTrace, _edge_components, curvature_of_state,
                   run_flow)
from .graph import WeightedGraph, component_labels


@dataclass
class DetectionResult:
    """Outcome of :func:`detect_communities`.

    ``labeling`` maps every vertex to a community id in ``1..k``; ids follow
    the order in which components first appear among the input vertices.
    """

    labeling: dict
    trace: FlowTrace
    graph: WeightedGraph
    g0: WeightedGraph
    config: FlowConfig
    seconds: float

    @property
    def n_communities(self) -> int:
        return max(self.labeling.values(), default=0)

    def communities(self) -> list[list]:
        out: list[list] = [[] for _ in range(self.n_communities)]
        for v, c in self.labeling.items():
            out[c - 1].append(v)
        return out

    def to_json(self) -> dict:
        return {
            "communities": [[str(v) for v in c] for c in self.communities()],
            "config": self.config.to_dict(),
            "A": self.trace.A,
            "iterations": len(self.trace.records),
            "surgeries": len(self.trace.surgeries),
            "last_surgery": self.trace.last_surgery,
            "seconds": self.seconds,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    def write_labels(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "label"])
            for v in self.g0.vertices:
                w.writerow([v, self.labeling[v]])


def label_components(g: WeightedGraph) -> dict:
    """Vertex -> 1-based id of its connected component."""
    lab = component_labels(g)
    return {v: int(lab[i]) + 1 for i, v in enumerate(g.vertices)}


def detect_communities(g0: WeightedGraph, cfg: FlowConfig | None = None) -> DetectionResult:
    """Run the flow with surgery and read communities off the survivors.

    Parameters
    ----------
    g0 : WeightedGraph
        Input graph with at least one vertex.
    cfg : FlowConfig, optional

    Returns
    -------
    DetectionResult
        Communities are the connected components of the final graph.
    """
    cfg = cfg or FlowConfig()
    if g0.number_of_vertices() == 0:
        raise ValueError("graph has no vertices")
    t0 = time.perf_counter()
    if g0.number_of_edges() == 0:
        trace = FlowTrace(edges=[], A=float("nan"), initial_coeff=np.zeros(0))
        trace.final_state = FlowState.initial(g0)
        final = g0
    else:
        final, trace = run_flow(g0, cfg)
    seconds = time.perf_counter() - t0
    return DetectionResult(label_components(final), trace, final, g0, cfg, seconds)


# ----------------------------------------------------------------------
# theorem checks
# ----------------------------------------------------------------------

@dataclass
class ComponentReport:
    vertices: list
    edges: int
    coeff_spread: float
    drift: float | None  # max - min of r_e over the component, worst k
    curvature_spread: float  # max - min of recomputed curvature
    curvature_std: float
    frozen_gap: float | None  # max |recomputed - frozen|, 0-homogeneous only


@dataclass
class TheoremReport:
    last_surgery: int
    iterations_after: int
    components: list = field(default_factory=list)

    @property
    def max_drift(self) -> float | None:
        d = [c.drift for c in self.components if c.drift is not None]
        return max(d, default=0.0) if len(d) == len(self.components) else None

    @property
    def max_curvature_spread(self) -> float:
        return max((c.curvature_spread for c in self.components), default=0.0)

    @property
    def max_coeff_spread(self) -> float:
        return max((c.coeff_spread for c in self.components), default=0.0)

    @property
    def max_frozen_gap(self) -> float | None:
        g = [c.frozen_gap for c in self.components if c.frozen_gap is not None]
        return max(g) if g else None


def verify_theorems(result: DetectionResult, spec: CurvatureSpec | None = None) -> TheoremReport:
    """Check the post-surgery behaviour of a completed run.

    After the last observed surgery ``l`` the coefficients are frozen, so
    every edge should follow ``log w_e(k) = log w_e(l) - c_e (t_k - t_l)``.
    The residual of that law, taken as max minus min over a component,
    bounds the drift of every pairwise log-ratio. Curvature is then
    recomputed on the final graph and its per-component spread reported.
    For 0-homogeneous curvatures the recomputed values are also compared
    with the frozen coefficients.

    Parameters
    ----------
    result : DetectionResult
    spec : CurvatureSpec, optional
        Defaults to the curvature the run used.
    """
    spec = spec or result.config.curvature
    trace = result.trace
    g0 = result.g0
    state = trace.final_state
    ell = trace.last_surgery
    report = TheoremReport(ell, max(0, len(trace.times) - 1 - ell))
    if g0.number_of_edges() == 0 or not state.alive.any():
        return report

    alive = state.alive
    comp = _edge_components(g0, alive)
    coeff = state.coeff
    recomputed = curvature_of_state(g0, state, spec)

    drift_rows = None
    if trace.log_weights and len(trace.log_weights) == len(trace.times):
        base = trace.log_weights[ell]
        t_ell = trace.times[ell]
        drift_rows = [
            trace.log_weights[k] - base + coeff * (trace.times[k] - t_ell)
            for k in range(ell + 1, len(trace.times))
        ]

    vlab = component_labels(result.graph)
    labels = g0.vertices
    ea = g0.edge_array
    for c in np.unique(comp[alive]):
        ids = np.flatnonzero(comp == c)
        members = vlab == vlab[ea[ids[0], 0]]
        kap = recomputed[ids]
        cf = coeff[ids]
        drift = None
        if drift_rows is not None:
            drift = max((float(np.ptp(r[ids])) for r in drift_rows), default=0.0)
        gap = None
        if spec.gamma == 0:
            gap = float(np.max(np.abs(kap - cf)))
        report.components.append(ComponentReport(
            vertices=[labels[i] for i in np.flatnonzero(members)],
            edges=len(ids),
            coeff_spread=float(np.ptp(cf)),
            drift=drift,
            curvature_spread=float(np.ptp(kap)),
            curvature_std=float(np.std(kap)),
            frozen_gap=gap,
        ))
    return report


# ----------------------------------------------------------------------
# scaling probe
# ----------------------------------------------------------------------

def circulant_graph(n: int, D: int) -> WeightedGraph:
    """D-regular ring lattice: vertex i joined to i +- 1, ..., i +- D/2."""
    if D % 2 or D < 2 or D >= n:
        raise ValueError(f"need an even degree 2 <= D < n, got D={D}, n={n}")
    edges = [(i, (i + s) % n) for i in range(n) for s in range(1, D // 2 + 1)]
    return WeightedGraph(range(n), edges)


@dataclass(frozen=True)
class ProbeRow:
    vertices: int
    edges: int
    degree: int
    seconds: float


def complexity_probe(sizes, spec: CurvatureSpec | None = None, repeats: int = 3) -> list[ProbeRow]:
    """Time one curvature evaluation (the cost of a flow iteration that
    recomputes) on circulant graphs.

    Parameters
    ----------
    sizes : iterable of (n, D)
        Vertex count and even degree; ``(2, 1)`` denotes the single edge.
    spec : CurvatureSpec, optional
    repeats : int
        Best-of timing repeats.
    """
    spec = spec or CurvatureSpec(Kind.OLLIVIER)
    rows = []
    for n, D in sizes:
        g = WeightedGraph([0, 1], [(0, 1)]) if (n, D) == (2, 1) else circulant_graph(n, D)
        curvature_all(g, spec)  # warm caches and jit
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            curvature_all(g, spec)
            best = min(best, time.perf_counter() - t0)
        rows.append(ProbeRow(n, g.number_of_edges(), D, best))
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
