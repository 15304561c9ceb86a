"""Piecewise-linear Ricci flow with A-surgeries.

Weights are stored as logarithms: a step multiplies each weight by
``exp(-c * dt)``, i.e. subtracts ``c * dt`` from its log, and surgery only
ever compares weight ratios. Forman-driven weights grow by orders of
magnitude within a handful of steps, so raw storage would overflow.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .curvature import CurvatureSpec, curvature_all
from .graph import GraphError, WeightedGraph


class FlowError(RuntimeError):
    """Flow aborted; ``trace`` holds every iteration completed so far."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of a discrete flow run.

    ``schedule`` (strictly increasing positive times) overrides the uniform
    schedule ``t_k = k * dt``; its length then fixes the iteration count.
    ``A="auto"`` picks :func:`choose_A_default`. ``patience`` is the number of
    surgery-free iterations required before an early stop; ``None`` means
    ``max(50, max_iterations // 5)``.
    """

    curvature: CurvatureSpec = field(default_factory=CurvatureSpec)
    dt: float = 0.05
    schedule: tuple | None = None
    A: float | str = "auto"
    max_iterations: int = 100
    early_stop: bool = True
    patience: int | None = None
    spread_tol: float = 1e-9
    record_weights: bool = True

    def __post_init__(self):
        if self.schedule is not None:
            ts = tuple(float(t) for t in self.schedule)
            if not ts or ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise GraphError("schedule must be non-empty, positive and strictly increasing")
            object.__setattr__(self, "schedule", ts)
        elif not self.dt > 0:
            raise GraphError(f"dt must be positive, got {self.dt}")
        if self.max_iterations < 1:
            raise GraphError("max_iterations must be >= 1")
        if self.A != "auto" and not float(self.A) > 1:
            raise GraphError(f"A must exceed 1, got {self.A}")

    def times(self) -> np.ndarray:
        """``t_0 = 0, t_1, ..., t_N``."""
        if self.schedule is not None:
            return np.concatenate(([0.0], self.schedule))
        return self.dt * np.arange(self.max_iterations + 1)

    @property
    def iterations(self) -> int:
        return len(self.schedule) if self.schedule is not None else self.max_iterations

    def stop_patience(self) -> int:
        if self.patience is not None:
            return self.patience
        return max(50, self.iterations // 5)

    def to_dict(self) -> dict:
        return {
            "curvature": self.curvature.kind.value,
            "curvature_params": self.curvature.params(),
            "dt": self.dt,
            "schedule": list(self.schedule) if self.schedule is not None else None,
            "A": self.A,
            "max_iterations": self.max_iterations,
            "early_stop": self.early_stop,
            "patience": self.stop_patience(),
            "spread_tol": self.spread_tol,
        }


@dataclass(frozen=True)
class FlowState:
    """Per-edge state indexed by the edges of the initial graph."""

    log_weight: np.ndarray
    coeff: np.ndarray
    alive: np.ndarray
    k: int = 0
    t: float = 0.0

    @classmethod
    def initial(cls, g0: WeightedGraph) -> "FlowState":
        m = g0.number_of_edges()
        return cls(np.log(g0.weights), np.zeros(m), np.ones(m, dtype=bool))

    def weights(self) -> np.ndarray:
        return np.exp(self.log_weight)


@dataclass(frozen=True)
class SurgeryReport:
    k: int
    removed: list  # edge labels
    removed_ids: np.ndarray
    ratios: np.ndarray


@dataclass
class IterationRecord:
    k: int
    t: float
    alive: int
    removed: int
    components: int
    coeff_spread: float
    recomputed: bool


@dataclass
class FlowTrace:
    """Everything a run produced, iteration by iteration."""

    edges: list
    A: float
    initial_coeff: np.ndarray
    records: list = field(default_factory=list)
    surgeries: list = field(default_factory=list)
    log_weights: list = field(default_factory=list)  # per iteration, k = 0..K
    coeff_history: dict = field(default_factory=dict)  # k -> coefficients in force after k
    alive_history: dict = field(default_factory=dict)  # k -> alive mask after surgery at k
    times: list = field(default_factory=list)
    final_state: FlowState | None = None

    @property
    def last_surgery(self) -> int:
        return self.surgeries[-1].k if self.surgeries else 0

    def coeff_at(self, k: int) -> np.ndarray:
        """Coefficients used for the step from ``t_k`` to ``t_{k+1}``."""
        best = max(j for j in self.coeff_history if j <= k)
        return self.coeff_history[best]

    def alive_at(self, k: int) -> np.ndarray:
        best = max(j for j in self.alive_history if j <= k)
        return self.alive_history[best]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "t", "alive_edges", "removed", "components", "coeff_spread", "recomputed"])
            for r in self.records:
                w.writerow([r.k, repr(r.t), r.alive, r.removed, r.components,
                            repr(r.coeff_spread), int(r.recomputed)])

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "edges": [list(map(str, e)) for e in self.edges],
            "times": self.times,
            "initial_coeff": self.initial_coeff.tolist(),
            "surgeries": [
                {"k": s.k, "removed": [list(map(str, e)) for e in s.removed],
                 "ratios": s.ratios.tolist()}
                for s in self.surgeries
            ],
            "log_weights": [lw.tolist() for lw in self.log_weights],
            "coefficients": {str(k): c.tolist() for k, c in sorted(self.coeff_history.items())},
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


# ----------------------------------------------------------------------
# closed-form pieces
# ----------------------------------------------------------------------

def continuous_weight_at(w_prev: float, kappa: float, t: float, t_prev: float) -> float:
    """Exact solution of ``w' = -kappa w`` on ``[t_prev, t]``."""
    if t < t_prev:
        raise GraphError(f"t={t} precedes t_prev={t_prev}")
    return w_prev * math.exp(-kappa * (t - t_prev))


def sample_continuous_flow(g0: WeightedGraph, spec: CurvatureSpec, times) -> list[np.ndarray]:
    """Continuous flow without surgery, sampled at the partition points.

    Curvature is re-evaluated on the current graph at every ``t_{i-1}`` and
    held fixed over ``[t_{i-1}, t_i)``. Returns weights at ``t_0, ..., t_N``
    aligned with ``g0.edges``; entries may under- or overflow for large
    steps.
    """
    ts = [0.0] + [float(t) for t in times]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise GraphError("times must be positive and strictly increasing")
    state = FlowState.initial(g0)
    out = [state.weights()]
    for t_prev, t in zip(ts, ts[1:]):
        try:
            kappa = curvature_of_state(g0, state, spec)
        except GraphError as exc:
            raise FlowError(f"curvature undefined at t={t_prev}: {exc}") from exc
        state = replace(state, log_weight=state.log_weight - kappa * (t - t_prev), t=t)
        with np.errstate(over="ignore", under="ignore"):
            out.append(state.weights())
    return out


# ----------------------------------------------------------------------
# discrete flow operations
# ----------------------------------------------------------------------

def discrete_step(state: FlowState, dt: float) -> FlowState:
    """Advance every alive edge by ``log w -= c * dt``."""
    if not dt > 0:
        raise GraphError(f"dt must be positive, got {dt}")
    lw = state.log_weight.copy()
    a = state.alive
    lw[a] -= state.coeff[a] * dt
    return replace(state, log_weight=lw, k=state.k + 1, t=state.t + dt)


def alive_graph(g0: WeightedGraph, state: FlowState) -> WeightedGraph:
    """The current graph: surviving edges with weights ``exp(log_weight)``."""
    return g0.edge_subgraph(state.alive, np.exp(state.log_weight))


def _vertex_components(g0: WeightedGraph, alive: np.ndarray) -> tuple[int, np.ndarray]:
    n = g0.number_of_vertices()
    e = g0.edge_array[alive]
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    return connected_components(adj, directed=False)


def _edge_components(g0: WeightedGraph, alive: np.ndarray) -> np.ndarray:
    """Component id of every edge of ``g0`` in the alive graph (-1 if dead)."""
    _, lab = _vertex_components(g0, alive)
    comp = np.full(g0.number_of_edges(), -1, dtype=np.int64)
    comp[alive] = lab[g0.edge_array[alive, 0]]
    return comp


def _group_min(values: np.ndarray, groups: np.ndarray) -> np.ndarray:
    ng = groups.max() + 1 if len(groups) else 0
    out = np.full(ng, np.inf)
    np.minimum.at(out, groups, values)
    return out


def apply_surgery(g0: WeightedGraph, state: FlowState, A: float) -> tuple[FlowState, SurgeryReport]:
    """Remove every alive edge whose weight is at least ``A`` times the
    smallest weight in its connected component.

    All candidates are found from the pre-surgery components and removed
    together.
    """
    if not A > 1:
        raise GraphError(f"A must exceed 1, got {A}")
    alive = state.alive
    ids = np.flatnonzero(alive)
    if len(ids) == 0:
        return state, SurgeryReport(state.k, [], ids, np.zeros(0))
    comp = _edge_components(g0, alive)[ids]
    lw = state.log_weight[ids]
    gap = lw - _group_min(lw, comp)[comp]
    hit = gap >= math.log(A)
    removed_ids = ids[hit]
    new_alive = alive.copy()
    new_alive[removed_ids] = False
    edges = g0.edges
    report = SurgeryReport(state.k, [edges[e] for e in removed_ids], removed_ids, np.exp(gap[hit]))
    return replace(state, alive=new_alive), report


def curvature_of_state(g0: WeightedGraph, state: FlowState, spec: CurvatureSpec) -> np.ndarray:
    """Curvature of every alive edge (0 for dead edges), indexed like ``g0``.

    Each component is evaluated on weights divided by the component's
    largest weight and the result is multiplied back by ``scale**gamma``.
    Curvatures only read their own component and are ``gamma``-homogeneous,
    so this is exact while keeping weights away from overflow.
    """
    alive = state.alive
    out = np.zeros(g0.number_of_edges())
    if not alive.any():
        return out
    comp = _edge_components(g0, alive)
    ids = np.flatnonzero(alive)
    lw = state.log_weight[ids]
    c = comp[ids]
    shift = np.full(c.max() + 1, -np.inf)
    np.maximum.at(shift, c, lw)
    if not np.all(np.isfinite(lw)):
        raise FlowError("edge weights left the floating-point range")
    scaled = np.zeros(g0.number_of_edges())
    with np.errstate(under="ignore"):
        scaled[ids] = np.exp(lw - shift[c])
    if np.any(scaled[ids] == 0.0):
        raise FlowError("weight ratio within a component exceeds the floating-point range")
    g = g0.edge_subgraph(alive, np.where(alive, scaled, 1.0))
    vals = curvature_all(g, spec).values
    if spec.gamma:
        with np.errstate(over="ignore"):
            vals = vals * np.exp(spec.gamma * shift[c])
    out[ids] = vals
    return out


def update_coefficients(g0: WeightedGraph, state: FlowState, surgery_occurred: bool,
                        spec: CurvatureSpec) -> FlowState:
    """Keep the frozen coefficients, or recompute them after a surgery."""
    if not surgery_occurred:
        return state
    return replace(state, coeff=curvature_of_state(g0, state, spec))


def choose_A_default(g0: WeightedGraph) -> float:
    """Twice the largest weight-to-component-minimum ratio of the initial graph."""
    if g0.number_of_edges() == 0:
        raise GraphError("cannot choose A for an edgeless graph")
    alive = np.ones(g0.number_of_edges(), dtype=bool)
    comp = _edge_components(g0, alive)
    w = g0.weights
    return float(2.0 * np.max(w / _group_min(w, comp)[comp]))


def coefficient_spread(state: FlowState, comp: np.ndarray | None = None,
                       g0: WeightedGraph | None = None) -> np.ndarray:
    """Per-component ``max - min`` of the coefficients of alive edges."""
    if comp is None:
        comp = _edge_components(g0, state.alive)
    ids = np.flatnonzero(state.alive)
    if len(ids) == 0:
        return np.zeros(0)
    c = comp[ids]
    vals = state.coeff[ids]
    ng = c.max() + 1
    hi = np.full(ng, -np.inf)
    lo = np.full(ng, np.inf)
    np.maximum.at(hi, c, vals)
    np.minimum.at(lo, c, vals)
    present = np.isfinite(hi)
    return (hi - lo)[present]


def run_flow(g0: WeightedGraph, cfg: FlowConfig | None = None) -> tuple[WeightedGraph, FlowTrace]:
    """Run the discrete flow with surgeries.

    Each iteration advances the weights with the frozen coefficients,
    performs an A-surgery on the new weights using the components of the
    graph before removal, and recomputes coefficients only when an edge was
    removed. Stops after the schedule is exhausted or, with ``early_stop``,
    once no surgery happened for ``patience`` iterations and every
    component's coefficient spread is below ``spread_tol``.
    """
    cfg = cfg or FlowConfig()
    spec = cfg.curvature
    A = choose_A_default(g0) if cfg.A == "auto" else float(cfg.A)
    times = cfg.times()

    state = FlowState.initial(g0)
    state = replace(state, coeff=curvature_of_state(g0, state, spec))
    trace = FlowTrace(edges=g0.edges, A=A, initial_coeff=state.coeff.copy())
    trace.coeff_history[0] = state.coeff.copy()
    trace.alive_history[0] = state.alive.copy()
    trace.times.append(0.0)
    if cfg.record_weights:
        trace.log_weights.append(state.log_weight.copy())

    quiet = 0
    patience = cfg.stop_patience()
    try:
        for k in range(1, len(times)):
            state = discrete_step(state, times[k] - times[k - 1])
            state = replace(state, t=float(times[k]))
            state, report = apply_surgery(g0, state, A)
            cut = len(report.removed_ids) > 0
            if cut:
                trace.surgeries.append(report)
                trace.alive_history[k] = state.alive.copy()
                state = update_coefficients(g0, state, True, spec)
                if not np.all(np.isfinite(state.coeff[state.alive])):
                    raise FlowError(f"non-finite curvature after surgery at iteration {k}", trace)
                trace.coeff_history[k] = state.coeff.copy()
                quiet = 0
            else:
                quiet += 1
            comp = _edge_components(g0, state.alive)
            spreads = coefficient_spread(state, comp)
            ncomp, _ = _vertex_components(g0, state.alive)
            trace.records.append(IterationRecord(
                k=k, t=float(times[k]), alive=int(state.alive.sum()),
                removed=len(report.removed_ids), components=ncomp,
                coeff_spread=float(spreads.max()) if len(spreads) else 0.0,
                recomputed=cut,
            ))
            trace.times.append(float(times[k]))
            if cfg.record_weights:
                trace.log_weights.append(state.log_weight.copy())
            if (cfg.early_stop and quiet >= patience
                    and (len(spreads) == 0 or spreads.max() < cfg.spread_tol)):
                break
    except FlowError:
        trace.final_state = state
        raise
    except Exception as exc:
        trace.final_state = state
        raise FlowError(f"flow failed at iteration {state.k}: {exc}", trace) from exc

    trace.final_state = state
    return alive_graph(g0, state), trace
