import math

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, connected_graphs, cycle_graph, fig1_graph, two_triangles
from ricciflow.curvature import CurvatureSpec, Kind, curvature_all
from ricciflow.flow import (FlowConfig, FlowError, FlowState, apply_surgery, choose_A_default,
                            continuous_weight_at, curvature_of_state, discrete_step, run_flow,
                            sample_continuous_flow, update_coefficients)
from ricciflow.graph import GraphError, WeightedGraph, connected_components

KINDS = [CurvatureSpec(k) for k in Kind] + [CurvatureSpec(Kind.FORMAN, forman_vertex_weight="unit")]


def test_continuous_weight_examples():
    assert continuous_weight_at(2.0, 0.0, 7.0, 1.0) == 2.0
    assert continuous_weight_at(1.0, 0.5, 0.1, 0.0) == pytest.approx(0.951229424500714)
    assert continuous_weight_at(3.0, 1.7, 0.4, 0.4) == 3.0
    with pytest.raises(GraphError):
        continuous_weight_at(1.0, 1.0, 0.0, 1.0)


def test_discrete_step_examples(k3):
    s0 = FlowState.initial(k3)
    s = discrete_step(s0, 0.05)
    assert s.k == 1
    np.testing.assert_array_equal(s.log_weight, s0.log_weight)
    s0 = replace(s0, coeff=np.array([2.0, 2.0, 2.0]))
    assert discrete_step(s0, 0.05).weights()[0] == pytest.approx(math.exp(-0.1))
    two = discrete_step(discrete_step(s0, 0.05), 0.05)
    one = discrete_step(s0, 0.1)
    np.testing.assert_allclose(two.log_weight, one.log_weight, rtol=0, atol=1e-15)


def test_surgery_examples():
    g = WeightedGraph("abc", [("a", "b", 1.0), ("b", "c", 2.5)])
    s, rep = apply_surgery(g, FlowState.initial(g), 2.0)
    assert rep.removed == [("b", "c")]
    assert rep.ratios[0] == pytest.approx(2.5)
    s, rep = apply_surgery(complete_graph(4), FlowState.initial(complete_graph(4)), 1.0001)
    assert rep.removed == []
    single = WeightedGraph("abcd", [("a", "b", 100.0), ("c", "d", 1.0)])
    _, rep = apply_surgery(single, FlowState.initial(single), 2.0)
    assert rep.removed == []


def test_surgery_at_exactly_A_removes():
    g = WeightedGraph("abc", [("a", "b", 1.0), ("b", "c", 2.0)])
    _, rep = apply_surgery(g, FlowState.initial(g), 2.0)
    assert rep.removed == [("b", "c")]


def test_update_coefficients_examples(fig1):
    s = FlowState.initial(fig1)
    s = replace(s, coeff=curvature_of_state(fig1, s, CurvatureSpec()))
    np.testing.assert_array_equal(s.coeff, curvature_all(fig1).values)
    kept = update_coefficients(fig1, s, False, CurvatureSpec())
    assert kept.coeff is s.coeff
    cut = replace(s, alive=np.array([e != ("x2", "x4") for e in fig1.edges]))
    new = update_coefficients(fig1, cut, True, CurvatureSpec())
    expected = curvature_all(two_triangles()).values
    assert new.coeff[fig1.edges.index(("x2", "x4"))] == 0.0
    np.testing.assert_allclose(np.delete(new.coeff, 3), expected, atol=1e-12)


def test_choose_A_examples():
    assert choose_A_default(complete_graph(3)) == 2.0
    assert choose_A_default(WeightedGraph("abc", [("a", "b", 1), ("b", "c", 3)])) == 6.0
    g = WeightedGraph(range(6), [(0, 1, 1), (1, 2, 1.5), (3, 4, 1), (4, 5, 4)])
    assert choose_A_default(g) == 8.0
    with pytest.raises(GraphError):
        choose_A_default(WeightedGraph("ab"))


def test_config_validation():
    with pytest.raises(GraphError):
        FlowConfig(dt=0.0)
    with pytest.raises(GraphError):
        FlowConfig(A=1.0)
    with pytest.raises(GraphError):
        FlowConfig(schedule=(0.1, 0.1))
    assert FlowConfig(schedule=(0.1, 0.3)).times().tolist() == [0.0, 0.1, 0.3]
    assert FlowConfig(max_iterations=1000).stop_patience() == 200


@pytest.mark.parametrize("spec", KINDS, ids=lambda s: s.kind.value + str(s.gamma))
@pytest.mark.parametrize("g", [complete_graph(3), complete_graph(4), cycle_graph(5)], ids=["K3", "K4", "C5"])
def test_transitive_graphs_never_cut(g, spec):
    _, trace = run_flow(g, FlowConfig(curvature=spec, max_iterations=30, A=1.0001))
    assert trace.surgeries == []
    lw = trace.final_state.log_weight
    assert np.ptp(lw) <= 1e-12


def test_zero_curvature_keeps_weights(monkeypatch):
    import ricciflow.flow as flow
    monkeypatch.setattr(flow, "curvature_of_state", lambda g0, s, spec: np.zeros(len(s.alive)))
    g = fig1_graph()
    final, trace = run_flow(g, FlowConfig(max_iterations=10, early_stop=False))
    assert final == g and trace.surgeries == []


def test_fig1_splits_into_triangles():
    final, trace = run_flow(fig1_graph(), FlowConfig(max_iterations=40))
    assert sorted(map(sorted, connected_components(final))) == [["x1", "x2", "x3"], ["x4", "x5", "x6"]]
    assert trace.surgeries[0].removed == [("x2", "x4")]


def test_early_stop_after_patience():
    _, trace = run_flow(complete_graph(3), FlowConfig(max_iterations=500, patience=5))
    assert len(trace.records) == 5


def test_trace_serializes(tmp_path):
    _, trace = run_flow(fig1_graph(), FlowConfig(max_iterations=20))
    trace.write_csv(tmp_path / "t.csv")
    trace.write_json(tmp_path / "t.json")
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0].startswith("k,t,") and len(rows) == len(trace.records) + 1


def test_forman_weights_do_not_overflow():
    _, trace = run_flow(fig1_graph(), FlowConfig(CurvatureSpec(Kind.FORMAN), max_iterations=5,
                                                   A=1e300, early_stop=False))
    assert np.all(np.isfinite(trace.final_state.log_weight))


def test_sampled_continuous_flow_diverging_is_reported():
    with pytest.raises(FlowError):
        sample_continuous_flow(fig1_graph(), CurvatureSpec(Kind.HAANTJES), range(1, 40))


@settings(max_examples=25, deadline=None)
@given(connected_graphs(min_n=3, max_n=9), st.sampled_from(KINDS[:3]))
def test_flow_invariants(g, spec):
    _, trace = run_flow(g, FlowConfig(curvature=spec, max_iterations=40, early_stop=False))
    alive_prev = np.ones(g.number_of_edges(), dtype=bool)
    for k in sorted(trace.alive_history):
        alive = trace.alive_history[k]
        assert not np.any(alive & ~alive_prev)
        alive_prev = alive
    assert len(trace.surgeries) <= g.number_of_edges()
    for s in trace.surgeries:
        assert len(s.removed) > 0
    # frozen-coefficient law between consecutive recomputations
    marks = sorted(trace.coeff_history) + [len(trace.times) - 1]
    for j, k in zip(marks, marks[1:]):
        c = trace.coeff_history[j]
        for i in range(j + 1, k + 1):
            r = trace.log_weights[i] - trace.log_weights[j] + c * (trace.times[i] - trace.times[j])
            assert np.all(np.abs(r[trace.alive_at(i - 1)]) <= 1e-12)
    # decay direction follows the sign of the frozen coefficient
    c = trace.final_state.coeff
    lw = trace.log_weights
    alive = trace.final_state.alive
    if len(lw) >= 2 and trace.last_surgery < len(lw) - 1:
        slope = lw[-1] - lw[-2]
        nz = alive & (np.abs(c) > 1e-12)
        assert np.all(np.sign(slope[nz]) == -np.sign(c[nz]))
