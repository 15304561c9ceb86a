import json

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import complete_graph, connected_graphs, fig1_graph, two_triangles
from ricciflow.curvature import CurvatureSpec, Kind
from ricciflow.flow import FlowConfig
from ricciflow.graph import WeightedGraph, connected_components, scale_weights
from ricciflow.pipeline import (circulant_graph, complexity_probe, detect_communities, loglog_slope,
                                verify_theorems)


def test_fig1_communities(fig1):
    res = detect_communities(fig1, FlowConfig(max_iterations=40))
    assert res.communities() == [["x1", "x2", "x3"], ["x4", "x5", "x6"]]
    assert res.labeling == {"x1": 1, "x2": 1, "x3": 1, "x4": 2, "x5": 2, "x6": 2}


def test_edgeless_graph_gives_singletons():
    res = detect_communities(WeightedGraph("abc"))
    assert res.labeling == {"a": 1, "b": 2, "c": 3}


def test_empty_graph_rejected():
    with pytest.raises(ValueError):
        detect_communities(WeightedGraph())


@settings(max_examples=20, deadline=None)
@given(connected_graphs(min_n=3, max_n=10))
def test_labeling_is_component_partition_with_contiguous_ids(g):
    res = detect_communities(g, FlowConfig(max_iterations=30))
    ids = sorted(set(res.labeling.values()))
    assert ids == list(range(1, len(ids) + 1))
    blocks = {}
    for v, c in res.labeling.items():
        blocks.setdefault(c, set()).add(v)
    assert sorted(map(sorted, blocks.values()), key=repr) == \
        sorted(map(sorted, connected_components(res.graph)), key=repr)
    again = detect_communities(g, FlowConfig(max_iterations=30))
    assert again.labeling == res.labeling


def test_result_serializes(tmp_path, fig1):
    res = detect_communities(fig1, FlowConfig(max_iterations=40))
    res.write_json(tmp_path / "r.json")
    res.write_labels(tmp_path / "r.csv")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["communities"] == [["x1", "x2", "x3"], ["x4", "x5", "x6"]]
    assert (tmp_path / "r.csv").read_text().splitlines()[1] == "x1,1"


def test_k3_report_is_trivial():
    rep = verify_theorems(detect_communities(complete_graph(3), FlowConfig(max_iterations=20)))
    assert rep.last_surgery == 0
    assert rep.max_curvature_spread == 0.0
    assert rep.max_drift == 0.0


def test_two_triangles_with_different_scales():
    res = detect_communities(two_triangles(1.0, 7.5), FlowConfig(max_iterations=20))
    rep = verify_theorems(res)
    assert len(rep.components) == 2
    assert all(c.curvature_spread == 0.0 for c in rep.components)
    assert rep.max_frozen_gap <= 1e-12


def test_fig1_post_surgery_drift_is_exact(fig1):
    res = detect_communities(fig1, FlowConfig(max_iterations=150, early_stop=False))
    rep = verify_theorems(res)
    assert rep.last_surgery > 0 and rep.iterations_after >= 100
    assert rep.max_drift <= 1e-12
    for c in rep.components:
        assert c.curvature_spread >= 0 and c.curvature_std >= 0


def test_zero_homogeneous_curvature_ignores_final_scale(fig1):
    res = detect_communities(fig1, FlowConfig(max_iterations=60))
    from ricciflow.curvature import curvature_all
    a = curvature_all(res.graph).values
    b = curvature_all(scale_weights(res.graph, 13.0)).values
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


def test_non_default_spec_is_used_for_recompute(fig1):
    res = detect_communities(fig1, FlowConfig(CurvatureSpec(Kind.MENGER), max_iterations=60))
    rep = verify_theorems(res)
    assert rep.max_frozen_gap is None


def test_circulant_graph():
    g = circulant_graph(10, 4)
    assert g.number_of_edges() == 20
    assert all(g.degree(v) == 4 for v in g.vertices)
    with pytest.raises(ValueError):
        circulant_graph(10, 3)


def test_probe_rows():
    rows = complexity_probe([(2, 1), (20, 4), (40, 4)], repeats=1)
    assert [r.edges for r in rows] == [1, 40, 80]
    assert all(r.seconds > 0 for r in rows)
    assert loglog_slope([1, 2, 4], [3, 12, 48]) == pytest.approx(2.0)
