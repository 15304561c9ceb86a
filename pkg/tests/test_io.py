import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import connected_graphs
from ricciflow.graph import GraphError, WeightedGraph
from ricciflow.io import (ParseError, RunReport, append_metrics_csv, find_dataset, load_dataset,
                          load_graph, load_labels, write_graph, write_labels)


def write(tmp_path, text, name="g.edges"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_examples(tmp_path):
    g = load_graph(write(tmp_path, "a b\nb c\n"))
    assert g.edges == [("a", "b"), ("b", "c")] and np.all(g.weights == 1.0)
    g = load_graph(write(tmp_path, "a b 2.5\n"))
    assert g.weight("a", "b") == 2.5
    g = load_graph(write(tmp_path, "# comment\na b  # trailing\n\n"))
    assert g.number_of_edges() == 1


def test_integer_ids_are_integers(tmp_path):
    g = load_graph(write(tmp_path, "0 1\n1 2\n"))
    assert g.vertices == (0, 1, 2)


@pytest.mark.parametrize("text,line", [("a b\na\n", 2), ("a b c d\n", 1), ("a b x\n", 1), ("a a\n", 1)])
def test_parse_errors_name_the_line(tmp_path, text, line):
    with pytest.raises(ParseError) as info:
        load_graph(write(tmp_path, text))
    assert info.value.lineno == line
    assert f":{line}:" in str(info.value)


@pytest.mark.parametrize("w", ["0", "-1", "inf", "nan"])
def test_bad_weight_is_validation_error(tmp_path, w):
    with pytest.raises(GraphError):
        load_graph(write(tmp_path, f"a b {w}\n"))


def test_duplicates_collapse_with_warning(tmp_path):
    with pytest.warns(UserWarning):
        g = load_graph(write(tmp_path, "a b 3\nb a 2\n"))
    assert g.weight("a", "b") == 2.0


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=10, wlo=1e-6, whi=1e6))
def test_round_trip_is_exact(tmp_path_factory, g):
    p = tmp_path_factory.mktemp("rt") / "g.edges"
    write_graph(g, p, header="round trip")
    h = load_graph(p)
    as_map = lambda x: {frozenset(e): w for e, w in zip(x.edges, x.weights)}
    assert as_map(h) == as_map(g)
    assert set(h.vertices) == set(g.vertices)


def test_labels(tmp_path):
    g = load_graph(write(tmp_path, "a b\nb c\n"))
    p = write(tmp_path, "a x\nb x\nc y\n", "l.txt")
    assert load_labels(p, g) == {"a": "x", "b": "x", "c": "y"}
    with pytest.raises(GraphError):
        load_labels(write(tmp_path, "a x\nb x\n", "m.txt"), g)
    with pytest.raises(GraphError):
        load_labels(write(tmp_path, "a x\nb x\nc y\nz y\n", "n.txt"), g)
    with pytest.raises(ParseError):
        load_labels(write(tmp_path, "a x\na y\n", "o.txt"))
    write_labels({"a": 1, "b": 2}, tmp_path / "w.txt")
    assert load_labels(tmp_path / "w.txt") == {"a": "1", "b": "2"}


def test_report_has_fixed_key_order(tmp_path):
    r = RunReport(config={"a": 1}, communities=[["x"]], metrics={"nmi": None}, trace={}, timings={"s": 1})
    r.write(tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert list(doc) == ["schema_version", "inputs", "config", "communities", "metrics", "trace", "timings"]


def test_metrics_csv_appends(tmp_path):
    p = tmp_path / "m.csv"
    append_metrics_csv(p, {"dataset": "d", "curvature": "ollivier", "nmi": None, "modularity": 0.5, "seconds": 1})
    append_metrics_csv(p, {"dataset": "e", "curvature": "lly", "nmi": 0.9, "modularity": 0.4, "seconds": 2})
    lines = p.read_text().splitlines()
    assert lines[0] == "dataset,curvature,nmi,modularity,seconds"
    assert lines[1] == "d,ollivier,,0.5,1" and len(lines) == 3


def test_bundled_karate():
    g, truth = load_dataset("karate")
    assert g.number_of_vertices() == 34 and g.number_of_edges() == 78
    assert sorted(set(truth.values())) == ["MrHi", "Officer"]


def test_data_dir_override(tmp_path, monkeypatch):
    (tmp_path / "toy.edges").write_text("a b\n")
    monkeypatch.setenv("RICCIFLOW_DATA_DIR", str(tmp_path))
    edges, labels = find_dataset("toy")
    assert edges == tmp_path / "toy.edges" and labels is None
    with pytest.raises(FileNotFoundError):
        find_dataset("nope")
