"""Edge-list and label files, run reports, metric tables."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .graph import GraphError, WeightedGraph

SCHEMA_VERSION = 1


class ParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


def _tokens(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _vertex(tok: str):
    # integer-looking ids stay integers so numeric datasets keep their order
    try:
        return int(tok)
    except ValueError:
        return tok


def load_graph(path, format: str = "edge-list") -> WeightedGraph:
    """Read ``u v [w]`` lines; ``#`` starts a comment, ``w`` defaults to 1.

    Duplicate undirected edges keep the smaller weight (with a warning).
    """
    if format != "edge-list":
        raise ValueError(f"unsupported graph format {format!r}")
    vertices: dict = {}
    edges = []
    for lineno, tok in _tokens(path):
        if len(tok) not in (2, 3):
            raise ParseError(path, lineno, f"expected 'u v [w]', got {len(tok)} fields")
        u, v = _vertex(tok[0]), _vertex(tok[1])
        try:
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError:
            raise ParseError(path, lineno, f"weight {tok[2]!r} is not a number") from None
        if u == v:
            raise ParseError(path, lineno, f"self-loop at {u!r}")
        if not w > 0 or w == float("inf"):
            raise GraphError(f"{path}:{lineno}: weight must be finite and positive, got {tok[2]}")
        vertices.setdefault(u, None)
        vertices.setdefault(v, None)
        edges.append((u, v, w))
    return WeightedGraph(vertices, edges)


def write_graph(g: WeightedGraph, path, header: str | None = None) -> None:
    """Write an edge list with weights at 17 significant digits."""
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for (u, v), w in zip(g.edges, g.weights):
            fh.write(f"{u} {v} {float(w):.17g}\n")


def load_labels(path, graph: WeightedGraph | None = None) -> dict:
    """Read ``vertex label`` lines into a dict.

    With ``graph`` given, every labeled vertex must exist in it and every
    graph vertex must be labeled.
    """
    out: dict = {}
    for lineno, tok in _tokens(path):
        if len(tok) != 2:
            raise ParseError(path, lineno, f"expected 'vertex label', got {len(tok)} fields")
        v = _vertex(tok[0])
        if v in out:
            raise ParseError(path, lineno, f"vertex {v!r} labeled twice")
        out[v] = tok[1]
    if graph is not None:
        extra = [v for v in out if v not in graph]
        if extra:
            raise GraphError(f"{path}: labeled vertex {extra[0]!r} is not in the graph")
        missing = [v for v in graph.vertices if v not in out]
        if missing:
            raise GraphError(f"{path}: vertex {missing[0]!r} has no label")
    return out


def write_labels(labels: dict, path, order=None) -> None:
    with open(path, "w") as fh:
        for v in order if order is not None else labels:
            fh.write(f"{v} {labels[v]}\n")


@dataclass
class RunReport:
    """JSON run summary; keys are emitted in a fixed order."""

    config: dict
    communities: list
    metrics: dict
    trace: dict
    timings: dict
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "inputs": self.inputs,
            "config": self.config,
            "communities": self.communities,
            "metrics": self.metrics,
            "trace": self.trace,
            "timings": self.timings,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())


METRIC_COLUMNS = ["dataset", "curvature", "nmi", "modularity", "seconds"]


def append_metrics_csv(path, row: dict) -> None:
    """Append one row to a flat metrics table, writing the header if new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, extrasaction="ignore")
        if new:
            w.writeheader()
        w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in METRIC_COLUMNS})


# ----------------------------------------------------------------------
# bundled and user-supplied datasets
# ----------------------------------------------------------------------

def dataset_dirs() -> list[Path]:
    """Search path: ``$RICCIFLOW_DATA_DIR`` (if set), then the bundled data."""
    dirs = []
    env = os.environ.get("RICCIFLOW_DATA_DIR")
    if env:
        dirs.append(Path(env))
    dirs.append(Path(__file__).with_name("data"))
    return dirs


def find_dataset(name: str) -> tuple[Path, Path | None]:
    """Locate ``<name>.edges`` and, if present, ``<name>.labels``."""
    for d in dataset_dirs():
        edges = d / f"{name}.edges"
        if edges.is_file():
            labels = d / f"{name}.labels"
            return edges, labels if labels.is_file() else None
    where = ", ".join(str(d) for d in dataset_dirs())
    raise FileNotFoundError(f"dataset {name!r} not found (looked for {name}.edges in {where})")


def load_dataset(name: str) -> tuple[WeightedGraph, dict | None]:
    edges, labels = find_dataset(name)
    g = load_graph(edges)
    return g, (load_labels(labels, g) if labels else None)
