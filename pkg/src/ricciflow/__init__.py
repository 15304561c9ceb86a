"""Community detection by discrete piecewise-linear Ricci flow with surgery."""

__version__ = "0.1.0"

from .curvature import CurvatureSpec, CurvatureVector, Kind, curvature_all
from .flow import FlowConfig, FlowError, FlowTrace, run_flow
from .graph import GraphError, WeightedGraph
from .metrics import contingency, modularity, nmi, nmi_labels
from .pipeline import DetectionResult, detect_communities, verify_theorems

__all__ = [
    "CurvatureSpec", "CurvatureVector", "Kind", "curvature_all",
    "FlowConfig", "FlowError", "FlowTrace", "run_flow",
    "GraphError", "WeightedGraph",
    "contingency", "modularity", "nmi", "nmi_labels",
    "DetectionResult", "detect_communities", "verify_theorems",
]
