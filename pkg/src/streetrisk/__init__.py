"""Urban location hazard scoring and network risk analysis."""

from streetrisk._kernels import KERNEL_COMPILED
from streetrisk.geo import EARTH_RADIUS_M, GeoPoint, Polygon, SpatialIndex, haversine_distance, point_in_polygon
from streetrisk.hazard import HazardModel, evaluate, load_model, predict, predict_many, restrict_pairs, save_model, train
from streetrisk.ingest import (
    AccidentKind,
    AccidentRecord,
    LabeledSample,
    Period,
    SceneRecord,
    assign_period,
    count_accidents,
    label,
    label_scenes,
    load_accidents,
    load_neighborhoods,
    load_scenes,
)
from streetrisk.change import LocationPair, agreement_report, hexbin, percent
from streetrisk.network import (
    Network,
    NetworkEdge,
    NetworkNode,
    ODMatrix,
    edge_closeness,
    gravity_od,
    load_network,
    node_closeness,
    od_edge_betweenness,
    traversal_weights,
    uniform_od,
)
from streetrisk.risk import EdgeHazard, centrality_correlation, extreme_segments, join_hazard_to_edges, snap_scenes

__version__ = "0.1.0"

__all__ = [
    "AccidentKind",
    "AccidentRecord",
    "EARTH_RADIUS_M",
    "EdgeHazard",
    "GeoPoint",
    "HazardModel",
    "KERNEL_COMPILED",
    "LabeledSample",
    "LocationPair",
    "Network",
    "NetworkEdge",
    "NetworkNode",
    "ODMatrix",
    "Period",
    "Polygon",
    "SceneRecord",
    "SpatialIndex",
    "agreement_report",
    "assign_period",
    "centrality_correlation",
    "count_accidents",
    "edge_closeness",
    "evaluate",
    "extreme_segments",
    "gravity_od",
    "haversine_distance",
    "hexbin",
    "join_hazard_to_edges",
    "label",
    "label_scenes",
    "load_accidents",
    "load_model",
    "load_neighborhoods",
    "load_network",
    "load_scenes",
    "node_closeness",
    "od_edge_betweenness",
    "percent",
    "point_in_polygon",
    "predict",
    "predict_many",
    "restrict_pairs",
    "save_model",
    "snap_scenes",
    "train",
    "traversal_weights",
    "uniform_od",
]
