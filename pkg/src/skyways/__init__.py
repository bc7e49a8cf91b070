"""skyways: a deterministic simulator for drone road systems.

The package parses an XML road description (roads made of hexagonally
arranged lanes, connected by ramps), flies drones along it under a
short-term decentralized greedy guidance algorithm fed only by lossy
broadcast beacons, and provides the experiment tooling (sweeps,
replications, response-surface sensitivity analysis) used to study it.
"""

__version__ = "0.1.0"

from .geometry import (
    LaneCoord,
    Frame,
    CubicBezier,
    Curve,
    ChainedCurve,
    curve_length,
    arclength_reparam,
    normal_frame,
    parallel_point,
    param_convert,
    along_lane_distance,
    hop_distance,
    hex_neighbors,
)
from .drs import (
    Lane,
    Road,
    Ramp,
    DroneRoadSystem,
    parse_drs,
    serialize_drs,
    validate_drs,
    bundled_asset_path,
)
from .routing import RouteGraph, RoutePlan, RouteSegment, build_route_graph, plan_path

__all__ = [
    "LaneCoord",
    "Frame",
    "CubicBezier",
    "Curve",
    "ChainedCurve",
    "curve_length",
    "arclength_reparam",
    "normal_frame",
    "parallel_point",
    "param_convert",
    "along_lane_distance",
    "hop_distance",
    "hex_neighbors",
    "Lane",
    "Road",
    "Ramp",
    "DroneRoadSystem",
    "parse_drs",
    "serialize_drs",
    "validate_drs",
    "bundled_asset_path",
    "RouteGraph",
    "RoutePlan",
    "RouteSegment",
    "build_route_graph",
    "plan_path",
]
