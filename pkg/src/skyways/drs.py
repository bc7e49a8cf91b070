"""Parse, validate, serialize, and query drone road system descriptions.

The XML vocabulary follows the road-system description language: a
DroneRoadSystem holds Roads (each a bundle of hexagonally arranged Lanes
built from ChainedCurves of cubic Bezier Curves) and Ramps (single-lane
connectors attached to specific lane parameter points).

Schema conventions specific to this implementation (see README):
  * ControlPoint children of a Curve always describe the center-lane
    geometry of the road; a parallel lane's position is derived from its
    LaneIdentifier on the hexagonal lattice in the moving frame.
  * A parallel lane still carries its own StartParameter/EndParameter per
    curve (its true arc-length partition) and its own offset Start/EndPoint.
  * Points in attributes are "x,y,z"; ClosedCurves is a whitespace or
    comma separated list of curve indices.

Parsed systems are immutable in practice and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
from xml.etree import ElementTree as ET

import numpy as np

from .geometry import (
    ChainedCurve,
    CubicBezier,
    Curve,
    DegenerateCurveError,
    FrameUndefinedError,
    GeometryError,
    LaneCoord,
    lattice_offset_coeffs,
)

DEFAULT_RADIUS = 10.0

POSITION_TOL = 1e-6  # meters, junction and attachment coincidence
DIRECTION_TOL = 1e-4  # unit-vector difference at junctions
ARC_LENGTH_REL_TOL = 1e-4  # declared (b - a) versus integrated length


class DrsError(Exception):
    """Base class for road-system description errors."""


class DrsParseError(DrsError):
    """Parse or structural validation failure; carries an element path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Finding:
    """One validator finding."""

    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.path}: {self.message}"


@dataclass(frozen=True)
class RampAttachment:
    road_id: str
    lane_coord: LaneCoord
    param: float


class Lane:
    """One directed lane: a chained curve plus lattice coordinate and closures."""

    def __init__(
        self,
        identifier: str,
        lane_coord: LaneCoord,
        chain: ChainedCurve,
        road_id: Optional[str] = None,
        closed_curve_indices: Sequence[int] = (),
        radius: float = DEFAULT_RADIUS,
        extra: Optional[Dict[str, str]] = None,
    ):
        self.identifier = identifier
        self.lane_coord = lane_coord
        self.chain = chain
        self.road_id = road_id
        self.closed_curve_indices = frozenset(int(k) for k in closed_curve_indices)
        bad = [k for k in self.closed_curve_indices if k < 0 or k >= len(chain.curves)]
        if bad:
            raise DrsParseError(identifier, f"closed curve indices out of range: {bad}")
        self.radius = radius
        self.extra = dict(extra or {})

    def __repr__(self) -> str:
        return f"Lane({self.identifier!r}, {self.lane_coord})"

    def closing_points(self) -> List[float]:
        """Sorted parameters where the lane closes (closed curve starts)."""
        return sorted(self.chain.curves[k].start_param for k in self.closed_curve_indices)

    def closed_intervals(self) -> List[Tuple[float, float]]:
        return sorted(
            (self.chain.curves[k].start_param, self.chain.curves[k].end_param)
            for k in self.closed_curve_indices
        )

    def is_open_at(self, s: float) -> bool:
        for a, b in self.closed_intervals():
            if a <= s < b:
                return False
        return True

    @property
    def first_curve_open(self) -> bool:
        return 0 not in self.closed_curve_indices

    @property
    def last_curve_open(self) -> bool:
        return (len(self.chain.curves) - 1) not in self.closed_curve_indices

    def point(self, s: float) -> np.ndarray:
        return self.chain.point(s)

    def tangent(self, s: float) -> np.ndarray:
        return self.chain.tangent(s)


class Road:
    """A bundle of parallel lanes sharing direction; contains lane (0, 0)."""

    def __init__(
        self,
        identifier: str,
        lanes: Sequence[Lane],
        speed_limit: float,
        radius: float = DEFAULT_RADIUS,
        extra: Optional[Dict[str, str]] = None,
    ):
        self.identifier = identifier
        self.lanes: Tuple[Lane, ...] = tuple(lanes)
        self.speed_limit = speed_limit
        self.radius = radius
        self.extra = dict(extra or {})
        if not any(l.lane_coord == (0, 0) for l in self.lanes):
            raise DrsParseError(identifier, "road has no center lane (0,0)")

    def __repr__(self) -> str:
        return f"Road({self.identifier!r}, {len(self.lanes)} lanes)"

    @property
    def lane_map(self) -> Dict[LaneCoord, Lane]:
        return {l.lane_coord: l for l in self.lanes}

    @property
    def center_lane(self) -> Lane:
        return self.lane_map[LaneCoord(0, 0)]

    def lane(self, coord: LaneCoord) -> Optional[Lane]:
        return self.lane_map.get(LaneCoord(*coord))


class Ramp:
    """Single-lane uni-directional connector; on-ramp, off-ramp, or connecting."""

    def __init__(
        self,
        identifier: str,
        lane: Lane,
        speed_limit: float,
        entry: Optional[RampAttachment] = None,
        exit: Optional[RampAttachment] = None,
        road_identifier: Optional[str] = None,
        extra: Optional[Dict[str, str]] = None,
    ):
        if entry is None and exit is None:
            raise DrsParseError(identifier, "ramp must have at least one attachment")
        self.identifier = identifier
        self.lane = lane
        self.speed_limit = speed_limit
        self.entry = entry
        self.exit = exit
        # identifier of the inner road wrapper, used as the road id in beacons
        self.road_identifier = road_identifier or f"{identifier}-road"
        self.extra = dict(extra or {})

    def __repr__(self) -> str:
        return f"Ramp({self.identifier!r}, {self.kind})"

    @property
    def kind(self) -> str:
        if self.entry is not None and self.exit is not None:
            return "connecting"
        if self.exit is not None:
            return "on-ramp"
        return "off-ramp"


@dataclass(frozen=True)
class AccessPoint:
    """An entry or exit of the system: a lane plus a parameter on it."""

    lane: Lane
    param: float
    container_id: str  # road or ramp identifier


class DroneRoadSystem:
    """Fully resolved road system: roads, ramps, and lookup indices."""

    def __init__(
        self,
        name: str,
        version: str,
        roads: Sequence[Road],
        ramps: Sequence[Ramp] = (),
        extra: Optional[Dict[str, str]] = None,
    ):
        if not roads:
            raise DrsParseError("DroneRoadSystem", "system needs at least one road")
        self.name = name
        self.version = version
        self.roads: Dict[str, Road] = {r.identifier: r for r in roads}
        self.ramps: Dict[str, Ramp] = {r.identifier: r for r in ramps}
        self.extra = dict(extra or {})
        self._index()

    def _index(self) -> None:
        self._lanes_by_id: Dict[str, Lane] = {}
        for road in self.roads.values():
            for lane in road.lanes:
                self._lanes_by_id[lane.identifier] = lane
        for ramp in self.ramps.values():
            self._lanes_by_id[ramp.lane.identifier] = ramp.lane
        # ramp attachments per (road_id, lane_coord)
        self._outgoing: Dict[Tuple[str, LaneCoord], List[Tuple[float, Ramp]]] = {}
        self._incoming: Dict[Tuple[str, LaneCoord], List[Tuple[float, Ramp]]] = {}
        for ramp in self.ramps.values():
            if ramp.entry is not None:
                key = (ramp.entry.road_id, ramp.entry.lane_coord)
                self._outgoing.setdefault(key, []).append((ramp.entry.param, ramp))
            if ramp.exit is not None:
                key = (ramp.exit.road_id, ramp.exit.lane_coord)
                self._incoming.setdefault(key, []).append((ramp.exit.param, ramp))
        for table in (self._outgoing, self._incoming):
            for lst in table.values():
                lst.sort(key=lambda item: item[0])
        # beacon road id -> container (Road or Ramp)
        self._containers: Dict[str, object] = dict(self.roads)
        for ramp in self.ramps.values():
            self._containers[ramp.road_identifier] = ramp

    # -- lookups ---------------------------------------------------------------

    def lane_by_id(self, identifier: str) -> Lane:
        return self._lanes_by_id[identifier]

    def lane(self, road_id: str, coord: LaneCoord) -> Optional[Lane]:
        road = self.roads.get(road_id)
        if road is not None:
            return road.lane(coord)
        container = self._containers.get(road_id)
        if isinstance(container, Ramp) and LaneCoord(*coord) == (0, 0):
            return container.lane
        return None

    def container(self, road_id: str):
        """Road or Ramp addressed by a beacon's road identifier."""
        return self._containers.get(road_id)

    def speed_limit_of(self, road_id: str) -> float:
        container = self._containers[road_id]
        return container.speed_limit

    def outgoing_ramps(self, road_id: str, coord: LaneCoord) -> List[Tuple[float, Ramp]]:
        return self._outgoing.get((road_id, LaneCoord(*coord)), [])

    def incoming_ramps(self, road_id: str, coord: LaneCoord) -> List[Tuple[float, Ramp]]:
        return self._incoming.get((road_id, LaneCoord(*coord)), [])

    def ramp_points(self, road_id: str, coord: LaneCoord) -> List[float]:
        """Sorted parameters where the lane feeds any outgoing ramp."""
        return [param for param, _ in self.outgoing_ramps(road_id, coord)]

    def entry_points(self) -> List[AccessPoint]:
        """Lane starts drones may enter at: open road lane starts and on-ramps."""
        points = []
        for road in self.roads.values():
            for lane in road.lanes:
                if lane.first_curve_open:
                    points.append(AccessPoint(lane, lane.chain.start_param, road.identifier))
        for ramp in self.ramps.values():
            if ramp.kind == "on-ramp":
                points.append(AccessPoint(ramp.lane, ramp.lane.chain.start_param, ramp.identifier))
        return points

    def exit_points(self) -> List[AccessPoint]:
        """Lane ends drones may leave at: open road lane ends and off-ramps."""
        points = []
        for road in self.roads.values():
            for lane in road.lanes:
                if lane.last_curve_open:
                    points.append(AccessPoint(lane, lane.chain.end_param, road.identifier))
        for ramp in self.ramps.values():
            if ramp.kind == "off-ramp":
                points.append(AccessPoint(ramp.lane, ramp.lane.chain.end_param, ramp.identifier))
        return points


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_KNOWN_ATTRS = {
    "DroneRoadSystem": {"Name", "Version"},
    "Road": {"Identifier", "Description", "SpeedLimit", "Radius"},
    "Lane": {"Identifier", "Description", "LaneIdentifier", "RoadIdentifier", "ClosedCurves"},
    "ChainedCurve": {"Identifier", "Description", "StartParameter", "EndParameter"},
    "Curve": {
        "Identifier",
        "Description",
        "Type",
        "StartParameter",
        "EndParameter",
        "StartPoint",
        "EndPoint",
    },
    "Ramp": {
        "Identifier",
        "Description",
        "EntryRoadIdentifier",
        "EntryLaneIdentifier",
        "EntryLaneParameter",
        "ExitRoadIdentifier",
        "ExitLaneIdentifier",
        "ExitLaneParameter",
    },
}


def _extra_attrs(elem: ET.Element) -> Dict[str, str]:
    known = _KNOWN_ATTRS.get(elem.tag, set())
    return {k: v for k, v in elem.attrib.items() if k not in known}


def _attr(elem: ET.Element, name: str, path: str, required: bool = True) -> Optional[str]:
    value = elem.get(name)
    if value is None and required:
        raise DrsParseError(path, f"missing mandatory attribute {name}")
    return value


def _float_attr(elem: ET.Element, name: str, path: str, required: bool = True) -> Optional[float]:
    raw = _attr(elem, name, path, required)
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise DrsParseError(path, f"malformed number in {name}: {raw!r}") from None


def _point_attr(elem: ET.Element, name: str, path: str) -> np.ndarray:
    raw = _attr(elem, name, path)
    parts = raw.replace(",", " ").split()
    if len(parts) != 3:
        raise DrsParseError(path, f"malformed point in {name}: {raw!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise DrsParseError(path, f"malformed number in {name}: {raw!r}") from None


def _lane_coord_attr(elem: ET.Element, name: str, path: str) -> LaneCoord:
    raw = _attr(elem, name, path)
    parts = raw.replace("(", " ").replace(")", " ").replace(",", " ").split()
    if len(parts) != 2:
        raise DrsParseError(path, f"malformed lane identifier in {name}: {raw!r}")
    try:
        return LaneCoord(int(parts[0]), int(parts[1]))
    except ValueError:
        raise DrsParseError(path, f"malformed lane identifier in {name}: {raw!r}") from None


def _parse_curve(elem: ET.Element, path: str, offset: Tuple[float, float]) -> Tuple[Curve, np.ndarray, np.ndarray]:
    ident = _attr(elem, "Identifier", path)
    cpath = f"{path}/Curve[{ident}]"
    ctype = elem.get("Type", "CubicBezier")
    if ctype != "CubicBezier":
        raise DrsParseError(cpath, f"unsupported curve type {ctype!r}")
    a = _float_attr(elem, "StartParameter", cpath)
    b = _float_attr(elem, "EndParameter", cpath)
    if b <= a:
        raise DrsParseError(cpath, f"EndParameter {b} must exceed StartParameter {a}")
    start_pt = _point_attr(elem, "StartPoint", cpath)
    end_pt = _point_attr(elem, "EndPoint", cpath)
    control = []
    for child in elem:
        if child.tag != "ControlPoint":
            continue
        try:
            control.append([float(child.get(k)) for k in ("x", "y", "z")])
        except (TypeError, ValueError):
            raise DrsParseError(cpath, "malformed ControlPoint (needs x/y/z)") from None
    if len(control) != 4:
        raise DrsParseError(cpath, f"cubic Bezier needs 4 control points, got {len(control)}")
    try:
        curve = Curve(
            CubicBezier(control),
            start_param=a,
            end_param=b,
            offset=offset,
            identifier=ident,
        )
    except GeometryError as exc:
        raise DrsParseError(cpath, str(exc)) from None
    return curve, start_pt, end_pt


def _parse_lane(elem: ET.Element, path: str, radius: float, road_id: Optional[str]) -> Lane:
    ident = _attr(elem, "Identifier", path)
    lpath = f"{path}/Lane[{ident}]"
    coord = _lane_coord_attr(elem, "LaneIdentifier", lpath)
    declared_road = elem.get("RoadIdentifier")
    if declared_road is not None and road_id is not None and declared_road != road_id:
        raise DrsParseError(lpath, f"RoadIdentifier {declared_road!r} does not match enclosing road {road_id!r}")
    closed_raw = elem.get("ClosedCurves", "")
    closed: List[int] = []
    for token in closed_raw.replace(",", " ").split():
        try:
            closed.append(int(token))
        except ValueError:
            raise DrsParseError(lpath, f"malformed ClosedCurves entry {token!r}") from None
    chain_elem = elem.find("ChainedCurve")
    if chain_elem is None:
        raise DrsParseError(lpath, "missing ChainedCurve element")
    offset = lattice_offset_coeffs(coord, radius)
    curves = []
    declared_points = []
    for child in chain_elem:
        if child.tag != "Curve":
            continue
        curve, sp, ep = _parse_curve(child, lpath, offset)
        curves.append(curve)
        declared_points.append((sp, ep))
    if not curves:
        raise DrsParseError(lpath, "chained curve has no Curve children")
    try:
        chain = ChainedCurve(curves, identifier=_attr(chain_elem, "Identifier", lpath))
    except ValueError as exc:
        raise DrsParseError(lpath, str(exc)) from None
    ca = _float_attr(chain_elem, "StartParameter", lpath)
    cb = _float_attr(chain_elem, "EndParameter", lpath)
    if abs(ca - chain.start_param) > POSITION_TOL or abs(cb - chain.end_param) > POSITION_TOL:
        raise DrsParseError(
            lpath,
            "ChainedCurve Start/EndParameter must match its first/last curve",
        )
    lane = Lane(
        identifier=ident,
        lane_coord=coord,
        chain=chain,
        road_id=road_id,
        closed_curve_indices=closed,
        radius=radius,
        extra=_extra_attrs(elem),
    )
    lane.declared_endpoints = declared_points  # kept for the validator
    return lane


def _parse_road(elem: ET.Element, path: str, default_radius: float) -> Road:
    ident = _attr(elem, "Identifier", path)
    rpath = f"{path}/Road[{ident}]"
    speed = _float_attr(elem, "SpeedLimit", rpath)
    radius = _float_attr(elem, "Radius", rpath, required=False)
    if radius is None:
        radius = default_radius
    lanes = [
        _parse_lane(child, rpath, radius, ident)
        for child in elem
        if child.tag == "Lane"
    ]
    if not lanes:
        raise DrsParseError(rpath, "road has no lanes")
    return Road(ident, lanes, speed_limit=speed, radius=radius, extra=_extra_attrs(elem))


def _parse_attachment(
    elem: ET.Element, path: str, side: str, roads: Dict[str, Road]
) -> Optional[RampAttachment]:
    road_attr = f"{side}RoadIdentifier"
    lane_attr = f"{side}LaneIdentifier"
    param_attr = f"{side}LaneParameter"
    road_id = elem.get(road_attr)
    if road_id is None:
        return None
    if elem.get(lane_attr) is None:
        raise DrsParseError(path, f"{lane_attr} must be defined when {road_attr} is")
    if elem.get(param_attr) is None:
        raise DrsParseError(path, f"{param_attr} must be defined when {road_attr} is")
    coord = _lane_coord_attr(elem, lane_attr, path)
    param = _float_attr(elem, param_attr, path)
    road = roads.get(road_id)
    if road is None:
        raise DrsParseError(path, f"dangling {road_attr} reference {road_id!r}")
    lane = road.lane(coord)
    if lane is None:
        raise DrsParseError(path, f"dangling {lane_attr}: road {road_id!r} has no lane {coord}")
    if param < lane.chain.start_param - POSITION_TOL or param > lane.chain.end_param + POSITION_TOL:
        raise DrsParseError(
            path,
            f"{param_attr} {param} outside lane parameter range "
            f"[{lane.chain.start_param}, {lane.chain.end_param}]",
        )
    return RampAttachment(road_id, coord, param)


def _parse_ramp(elem: ET.Element, path: str, roads: Dict[str, Road], default_radius: float) -> Ramp:
    ident = _attr(elem, "Identifier", path)
    rpath = f"{path}/Ramp[{ident}]"
    inner = elem.find("Road")
    if inner is None:
        raise DrsParseError(rpath, "ramp needs an inner single-lane Road element")
    road = _parse_road(inner, rpath, default_radius)
    if len(road.lanes) != 1:
        raise DrsParseError(rpath, f"ramp road must have exactly one lane, got {len(road.lanes)}")
    lane = road.lanes[0]
    if lane.closed_curve_indices:
        raise DrsParseError(rpath, "ramp lane must be open everywhere")
    entry = _parse_attachment(elem, rpath, "Entry", roads)
    exit_ = _parse_attachment(elem, rpath, "Exit", roads)
    if entry is None and exit_ is None:
        raise DrsParseError(rpath, "ramp must define an entry or exit attachment")
    return Ramp(
        ident,
        lane,
        speed_limit=road.speed_limit,
        entry=entry,
        exit=exit_,
        road_identifier=road.identifier,
        extra=_extra_attrs(elem),
    )


def parse_drs(document: str, default_radius: float = DEFAULT_RADIUS) -> DroneRoadSystem:
    """Parse an XML description into a fully resolved DroneRoadSystem.

    Unknown attributes are preserved (and re-emitted on serialization);
    unknown elements are ignored.  Raises DrsParseError with an element
    path on missing attributes, dangling references, or malformed numbers.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise DrsParseError("<document>", f"not well-formed XML: {exc}") from None
    if root.tag != "DroneRoadSystem":
        raise DrsParseError(root.tag, "top-level element must be DroneRoadSystem")
    path = "DroneRoadSystem"
    name = _attr(root, "Name", path)
    version = _attr(root, "Version", path)
    roads = [
        _parse_road(child, path, default_radius) for child in root if child.tag == "Road"
    ]
    road_map = {}
    for road in roads:
        if road.identifier in road_map:
            raise DrsParseError(path, f"duplicate road identifier {road.identifier!r}")
        road_map[road.identifier] = road
    ramps = [
        _parse_ramp(child, path, road_map, default_radius)
        for child in root
        if child.tag == "Ramp"
    ]
    seen_lanes: Dict[str, str] = {}
    for road in roads:
        for lane in road.lanes:
            if lane.identifier in seen_lanes:
                raise DrsParseError(path, f"duplicate lane identifier {lane.identifier!r}")
            seen_lanes[lane.identifier] = road.identifier
    for ramp in ramps:
        if ramp.lane.identifier in seen_lanes:
            raise DrsParseError(path, f"duplicate lane identifier {ramp.lane.identifier!r}")
        seen_lanes[ramp.lane.identifier] = ramp.identifier
    return DroneRoadSystem(name, version, roads, ramps, extra=_extra_attrs(root))


def parse_drs_path(path) -> DroneRoadSystem:
    return parse_drs(Path(path).read_text(encoding="utf-8"))


def bundled_asset_path(name: str = "intersection") -> Path:
    """Filesystem path of a road system asset shipped with the package."""
    return Path(resources.files("skyways").joinpath(f"assets/{name}.drsx"))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _point_str(p: np.ndarray) -> str:
    return ",".join(_fmt(v) for v in p)


def _curve_to_xml(curve: Curve, parent: ET.Element) -> None:
    elem = ET.SubElement(parent, "Curve")
    elem.set("Identifier", curve.identifier or "")
    elem.set("Type", "CubicBezier")
    elem.set("StartParameter", _fmt(curve.start_param))
    elem.set("EndParameter", _fmt(curve.end_param))
    elem.set("StartPoint", _point_str(curve.start_point()))
    elem.set("EndPoint", _point_str(curve.end_point()))
    for cp in curve.bezier.control:
        ET.SubElement(
            elem, "ControlPoint", x=_fmt(cp[0]), y=_fmt(cp[1]), z=_fmt(cp[2])
        )


def _lane_to_xml(lane: Lane, parent: ET.Element) -> None:
    elem = ET.SubElement(parent, "Lane")
    elem.set("Identifier", lane.identifier)
    elem.set("LaneIdentifier", f"{lane.lane_coord.i},{lane.lane_coord.j}")
    if lane.road_id is not None:
        elem.set("RoadIdentifier", lane.road_id)
    if lane.closed_curve_indices:
        elem.set("ClosedCurves", " ".join(str(k) for k in sorted(lane.closed_curve_indices)))
    for key, value in lane.extra.items():
        elem.set(key, value)
    chain = ET.SubElement(elem, "ChainedCurve")
    chain.set("Identifier", lane.chain.identifier or f"{lane.identifier}-chain")
    chain.set("StartParameter", _fmt(lane.chain.start_param))
    chain.set("EndParameter", _fmt(lane.chain.end_param))
    for curve in lane.chain.curves:
        _curve_to_xml(curve, chain)


def _road_to_xml(road: Road, parent: ET.Element) -> None:
    elem = ET.SubElement(parent, "Road")
    elem.set("Identifier", road.identifier)
    elem.set("SpeedLimit", _fmt(road.speed_limit))
    elem.set("Radius", _fmt(road.radius))
    for key, value in road.extra.items():
        elem.set(key, value)
    for lane in road.lanes:
        _lane_to_xml(lane, elem)


def serialize_drs(drs: DroneRoadSystem, header_comment: Optional[str] = None) -> str:
    """Serialize a system back to XML (known structure plus preserved attrs)."""
    root = ET.Element("DroneRoadSystem")
    if header_comment is not None:
        root.insert(0, ET.Comment(header_comment))
    root.set("Name", drs.name)
    root.set("Version", drs.version)
    for key, value in drs.extra.items():
        root.set(key, value)
    for road in drs.roads.values():
        _road_to_xml(road, root)
    for ramp in drs.ramps.values():
        elem = ET.SubElement(root, "Ramp")
        elem.set("Identifier", ramp.identifier)
        if ramp.entry is not None:
            elem.set("EntryRoadIdentifier", ramp.entry.road_id)
            elem.set("EntryLaneIdentifier", f"{ramp.entry.lane_coord.i},{ramp.entry.lane_coord.j}")
            elem.set("EntryLaneParameter", _fmt(ramp.entry.param))
        if ramp.exit is not None:
            elem.set("ExitRoadIdentifier", ramp.exit.road_id)
            elem.set("ExitLaneIdentifier", f"{ramp.exit.lane_coord.i},{ramp.exit.lane_coord.j}")
            elem.set("ExitLaneParameter", _fmt(ramp.exit.param))
        for key, value in ramp.extra.items():
            elem.set(key, value)
        inner = ET.Element("Road")
        inner.set("Identifier", ramp.road_identifier)
        inner.set("SpeedLimit", _fmt(ramp.speed_limit))
        inner.set("Radius", _fmt(ramp.lane.radius))
        _lane_to_xml(ramp.lane, inner)
        elem.append(inner)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def write_drs(drs: DroneRoadSystem, path) -> None:
    Path(path).write_text(serialize_drs(drs), encoding="utf-8")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _unit(v: np.ndarray) -> Optional[np.ndarray]:
    n = float(np.linalg.norm(v))
    if n < 1e-9:
        return None
    return v / n


def _second_derivative(curve: Curve, s: float, h: float = 1e-3) -> np.ndarray:
    s0 = max(curve.start_param, min(s - h, curve.end_param))
    s1 = max(curve.start_param, min(s + h, curve.end_param))
    if s1 - s0 < 1e-9:
        return np.zeros(3)
    return (curve.tangent(s1) - curve.tangent(s0)) / (s1 - s0)


def _validate_lane_geometry(lane: Lane, path: str, findings: List[Finding]) -> None:
    chain = lane.chain
    for idx, curve in enumerate(chain.curves):
        span = curve.end_param - curve.start_param
        rel = abs(span - curve.length) / max(span, 1e-9)
        if rel > ARC_LENGTH_REL_TOL:
            findings.append(
                Finding(
                    "arc-length-mismatch",
                    f"{path}/Curve[{curve.identifier or idx}]",
                    f"declared span {span:.6f} differs from integrated length "
                    f"{curve.length:.6f} (rel {rel:.2e})",
                )
            )
        ts = np.linspace(0.0, 1.0, 33)
        vel = np.atleast_2d(curve.bezier.velocity(ts))
        norms = np.linalg.norm(vel, axis=-1)
        if np.any(norms < 1e-9):
            findings.append(
                Finding(
                    "degenerate-curve",
                    f"{path}/Curve[{curve.identifier or idx}]",
                    "curve derivative vanishes at a sample point",
                )
            )
            continue
        vz = np.abs(vel[:, 2] / norms)
        if np.any(vz > 1.0 - 1e-9):
            findings.append(
                Finding(
                    "vertical-tangent",
                    f"{path}/Curve[{curve.identifier or idx}]",
                    "tangent parallel to z axis; parallel lanes undefined there",
                )
            )
    declared = getattr(lane, "declared_endpoints", None)
    if declared:
        for idx, (curve, (sp, ep)) in enumerate(zip(chain.curves, declared)):
            if np.linalg.norm(curve.start_point() - sp) > 10 * POSITION_TOL:
                findings.append(
                    Finding(
                        "endpoint-mismatch",
                        f"{path}/Curve[{curve.identifier or idx}]",
                        "declared StartPoint does not match evaluated curve start",
                    )
                )
            if np.linalg.norm(curve.end_point() - ep) > 10 * POSITION_TOL:
                findings.append(
                    Finding(
                        "endpoint-mismatch",
                        f"{path}/Curve[{curve.identifier or idx}]",
                        "declared EndPoint does not match evaluated curve end",
                    )
                )
    for k, (prev, nxt) in enumerate(chain.junctions()):
        gap = float(np.linalg.norm(prev.end_point() - nxt.start_point()))
        if gap > POSITION_TOL:
            findings.append(
                Finding(
                    "chain-smoothness",
                    f"{path}/junction[{k}]",
                    f"position gap {gap:.3e} m between curve {k} end and curve {k + 1} start",
                )
            )
            continue
        t_prev = prev.tangent(prev.end_param)
        t_next = nxt.tangent(nxt.start_param)
        if float(np.linalg.norm(t_prev - t_next)) > DIRECTION_TOL:
            findings.append(
                Finding(
                    "chain-smoothness",
                    f"{path}/junction[{k}]",
                    "tangent direction mismatch at junction",
                )
            )
            continue
        a_prev = _unit(_second_derivative(prev, prev.end_param))
        a_next = _unit(_second_derivative(nxt, nxt.start_param))
        if a_prev is not None and a_next is not None:
            if float(np.linalg.norm(a_prev - a_next)) > 1e-2:
                findings.append(
                    Finding(
                        "chain-smoothness",
                        f"{path}/junction[{k}]",
                        "second-derivative direction mismatch at junction",
                    )
                )


def _validate_lane_separation(road: Road, path: str, findings: List[Finding]) -> None:
    if len(road.lanes) < 2:
        return
    center = road.center_lane
    min_sep = 2.0 * road.radius - 1e-6
    ts = np.linspace(0.05, 0.95, 7)
    for k in range(len(center.chain.curves)):
        for t in ts:
            pts = []
            for lane in road.lanes:
                curve = lane.chain.curves[k]
                pts.append(np.asarray(curve.mapped_point(float(t))))
            for x in range(len(pts)):
                for y in range(x + 1, len(pts)):
                    d = float(np.linalg.norm(pts[x] - pts[y]))
                    if d < min_sep:
                        findings.append(
                            Finding(
                                "lane-separation",
                                f"{path}",
                                f"lanes {road.lanes[x].lane_coord} and "
                                f"{road.lanes[y].lane_coord} only {d:.3f} m apart "
                                f"near curve {k}",
                            )
                        )
                        return


def validate_drs(drs: DroneRoadSystem) -> List[Finding]:
    """Check a parsed system and return findings (empty list when clean)."""
    findings: List[Finding] = []
    for road in drs.roads.values():
        rpath = f"Road[{road.identifier}]"
        if road.speed_limit <= 0:
            findings.append(Finding("speed-limit", rpath, f"speed limit {road.speed_limit} not positive"))
        seen: Dict[LaneCoord, str] = {}
        for lane in road.lanes:
            lpath = f"{rpath}/Lane[{lane.identifier}]"
            if lane.lane_coord in seen:
                findings.append(
                    Finding(
                        "duplicate-coordinate",
                        lpath,
                        f"lane coordinate {lane.lane_coord} already used by {seen[lane.lane_coord]}",
                    )
                )
            else:
                seen[lane.lane_coord] = lane.identifier
            _validate_lane_geometry(lane, lpath, findings)
        _validate_lane_separation(road, rpath, findings)
    for ramp in drs.ramps.values():
        rpath = f"Ramp[{ramp.identifier}]"
        if ramp.speed_limit <= 0:
            findings.append(Finding("speed-limit", rpath, f"speed limit {ramp.speed_limit} not positive"))
        _validate_lane_geometry(ramp.lane, f"{rpath}/Lane[{ramp.lane.identifier}]", findings)
        for side, attach in (("entry", ramp.entry), ("exit", ramp.exit)):
            if attach is None:
                continue
            lane = drs.roads[attach.road_id].lane(attach.lane_coord)
            lane_pt = lane.point(attach.param)
            ramp_pt = (
                ramp.lane.chain.point(ramp.lane.chain.start_param)
                if side == "entry"
                else ramp.lane.chain.point(ramp.lane.chain.end_param)
            )
            gap = float(np.linalg.norm(lane_pt - ramp_pt))
            if gap > 10 * POSITION_TOL:
                findings.append(
                    Finding(
                        "attachment-gap",
                        rpath,
                        f"{side} attachment point is {gap:.3e} m away from the ramp lane end",
                    )
                )
    # reachability: every ramp reachable from some entry point
    from .routing import build_route_graph  # local import, routing depends on drs

    graph = build_route_graph(drs)
    reachable = graph.reachable_from_entries()
    for ramp in drs.ramps.values():
        node = graph.node_id(ramp.lane.identifier, ramp.lane.chain.start_param)
        if node is None or node not in reachable:
            findings.append(
                Finding(
                    "unreachable-ramp",
                    f"Ramp[{ramp.identifier}]",
                    "ramp cannot be reached from any entry point",
                )
            )
    return findings
