"""Route graph and end-to-end path planning over a drone road system.

Nodes are (lane, parameter point) pairs: lane starts and ends plus every
ramp attachment, shared across the lanes of a road so that lateral hop
edges line up.  Edge weights are travelled meters; a lane hop costs one
lattice step (2r).  Planning is plain shortest path; the guidance
algorithm only consumes the resulting road/ramp sequence and per-segment
target points.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .geometry import LaneCoord, hop_distance
from .drs import DroneRoadSystem, Lane, Ramp, Road


class NoRouteError(Exception):
    """Destination unreachable from the start point."""


_FRAC_KEY = 1e-9


@dataclass(frozen=True)
class RouteSegment:
    """One leg of an end-to-end path: a road or a ramp.

    For road segments, target_lane_coord/target_param name the lane and
    parameter point the drone must reach, either the entry attachment of
    the ramp it takes next (via_ramp_id set) or its final exit point.
    Ramp segments have no lane choice; their exit is implicit.
    """

    kind: str  # 'road' | 'ramp'
    container_id: str
    beacon_road_id: str
    entry_lane_coord: LaneCoord
    entry_param: float
    target_lane_coord: Optional[LaneCoord]
    target_param: Optional[float]
    via_ramp_id: Optional[str]
    is_final: bool


@dataclass
class RoutePlan:
    """Executable end-to-end path: ordered segments plus total planned cost."""

    segments: List[RouteSegment]
    weight: float

    def uses_ramp(self) -> bool:
        return any(seg.kind == "ramp" for seg in self.segments)


class RouteGraph:
    """Directed graph of key parameter points over lanes and ramps."""

    def __init__(self, drs: DroneRoadSystem):
        self.drs = drs
        self._nodes: List[Tuple[str, float]] = []
        self._index: Dict[Tuple[str, int], int] = {}
        self._adj: List[List[Tuple[int, float, str, Optional[str]]]] = []
        self._lane_nodes: Dict[str, List[Tuple[float, int]]] = {}
        self._container_of: Dict[str, Tuple[str, object]] = {}
        self._build()

    # -- node bookkeeping -------------------------------------------------------

    @staticmethod
    def _param_key(param: float) -> int:
        return int(round(param / 1e-6))

    def node_id(self, lane_id: str, param: float) -> Optional[int]:
        return self._index.get((lane_id, self._param_key(param)))

    def node(self, node_id: int) -> Tuple[str, float]:
        return self._nodes[node_id]

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    def edges_from(self, node_id: int) -> List[Tuple[int, float, str, Optional[str]]]:
        return self._adj[node_id]

    def _add_node(self, lane_id: str, param: float) -> int:
        key = (lane_id, self._param_key(param))
        existing = self._index.get(key)
        if existing is not None:
            return existing
        node_id = len(self._nodes)
        self._nodes.append((lane_id, param))
        self._index[key] = node_id
        self._adj.append([])
        self._lane_nodes.setdefault(lane_id, []).append((param, node_id))
        return node_id

    def _add_edge(self, src: int, dst: int, weight: float, kind: str,
                  ramp_id: Optional[str] = None) -> None:
        self._adj[src].append((dst, weight, kind, ramp_id))

    # -- construction ------------------------------------------------------------

    @staticmethod
    def _open_interval(lane: Lane, p1: float, p2: float) -> bool:
        """True when [p1, p2) contains no closed curve stretch."""
        for a, b in lane.closed_intervals():
            if a < p2 - 1e-9 and b > p1 + 1e-9:
                return False
        return True

    def _build(self) -> None:
        drs = self.drs
        for road in drs.roads.values():
            self._container_of[road.identifier] = ("road", road)
            self._build_road(road)
        for ramp in drs.ramps.values():
            self._container_of[ramp.identifier] = ("ramp", ramp)
            lane = ramp.lane
            n_start = self._add_node(lane.identifier, lane.chain.start_param)
            n_end = self._add_node(lane.identifier, lane.chain.end_param)
            self._add_edge(n_start, n_end, lane.chain.length, "along", None)
            if ramp.entry is not None:
                src_lane = drs.roads[ramp.entry.road_id].lane(ramp.entry.lane_coord)
                attach = self.node_id(src_lane.identifier, ramp.entry.param)
                self._add_edge(attach, n_start, 0.0, "enter-ramp", ramp.identifier)
            if ramp.exit is not None:
                dst_lane = drs.roads[ramp.exit.road_id].lane(ramp.exit.lane_coord)
                attach = self.node_id(dst_lane.identifier, ramp.exit.param)
                self._add_edge(n_end, attach, 0.0, "exit-ramp", ramp.identifier)
        self._sort_lane_nodes()
        self._entries = [
            self._add_node(ap.lane.identifier, ap.param) for ap in drs.entry_points()
        ]
        self._exits = [
            self._add_node(ap.lane.identifier, ap.param) for ap in drs.exit_points()
        ]

    def _build_road(self, road: Road) -> None:
        drs = self.drs
        # gather key points per lane, expressed as (curve index, fraction)
        fracs: List[Tuple[int, float]] = []

        def frac_of(lane: Lane, param: float) -> Tuple[int, float]:
            k = lane.chain.curve_index(param)
            c = lane.chain.curves[k]
            return (k, (param - c.start_param) / (c.end_param - c.start_param))

        def push(fr: Tuple[int, float]) -> None:
            for k, f in fracs:
                if k == fr[0] and abs(f - fr[1]) < _FRAC_KEY:
                    return
            fracs.append(fr)

        for lane in road.lanes:
            push(frac_of(lane, lane.chain.start_param))
            push(frac_of(lane, lane.chain.end_param))
            for param in drs.ramp_points(road.identifier, lane.lane_coord):
                push(frac_of(lane, param))
            for param, _ in drs.incoming_ramps(road.identifier, lane.lane_coord):
                push(frac_of(lane, param))
        fracs.sort()

        per_lane_nodes: Dict[LaneCoord, List[Tuple[float, int]]] = {}
        for lane in road.lanes:
            nodes = []
            for k, f in fracs:
                c = lane.chain.curves[k]
                param = c.start_param + f * (c.end_param - c.start_param)
                nodes.append((param, self._add_node(lane.identifier, param)))
            nodes.sort(key=lambda item: item[0])
            per_lane_nodes[lane.lane_coord] = nodes
            # along-lane edges where the stretch is open
            for (p1, n1), (p2, n2) in zip(nodes[:-1], nodes[1:]):
                if p2 - p1 < 1e-9:
                    continue
                if self._open_interval(lane, p1, p2):
                    self._add_edge(n1, n2, p2 - p1, "along", None)
        # lateral hop edges between adjacent lanes at matching points
        coords = list(per_lane_nodes)
        for ca in coords:
            for cb in coords:
                if hop_distance(ca, cb) != 1:
                    continue
                lane_a = road.lane(ca)
                lane_b = road.lane(cb)
                for (pa, na), (pb, nb) in zip(per_lane_nodes[ca], per_lane_nodes[cb]):
                    if lane_a.is_open_at(pa) and lane_b.is_open_at(pb):
                        if pb < lane_b.chain.end_param - 1e-9:
                            self._add_edge(na, nb, 2.0 * road.radius, "hop", None)

    def _sort_lane_nodes(self) -> None:
        for nodes in self._lane_nodes.values():
            nodes.sort(key=lambda item: item[0])

    def ensure_point(self, lane_id: str, param: float) -> int:
        """Node at an arbitrary open lane point, splicing along-lane edges."""
        existing = self.node_id(lane_id, param)
        if existing is not None:
            return existing
        lane = self.drs.lane_by_id(lane_id)
        node = self._add_node(lane_id, param)
        nodes = self._lane_nodes[lane_id]
        nodes.sort(key=lambda item: item[0])
        idx = next(i for i, (p, n) in enumerate(nodes) if n == node)
        if idx > 0:
            p_prev, n_prev = nodes[idx - 1]
            if self._open_interval(lane, p_prev, param):
                self._add_edge(n_prev, node, param - p_prev, "along", None)
        if idx + 1 < len(nodes):
            p_next, n_next = nodes[idx + 1]
            if self._open_interval(lane, param, p_next):
                self._add_edge(node, n_next, p_next - param, "along", None)
        return node

    # -- queries -----------------------------------------------------------------

    def entry_nodes(self) -> List[int]:
        return list(self._entries)

    def exit_nodes(self) -> List[int]:
        return list(self._exits)

    def reachable_from_entries(self) -> Set[int]:
        seen: Set[int] = set()
        stack = list(self._entries)
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            for dst, _, _, _ in self._adj[node]:
                if dst not in seen:
                    stack.append(dst)
        return seen

    def shortest(self, src: int, dst: int) -> Tuple[float, List[int]]:
        """Dijkstra; deterministic tie-breaks by node id."""
        dist = {src: 0.0}
        prev: Dict[int, int] = {}
        heap: List[Tuple[float, int]] = [(0.0, src)]
        done: Set[int] = set()
        while heap:
            d, node = heapq.heappop(heap)
            if node in done:
                continue
            done.add(node)
            if node == dst:
                break
            for nxt, w, _, _ in self._adj[node]:
                nd = d + w
                if nxt not in dist or nd < dist[nxt] - 1e-12:
                    dist[nxt] = nd
                    prev[nxt] = node
                    heapq.heappush(heap, (nd, nxt))
        if dst not in done:
            raise NoRouteError(f"no route from node {src} to node {dst}")
        path = [dst]
        while path[-1] != src:
            path.append(prev[path[-1]])
        path.reverse()
        return dist[dst], path

    def edge_between(self, a: int, b: int) -> Tuple[float, str, Optional[str]]:
        best = None
        for dst, w, kind, ramp_id in self._adj[a]:
            if dst == b and (best is None or w < best[0]):
                best = (w, kind, ramp_id)
        if best is None:
            raise KeyError(f"no edge {a} -> {b}")
        return best


def build_route_graph(drs: DroneRoadSystem) -> RouteGraph:
    """Directed travel graph: along-lane, lateral hop, and ramp edges."""
    return RouteGraph(drs)


def _container_of_lane(drs: DroneRoadSystem, lane_id: str):
    for road in drs.roads.values():
        for lane in road.lanes:
            if lane.identifier == lane_id:
                return ("road", road)
    for ramp in drs.ramps.values():
        if ramp.lane.identifier == lane_id:
            return ("ramp", ramp)
    raise KeyError(lane_id)


def plan_path(
    graph: RouteGraph,
    start: Tuple[str, float],
    dest: Tuple[str, float],
) -> RoutePlan:
    """Shortest route between two lane points, compressed into segments."""
    drs = graph.drs
    src = graph.ensure_point(*start)
    dst = graph.ensure_point(*dest)
    weight, nodes = graph.shortest(src, dst)

    segments: List[RouteSegment] = []
    # walk the node path, splitting at ramp transitions
    lane_id, param = graph.node(nodes[0])
    kind, container = _container_of_lane(drs, lane_id)
    entry_lane = drs.lane_by_id(lane_id)
    entry_coord = entry_lane.lane_coord
    entry_param = param

    def close_segment(target_coord, target_param, via_ramp, final):
        if kind == "road":
            segments.append(
                RouteSegment(
                    kind="road",
                    container_id=container.identifier,
                    beacon_road_id=container.identifier,
                    entry_lane_coord=entry_coord,
                    entry_param=entry_param,
                    target_lane_coord=target_coord,
                    target_param=target_param,
                    via_ramp_id=via_ramp,
                    is_final=final,
                )
            )
        else:
            segments.append(
                RouteSegment(
                    kind="ramp",
                    container_id=container.identifier,
                    beacon_road_id=container.road_identifier,
                    entry_lane_coord=LaneCoord(0, 0),
                    entry_param=entry_param,
                    target_lane_coord=None,
                    target_param=None,
                    via_ramp_id=None,
                    is_final=final,
                )
            )

    for a, b in zip(nodes[:-1], nodes[1:]):
        _, edge_kind, ramp_id = graph.edge_between(a, b)
        if edge_kind == "enter-ramp":
            lane_a_id, param_a = graph.node(a)
            lane_a = drs.lane_by_id(lane_a_id)
            close_segment(lane_a.lane_coord, param_a, ramp_id, final=False)
            ramp = drs.ramps[ramp_id]
            kind, container = "ramp", ramp
            entry_coord = LaneCoord(0, 0)
            entry_param = ramp.lane.chain.start_param
        elif edge_kind == "exit-ramp":
            close_segment(None, None, None, final=False)
            ramp = drs.ramps[ramp_id]
            road = drs.roads[ramp.exit.road_id]
            kind, container = "road", road
            entry_coord = ramp.exit.lane_coord
            entry_param = ramp.exit.param

    dest_lane = drs.lane_by_id(graph.node(nodes[-1])[0])
    dest_param = graph.node(nodes[-1])[1]
    if kind == "road":
        close_segment(dest_lane.lane_coord, dest_param, None, final=True)
    else:
        close_segment(None, None, None, final=True)
    return RoutePlan(segments=segments, weight=weight)
