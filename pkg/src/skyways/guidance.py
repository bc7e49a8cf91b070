"""Short-term decentralized greedy guidance.

Each invocation recomputes its inputs from the drone's own kinematic state,
the road map, and whatever neighbor data survived in the beacon-fed
neighbor table, then picks the candidate lane / achievable speed pair with
the lowest weighted cost: a quadratic speed cost, a position cost pulling
toward the target lane as the target point nears, and a collision cost
penalizing lane switches with nearby traffic.  A priority exemption lets
the drone that is ahead of all nearby neighbors switch at zero collision
cost, which breaks the mutual-deadlock symmetry.

Cost functions are pure; the per-drone state (neighbor table) is owned by
its simulation entity and mutated only through engine events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .drs import DroneRoadSystem, Lane, Ramp, Road
from .geometry import LaneCoord, hex_neighbors, hop_distance, param_convert
from .radio import Beacon

INF = float("inf")


@dataclass(frozen=True)
class GuidanceParams:
    """Algorithm weights and thresholds.

    eps0 and eps2 default to the stopping distance implied by the maximum
    speed and the normal invocation period; eps3 must stay below eps1.
    """

    kappa1: float = 10.0
    kappa2: float = 30000.0
    eps0: float = 30.0  # m, closing-point threshold
    eps1: float = 15.0  # m, nearby-drone threshold
    eps2: float = 30.0  # m, ahead-drone threshold
    eps3: float = 3.0  # m, switching-priority threshold
    c_max: float = 30000.0
    u_normal: float = 2.0  # s
    u_stop: float = 0.5  # s
    switch_time: float = 1.0  # s
    priority_enabled: bool = True  # test hook; the paper's rule is always on

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("cost weights must be non-negative")
        for name in ("eps0", "eps1", "eps2", "eps3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eps3 >= self.eps1:
            raise ValueError("eps3 must be smaller than eps1")


@dataclass
class NeighborEntry:
    sender_id: int
    sequence_number: int
    timestamp: float
    position: np.ndarray
    velocity: np.ndarray
    road_id: str
    lane_coord: LaneCoord
    lane_param: float

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


class NeighborTable:
    """Last-heard safety data per sender, scrubbed by timeout."""

    def __init__(self):
        self._entries: Dict[int, NeighborEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, sender_id: int) -> bool:
        return sender_id in self._entries

    def get(self, sender_id: int) -> Optional[NeighborEntry]:
        return self._entries.get(sender_id)

    def entries(self) -> Iterable[NeighborEntry]:
        return self._entries.values()

    def update(self, beacon: Beacon, now: float) -> bool:
        """Upsert from a received beacon; stale sequence numbers are ignored."""
        current = self._entries.get(beacon.sender_id)
        if current is not None and beacon.sequence_number <= current.sequence_number:
            return False
        self._entries[beacon.sender_id] = NeighborEntry(
            sender_id=beacon.sender_id,
            sequence_number=beacon.sequence_number,
            timestamp=now,
            position=beacon.position,
            velocity=beacon.velocity,
            road_id=beacon.road_id,
            lane_coord=LaneCoord(*beacon.lane_coord),
            lane_param=beacon.lane_param,
        )
        return True

    def scrub(self, now: float, timeout: float = 10.0) -> int:
        """Drop entries older than the timeout; returns how many were removed."""
        stale = [k for k, e in self._entries.items() if now - e.timestamp > timeout]
        for k in stale:
            del self._entries[k]
        return len(stale)

    def by_lane(self) -> Dict[Tuple[str, LaneCoord], List[NeighborEntry]]:
        buckets: Dict[Tuple[str, LaneCoord], List[NeighborEntry]] = {}
        for entry in self._entries.values():
            buckets.setdefault((entry.road_id, entry.lane_coord), []).append(entry)
        return buckets


@dataclass
class CandidateInfo:
    """Per-candidate-lane inputs of one invocation."""

    lane_coord: LaneCoord
    conv_pos: float  # own position converted onto this lane
    dist_ahead: float  # to the closest drone ahead (inf when none)
    v_ahead: float  # its speed (inf when none)
    n_same: int
    n_neigh: int
    d_nearby: float  # signed distance to the closest nearby drone (inf when none)
    v_nearby: float  # its speed (inf when none)
    v_star: float  # achievable speed on this lane


@dataclass
class GuidanceInputs:
    lane_coord: LaneCoord
    lane_param: float
    speed: float
    v_pref: float
    v_max: float
    target_lane: Optional[LaneCoord]
    target_param: Optional[float]
    d_t: Optional[float]  # along-lane distance to the target point
    candidates: List[CandidateInfo]
    blocking: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class GuidanceDecision:
    lane_coord: LaneCoord
    speed: float


def _closest_ahead(points: Iterable[float], t: float) -> float:
    """Distance to the smallest point strictly ahead of t (inf when none)."""
    best = INF
    for p in points:
        if p > t:
            best = min(best, p - t)
    return best


def compute_inputs(
    drs: DroneRoadSystem,
    road_id: str,
    lane: Lane,
    lane_param: float,
    speed: float,
    v_pref: float,
    table: NeighborTable,
    params: GuidanceParams,
    target: Optional[Tuple[LaneCoord, float]] = None,
) -> GuidanceInputs:
    """Recompute the per-invocation decision inputs.

    road_id is the beacon road identifier of the current container (a road
    or a ramp's inner road).  target names the lane/parameter point the
    drone must reach on this road, if any.
    """
    container = drs.container(road_id)
    if container is None:
        raise ValueError(f"unknown road id {road_id!r}")
    v_max = container.speed_limit
    buckets = table.by_lane()

    if isinstance(container, Ramp):
        return _compute_ramp_inputs(
            drs, container, lane, lane_param, speed, v_pref, v_max, buckets, params
        )

    road: Road = container
    lane_map = road.lane_map
    target_coord: Optional[LaneCoord] = None
    target_param: Optional[float] = None
    d_t: Optional[float] = None
    if target is not None:
        target_coord = LaneCoord(*target[0])
        target_param = float(target[1])
        target_lane = lane_map[target_coord]
        d_t = target_param - param_convert(lane.chain, target_lane.chain, lane_param)

    def drone_points(cand: Lane, conv_pos: float) -> List[Tuple[float, float]]:
        """(param, speed) of known drones on the candidate lane, including
        traffic already on outgoing ramps ahead, mapped through the
        connection point."""
        pts = [
            (e.lane_param, e.speed)
            for e in buckets.get((road.identifier, cand.lane_coord), [])
        ]
        for q, ramp in drs.outgoing_ramps(road.identifier, cand.lane_coord):
            if q < conv_pos:
                continue
            start = ramp.lane.chain.start_param
            for e in buckets.get((ramp.road_identifier, LaneCoord(0, 0)), []):
                pts.append((q + (e.lane_param - start), e.speed))
        return pts

    # candidate set: current lane plus existing immediate neighbors, minus
    # lanes whose next closing point is nearer than eps0 (with the
    # target-lane exception)
    coords = [lane.lane_coord] + [
        c for c in hex_neighbors(lane.lane_coord) if c in lane_map
    ]
    candidates: List[CandidateInfo] = []
    blocking: set = set()
    for coord in coords:
        cand = lane_map[coord]
        conv_pos = param_convert(lane.chain, cand.chain, lane_param)
        closing_ahead = _closest_ahead(cand.closing_points(), conv_pos)
        if closing_ahead < params.eps0:
            is_target_exception = (
                target_coord is not None
                and coord == target_coord
                and target_param < conv_pos + closing_ahead
            )
            if not is_target_exception:
                continue
        pts = drone_points(cand, conv_pos)
        dist_ahead = INF
        v_ahead = INF
        for p, v in pts:
            if p > conv_pos and p - conv_pos < dist_ahead:
                dist_ahead = p - conv_pos
                v_ahead = v
        n_same = 0
        if coord != lane.lane_coord:
            n_same = sum(
                1
                for e in buckets.get((road.identifier, coord), [])
                if abs(conv_pos - e.lane_param) < params.eps1
            )
        n_neigh = 0
        d_nearby = INF
        v_nearby = INF
        for ncoord in hex_neighbors(coord):
            nlane = lane_map.get(ncoord)
            if nlane is None:
                continue
            for e in buckets.get((road.identifier, ncoord), []):
                their = param_convert(nlane.chain, cand.chain, e.lane_param)
                if abs(conv_pos - their) < 2.0 * params.eps1:
                    n_neigh += 1
                    diff = conv_pos - their
                    if diff < d_nearby:
                        d_nearby = diff
                        v_nearby = e.speed
        v_star = min(v_pref, v_max)
        # The target-distance cap keeps a drone from crossing the target
        # point while it is not positioned to take the ramp; staying on the
        # target lane and crossing the point IS taking it, so that one
        # candidate is exempt.
        if d_t is not None and not (coord == target_coord == lane.lane_coord):
            v_star = min(v_star, d_t / params.switch_time)
        if dist_ahead <= params.eps2:
            v_star = min(v_star, v_ahead)
        v_star = max(v_star, 0.0)
        candidates.append(
            CandidateInfo(
                lane_coord=coord,
                conv_pos=conv_pos,
                dist_ahead=dist_ahead,
                v_ahead=v_ahead,
                n_same=n_same,
                n_neigh=n_neigh,
                d_nearby=d_nearby,
                v_nearby=v_nearby,
                v_star=v_star,
            )
        )
        if coord != target_coord:
            ramp_ahead = _closest_ahead(
                drs.ramp_points(road.identifier, coord), conv_pos
            )
            if ramp_ahead < params.eps0:
                blocking.add(coord)

    return GuidanceInputs(
        lane_coord=lane.lane_coord,
        lane_param=lane_param,
        speed=speed,
        v_pref=v_pref,
        v_max=v_max,
        target_lane=target_coord,
        target_param=target_param,
        d_t=d_t,
        candidates=candidates,
        blocking=frozenset(blocking),
    )


def _compute_ramp_inputs(
    drs: DroneRoadSystem,
    ramp: Ramp,
    lane: Lane,
    lane_param: float,
    speed: float,
    v_pref: float,
    v_max: float,
    buckets,
    params: GuidanceParams,
) -> GuidanceInputs:
    """Inputs on a ramp: one candidate lane, merge traffic folded in.

    A drone near the ramp end also takes the drones on the merge-target
    lane into account: traffic beyond the exit point maps through the
    connection as ahead traffic to follow, and traffic about to cross the
    merge point registers as a standing obstacle at the ramp end, so the
    ramp drone yields instead of merging into it.
    """
    pts = [
        (e.lane_param, e.speed)
        for e in buckets.get((ramp.road_identifier, LaneCoord(0, 0)), [])
    ]
    end = lane.chain.end_param
    if ramp.exit is not None:
        for e in buckets.get((ramp.exit.road_id, ramp.exit.lane_coord), []):
            if e.lane_param >= ramp.exit.param:
                pts.append((end + (e.lane_param - ramp.exit.param), e.speed))
            elif ramp.exit.param - e.lane_param <= params.eps2:
                pts.append((end, 0.0))
    dist_ahead = INF
    v_ahead = INF
    for p, v in pts:
        if p > lane_param and p - lane_param < dist_ahead:
            dist_ahead = p - lane_param
            v_ahead = v
    v_star = min(v_pref, v_max)
    if dist_ahead <= params.eps2:
        v_star = min(v_star, v_ahead)
    cand = CandidateInfo(
        lane_coord=lane.lane_coord,
        conv_pos=lane_param,
        dist_ahead=dist_ahead,
        v_ahead=v_ahead,
        n_same=0,
        n_neigh=0,
        d_nearby=INF,
        v_nearby=INF,
        v_star=max(v_star, 0.0),
    )
    return GuidanceInputs(
        lane_coord=lane.lane_coord,
        lane_param=lane_param,
        speed=speed,
        v_pref=v_pref,
        v_max=v_max,
        target_lane=None,
        target_param=None,
        d_t=None,
        candidates=[cand],
        blocking=frozenset(),
    )


# ---------------------------------------------------------------------------
# cost model
# ---------------------------------------------------------------------------

def speed_cost(v: float, v_pref: float) -> float:
    """Quadratic penalty on the shortfall from the preferred speed."""
    return (v_pref - v) ** 2


def f_dist(d: float) -> float:
    """Monotone decreasing weight of the target-point distance."""
    if d <= 15.0:
        return 20.0
    if d <= 30.0:
        return -(2.0 / 3.0) * d + 30.0
    return 300.0 / d


def position_cost(coord: LaneCoord, inputs: GuidanceInputs, params: GuidanceParams) -> float:
    if coord != inputs.target_lane and coord in inputs.blocking:
        return params.c_max
    if inputs.target_lane is not None:
        return f_dist(max(inputs.d_t, 0.0)) * hop_distance(coord, inputs.target_lane)
    return 0.0


def has_priority(cand: CandidateInfo, v: float, params: GuidanceParams) -> bool:
    """Whether the drone may switch despite nearby neighbor-lane traffic.

    True when it is ahead of all nearby drones by more than eps3, or ahead
    by less but faster than the closest one behind.
    """
    if cand.d_nearby > params.eps3:
        return True
    if 0.0 < cand.d_nearby <= params.eps3 and v > cand.v_nearby:
        return True
    return False


def collision_cost(
    cand: CandidateInfo,
    current: LaneCoord,
    v: float,
    params: GuidanceParams,
) -> float:
    if cand.lane_coord == current:
        return 0.0
    if cand.n_same > 0:
        return params.c_max
    if params.priority_enabled and has_priority(cand, v, params):
        return 0.0
    return float(cand.n_neigh)


def total_cost(cand: CandidateInfo, inputs: GuidanceInputs, params: GuidanceParams) -> float:
    return (
        speed_cost(cand.v_star, inputs.v_pref)
        + params.kappa1 * position_cost(cand.lane_coord, inputs, params)
        + params.kappa2 * collision_cost(cand, inputs.lane_coord, inputs.speed, params)
    )


def decide(
    inputs: GuidanceInputs,
    params: GuidanceParams,
    rng: np.random.Generator,
) -> GuidanceDecision:
    """Pick the minimum-cost candidate lane / achievable-speed pair.

    When every candidate costs at least C_max (or none exists) the drone
    stays put at speed zero.  Ties prefer the current lane, then the tied
    lanes closest to the target by hop distance, then a uniform draw.
    After selection the speed is forced to zero if the drone is not yet on
    its target lane but already within eps0 of the target point, so it
    cannot overshoot the switching point.
    """
    current = inputs.lane_coord
    if not inputs.candidates:
        return GuidanceDecision(current, 0.0)
    costs = [(total_cost(c, inputs, params), c) for c in inputs.candidates]
    best = min(cost for cost, _ in costs)
    if best >= params.c_max:
        return GuidanceDecision(current, 0.0)
    tied = [c for cost, c in costs if cost <= best + 1e-9]
    chosen: CandidateInfo
    current_tied = [c for c in tied if c.lane_coord == current]
    if current_tied:
        chosen = current_tied[0]
    else:
        if inputs.target_lane is not None:
            best_hop = min(hop_distance(c.lane_coord, inputs.target_lane) for c in tied)
            tied = [
                c for c in tied if hop_distance(c.lane_coord, inputs.target_lane) == best_hop
            ]
        tied.sort(key=lambda c: (c.lane_coord.i, c.lane_coord.j))
        chosen = tied[int(rng.integers(0, len(tied)))] if len(tied) > 1 else tied[0]
    v_out = chosen.v_star
    if (
        inputs.target_lane is not None
        and current != inputs.target_lane
        and inputs.d_t is not None
        and inputs.d_t < params.eps0
    ):
        v_out = 0.0
    return GuidanceDecision(chosen.lane_coord, v_out)


def next_invocation_delay(speed: float, params: GuidanceParams) -> float:
    """Normal period while moving, the short period while stopped."""
    return params.u_stop if speed <= 0.0 else params.u_normal
