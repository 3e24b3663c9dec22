"""Random-waypoint motion, evaluated lazily.

A node's trajectory is a chain of MotionState legs.  Within a leg the
position is an analytic interpolation from origin toward waypoint, so the
simulation only needs one event per arrival instead of periodic position
ticks.  All draws come from the run RNG in a fixed order: waypoint x,
waypoint y, speed.
"""

import math
import random
from dataclasses import dataclass
from typing import Tuple

from .engine import SimTime

Point = Tuple[float, float]


@dataclass(frozen=True)
class MotionState:
    origin: Point
    waypoint: Point
    speed: float            # m/s
    depart_at: SimTime      # motion starts here; the node sits at origin before
    pause_until: SimTime    # end of the pause preceding departure

    def arrival_at(self) -> SimTime:
        dist = math.dist(self.origin, self.waypoint)
        return self.depart_at + dist / self.speed


def pick_waypoint(
    rng: random.Random,
    area: Tuple[float, float],
    speed_interval: Tuple[float, float],
    origin: Point,
    depart_at: SimTime,
) -> MotionState:
    """Draw a fresh leg: waypoint uniform over the area, speed uniform over the interval."""
    width, height = area
    lo, hi = speed_interval
    assert 0 < lo <= hi and width > 0 and height > 0
    wx = rng.uniform(0.0, width)
    wy = rng.uniform(0.0, height)
    speed = rng.uniform(lo, hi)
    return MotionState((origin[0], origin[1]), (wx, wy), speed, depart_at, depart_at)


def static_state(pos: Point) -> MotionState:
    """A leg that never moves; used for scripted/static topologies."""
    return MotionState(pos, pos, 1.0, 0.0, 0.0)


def position_at(state: MotionState, t: SimTime) -> Point:
    """Position along the leg; clamped at origin before departure and at the waypoint after arrival."""
    ox, oy = state.origin
    if t <= state.depart_at:
        return (ox, oy)
    wx, wy = state.waypoint
    dx, dy = wx - ox, wy - oy
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return (ox, oy)
    travelled = state.speed * (t - state.depart_at)
    if travelled >= dist:
        return (wx, wy)
    f = travelled / dist
    return (ox + dx * f, oy + dy * f)


def on_arrival(
    state: MotionState,
    pause: float,
    rng: random.Random,
    area: Tuple[float, float],
    speed_interval: Tuple[float, float],
) -> MotionState:
    """Chain the next leg once the waypoint is reached: pause, then a fresh draw."""
    arrival = state.arrival_at()
    return pick_waypoint(rng, area, speed_interval, state.waypoint, arrival + pause)
