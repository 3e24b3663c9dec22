"""Experiment description: defaults, TOML loading and strict validation.

The default scenario is the standard evaluation setup: 50 mobile hosts in
a 1000 x 1000 m area, 250 m radio range, 2 Mbit/s channel, 512-byte data
payload, random-waypoint motion between 1 and 20 m/s with zero pause,
3-second request and hello intervals, 300 simulated seconds.

Config files are TOML.  Unknown keys are rejected by name; every value is
range-checked.  When no explicit flow table is given, ``sources`` nodes
are drawn at random, each multicasts to its own group, and every source
is a receiver of every other source's group.
"""

import sys
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .protocol import VARIANTS, ProtocolParams
from .recovery import RecoveryConfig
from .security import SecurityConfig
from .wire import DATA_HEADER_BYTES, NO_DELAY_BOUND

DEFAULT_FLOW_START = 0.5        # data begins after the first discovery round
DEFAULT_STOP_GRACE = 1.0        # data ends early enough for in-flight packets to land


class ScenarioError(ValueError):
    """Config rejected; the message names the offending key."""


@dataclass(frozen=True)
class FlowSpec:
    source: int
    group: int
    rate: float                     # packets/second
    b_req: float                    # requested bits/second
    max_delay: float = NO_DELAY_BOUND
    start_at: float = DEFAULT_FLOW_START
    stop_at: float = 0.0            # resolved against duration when loaded


@dataclass(frozen=True)
class Move:
    node: int
    at: float
    to: Tuple[float, float]


@dataclass(frozen=True)
class Scenario:
    nodes: int = 50
    area: Tuple[float, float] = (1000.0, 1000.0)
    range: float = 250.0
    capacity: float = 2e6
    duration: float = 300.0
    payload: int = 512
    speed: Tuple[float, float] = (1.0, 20.0)
    pause: float = 0.0
    sources: int = 5
    rate: float = 4.0
    b_req: Optional[float] = None           # default: rate x framed packet size
    variant: str = "proposed"
    channel_model: str = "csma"
    seed: int = 0
    flows: Optional[Tuple[FlowSpec, ...]] = None
    receivers: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    positions: Optional[Tuple[Tuple[float, float], ...]] = None
    moves: Tuple[Move, ...] = ()
    protocol: Dict[str, float] = field(default_factory=dict)
    recovery: RecoveryConfig = RecoveryConfig()
    security: SecurityConfig = SecurityConfig()

    def protocol_params(self) -> ProtocolParams:
        try:
            params = ProtocolParams(variant=self.variant, **self.protocol)
            params.validate()
        except (TypeError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc
        return params

    def default_b_req(self) -> float:
        if self.b_req is not None:
            return self.b_req
        return self.rate * (self.payload + DATA_HEADER_BYTES) * 8

    def default_stop(self) -> float:
        return max(0.0, self.duration - DEFAULT_STOP_GRACE)

    def validate(self) -> None:
        if self.nodes < 1:
            raise ScenarioError("nodes must be at least 1")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ScenarioError("area dimensions must be positive")
        if self.range <= 0:
            raise ScenarioError("range must be positive")
        if self.capacity <= 0:
            raise ScenarioError("capacity must be positive")
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        if self.payload < 0:
            raise ScenarioError("payload must be non-negative")
        if not (0 < self.speed[0] <= self.speed[1]):
            raise ScenarioError("speed interval must satisfy 0 < min <= max")
        if self.pause < 0:
            raise ScenarioError("pause must be non-negative")
        if self.flows is None and not (0 <= self.sources <= self.nodes):
            raise ScenarioError("sources must lie between 0 and nodes")
        if self.rate <= 0:
            raise ScenarioError("rate must be positive")
        if self.b_req is not None and self.b_req <= 0:
            raise ScenarioError("b_req must be positive")
        if self.variant not in VARIANTS:
            raise ScenarioError(f"variant must be one of {VARIANTS}")
        if self.channel_model not in ("ideal", "csma"):
            raise ScenarioError("channel_model must be 'ideal' or 'csma'")
        self.protocol_params()
        if self.flows is not None:
            for i, flow in enumerate(self.flows):
                if not (0 <= flow.source < self.nodes):
                    raise ScenarioError(f"flows[{i}].source out of range")
                if flow.rate <= 0:
                    raise ScenarioError(f"flows[{i}].rate must be positive")
                if flow.b_req <= 0:
                    raise ScenarioError(f"flows[{i}].b_req must be positive")
                if not (0 <= flow.start_at < flow.stop_at):
                    raise ScenarioError(f"flows[{i}] must have 0 <= start_at < stop_at")
        for group, members in self.receivers.items():
            for m in members:
                if not (0 <= m < self.nodes):
                    raise ScenarioError(f"receivers[{group}] contains invalid node {m}")
        if self.positions is not None:
            if len(self.positions) != self.nodes:
                raise ScenarioError("positions must list one (x, y) pair per node")
            for i, (x, y) in enumerate(self.positions):
                if not (0 <= x <= self.area[0] and 0 <= y <= self.area[1]):
                    raise ScenarioError(f"positions[{i}] lies outside the area")
        for i, move in enumerate(self.moves):
            if not (0 <= move.node < self.nodes):
                raise ScenarioError(f"moves[{i}].node out of range")
            if move.at < 0:
                raise ScenarioError(f"moves[{i}].at must be non-negative")
        if self.recovery.detect_timeout <= 0 or self.recovery.reply_timeout <= 0:
            raise ScenarioError("recovery timers must be positive")
        if self.recovery.ttl_hops < 1:
            raise ScenarioError("recovery.ttl_hops must be at least 1")
        if self.security.enabled:
            if len(self.security.snodes) < 2:
                raise ScenarioError("security.snodes needs at least 2 entries")
            for s in self.security.snodes:
                if not (0 <= s < self.nodes):
                    raise ScenarioError(f"security.snodes contains invalid node {s}")
            if self.security.join_ttl < 1:
                raise ScenarioError("security.join_ttl must be at least 1")

    def to_config_dict(self) -> dict:
        """The scenario as plain config keys (defaults round-trip exactly)."""
        return {
            "nodes": self.nodes,
            "area": list(self.area),
            "range": self.range,
            "capacity": self.capacity,
            "duration": self.duration,
            "payload": self.payload,
            "speed": list(self.speed),
            "pause": self.pause,
            "sources": self.sources,
            "rate": self.rate,
            "variant": self.variant,
            "channel_model": self.channel_model,
            "seed": self.seed,
        }


_TOP_KEYS = {
    "nodes", "area", "range", "capacity", "duration", "payload", "speed", "pause",
    "sources", "rate", "b_req", "variant", "channel_model", "seed",
    "flows", "receivers", "positions", "moves", "protocol", "recovery", "security",
}
_FLOW_KEYS = {"source", "group", "rate", "b_req", "max_delay", "start_at", "stop_at"}
_PROTOCOL_KEYS = {
    "hello_interval", "rreq_interval", "time_interval",
    "t_explored", "t_registered", "t_reserved", "fg_timeout", "alpha",
}
_RECOVERY_KEYS = {"enabled", "detect_timeout", "reply_timeout", "ttl_hops", "buffer_capacity"}
_SECURITY_KEYS = {"enabled", "snodes", "join_ttl", "auth_key"}
_MOVE_KEYS = {"node", "at", "to"}


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ScenarioError(f"unknown key '{key}' in {where}")


def _pair(value, key: str) -> Tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ScenarioError(f"'{key}' must be a 2-element list")
    return (float(value[0]), float(value[1]))


def scenario_from_dict(data: dict) -> Scenario:
    _reject_unknown(data, _TOP_KEYS, "scenario")
    base = Scenario()
    kwargs: dict = {}
    for key in ("nodes", "payload", "sources", "seed"):
        if key in data:
            kwargs[key] = int(data[key])
    for key in ("range", "capacity", "duration", "pause", "rate", "b_req"):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("variant", "channel_model"):
        if key in data:
            kwargs[key] = str(data[key])
    if "area" in data:
        kwargs["area"] = _pair(data["area"], "area")
    if "speed" in data:
        kwargs["speed"] = _pair(data["speed"], "speed")
    if "protocol" in data:
        _reject_unknown(data["protocol"], _PROTOCOL_KEYS, "[protocol]")
        kwargs["protocol"] = {k: float(v) for k, v in data["protocol"].items()}
    if "recovery" in data:
        _reject_unknown(data["recovery"], _RECOVERY_KEYS, "[recovery]")
        kwargs["recovery"] = replace(RecoveryConfig(), **data["recovery"])
    if "security" in data:
        _reject_unknown(data["security"], _SECURITY_KEYS, "[security]")
        sec = dict(data["security"])
        if "snodes" in sec:
            sec["snodes"] = tuple(int(s) for s in sec["snodes"])
        kwargs["security"] = replace(SecurityConfig(), **sec)
    if "positions" in data:
        kwargs["positions"] = tuple(_pair(p, "positions") for p in data["positions"])
    if "moves" in data:
        moves = []
        for m in data["moves"]:
            _reject_unknown(m, _MOVE_KEYS, "[[moves]]")
            moves.append(Move(int(m["node"]), float(m["at"]), _pair(m["to"], "moves.to")))
        kwargs["moves"] = tuple(moves)
    if "receivers" in data:
        kwargs["receivers"] = {
            int(group): tuple(int(n) for n in members)
            for group, members in data["receivers"].items()
        }

    duration = kwargs.get("duration", base.duration)
    payload = kwargs.get("payload", base.payload)
    rate = kwargs.get("rate", base.rate)
    if "flows" in data:
        flows = []
        for i, f in enumerate(data["flows"]):
            _reject_unknown(f, _FLOW_KEYS, f"[[flows]] entry {i}")
            if "source" not in f or "group" not in f:
                raise ScenarioError(f"flows[{i}] needs 'source' and 'group'")
            flow_rate = float(f.get("rate", rate))
            default_b = flow_rate * (payload + DATA_HEADER_BYTES) * 8
            flows.append(FlowSpec(
                source=int(f["source"]),
                group=int(f["group"]),
                rate=flow_rate,
                b_req=float(f.get("b_req", kwargs.get("b_req", default_b))),
                max_delay=float(f.get("max_delay", NO_DELAY_BOUND)),
                start_at=float(f.get("start_at", DEFAULT_FLOW_START)),
                stop_at=float(f.get("stop_at", duration - DEFAULT_STOP_GRACE)),
            ))
        kwargs["flows"] = tuple(flows)

    try:
        scenario = replace(base, **kwargs)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc
    scenario.validate()
    return scenario


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"config parse error in {path}: {exc}")
    return scenario_from_dict(data)
