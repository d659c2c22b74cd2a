"""Scenario configuration: schema, defaults, JSON loading, and presets.

A scenario is a single JSON document; every omitted field takes the
default below, so the empty document ``{}`` reproduces the reference
latency experiment (one node, back-to-back 10 s windows, 30 simulated
minutes, anomaly probability 0.3, published heuristic thresholds).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .energy import EnergyTable, OperationCost
from .engine import LatencyModel
from .model import (
    BatteryState,
    ConditionLabel,
    ConfigurationError,
    HeuristicParams,
    InferenceMode,
)
from .node import PropertyCommand, PropertyMethod
from .oracle import DEFAULT_PROFILES, TierAccuracyProfile

DEFAULT_DURATION_MS = 1_800_000.0  # 30 simulated minutes
DEFAULT_SEED = 7


@dataclass(frozen=True)
class NodeConfig:
    node_id: str = "node-0"
    initial_mode: str = "S"
    battery_capacity_j: float = 18_648.0
    battery_voltage_v: float = 3.7
    sleep_period_ms: float = 0.0  # back-to-back windows; battery studies use 30 s

    def make_battery(self) -> BatteryState:
        return BatteryState(capacity_j=self.battery_capacity_j,
                            voltage_v=self.battery_voltage_v)


@dataclass(frozen=True)
class TimedCommand:
    at_ms: float
    node_id: str
    name: str
    method: str
    value: object | None = None

    def to_property_command(self) -> PropertyCommand:
        try:
            method = PropertyMethod(self.method)
        except ValueError:
            raise ConfigurationError(f"unknown property method {self.method!r}") from None
        return PropertyCommand(self.node_id, self.name, method, self.value)


@dataclass(frozen=True)
class Scenario:
    """Validated inputs for one simulation run."""

    name: str = "scenario"
    duration_ms: float = DEFAULT_DURATION_MS
    seed: int = DEFAULT_SEED
    nodes: tuple[NodeConfig, ...] = (NodeConfig(),)
    params: HeuristicParams = field(default_factory=HeuristicParams)
    energy: EnergyTable = field(default_factory=EnergyTable)
    latency: LatencyModel = field(default_factory=LatencyModel)
    profiles: dict[InferenceMode, TierAccuracyProfile] = field(
        default_factory=lambda: dict(DEFAULT_PROFILES)
    )
    anomaly_probability: float = 0.3
    healthy_split: float = 0.5
    degraded_split: float = 0.5
    anomaly_labels: tuple[int, ...] = (2, 3)
    poll_enabled: bool = True
    poll_every_cycles: int = 3
    empty_poll_fraction: float = 0.1
    gateway_service_ms: float = 0.0
    cloud_service_ms: float = 0.0
    provisioning_stage_ms: float = 100.0
    adaptive: bool = True
    drop_probability: float = 0.0
    request_timeout_ms: float = 10_000.0
    commands: tuple[TimedCommand, ...] = ()
    out_dir: str | None = None  # default artifact directory; CLI --out wins

    def __post_init__(self) -> None:
        if self.duration_ms < 0:
            raise ConfigurationError(f"duration_ms must be >= 0, got {self.duration_ms}")
        seen = set()
        for cfg in self.nodes:
            if not cfg.node_id or any(c in cfg.node_id for c in ",\n\r"):
                raise ConfigurationError(
                    f"node id {cfg.node_id!r} must be non-empty and free of "
                    "commas/newlines (it names CSV rows)"
                )
            if cfg.node_id in seen:
                raise ConfigurationError(f"duplicate node id {cfg.node_id!r}")
            seen.add(cfg.node_id)
            InferenceMode.parse(cfg.initial_mode)
            if cfg.battery_capacity_j < 0:
                raise ConfigurationError(
                    f"node {cfg.node_id}: battery_capacity_j must be >= 0"
                )
            if cfg.sleep_period_ms < 0:
                raise ConfigurationError(
                    f"node {cfg.node_id}: sleep_period_ms must be >= 0"
                )
        for mode in InferenceMode:
            if mode not in self.profiles:
                raise ConfigurationError(f"missing accuracy profile for mode {mode.value}")
        for label in self.anomaly_labels:
            if label not in (0, 1, 2, 3):
                raise ConfigurationError(f"anomaly label {label} outside 0..3")
        if self.poll_every_cycles < 1:
            raise ConfigurationError("poll_every_cycles must be >= 1")
        if not 0.0 <= self.empty_poll_fraction <= 1.0:
            raise ConfigurationError("empty_poll_fraction must be in [0, 1]")
        if not 0.0 <= self.anomaly_probability <= 1.0:
            raise ConfigurationError("anomaly_probability must be in [0, 1]")
        if self.gateway_service_ms < 0 or self.cloud_service_ms < 0:
            raise ConfigurationError("tier service times must be >= 0")
        if self.provisioning_stage_ms < 0:
            raise ConfigurationError("provisioning_stage_ms must be >= 0")
        if not 0.0 <= self.drop_probability < 1.0:
            raise ConfigurationError("drop_probability must be in [0, 1)")
        if self.request_timeout_ms <= 0:
            raise ConfigurationError("request_timeout_ms must be > 0")

    def anomaly_label_set(self) -> frozenset[ConditionLabel]:
        return frozenset(ConditionLabel(v) for v in self.anomaly_labels)


# -- JSON loading ---------------------------------------------------------


def _ctx(source: str, path: str, err: Exception) -> ConfigurationError:
    return ConfigurationError(f"{source}: {path}: {err}")


def _take(data: dict, key: str, default):
    return data.pop(key) if key in data else default


def _reject_unknown(data: dict, source: str, path: str) -> None:
    if data:
        raise ConfigurationError(
            f"{source}: {path}: unknown field(s) {sorted(data)} (check spelling)"
        )


def _build_nodes(raw, source: str) -> tuple[NodeConfig, ...]:
    nodes = []
    for i, entry in enumerate(raw):
        entry = dict(entry)
        try:
            nodes.append(
                NodeConfig(
                    node_id=str(_take(entry, "node_id", f"node-{i}")),
                    initial_mode=str(_take(entry, "initial_mode", "S")),
                    battery_capacity_j=float(_take(entry, "battery_capacity_j", 18_648.0)),
                    battery_voltage_v=float(_take(entry, "battery_voltage_v", 3.7)),
                    sleep_period_ms=float(_take(entry, "sleep_period_ms", 0.0)),
                )
            )
        except (TypeError, ValueError) as err:
            raise _ctx(source, f"nodes[{i}]", err) from None
        _reject_unknown(entry, source, f"nodes[{i}]")
    return tuple(nodes)


def _build_params(raw: dict, source: str) -> HeuristicParams:
    raw = dict(raw)
    defaults = HeuristicParams()
    try:
        params = HeuristicParams(
            low_battery_pct=float(_take(raw, "low_battery_pct", defaults.low_battery_pct)),
            sensor_escalate_count=int(_take(raw, "sensor_escalate_count",
                                            defaults.sensor_escalate_count)),
            gateway_deescalate_count=int(_take(raw, "gateway_deescalate_count",
                                               defaults.gateway_deescalate_count)),
            gateway_escalate_count=int(_take(raw, "gateway_escalate_count",
                                             defaults.gateway_escalate_count)),
            queue_limit=int(_take(raw, "queue_limit", defaults.queue_limit)),
            cloud_deescalate_count=int(_take(raw, "cloud_deescalate_count",
                                             defaults.cloud_deescalate_count)),
            cloud_escalate_count=_take(raw, "cloud_escalate_count", None),
            history_depth_sensor=int(_take(raw, "history_depth_sensor",
                                           defaults.history_depth_sensor)),
            history_depth_gateway=int(_take(raw, "history_depth_gateway",
                                            defaults.history_depth_gateway)),
            history_depth_cloud=int(_take(raw, "history_depth_cloud",
                                          defaults.history_depth_cloud)),
        )
    except (TypeError, ValueError) as err:
        raise _ctx(source, "heuristics", err) from None
    _reject_unknown(raw, source, "heuristics")
    return params


def _build_cost(raw: dict, default: OperationCost, source: str, path: str) -> OperationCost:
    raw = dict(raw)
    try:
        cost = OperationCost(
            size_kb=float(_take(raw, "size_kb", default.size_kb)),
            duration_ms=float(_take(raw, "duration_ms", default.duration_ms)),
            energy_mj=float(_take(raw, "energy_mj", default.energy_mj)),
        )
    except (TypeError, ValueError) as err:
        raise _ctx(source, path, err) from None
    _reject_unknown(raw, source, path)
    return cost


def _build_energy(raw: dict, source: str) -> EnergyTable:
    raw = dict(raw)
    defaults = EnergyTable()
    try:
        table = EnergyTable(
            sampling=_build_cost(_take(raw, "sampling", {}), defaults.sampling,
                                 source, "energy.sampling"),
            local_inference=_build_cost(_take(raw, "local_inference", {}),
                                        defaults.local_inference, source,
                                        "energy.local_inference"),
            compression=_build_cost(_take(raw, "compression", {}), defaults.compression,
                                    source, "energy.compression"),
            radio_tx=_build_cost(_take(raw, "radio_tx", {}), defaults.radio_tx,
                                 source, "energy.radio_tx"),
            deep_sleep_current_ua=float(_take(raw, "deep_sleep_current_ua",
                                              defaults.deep_sleep_current_ua)),
            supply_voltage_v=float(_take(raw, "supply_voltage_v",
                                         defaults.supply_voltage_v)),
        )
    except (TypeError, ValueError) as err:
        raise _ctx(source, "energy", err) from None
    _reject_unknown(raw, source, "energy")
    return table


def _build_latency(raw: dict, source: str) -> LatencyModel:
    raw = dict(raw)
    defaults = LatencyModel()
    try:
        model = LatencyModel(
            sensor_ms=float(_take(raw, "sensor_ms", defaults.sensor_ms)),
            gateway_ms=float(_take(raw, "gateway_ms", defaults.gateway_ms)),
            cloud_ms=float(_take(raw, "cloud_ms", defaults.cloud_ms)),
            jitter_sensor_ms=float(_take(raw, "jitter_sensor_ms", 0.0)),
            jitter_gateway_ms=float(_take(raw, "jitter_gateway_ms", 0.0)),
            jitter_cloud_ms=float(_take(raw, "jitter_cloud_ms", 0.0)),
        )
    except (TypeError, ValueError) as err:
        raise _ctx(source, "latency", err) from None
    _reject_unknown(raw, source, "latency")
    return model


def _build_profiles(raw: dict, source: str) -> dict[InferenceMode, TierAccuracyProfile]:
    profiles = dict(DEFAULT_PROFILES)
    for key, entry in raw.items():
        mode = InferenceMode.parse(key)
        entry = dict(entry)
        try:
            profiles[mode] = TierAccuracyProfile(
                tier=mode,
                accuracy=float(_take(entry, "accuracy", DEFAULT_PROFILES[mode].accuracy)),
                recall_per_class=tuple(
                    float(r) for r in _take(entry, "recall_per_class",
                                            DEFAULT_PROFILES[mode].recall_per_class)
                ),
            )
        except (TypeError, ValueError) as err:
            raise _ctx(source, f"profiles.{key}", err) from None
        _reject_unknown(entry, source, f"profiles.{key}")
    return profiles


def _build_commands(raw, source: str) -> tuple[TimedCommand, ...]:
    commands = []
    for i, entry in enumerate(raw):
        entry = dict(entry)
        try:
            cmd = TimedCommand(
                at_ms=float(_take(entry, "at_ms", 0.0)),
                node_id=str(entry.pop("node_id")),
                name=str(entry.pop("name")),
                method=str(_take(entry, "method", "SET")),
                value=_take(entry, "value", None),
            )
            cmd.to_property_command()  # validates the method name
        except KeyError as err:
            raise ConfigurationError(
                f"{source}: commands[{i}]: missing required field {err}"
            ) from None
        except (TypeError, ValueError) as err:
            raise _ctx(source, f"commands[{i}]", err) from None
        _reject_unknown(entry, source, f"commands[{i}]")
        commands.append(cmd)
    return tuple(commands)


def scenario_from_dict(data: dict, source: str = "<scenario>") -> Scenario:
    """Build and validate a Scenario from parsed JSON, defaulting omitted fields."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: top level must be a JSON object")
    data = dict(data)
    ground_truth = dict(_take(data, "ground_truth", {}))
    poll = dict(_take(data, "poll", {}))
    out_dir = _take(data, "out_dir", None)
    try:
        scenario = Scenario(
            name=str(_take(data, "name", "scenario")),
            duration_ms=float(_take(data, "duration_ms", DEFAULT_DURATION_MS)),
            seed=int(_take(data, "seed", DEFAULT_SEED)),
            nodes=_build_nodes(_take(data, "nodes", [{}]), source),
            params=_build_params(_take(data, "heuristics", {}), source),
            energy=_build_energy(_take(data, "energy", {}), source),
            latency=_build_latency(_take(data, "latency", {}), source),
            profiles=_build_profiles(_take(data, "profiles", {}), source),
            anomaly_probability=float(_take(ground_truth, "anomaly_probability", 0.3)),
            healthy_split=float(_take(ground_truth, "healthy_split", 0.5)),
            degraded_split=float(_take(ground_truth, "degraded_split", 0.5)),
            anomaly_labels=tuple(int(v) for v in _take(data, "anomaly_labels", (2, 3))),
            poll_enabled=bool(_take(poll, "enabled", True)),
            poll_every_cycles=int(_take(poll, "every_cycles", 3)),
            empty_poll_fraction=float(_take(poll, "empty_fraction", 0.1)),
            gateway_service_ms=float(_take(data, "gateway_service_ms", 0.0)),
            cloud_service_ms=float(_take(data, "cloud_service_ms", 0.0)),
            provisioning_stage_ms=float(_take(data, "provisioning_stage_ms", 100.0)),
            adaptive=bool(_take(data, "adaptive", True)),
            drop_probability=float(_take(data, "drop_probability", 0.0)),
            request_timeout_ms=float(_take(data, "request_timeout_ms", 10_000.0)),
            commands=_build_commands(_take(data, "commands", []), source),
            out_dir=None if out_dir is None else str(out_dir),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigurationError(f"{source}: {err}") from None
    _reject_unknown(ground_truth, source, "ground_truth")
    _reject_unknown(poll, source, "poll")
    _reject_unknown(data, source, "top level")
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; parse errors carry line/column positions."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigurationError(f"{path}: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigurationError(
            f"{path}:{err.lineno}:{err.colno}: invalid JSON: {err.msg}"
        ) from None
    return scenario_from_dict(data, source=str(path))


# -- presets ----------------------------------------------------------------


def preset_latency() -> Scenario:
    """The round-trip latency experiment: one node, 30 minutes, 10 s windows.

    The seed is chosen so the default run visits all three inference
    modes; per-mode latency series would otherwise be empty.
    """
    return Scenario(name="paper-latency")


def preset_battery_bounds() -> Scenario:
    """Projected-lifetime run: fixed on-device mode, 30 s sleep, run to exhaustion.

    Heuristics and command polling are disabled so the simulated lifetime
    matches the closed-form bound cycle for cycle.
    """
    return Scenario(
        name="paper-battery-bounds",
        duration_ms=500 * 3_600_000.0,  # past any possible lifetime
        nodes=(NodeConfig(sleep_period_ms=30_000.0),),
        adaptive=False,
        poll_enabled=False,
    )


def preset_savings() -> Scenario:
    """Zero-duration scenario whose summary carries the cycle-energy comparison."""
    return Scenario(
        name="paper-savings",
        duration_ms=0.0,
        nodes=(NodeConfig(sleep_period_ms=30_000.0),),
    )


PRESETS = {
    "paper-latency": preset_latency,
    "paper-battery-bounds": preset_battery_bounds,
    "paper-savings": preset_savings,
}


def load_preset(name: str) -> Scenario:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return builder()


def with_overrides(
    scenario: Scenario, seed: int | None = None, duration_ms: float | None = None
) -> Scenario:
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    if duration_ms is not None:
        scenario = replace(scenario, duration_ms=duration_ms)
    return scenario
