"""Shared domain types for the tiered-inference network simulator.

Value types only: inference modes, node lifecycle states, the anomaly
history tracker, heuristic thresholds, battery state, and predictions.
Behavior lives in the other modules; everything here is constructors
plus validation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

MAX_HISTORY_DEPTH = 64  # history must fit one machine word


class ConfigurationError(ValueError):
    """Raised when a parameter or scenario value violates its contract."""


class SimulationError(RuntimeError):
    """Raised on internal inconsistencies that indicate a simulator bug."""


class InferenceMode(enum.Enum):
    """Where a node's predictions are computed.

    The total order SENSOR < GATEWAY < CLOUD defines escalation (toward
    the cloud) and de-escalation (toward the sensor).
    """

    SENSOR = "S"
    GATEWAY = "G"
    CLOUD = "C"

    @property
    def rank(self) -> int:
        return _MODE_RANK[self]

    def __lt__(self, other: "InferenceMode") -> bool:
        if not isinstance(other, InferenceMode):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: "InferenceMode") -> bool:
        if not isinstance(other, InferenceMode):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: "InferenceMode") -> bool:
        if not isinstance(other, InferenceMode):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: "InferenceMode") -> bool:
        if not isinstance(other, InferenceMode):
            return NotImplemented
        return self.rank >= other.rank

    @classmethod
    def parse(cls, text: str) -> "InferenceMode":
        try:
            return cls(text)
        except ValueError:
            raise ConfigurationError(f"unknown inference mode {text!r}") from None


_MODE_RANK = {InferenceMode.SENSOR: 0, InferenceMode.GATEWAY: 1, InferenceMode.CLOUD: 2}


class NodeState(enum.Enum):
    """Lifecycle state of a sensor node."""

    INITIAL = "INITIAL"
    UNLOCKED = "UNLOCKED"
    LOCKED = "LOCKED"
    WORKING = "WORKING"
    IDLE = "IDLE"

    @classmethod
    def parse(cls, text: str) -> "NodeState":
        try:
            return cls(text)
        except ValueError:
            raise ConfigurationError(f"unknown node state {text!r}") from None


class ConditionLabel(enum.IntEnum):
    """Operational-health class emitted by the classifiers."""

    GOOD = 0
    ACCEPTABLE = 1
    UNSATISFACTORY = 2
    UNACCEPTABLE = 3


#: Labels that count as an anomaly for the binary anomaly bit.
DEFAULT_ANOMALY_LABELS = frozenset(
    {ConditionLabel.UNSATISFACTORY, ConditionLabel.UNACCEPTABLE}
)


@dataclass(frozen=True)
class AnomalyTracker:
    """Fixed-depth bitmask of the most recent binary anomaly predictions.

    ``bits`` holds the last ``length`` predictions, newest in bit 0;
    ``length`` counts how many valid entries have accumulated since the
    last reset and saturates at ``depth``.
    """

    bits: int = 0
    length: int = 0
    depth: int = 32

    def __post_init__(self) -> None:
        if not 1 <= self.depth <= MAX_HISTORY_DEPTH:
            raise ConfigurationError(
                f"history depth must be in 1..{MAX_HISTORY_DEPTH}, got {self.depth}"
            )
        if not 0 <= self.length <= self.depth:
            raise ConfigurationError(
                f"history length {self.length} outside 0..depth {self.depth}"
            )
        if self.bits < 0 or self.bits >> self.length:
            raise ConfigurationError(
                f"history bits {self.bits:#x} has bits set beyond length {self.length}"
            )

    @property
    def warmed_up(self) -> bool:
        """True once the history window is full."""
        return self.length >= self.depth


def new_tracker(depth: int) -> AnomalyTracker:
    """Create an empty anomaly tracker of the given depth (1..64)."""
    return AnomalyTracker(bits=0, length=0, depth=depth)


@dataclass(frozen=True)
class HeuristicParams:
    """Thresholds consumed by the three adaptive-inference heuristics.

    ``cloud_escalate_count`` is recorded for completeness but never read:
    the cloud heuristic has no escalation branch (it is already the top
    tier), so no behavior is attached to it.
    """

    low_battery_pct: float = 20.0
    sensor_escalate_count: int = 4
    gateway_deescalate_count: int = 4
    gateway_escalate_count: int = 8
    queue_limit: int = 4
    cloud_deescalate_count: int = 2
    cloud_escalate_count: int | None = None
    history_depth_sensor: int = 32
    history_depth_gateway: int = 16
    history_depth_cloud: int = 8

    def __post_init__(self) -> None:
        if not 0.0 < self.low_battery_pct < 100.0:
            raise ConfigurationError(
                f"low_battery_pct must be in (0, 100), got {self.low_battery_pct}"
            )
        for name in ("history_depth_sensor", "history_depth_gateway", "history_depth_cloud"):
            depth = getattr(self, name)
            if not 1 <= depth <= MAX_HISTORY_DEPTH:
                raise ConfigurationError(
                    f"{name} must be in 1..{MAX_HISTORY_DEPTH}, got {depth}"
                )
        if not 0 < self.sensor_escalate_count <= self.history_depth_sensor:
            raise ConfigurationError(
                "sensor_escalate_count must satisfy "
                f"0 < value <= history_depth_sensor, got {self.sensor_escalate_count}"
            )
        if not 0 < self.gateway_deescalate_count < self.gateway_escalate_count:
            raise ConfigurationError(
                "gateway thresholds must satisfy 0 < de-escalate < escalate, got "
                f"{self.gateway_deescalate_count} / {self.gateway_escalate_count}"
            )
        if self.gateway_escalate_count > self.history_depth_gateway:
            raise ConfigurationError(
                f"gateway_escalate_count {self.gateway_escalate_count} exceeds "
                f"history_depth_gateway {self.history_depth_gateway}"
            )
        if not 0 < self.cloud_deescalate_count <= self.history_depth_cloud:
            raise ConfigurationError(
                "cloud_deescalate_count must satisfy "
                f"0 < value <= history_depth_cloud, got {self.cloud_deescalate_count}"
            )
        if self.queue_limit < 1:
            raise ConfigurationError(f"queue_limit must be >= 1, got {self.queue_limit}")

    def history_depth(self, mode: InferenceMode) -> int:
        if mode is InferenceMode.SENSOR:
            return self.history_depth_sensor
        if mode is InferenceMode.GATEWAY:
            return self.history_depth_gateway
        return self.history_depth_cloud


@dataclass
class BatteryState:
    """Battery bookkeeping in joules; percent level is derived on demand.

    Storing consumed joules rather than a percent avoids cumulative
    rounding across many small debits.
    """

    capacity_j: float = 18648.0  # 1,400 mAh x 3.7 V
    consumed_j: float = 0.0
    voltage_v: float = 3.7

    def __post_init__(self) -> None:
        if self.capacity_j < 0:
            raise ConfigurationError(f"battery capacity must be >= 0 J, got {self.capacity_j}")
        if not 0 <= self.consumed_j <= max(self.capacity_j, 0):
            raise ConfigurationError(
                f"consumed {self.consumed_j} J outside 0..capacity {self.capacity_j} J"
            )
        if self.voltage_v <= 0:
            raise ConfigurationError(f"battery voltage must be > 0 V, got {self.voltage_v}")

    @property
    def level_pct(self) -> float:
        """Remaining charge as a percentage in [0, 100]."""
        if self.capacity_j <= 0:
            return 0.0
        return 100.0 * (self.capacity_j - self.consumed_j) / self.capacity_j

    @property
    def dead(self) -> bool:
        return self.consumed_j >= self.capacity_j

    def drain(self, energy_mj: float) -> None:
        """Consume energy (millijoules); clamps at capacity once exhausted."""
        if self.dead:
            return
        self.consumed_j = min(self.capacity_j, self.consumed_j + energy_mj / 1000.0)


@dataclass(frozen=True)
class Prediction:
    """One classifier verdict for one node at one timestep."""

    node_id: str
    step: int
    label: ConditionLabel
    anomaly_bit: int
    origin: InferenceMode

    def __post_init__(self) -> None:
        if self.anomaly_bit not in (0, 1):
            raise ConfigurationError(f"anomaly bit must be 0 or 1, got {self.anomaly_bit}")


@dataclass
class SimEvent:
    """One observable simulation event; doubles as a trace record.

    Fields that do not apply to a given event kind stay ``None`` and are
    emitted as empty CSV cells. ``detail`` carries free-form context and
    is only exported in the structured (JSONL) trace.
    """

    timestamp_ms: float
    node_id: str
    kind: str
    mode: str | None = None
    state: str | None = None
    history_hex: str | None = None
    tau: int | None = None
    sigma: int | None = None
    queue_len: int | None = None
    latency_ms: float | None = None
    battery_pct: float | None = None
    detail: str | None = None


class SimClock:
    """Monotonic simulation clock in milliseconds."""

    def __init__(self, start_ms: float = 0.0) -> None:
        self.now_ms = start_ms

    def advance_to(self, t_ms: float) -> None:
        if t_ms < self.now_ms:
            raise SimulationError(f"clock moved backwards: {self.now_ms} -> {t_ms}")
        self.now_ms = t_ms
