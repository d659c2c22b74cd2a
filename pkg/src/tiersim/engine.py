"""Deterministic discrete-event engine for the three-tier network.

Binds sensor nodes, one gateway tier, and one cloud tier: message
delivery under a per-mode latency model, the gateway inference queue,
per-node-per-tier anomaly histories, heuristic invocation after every
prediction, and the blank-response mechanism that lets nodes measure
round-trip inference latency.

Determinism: events execute in (timestamp, insertion sequence) order and
every random stream is derived from the scenario seed by labeled
hashing, so identical (scenario, seed) pairs replay byte-identical
traces.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

from . import heuristics
from .energy import EnergyLedger, debit, debit_sleep
from .model import (
    AnomalyTracker,
    ConfigurationError,
    InferenceMode,
    NodeState,
    SimClock,
    SimEvent,
    SimulationError,
    new_tracker,
)
from .node import (
    CycleStep,
    InvalidTransitionError,
    LifecycleEvent,
    PropertyCommand,
    PropertyMethod,
    PROPERTY_TABLE,
    SensorNode,
)
from .oracle import ClassifierOracle, GroundTruthProcess, derive_seed, draw_ground_truth

if TYPE_CHECKING:
    from .scenario import Scenario

#: The four provisioning handshake stages, in order.
PROVISIONING_STAGES = (
    "device-discovery",
    "session-establishment",
    "configuration",
    "connection-termination",
)

#: Legal inference-mode transitions (self-loops excluded): a node being
#: served on-device can only be escalated to the gateway, while gateway-
#: and cloud-served nodes can move to any tier.
MODE_TRANSITION_GRAPH: dict[InferenceMode, frozenset[InferenceMode]] = {
    InferenceMode.SENSOR: frozenset({InferenceMode.GATEWAY}),
    InferenceMode.GATEWAY: frozenset({InferenceMode.SENSOR, InferenceMode.CLOUD}),
    InferenceMode.CLOUD: frozenset({InferenceMode.SENSOR, InferenceMode.GATEWAY}),
}


@dataclass(frozen=True)
class Message:
    """One wire message between a node and a tier."""

    kind: str
    src: str
    dst: str
    send_time_ms: float
    payload_kb: float = 0.0
    battery_pct: float | None = None
    request_send_time_ms: float | None = None  # echoed in every response
    mode: InferenceMode | None = None  # commanded mode for mode-command


@dataclass(frozen=True)
class LatencyModel:
    """Per-mode end-to-end response latency, optionally jittered.

    The constants are end-to-end (transport plus inference) under ideal
    load; queueing delay at a busy tier adds on top. Jitter is zero-mean
    uniform with the configured half-width.
    """

    sensor_ms: float = 3.33
    gateway_ms: float = 148.15
    cloud_ms: float = 641.71
    jitter_sensor_ms: float = 0.0
    jitter_gateway_ms: float = 0.0
    jitter_cloud_ms: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sensor_ms", "gateway_ms", "cloud_ms"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"latency {name} must be > 0")
        for mode in InferenceMode:
            if self.jitter(mode) < 0 or self.jitter(mode) >= self.constant(mode):
                raise ConfigurationError(
                    f"jitter for {mode.value} must be in [0, latency) to keep "
                    "latencies positive"
                )

    def constant(self, mode: InferenceMode) -> float:
        if mode is InferenceMode.SENSOR:
            return self.sensor_ms
        if mode is InferenceMode.GATEWAY:
            return self.gateway_ms
        return self.cloud_ms

    def jitter(self, mode: InferenceMode) -> float:
        if mode is InferenceMode.SENSOR:
            return self.jitter_sensor_ms
        if mode is InferenceMode.GATEWAY:
            return self.jitter_gateway_ms
        return self.jitter_cloud_ms

    def draw(self, mode: InferenceMode, rng: random.Random) -> float:
        half_width = self.jitter(mode)
        base = self.constant(mode)
        if half_width == 0:
            return base
        return base + rng.uniform(-half_width, half_width)

    def with_jitter_fraction(self, fraction: float) -> "LatencyModel":
        """Copy with per-mode jitter half-widths set to a fraction of each constant."""
        if not 0 <= fraction < 1:
            raise ConfigurationError(f"jitter fraction must be in [0, 1), got {fraction}")
        return replace(
            self,
            jitter_sensor_ms=fraction * self.sensor_ms,
            jitter_gateway_ms=fraction * self.gateway_ms,
            jitter_cloud_ms=fraction * self.cloud_ms,
        )


def measure_latency(response: Message, now_ms: float) -> float:
    """Round-trip latency of a response: now minus the echoed request send time."""
    if response.request_send_time_ms is None:
        raise SimulationError(f"response {response.kind} does not echo a request send time")
    latency = now_ms - response.request_send_time_ms
    if latency < 0:
        raise SimulationError(
            f"negative latency {latency} ms for response sent at "
            f"{response.request_send_time_ms} ms"
        )
    return latency


@dataclass
class GatewayTier:
    """The gateway: inference queue, per-node histories, pending node commands."""

    mode: InferenceMode = InferenceMode.GATEWAY
    service_ms: float = 0.0
    queue: deque[Message] = field(default_factory=deque)
    busy: bool = False
    trackers: dict[str, AnomalyTracker] = field(default_factory=dict)
    pending_commands: dict[str, deque[PropertyCommand]] = field(default_factory=dict)
    gateway_id: str = "gateway-0"
    provisioned_nodes: list[str] = field(default_factory=list)

    def queue_len(self) -> int:
        return len(self.queue)

    def apply_command(self, cmd: PropertyCommand) -> tuple[str, object | None]:
        """Handle a gateway-targeted property command; returns (status, value)."""
        spec = PROPERTY_TABLE.get(cmd.name)
        if spec is None or spec.target != "gateway":
            return "unknown-property", None
        if cmd.method not in spec.methods:
            return "method-not-allowed", None
        if cmd.name == "gateway_id":
            return "ok", self.gateway_id
        if cmd.name == "provisioned_nodes":
            if cmd.method is PropertyMethod.GET:
                return "ok", list(self.provisioned_nodes)
            if cmd.method is PropertyMethod.ADD:
                self.provisioned_nodes.append(str(cmd.value))
                return "ok", None
            self.provisioned_nodes = [str(v) for v in (cmd.value or [])]
            return "ok", None
        return "unknown-property", None


@dataclass
class CloudTier:
    """The cloud: unbounded inference queue and per-node histories."""

    mode: InferenceMode = InferenceMode.CLOUD
    service_ms: float = 0.0
    queue: deque[Message] = field(default_factory=deque)
    busy: bool = False
    trackers: dict[str, AnomalyTracker] = field(default_factory=dict)

    def queue_len(self) -> int:
        return len(self.queue)


@dataclass(order=True)
class _Scheduled:
    time_ms: float
    seq: int
    kind: str = field(compare=False)
    node_id: str = field(compare=False)
    data: dict = field(compare=False, default_factory=dict)


class Simulator:
    """Single-threaded event loop advancing all nodes and tiers."""

    def __init__(self, scenario: "Scenario") -> None:
        self.scenario = scenario
        self.params = scenario.params
        self.table = scenario.energy
        self.latency_model = scenario.latency
        self.clock = SimClock()
        self._heap: list[_Scheduled] = []
        self._seq = 0
        self.records: list[SimEvent] = []
        self.ledger = EnergyLedger()

        self.nodes: dict[str, SensorNode] = {}
        self.gateway = GatewayTier(service_ms=scenario.gateway_service_ms)
        self.cloud = CloudTier(service_ms=scenario.cloud_service_ms)
        self._truth: dict[str, GroundTruthProcess] = {}
        self._oracles: dict[tuple[str, InferenceMode], ClassifierOracle] = {}
        self._pred_step: dict[str, int] = {}
        self._latency_rng: dict[str, random.Random] = {}
        self._drop_rng: dict[str, random.Random] = {}
        self._dead_reported: set[str] = set()

        for cfg in scenario.nodes:
            self._add_node(cfg)
        for cmd in scenario.commands:
            self.schedule(cmd.at_ms, "command-arrival", cmd.node_id, command=cmd.to_property_command())

    def _add_node(self, cfg) -> None:
        if cfg.node_id in self.nodes:
            raise ConfigurationError(f"duplicate node id {cfg.node_id!r}")
        node = SensorNode(
            node_id=cfg.node_id,
            mode=InferenceMode.parse(cfg.initial_mode),
            tracker=new_tracker(self.params.history_depth_sensor),
            battery=cfg.make_battery(),
            sleep_period_ms=cfg.sleep_period_ms,
        )
        self.nodes[cfg.node_id] = node
        self.gateway.trackers[cfg.node_id] = new_tracker(self.params.history_depth_gateway)
        self.cloud.trackers[cfg.node_id] = new_tracker(self.params.history_depth_cloud)
        self.gateway.pending_commands[cfg.node_id] = deque()
        seed = self.scenario.seed
        self._truth[cfg.node_id] = GroundTruthProcess(
            seed=derive_seed(seed, cfg.node_id, "truth"),
            anomaly_probability=self.scenario.anomaly_probability,
            healthy_split=self.scenario.healthy_split,
            degraded_split=self.scenario.degraded_split,
        )
        anomaly_labels = self.scenario.anomaly_label_set()
        for mode in InferenceMode:
            self._oracles[(cfg.node_id, mode)] = ClassifierOracle.create(
                seed, cfg.node_id, self.scenario.profiles[mode],
                anomaly_labels=anomaly_labels,
            )
        self._pred_step[cfg.node_id] = 0
        self._latency_rng[cfg.node_id] = random.Random(derive_seed(seed, cfg.node_id, "latency"))
        self._drop_rng[cfg.node_id] = random.Random(derive_seed(seed, cfg.node_id, "drop"))
        stage_ms = self.scenario.provisioning_stage_ms
        for i in range(len(PROVISIONING_STAGES)):
            self.schedule(stage_ms * (i + 1), "provision-stage", cfg.node_id, stage=i)

    # -- scheduling -----------------------------------------------------

    def schedule(self, time_ms: float, kind: str, node_id: str, **data) -> None:
        """Queue an event; ties at equal timestamps keep insertion order."""
        if time_ms < self.clock.now_ms:
            raise SimulationError(
                f"event {kind} scheduled at {time_ms} ms, before current time "
                f"{self.clock.now_ms} ms"
            )
        self._seq += 1
        heapq.heappush(self._heap, _Scheduled(time_ms, self._seq, kind, node_id, data))

    def run_until(self, t_end_ms: float) -> list[SimEvent]:
        """Execute all events up to and including ``t_end_ms``; returns the trace."""
        while self._heap and self._heap[0].time_ms <= t_end_ms:
            ev = heapq.heappop(self._heap)
            self.clock.advance_to(ev.time_ms)
            self._dispatch(ev)
        if t_end_ms >= self.clock.now_ms:
            self.clock.advance_to(t_end_ms)
        return self.records

    def run(self) -> list[SimEvent]:
        return self.run_until(self.scenario.duration_ms)

    # -- trace ------------------------------------------------------------

    def _record(
        self,
        node: SensorNode | None,
        kind: str,
        *,
        tracker: AnomalyTracker | None = None,
        queue_len: int | None = None,
        latency_ms: float | None = None,
        battery_pct: float | None = None,
        node_id: str | None = None,
        detail: str | None = None,
    ) -> SimEvent:
        if node is not None:
            node_id = node.node_id
            if battery_pct is None:
                battery_pct = node.battery.level_pct
        has_tracker = tracker is not None
        event = SimEvent(
            timestamp_ms=self.clock.now_ms,
            node_id=node_id or "",
            kind=kind,
            mode=node.mode.value if node else None,
            state=node.state.value if node else None,
            history_hex=format(tracker.bits, "x") if has_tracker else None,
            tau=tracker.length if has_tracker else None,
            sigma=heuristics.anomaly_count(tracker) if has_tracker else None,
            queue_len=queue_len,
            latency_ms=latency_ms,
            battery_pct=battery_pct,
            detail=detail,
        )
        self.records.append(event)
        return event

    # -- dispatch -----------------------------------------------------

    def _dispatch(self, ev: _Scheduled) -> None:
        handler = getattr(self, "_on_" + ev.kind.replace("-", "_"), None)
        if handler is None:
            raise SimulationError(f"no handler for event kind {ev.kind!r}")
        handler(ev)

    # -- provisioning and lifecycle ------------------------------------

    def _on_provision_stage(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        stage = ev.data["stage"]
        self._record(node, "provision-stage", detail=PROVISIONING_STAGES[stage])
        if stage == len(PROVISIONING_STAGES) - 1:
            self.schedule(self.clock.now_ms, "lifecycle", node.node_id,
                          event=LifecycleEvent.PROVISIONING_COMPLETE)

    def _on_lifecycle(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        event: LifecycleEvent = ev.data["event"]
        try:
            node.step_state(event)
        except InvalidTransitionError as err:
            self._record(node, "protocol-violation", detail=str(err))
            return
        self._record(node, event.value)
        self._after_lifecycle(node, event)

    def _after_lifecycle(self, node: SensorNode, event: LifecycleEvent) -> None:
        stage_ms = self.scenario.provisioning_stage_ms
        # The gateway auto-orchestrates the happy path to WORKING. A
        # config-reject leaves the node UNLOCKED awaiting operator input.
        if event is LifecycleEvent.PROVISIONING_COMPLETE:
            self.gateway.provisioned_nodes.append(node.node_id)
            self.schedule(self.clock.now_ms + stage_ms, "lifecycle", node.node_id,
                          event=LifecycleEvent.PROPERTIES_UPDATED)
        elif event is LifecycleEvent.RESET_COMMAND:
            self.schedule(self.clock.now_ms + stage_ms, "lifecycle", node.node_id,
                          event=LifecycleEvent.PROPERTIES_UPDATED)
        elif event is LifecycleEvent.PROPERTIES_UPDATED:
            self.schedule(self.clock.now_ms + stage_ms, "lifecycle", node.node_id,
                          event=LifecycleEvent.CONFIG_CONFIRM)
        elif event is LifecycleEvent.CONFIG_CONFIRM:
            self.schedule(self.clock.now_ms, "cycle-start", node.node_id)

    # -- duty cycle -----------------------------------------------------

    def _on_cycle_start(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        if node.state is not NodeState.WORKING:
            return  # idled or reset mid-cycle; lifecycle events restart cycling
        if node.battery.dead:
            if node.node_id not in self._dead_reported:
                self._dead_reported.add(node.node_id)
                self._record(node, "battery-dead")
            return
        poll_due = (
            self.scenario.poll_enabled
            and node.mode is InferenceMode.SENSOR
            and (node.cycle_index + 1) % self.scenario.poll_every_cycles == 0
        )
        plan = node.plan_cycle(self.clock.now_ms, self.table, poll_due=poll_due)
        for step in plan.steps:
            self.schedule(step.at_ms, "op", node.node_id, step=step)
        if plan.predict_at is not None:
            self.schedule(plan.predict_at, "predict-local", node.node_id)
        if plan.request_at is not None:
            self.schedule(plan.request_at, "radio-window", node.node_id)
        if plan.poll_at is not None:
            self.schedule(plan.poll_at, "poll", node.node_id)
        if plan.end_ms is not None:
            self.schedule(plan.end_ms, "cycle-start", node.node_id)

    def _on_op(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        step: CycleStep = ev.data["step"]
        if step.energy_op == "sleep":
            debit_sleep(node.battery, self.ledger, step.duration_ms, self.table,
                        self.clock.now_ms, node.node_id)
        elif step.energy_op is not None:
            debit(node.battery, self.ledger, step.energy_op, self.table,
                  self.clock.now_ms, node.node_id)
        self._record(node, step.kind, detail=f"duration_ms={step.duration_ms}")

    # -- predictions ------------------------------------------------------

    def _next_truth(self, node_id: str):
        step = self._pred_step[node_id]
        self._pred_step[node_id] = step + 1
        return step, draw_ground_truth(self._truth[node_id], step)

    def _on_predict_local(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        if node.state is not NodeState.WORKING:
            return
        step, truth = self._next_truth(node.node_id)
        prediction = self._oracles[(node.node_id, InferenceMode.SENSOR)].predict(truth, step)
        node.tracker = heuristics.update_history(node.tracker, prediction.anomaly_bit, True)
        latency = self.latency_model.draw(InferenceMode.SENSOR, self._latency_rng[node.node_id])
        self._record(
            node, "predict", tracker=node.tracker, latency_ms=latency,
            detail=f"label={prediction.label.value} truth={truth.value}",
        )
        if not self.scenario.adaptive:
            return
        verdict = heuristics.sensor_heuristic(node.tracker, node.battery.level_pct, self.params)
        if verdict is not node.mode:
            self._apply_mode_change(node, verdict, origin="sensor-heuristic")

    def _apply_mode_change(self, node: SensorNode, new_mode: InferenceMode, origin: str) -> None:
        """Switch a node's mode and reset its history at every tier.

        Heuristic-driven changes must stay on the legal transition graph;
        a violation means the serving tier ran the wrong heuristic.
        """
        previous = node.mode
        if not node.set_mode(new_mode):
            return
        if origin.endswith("-heuristic") and new_mode not in MODE_TRANSITION_GRAPH[previous]:
            raise SimulationError(
                f"illegal {previous.value}->{new_mode.value} transition from {origin}"
            )
        self.gateway.trackers[node.node_id] = new_tracker(self.params.history_depth_gateway)
        self.cloud.trackers[node.node_id] = new_tracker(self.params.history_depth_cloud)
        self._record(node, "mode-change", tracker=node.tracker, detail=origin)

    # -- offboard requests ------------------------------------------------

    def _on_radio_window(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        if node.state is not NodeState.WORKING:
            return
        self._deliver_pending_commands(node)
        if node.state is not NodeState.WORKING or node.mode is InferenceMode.SENSOR:
            return  # a delivered command idled or de-escalated the node mid-window
        request = Message(
            kind="prediction-request",
            src=node.node_id,
            dst="gateway" if node.mode is InferenceMode.GATEWAY else "cloud",
            send_time_ms=self.clock.now_ms,
            payload_kb=self.table.radio_tx.size_kb,
            battery_pct=node.battery.level_pct,
        )
        self._record(node, "request-send", detail=f"dst={request.dst}")
        if self.scenario.drop_probability > 0 and (
            self._drop_rng[node.node_id].random() < self.scenario.drop_probability
        ):
            self.schedule(
                self.clock.now_ms + self.scenario.request_timeout_ms,
                "request-timeout", node.node_id, request=request,
            )
            return
        self.schedule(self.clock.now_ms, "tier-arrival", node.node_id, request=request)

    def _tier(self, name: str) -> GatewayTier | CloudTier:
        return self.gateway if name == "gateway" else self.cloud

    def _on_tier_arrival(self, ev: _Scheduled) -> None:
        request: Message = ev.data["request"]
        tier = self._tier(request.dst)
        tier.queue.append(request)
        if not tier.busy:
            tier.busy = True
            self.schedule(self.clock.now_ms + tier.service_ms, "tier-complete",
                          request.src, tier=request.dst)

    def _on_tier_complete(self, ev: _Scheduled) -> None:
        tier = self._tier(ev.data["tier"])
        request = tier.queue.popleft()
        self._handle_prediction(tier, request)
        if tier.queue:
            self.schedule(self.clock.now_ms + tier.service_ms, "tier-complete",
                          tier.queue[0].src, tier=ev.data["tier"])
        else:
            tier.busy = False

    def _handle_prediction(self, tier: GatewayTier | CloudTier, request: Message) -> None:
        """Serve one queued request: predict, update history, run the heuristic."""
        node = self.nodes.get(request.src)
        if node is None:
            self._record(None, "request-dropped", node_id=request.src,
                         detail="unknown node")
            return
        queue_len = tier.queue_len()
        step, truth = self._next_truth(node.node_id)
        prediction = self._oracles[(node.node_id, tier.mode)].predict(truth, step)
        tracker = heuristics.update_history(
            tier.trackers[node.node_id], prediction.anomaly_bit, True
        )
        tier.trackers[node.node_id] = tracker
        self._record(
            node, "predict", tracker=tracker,
            queue_len=queue_len if tier.mode is InferenceMode.GATEWAY else None,
            battery_pct=request.battery_pct,
            detail=f"tier={tier.mode.value} label={prediction.label.value} truth={truth.value}",
        )
        if self.scenario.adaptive:
            if tier.mode is InferenceMode.GATEWAY:
                verdict = heuristics.gateway_heuristic(
                    tracker, request.battery_pct, queue_len, self.params
                )
            else:
                verdict = heuristics.cloud_heuristic(tracker, request.battery_pct, self.params)
        else:
            verdict = tier.mode
        if verdict is tier.mode:
            response = Message(
                kind="blank-response", src=request.dst, dst=node.node_id,
                send_time_ms=self.clock.now_ms,
                request_send_time_ms=request.send_time_ms,
            )
        else:
            response = Message(
                kind="mode-command", src=request.dst, dst=node.node_id,
                send_time_ms=self.clock.now_ms,
                request_send_time_ms=request.send_time_ms, mode=verdict,
            )
        delay = self.latency_model.draw(tier.mode, self._latency_rng[node.node_id])
        self.schedule(self.clock.now_ms + delay, "response-arrival", node.node_id,
                      response=response, origin=tier.mode)

    def _on_response_arrival(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        response: Message = ev.data["response"]
        origin: InferenceMode = ev.data["origin"]
        latency = measure_latency(response, self.clock.now_ms)
        if response.kind == "blank-response":
            self._record(node, "response-blank", latency_ms=latency,
                         detail=f"origin={origin.value}")
            return
        self._record(node, "mode-command", latency_ms=latency,
                     detail=f"origin={origin.value} mode={response.mode.value}")
        self._apply_mode_change(node, response.mode,
                                origin=f"{origin.value}-heuristic")

    def _on_request_timeout(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        self._record(node, "request-timeout", detail="no response before timeout")

    # -- commands -----------------------------------------------------

    def _on_command_arrival(self, ev: _Scheduled) -> None:
        """A scenario command reaches the gateway.

        Gateway-targeted properties apply on the spot. Node-targeted
        commands wait in the gateway's per-node outbox until the node's
        radio is reachable: at the next command poll for an on-device
        node, at the next transmit window otherwise. Nodes outside
        WORKING keep their radio listening, so delivery is immediate.
        """
        cmd: PropertyCommand = ev.data["command"]
        spec = PROPERTY_TABLE.get(cmd.name)
        if spec is not None and spec.target == "gateway":
            status, value = self.gateway.apply_command(cmd)
            self._record(None, "property-command", node_id=cmd.node_id,
                         detail=_command_detail(cmd, status, value))
            return
        node = self.nodes.get(cmd.node_id)
        if node is None:
            self._record(None, "command-dropped", node_id=cmd.node_id,
                         detail="command for unknown node")
            return
        self.gateway.pending_commands[cmd.node_id].append(cmd)
        self._record(node, "command-queued", detail=f"{cmd.method.value} {cmd.name}")
        if node.state is not NodeState.WORKING:
            self._deliver_pending_commands(node)

    def _deliver_pending_commands(self, node: SensorNode) -> None:
        pending = self.gateway.pending_commands[node.node_id]
        while pending:
            cmd = pending.popleft()
            before = node.mode
            response = node.apply_command(cmd)
            is_state_step = cmd.name == "state" and response.ok
            if is_state_step:
                # the lifecycle row leads so state-machine triples read
                # cleanly off consecutive trace rows
                event: LifecycleEvent = response.value  # type: ignore[assignment]
                self._record(node, event.value, detail="via SET state")
            elif cmd.name == "state" and response.status == "protocol-violation":
                self._record(node, "protocol-violation",
                             detail=f"SET state {cmd.value} has no edge from "
                                    f"{node.state.value}")
            self._record(node, "property-command",
                         detail=_command_detail(cmd, response.status, response.value))
            if node.mode is not before:
                # the SET already reset the node tracker; mirror it tier-side
                self.gateway.trackers[node.node_id] = new_tracker(
                    self.params.history_depth_gateway)
                self.cloud.trackers[node.node_id] = new_tracker(
                    self.params.history_depth_cloud)
                self._record(node, "mode-change", tracker=node.tracker, detail="operator")
            if is_state_step:
                self._after_lifecycle(node, event)

    # -- polling ------------------------------------------------------

    def _on_poll(self, ev: _Scheduled) -> None:
        node = self.nodes[ev.node_id]
        pending = self.gateway.pending_commands[node.node_id]
        if pending:
            duration = self.table.radio_tx.duration_ms
            debit(node.battery, self.ledger, "radio_tx", self.table,
                  self.clock.now_ms, node.node_id, tag_override="radio_poll")
            self._record(node, "poll", detail=f"commands={len(pending)}")
            self._deliver_pending_commands(node)
        else:
            fraction = self.scenario.empty_poll_fraction
            duration = self.table.radio_tx.duration_ms * fraction
            debit(node.battery, self.ledger, "radio_tx", self.table,
                  self.clock.now_ms, node.node_id,
                  scale=fraction, tag_override="radio_poll_empty")
            self._record(node, "poll-empty")
        if node.state is NodeState.WORKING:
            self.schedule(self.clock.now_ms + duration, "cycle-start", node.node_id)


def _command_detail(cmd: PropertyCommand, status: str, value: object | None) -> str:
    text = f"{cmd.method.value} {cmd.name} status={status}"
    if value is not None:
        value = getattr(value, "value", value)  # enums print their wire value
        text += f" value={value}"
    return text
