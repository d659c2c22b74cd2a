"""Tests for the discrete-event engine: scheduling, tiers, messaging."""

import dataclasses

import pytest

from tiersim import (
    InferenceMode,
    Message,
    NodeConfig,
    Scenario,
    SimulationError,
    Simulator,
    measure_latency,
)
from tiersim.node import LifecycleEvent
from tiersim.oracle import TierAccuracyProfile
from tiersim.scenario import TimedCommand

S, G, C = InferenceMode.SENSOR, InferenceMode.GATEWAY, InferenceMode.CLOUD

PERFECT = {mode: TierAccuracyProfile.perfect(mode) for mode in InferenceMode}


def scenario(**kwargs) -> Scenario:
    defaults = dict(duration_ms=120_000.0, poll_enabled=False)
    defaults.update(kwargs)
    return Scenario(**defaults)


def kinds_for(records, node_id, kind):
    return [r for r in records if r.node_id == node_id and r.kind == kind]


# -- provisioning and lifecycle ----------------------------------------------

def test_provisioning_reaches_working_after_six_stages():
    records = Simulator(scenario(duration_ms=1_000.0)).run()
    kinds = [(r.timestamp_ms, r.kind) for r in records[:8]]
    assert kinds == [
        (100.0, "provision-stage"),
        (200.0, "provision-stage"),
        (300.0, "provision-stage"),
        (400.0, "provision-stage"),
        (400.0, "provision-complete"),
        (500.0, "properties-updated"),
        (600.0, "config-confirm"),
        (600.0, "sleep"),  # first duty cycle starts the moment WORKING is entered
    ]
    assert records[6].state == "WORKING"


def test_invalid_lifecycle_event_records_violation_and_keeps_state():
    sim = Simulator(scenario(duration_ms=5_000.0))
    sim.run_until(700.0)  # node is WORKING now
    sim.schedule(800.0, "lifecycle", "node-0", event=LifecycleEvent.PROVISIONING_COMPLETE)
    records = sim.run_until(1_000.0)
    violations = kinds_for(records, "node-0", "protocol-violation")
    assert len(violations) == 1
    assert violations[0].state == "WORKING"


def test_scheduling_into_the_past_aborts():
    sim = Simulator(scenario())
    sim.run_until(10_000.0)
    with pytest.raises(SimulationError):
        sim.schedule(5_000.0, "cycle-start", "node-0")


def test_equal_timestamps_execute_in_insertion_order():
    cmds = (
        TimedCommand(1_000.0, "node-0", "gateway_id", "GET"),
        TimedCommand(1_000.0, "node-0", "provisioned_nodes", "GET"),
    )
    records = Simulator(scenario(commands=cmds, duration_ms=2_000.0)).run()
    props = [r.detail for r in records if r.kind == "property-command"]
    assert props[0].startswith("GET gateway_id")
    assert props[1].startswith("GET provisioned_nodes")


def test_empty_scenario_produces_empty_trace():
    assert Simulator(scenario(nodes=())).run_until(1_000_000.0) == []


# -- prediction cadence ------------------------------------------------------

def test_thirty_minutes_of_ten_second_windows():
    # back-to-back 10 s sampling windows produce one prediction per ~10 s
    plan = scenario(duration_ms=1_800_000.0, adaptive=False)
    records = Simulator(plan).run()
    predictions = kinds_for(records, "node-0", "predict")
    assert 179 <= len(predictions) <= 181


# -- on-device prediction and escalation -----------------------------------

def test_sensor_escalates_after_warmup_under_constant_anomalies():
    plan = scenario(
        duration_ms=600_000.0, anomaly_probability=1.0, profiles=dict(PERFECT)
    )
    records = Simulator(plan).run()
    changes = kinds_for(records, "node-0", "mode-change")
    assert changes and changes[0].detail == "sensor-heuristic"
    assert changes[0].mode == "G"
    # exactly after the 32-step warm-up, never earlier
    predictions = kinds_for(records, "node-0", "predict")
    sensor_preds = [r for r in predictions if r.timestamp_ms <= changes[0].timestamp_ms]
    assert len(sensor_preds) == 32
    assert changes[0].tau == 0 and changes[0].sigma == 0  # reset coupled to change


def test_full_escalation_chain_reaches_cloud_and_stays():
    plan = scenario(
        duration_ms=1_800_000.0, anomaly_probability=1.0, profiles=dict(PERFECT)
    )
    records = Simulator(plan).run()
    path = [r.mode for r in kinds_for(records, "node-0", "mode-change")]
    assert path == ["G", "C"]  # S -> G -> C, then the cloud holds it


def test_quiet_gateway_node_deescalates_with_mode_command():
    plan = scenario(
        duration_ms=900_000.0,
        nodes=(NodeConfig(initial_mode="G"),),
        anomaly_probability=0.0,
        profiles=dict(PERFECT),
    )
    records = Simulator(plan).run()
    blanks = kinds_for(records, "node-0", "response-blank")
    # the window is live on the update that fills it, so predictions
    # 1..15 blank and the 16th already de-escalates
    assert len(blanks) == 15
    commands = kinds_for(records, "node-0", "mode-command")
    assert commands and commands[0].latency_ms == pytest.approx(148.15, abs=1e-9)
    changes = kinds_for(records, "node-0", "mode-change")
    assert changes[0].mode == "S" and changes[0].detail == "G-heuristic"


def test_quiet_cloud_node_steps_down_one_tier():
    plan = scenario(
        duration_ms=900_000.0,
        nodes=(NodeConfig(initial_mode="C"),),
        anomaly_probability=0.0,
        profiles=dict(PERFECT),
    )
    records = Simulator(plan).run()
    changes = kinds_for(records, "node-0", "mode-change")
    assert changes[0].mode == "G" and changes[0].detail == "C-heuristic"


def test_mode_transitions_follow_the_legal_graph():
    plan = Scenario(duration_ms=1_800_000.0)
    records = Simulator(plan).run()
    legal = {"S": {"G"}, "G": {"S", "C"}, "C": {"S", "G"}}
    current = "S"
    for r in kinds_for(records, "node-0", "mode-change"):
        assert r.mode in legal[current], f"illegal transition {current} -> {r.mode}"
        current = r.mode


# -- offboard round trips ---------------------------------------------------

def test_request_conservation_and_latency_matching():
    plan = Scenario(duration_ms=1_800_000.0)
    records = Simulator(plan).run()
    requests = len(kinds_for(records, "node-0", "request-send"))
    blanks = len(kinds_for(records, "node-0", "response-blank"))
    commands = len(kinds_for(records, "node-0", "mode-command"))
    timeouts = len(kinds_for(records, "node-0", "request-timeout"))
    assert requests == blanks + commands + timeouts
    assert requests > 0


def test_dropped_requests_time_out():
    plan = scenario(
        duration_ms=600_000.0,
        nodes=(NodeConfig(initial_mode="G"),),
        adaptive=False,
        drop_probability=0.8,
        request_timeout_ms=10_000.0,
    )
    records = Simulator(plan).run()
    requests = len(kinds_for(records, "node-0", "request-send"))
    blanks = len(kinds_for(records, "node-0", "response-blank"))
    timeouts = len(kinds_for(records, "node-0", "request-timeout"))
    assert timeouts > 0
    assert requests == blanks + timeouts


def test_unknown_node_request_is_dropped_with_warning():
    sim = Simulator(scenario(duration_ms=1_000.0))
    sim.run_until(700.0)
    ghost = Message(
        kind="prediction-request", src="nobody", dst="gateway",
        send_time_ms=700.0, battery_pct=50.0,
    )
    sim.gateway.queue.append(ghost)
    sim._handle_prediction(sim.gateway, sim.gateway.queue.popleft())
    drops = [r for r in sim.records if r.kind == "request-dropped"]
    assert drops and drops[0].node_id == "nobody"


def test_tracker_isolation_across_nodes():
    plan = scenario(
        duration_ms=300_000.0,
        nodes=(NodeConfig(node_id="a", initial_mode="G"),
               NodeConfig(node_id="b", initial_mode="G")),
        adaptive=False,
    )
    sim = Simulator(plan)
    sim.run_until(700.0)
    before = sim.gateway.trackers["b"]
    request = Message(kind="prediction-request", src="a", dst="gateway",
                      send_time_ms=700.0, battery_pct=99.0)
    for _ in range(10):
        sim.gateway.queue.append(request)
        sim._handle_prediction(sim.gateway, sim.gateway.queue.popleft())
    assert sim.gateway.trackers["b"] == before
    assert sim.gateway.trackers["a"].length == 10


def test_gateway_queue_counts_enqueued_minus_serviced():
    plan = scenario(
        duration_ms=120_000.0,
        nodes=tuple(NodeConfig(node_id=f"n{i}", initial_mode="G") for i in range(3)),
        adaptive=False,
        gateway_service_ms=200.0,
    )
    records = Simulator(plan).run()
    sent = served = 0
    samples = []
    for r in records:
        if r.kind == "request-send":
            sent += 1
        elif r.kind == "predict":
            served += 1
            assert r.queue_len == sent - served
            samples.append(r.queue_len)
    # all three nodes transmit in lockstep, so the queue actually backs up
    assert max(samples) == 2


def test_latency_includes_queue_wait_under_load():
    plan = scenario(
        duration_ms=120_000.0,
        nodes=tuple(NodeConfig(node_id=f"n{i}", initial_mode="G") for i in range(3)),
        adaptive=False,
        gateway_service_ms=200.0,
    )
    records = Simulator(plan).run()
    latencies = sorted(
        r.latency_ms for r in records if r.kind == "response-blank"
    )
    # first served: constant + service; last served: + two queue waits
    assert latencies[0] == pytest.approx(148.15 + 200.0, abs=1e-6)
    assert latencies[-1] == pytest.approx(148.15 + 3 * 200.0, abs=1e-6)


# -- measure_latency ---------------------------------------------------------

def response_at(send: float) -> Message:
    return Message(kind="blank-response", src="gateway", dst="n",
                   send_time_ms=send, request_send_time_ms=send)


def test_measure_latency_subtracts_send_time():
    assert measure_latency(response_at(1_000.0), 1_148.15) == pytest.approx(148.15)


def test_measure_latency_zero_is_allowed():
    assert measure_latency(response_at(5.0), 5.0) == 0.0


def test_measure_latency_rejects_negative():
    with pytest.raises(SimulationError):
        measure_latency(response_at(10.0), 9.0)


def test_measure_latency_requires_echo():
    bare = Message(kind="blank-response", src="g", dst="n", send_time_ms=1.0)
    with pytest.raises(SimulationError):
        measure_latency(bare, 2.0)


# -- command delivery and polling ---------------------------------------------

def test_command_to_sensor_node_waits_for_poll():
    cmds = (TimedCommand(5_000.0, "node-0", "sleep_period", "SET", 1_000),)
    plan = scenario(
        duration_ms=120_000.0, adaptive=False, commands=cmds,
        poll_enabled=True, poll_every_cycles=2,
    )
    sim = Simulator(plan)
    records = sim.run()
    queued = [r for r in records if r.kind == "command-queued"]
    applied = [r for r in records if r.kind == "property-command"]
    polls = [r for r in records if r.kind == "poll"]
    assert queued and applied and polls
    assert applied[0].timestamp_ms == polls[0].timestamp_ms
    assert applied[0].timestamp_ms > queued[0].timestamp_ms
    assert sim.nodes["node-0"].sleep_period_ms == 1_000.0


def test_empty_poll_charges_fraction_of_radio():
    plan = scenario(
        duration_ms=60_000.0, adaptive=False,
        poll_enabled=True, poll_every_cycles=1, empty_poll_fraction=0.1,
    )
    sim = Simulator(plan)
    records = sim.run()
    assert [r for r in records if r.kind == "poll-empty"]
    fractions = [e for e in sim.ledger.entries if e.operation == "radio_poll_empty"]
    assert fractions and all(e.energy_mj == pytest.approx(157.0) for e in fractions)


def test_command_to_idle_node_is_delivered_immediately():
    cmds = (
        TimedCommand(50_000.0, "node-0", "state", "SET", "IDLE"),
        TimedCommand(80_000.0, "node-0", "state", "SET", "UNLOCKED"),  # reset
    )
    plan = scenario(duration_ms=200_000.0, adaptive=False, commands=cmds,
                    poll_enabled=True, poll_every_cycles=1)
    sim = Simulator(plan)
    records = sim.run()
    # the reset lands while IDLE (radio listening), then re-orchestration
    # brings the node back to WORKING
    idle = [r for r in records if r.kind == "idle-command"]
    reset = [r for r in records if r.kind == "reset-command"]
    assert idle and reset
    assert reset[0].timestamp_ms == 80_000.0
    assert sim.nodes["node-0"].state.value == "WORKING"


def test_command_to_transmitting_node_applies_at_radio_window():
    cmds = (TimedCommand(5_000.0, "node-0", "sleep_period", "SET", 2_000),)
    plan = scenario(
        duration_ms=60_000.0, adaptive=False, commands=cmds,
        nodes=(NodeConfig(initial_mode="G"),),
    )
    sim = Simulator(plan)
    records = sim.run()
    applied = [r for r in records if r.kind == "property-command"]
    windows = [r for r in records if r.kind == "request-send"]
    assert applied and windows
    assert applied[0].timestamp_ms == windows[0].timestamp_ms
    assert sim.nodes["node-0"].sleep_period_ms == 2_000.0


def test_mode_command_while_sensor_mode_arrives_at_next_poll():
    cmds = (TimedCommand(1_000.0, "node-0", "inference_mode", "SET", "G"),)
    plan = scenario(duration_ms=120_000.0, adaptive=False, commands=cmds,
                    poll_enabled=True, poll_every_cycles=1)
    sim = Simulator(plan)
    records = sim.run()
    change = [r for r in records if r.kind == "mode-change"]
    assert change and change[0].detail == "operator"
    first_poll = [r for r in records if r.kind == "poll"][0]
    assert change[0].timestamp_ms == first_poll.timestamp_ms
    assert sim.nodes["node-0"].mode is G


# -- battery exhaustion -------------------------------------------------------

def test_battery_death_is_terminal():
    plan = scenario(
        duration_ms=600_000.0, adaptive=False,
        nodes=(NodeConfig(battery_capacity_j=5.0),),  # ~2 cycles
    )
    records = Simulator(plan).run()
    dead = [r for r in records if r.kind == "battery-dead"]
    assert len(dead) == 1
    after = [r for r in records if r.timestamp_ms > dead[0].timestamp_ms]
    assert after == []


# -- determinism --------------------------------------------------------------

def test_identical_seeds_replay_identical_traces():
    plan = Scenario(duration_ms=600_000.0, seed=123)
    first = Simulator(plan).run()
    second = Simulator(plan).run()
    assert first == second


def test_different_seeds_diverge():
    base = Scenario(duration_ms=1_800_000.0, seed=1)
    other = dataclasses.replace(base, seed=2)
    assert Simulator(base).run() != Simulator(other).run()
