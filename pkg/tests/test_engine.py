from __future__ import annotations

import dataclasses

import pytest

from gridcm import (
    ChronicRow,
    LineAction,
    NoOp,
    Redispatch,
    SubstationAction,
    contingency_screen,
    initial_state,
    simulate,
    step,
)
from gridcm.engine import EngineError, screen_outages
from tests.conftest import t3_row, t3g3_row


def overload_row(load=150.0, wind=150.0) -> ChronicRow:
    """T3 row that pushes L23 to rho 1.0+ (wind export through both paths)."""
    return ChronicRow(loads={"D3": load}, renewables={"G2": wind}, plan={"G1": 0.0})


class TestStepBasics:
    def test_noop_keeps_timers_zero(self, grid_t3, config, t3_state):
        nxt = step(grid_t3, t3_state, NoOp(), t3_row(load=90.0, wind=90.0), config)
        assert all(v == 0 for v in nxt.overflow_timers.values())
        assert nxt.step_index == t3_state.step_index + 1
        assert not nxt.blackout

    def test_slack_balances_residual(self, grid_t3, config):
        state = initial_state(grid_t3, t3_row(load=80.0, wind=30.0), config)
        assert state.dispatch["G1"] == pytest.approx(50.0)
        total = sum(state.dispatch.values()) - sum(state.loads.values())
        assert total == pytest.approx(0.0, abs=1e-9)

    def test_ramp_clipping_with_note(self, grid_t3_g3, config, t3g3_state):
        action = Redispatch(deltas={"G3": 80.0})
        nxt = step(grid_t3_g3, t3g3_state, action, t3g3_row(), config)
        assert nxt.dispatch["G3"] == pytest.approx(50.0)  # ramp is 50
        assert any("clipped" in r for r in nxt.rejections)

    def test_deviation_persists_across_steps(self, grid_t3_g3, config, t3g3_state):
        nxt = step(grid_t3_g3, t3g3_state, Redispatch(deltas={"G3": 20.0}), t3g3_row(), config)
        after = step(grid_t3_g3, nxt, NoOp(), t3g3_row(), config)
        assert after.dispatch["G3"] == pytest.approx(20.0)
        assert after.deviation(grid_t3_g3)["G3"] == pytest.approx(20.0)

    def test_curtailment_cap_applies_and_persists(self, grid_t3, config, t3_state):
        action = Redispatch(curtail_caps={"G2": 60.0})
        nxt = step(grid_t3, t3_state, action, t3_row(wind=100.0), config)
        assert nxt.dispatch["G2"] == pytest.approx(60.0)
        assert nxt.curtailment(grid_t3)["G2"] == pytest.approx(40.0)
        again = step(grid_t3, nxt, NoOp(), t3_row(wind=100.0), config)
        assert again.dispatch["G2"] == pytest.approx(60.0)

    def test_blackout_state_rejects_step(self, grid_t3, config, t3_state):
        dead = step(
            grid_t3,
            step(grid_t3, t3_state, LineAction("L13", connect=False), t3_row(), config),
            LineAction("L23", connect=False),
            t3_row(),
            config,
        )
        assert dead.blackout
        with pytest.raises(EngineError):
            step(grid_t3, dead, NoOp(), t3_row(), config)


class TestProtection:
    def test_soft_overflow_trips_on_third_step(self, grid_t3, config):
        # L23 carries 2/3 of the wind export: wind 160 -> rho ~1.07
        state = initial_state(grid_t3, overload_row(160.0, 160.0), config)
        assert state.overflow_timers["L23"] == 1
        state = step(grid_t3, state, NoOp(), overload_row(160.0, 160.0), config)
        assert state.overflow_timers["L23"] == 2
        assert state.topology.line_status["L23"]
        state = step(grid_t3, state, NoOp(), overload_row(160.0, 160.0), config)
        assert not state.topology.line_status["L23"]
        assert "L23" in state.auto_disconnected
        assert state.line_cooldowns["L23"] == config.line_reconnect_cooldown

    def test_recovered_line_resets_timer(self, grid_t3, config):
        state = initial_state(grid_t3, overload_row(160.0, 160.0), config)
        state = step(grid_t3, state, NoOp(), t3_row(load=60.0, wind=60.0), config)
        assert state.overflow_timers["L23"] == 0

    def test_hard_threshold_trips_instantly(self, grid_t3, config):
        cfg = config.with_overrides(hard_overflow_rho=1.5)
        state = initial_state(grid_t3, overload_row(240.0, 240.0), cfg)
        # rho L23 = 240*2/3/100 = 1.6 >= 1.5: instant trip, then the series
        # path overloads at rho 2.4 >= 1.5 and trips too -> load islanded
        assert state.blackout

    def test_cascade_terminates_and_records(self, grid_t3, config):
        cfg = config.with_overrides(hard_overflow_rho=1.2)
        state = initial_state(grid_t3, overload_row(135.0, 135.0), cfg)
        # wind 135: rho L23 = 0.9, fine; raise wind to make L23 trip hard
        state = step(grid_t3, state, NoOp(), overload_row(190.0, 190.0), cfg)
        assert "L23" in state.auto_disconnected
        # after L23 trips, L12/L13 carry 190 -> rho 1.9 >= 1.2: cascade
        assert state.blackout or len(state.auto_disconnected) >= 2

    def test_islanding_blackout_via_topology(self, grid_t3, config, t3_state):
        one = step(grid_t3, t3_state, LineAction("L13", connect=False), t3_row(), config)
        assert not one.blackout
        dead = simulate(grid_t3, one, LineAction("L23", connect=False), t3_row(), config)
        assert dead.blackout
        assert dead.diverged


class TestCooldowns:
    def test_substation_cooldown_blocks_and_expires(self, grid_enum_hub, config):
        # light injections: the split must survive protection for 4+ steps
        row = ChronicRow(
            loads={"D2": 30.0, "D3": 20.0},
            renewables={},
            plan={"G1": 40.0, "GH": 10.0},
        )
        state = initial_state(grid_enum_hub, row, config)
        split = SubstationAction(
            "S0",
            {"LA:from": 1, "LB:from": 2, "LC:from": 2, "GH": 1},
        )
        state = step(grid_enum_hub, state, split, row, config)
        assert state.substation_cooldowns["S0"] == config.substation_cooldown
        assert state.endpoints_switched == 2

        revert = SubstationAction(
            "S0", {ep: 1 for ep in grid_enum_hub.endpoints_at["S0"]}
        )
        blocked = step(grid_enum_hub, state, revert, row, config)
        assert any("cooldown" in r for r in blocked.rejections)
        assert blocked.topology.element_bus["LB:from"] == 2  # untouched

        for _ in range(config.substation_cooldown):
            state = step(grid_enum_hub, state, NoOp(), row, config)
        done = step(grid_enum_hub, state, revert, row, config)
        assert not done.rejections
        assert done.topology.element_bus["LB:from"] == 1

    def test_manual_line_switch_cooldown(self, grid_t3, config, t3_state):
        out = step(grid_t3, t3_state, LineAction("L12", connect=False), t3_row(), config)
        assert out.line_cooldowns["L12"] == config.line_action_cooldown
        blocked = step(grid_t3, out, LineAction("L12", connect=True), t3_row(), config)
        assert any("cooldown" in r for r in blocked.rejections)
        assert not blocked.topology.line_status["L12"]

    def test_reconnect_after_cooldown(self, grid_t3, config, t3_state):
        state = step(grid_t3, t3_state, LineAction("L12", connect=False), t3_row(), config)
        for _ in range(config.line_action_cooldown):
            state = step(grid_t3, state, NoOp(), t3_row(), config)
        back = step(grid_t3, state, LineAction("L12", connect=True), t3_row(), config)
        assert back.topology.line_status["L12"]
        assert not back.rejections


class TestSimulate:
    def test_simulate_leaves_input_unchanged(self, grid_t3, config, t3_state):
        before = dataclasses.asdict(
            dataclasses.replace(t3_state, solution=None, applied_action=None)
        )
        simulate(grid_t3, t3_state, NoOp(), t3_row(load=120.0, wind=130.0), config)
        after = dataclasses.asdict(
            dataclasses.replace(t3_state, solution=None, applied_action=None)
        )
        assert before == after

    def test_simulate_equals_step_when_forecast_is_realized(
        self, grid_t3, config, t3_state
    ):
        row = t3_row(load=120.0, wind=110.0)
        a = simulate(grid_t3, t3_state, NoOp(), row, config)
        b = step(grid_t3, t3_state, NoOp(), row, config)
        assert a.dispatch == b.dispatch
        assert a.overflow_timers == b.overflow_timers
        assert a.topology == b.topology
        assert a.solution.flows.tolist() == b.solution.flows.tolist()

    def test_step_determinism(self, grid_t3, config, t3_state):
        row = overload_row(170.0, 170.0)
        a = step(grid_t3, t3_state, NoOp(), row, config)
        b = step(grid_t3, t3_state, NoOp(), row, config)
        assert a.dispatch == b.dispatch
        assert a.topology == b.topology
        assert a.overflow_timers == b.overflow_timers
        assert a.line_cooldowns == b.line_cooldowns
        assert a.solution.flows.tolist() == b.solution.flows.tolist()
        assert a.auto_disconnected == b.auto_disconnected


class TestContingencyScreen:
    def test_empty_outage_set(self, grid_t3, config, t3_state):
        assert contingency_screen(grid_t3, t3_state, NoOp(), [], config) == ()

    def test_single_outage_no_violation_at_exactly_one(self, grid_t3, config, t3_state):
        (res,) = contingency_screen(grid_t3, t3_state, NoOp(), ["L23"], config)
        assert res.max_rho == pytest.approx(1.0, abs=1e-9)
        assert not res.violation  # strict inequality

    def test_outage_isolating_load_flags_diverged(self, grid_t3, config, t3_state):
        state = step(grid_t3, t3_state, LineAction("L13", connect=False), t3_row(), config)
        (res,) = contingency_screen(grid_t3, state, NoOp(), ["L23"], config)
        assert res.diverged
        assert res.violation

    def test_screen_covers_requested_set(self, grid_desk14, config):
        row = ChronicRow(
            loads={d.id: 30.0 for d in grid_desk14.loads},
            renewables={"W1": 40.0, "W2": 50.0, "W3": 40.0, "PV1": 20.0},
            plan={"G1": 100.0, "G2": 30.0, "G3": 20.0},
        )
        state = initial_state(grid_desk14, row, config)
        lines = [l.id for l in grid_desk14.lines]
        report = screen_outages(grid_desk14, state, lines)
        assert len(report) == len(lines)
        assert {r.line for r in report} == set(lines)

    def test_screen_equals_direct_resolve(self, grid_desk14, config):
        """The distribution-factor shortcut must match removing the line
        and solving from scratch, outage by outage."""
        from gridcm.powerflow import dc_solve

        row = ChronicRow(
            loads={d.id: 35.0 for d in grid_desk14.loads},
            renewables={"W1": 50.0, "W2": 120.0, "W3": 90.0, "PV1": 30.0},
            plan={"G1": 60.0, "G2": 40.0, "G3": 20.0},
        )
        state = initial_state(grid_desk14, row, config)
        report = screen_outages(grid_desk14, state, [l.id for l in grid_desk14.lines])
        for res in report:
            topo = state.topology.with_line_status(res.line, False)
            direct = dc_solve(grid_desk14, topo, state.injections(grid_desk14))
            if direct.diverged:
                assert res.diverged, res.line
            else:
                assert not res.diverged
                assert res.max_rho == pytest.approx(direct.max_rho, abs=1e-8), res.line
