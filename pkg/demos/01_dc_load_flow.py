"""A first tour of the DC load flow engine on the triangle grid.

Three substations, three unit-susceptance lines, a slack generator, a wind
farm and one load.  We solve a snapshot, look at sensitivities, and watch
what islanding does.
"""

from gridcm import EngineConfig, ChronicRow, dc_solve, initial_state, ptdf, step
from gridcm.actions import LineAction, NoOp
from gridcm.fixtures import t3

grid = t3()
config = EngineConfig()

print("== solve a snapshot ==")
injections = {"G2": 100.0, "D3": -100.0, "G1": 0.0}
solution = dc_solve(grid, grid.reference_topology, injections)
for lid in ("L12", "L13", "L23"):
    print(f"  {lid}: {solution.flow(lid):+8.2f} MW   rho {solution.rho_of(lid):.3f}")
print(f"  worst loading: {solution.max_rho:.3f}")

print("\n== sensitivities (PTDF) ==")
sens = ptdf(grid, grid.reference_topology)
col = sens.column_for_element("G2")
print("  +1 MW at the wind farm (withdrawn at the slack) moves each line by:")
for k, lid in enumerate(sens.line_ids):
    print(f"  {lid}: {col[k]:+.4f} MW")

print("\n== stepping with overload protection ==")
hot = ChronicRow(loads={"D3": 160.0}, renewables={"G2": 160.0}, plan={"G1": 0.0})
state = initial_state(grid, hot, config)
for k in range(3):
    print(f"  step {state.step_index}: max rho {state.max_rho:.3f} "
          f"timers {state.overflow_timers}")
    state = step(grid, state, NoOp(), hot, config)
print(f"  after 3 overloaded steps, L23 in service: "
      f"{state.topology.line_status['L23']} (tripped by protection), "
      f"cooldown {state.line_cooldowns.get('L23', 0)} steps")

print("\n== islanding is fatal when a load is cut off ==")
calm = ChronicRow(loads={"D3": 50.0}, renewables={"G2": 50.0}, plan={"G1": 0.0})
state = initial_state(grid, calm, config)
state = step(grid, state, LineAction("L13", connect=False), calm, config)
state = step(grid, state, LineAction("L23", connect=False), calm, config)
print(f"  blackout: {state.blackout} ({state.solution.reason}: "
      f"{', '.join(state.solution.island_elements)})")
