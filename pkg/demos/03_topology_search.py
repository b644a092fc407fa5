"""Bus-splitting candidates and the simulation-guided search.

On the 14-substation grid a wind surge overloads the east-west corridor;
the search enumerates every legal split, simulates them against the
forecast, and ranks the survivors.  Afterwards the recovery routine walks
the grid back to the reference topology once things calm down.
"""

from gridcm import EngineConfig, initial_state, step, topology_distance
from gridcm.actions import NoOp
from gridcm.chronics import generate_scenario
from gridcm.fixtures import desk14
from gridcm.topology_search import enumerate_candidates, recovery_step, search

grid = desk14()
config = EngineConfig()
day = generate_scenario(grid, 20250008, "congested")

# walk to the first overloaded step of the day
state = initial_state(grid, day.row(0), config)
t = 0
while state.max_rho <= 1.0 and t < day.step_count - 3:
    t += 1
    state = step(grid, state, NoOp(), day.row(t), config)
print(f"step {t}: max rho {state.max_rho:.3f}, overloaded: "
      f"{', '.join(state.solution.overloaded_lines())}")

candidates = enumerate_candidates(grid, state, config)
print(f"{len(candidates)} legal unitary actions available")

rows = [day.row(t + 1), day.row(t + 2)]
result = search(grid, state, rows, config, budget_ms=0)
print(f"do-nothing loading over the horizon: "
      f"{[round(r, 3) for r in result.noop_max_rho]}")
print("top candidates (worst-case loading over the horizon):")
for cand in result.candidates:
    print(f"  #{cand.rank} {cand.canonical_id}: "
          f"{[round(r, 3) for r in cand.predicted_max_rho]} "
          f"(prior {cand.prior_score:.2f})")

best = result.best
state = step(grid, state, best.action, day.row(t + 1), config)
print(f"\napplied #{1}: max rho now {state.max_rho:.3f}, "
      f"distance to reference {topology_distance(state.topology, grid.reference_topology)}")

# ride forward until the surge passes, then recover
for k in range(t + 2, day.step_count):
    state = step(grid, state, NoOp(), day.row(k), config)
    if state.max_rho < 0.8 and not state.substation_cooldowns:
        rows = [day.row(min(k + 1 + j, day.step_count - 1)) for j in range(6)]
        action = recovery_step(grid, state, rows, config)
        if not isinstance(action, NoOp):
            state = step(grid, state, action, day.row(min(k + 1, day.step_count - 1)), config)
            print(f"step {k}: recovery applied, distance now "
                  f"{topology_distance(state.topology, grid.reference_topology)}")
            if topology_distance(state.topology, grid.reference_topology) == 0:
                break
