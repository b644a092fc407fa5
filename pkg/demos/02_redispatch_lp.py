"""Relieving congestion with the redispatch LP, and when wind must be cut.

The four-node cases here are small enough to check by hand: the triangle
with a second dispatchable (shift 15 MW and the tight line lands exactly
on its limit), and a radial wind feeder where no amount of redispatching
helps and the curtailment fallback takes over.
"""

from gridcm import ChronicRow, EngineConfig, initial_state, simulate
from gridcm.fixtures import radial4, t3_g3
from gridcm.redispatch import curtailment_fallback, optimize_redispatch

config = EngineConfig()

print("== minimum-adjustment redispatch on the triangle ==")
grid = t3_g3()
row = ChronicRow(loads={"D3": 200.0}, renewables={"G2": 100.0},
                 plan={"G1": 100.0, "G3": 0.0})
state = initial_state(grid, row, config)
print(f"  before: L13 at rho {state.solution.rho_of('L13'):.3f} "
      f"(limit 90 MW, flow {state.solution.flow('L13'):.1f} MW)")
opt = optimize_redispatch(grid, state, config)
print(f"  optimized deltas: { {g: round(d, 2) for g, d in opt.action.deltas.items()} }")
print(f"  total moved: {opt.total_abs_mw:.1f} MW, predicted worst rho "
      f"{opt.predicted_max_rho:.4f}")
after = simulate(grid, state, opt.action, row, config)
print(f"  after applying: L13 at rho {after.solution.rho_of('L13'):.4f}")

print("\n== a radial wind feeder only curtailment can save ==")
grid = radial4()
row = ChronicRow(loads={"D2": 120.0}, renewables={"W4": 100.0}, plan={"G1": 20.0})
state = initial_state(grid, row, config)
print(f"  L34 carries the wind export at rho {state.solution.rho_of('L34'):.3f}")
plain = optimize_redispatch(grid, state, config)
print(f"  plain redispatch: insufficient={plain.insufficient} "
      f"(no dispatchable sits behind the feeder)")
fallback = curtailment_fallback(grid, state, config)
print(f"  fallback caps: { {r: round(c, 1) for r, c in fallback.action.curtail_caps.items()} } MW")
after = simulate(grid, state, fallback.action, row, config)
print(f"  after curtailment: L34 at rho {after.solution.rho_of('L34'):.4f}, "
      f"slack picked up {after.dispatch['G1'] - state.dispatch['G1']:.1f} MW")
