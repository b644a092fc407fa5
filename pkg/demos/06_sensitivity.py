"""Robustness of topology-only plans against wrongly-forecast wind.

Topology plans are 'free' but rigid: this analysis replays them verbatim
on modified chronics (all wind +-10%, east/west +-25% imbalances) and
compares each congestion episode's worst loading against doing nothing.
Negative deltas mean the plan still helped even though the wind came out
different.
"""

from gridcm import EngineConfig
from gridcm.chronics import ALL_PERTURBATIONS, generate_scenario
from gridcm.fixtures import SUITE_SEEDS, desk14
from gridcm.planner import rollout_day, sensitivity_run

grid = desk14()
config = EngineConfig()
days = [generate_scenario(grid, seed, "congested") for seed in SUITE_SEEDS[:4]]

print("building topology-only plans (alpha = 1)...")
plans = [
    rollout_day(grid, day, config.with_overrides(alpha=1.0)) for day in days
]

records, summaries = sensitivity_run(
    grid, days, plans, [None, *ALL_PERTURBATIONS], config
)
print(f"\n{len(records)} congestion episodes evaluated\n")
print(f"{'scenario':>30}  {'episodes':>8}  {'improved':>8}  "
      f"{'median':>8}  {'worst':>8}  {'diverged':>8}")
for s in summaries:
    print(f"{s.perturbation:>30}  {s.episodes:8d}  "
          f"{100 * s.fraction_improved:7.1f}%  "
          f"{s.quartiles[2]:+7.2f}  {s.quartiles[4]:+7.2f}  {s.diverged:8d}")

print("\n(deltas are percentage points of worst-case line loading, plan")
print(" minus do-nothing, per episode; below zero = the plan helped)")
