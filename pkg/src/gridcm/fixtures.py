"""Built-in grids: small hand-checkable cases, a desk-scale 14-substation
network, and a parametric synthetic generator for scale testing.

The small grids are the reference cases for the solver, optimizer and
enumeration oracles; the 14-substation grid carries the day-ahead suite
(east/west split, a weak inter-region corridor that congests under wind
surges); ``synthetic_grid`` builds arbitrarily large meshed networks for
latency measurements.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid, grid_to_document, load_grid

# seeds of the standard 20-day congested suite used by the alpha-sweep
# comparisons; frozen once, part of the artifact definition
SUITE_SEEDS: tuple[int, ...] = tuple(range(20250001, 20250021))


def t3() -> Grid:
    """Triangle grid: three substations, unit susceptances, 100 MW limits,
    slack at S1, wind at S2, load at S3."""
    return load_grid({
        "substations": [{"id": "S1"}, {"id": "S2"}, {"id": "S3"}],
        "lines": [
            {"id": "L12", "from_substation": "S1", "to_substation": "S2",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "L13", "from_substation": "S1", "to_substation": "S3",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "L23", "from_substation": "S2", "to_substation": "S3",
             "susceptance": 1.0, "thermal_limit": 100.0},
        ],
        "generators": [
            {"id": "G1", "substation": "S1", "kind": "dispatchable",
             "p_min": 0.0, "p_max": 200.0, "ramp": 50.0, "cost": 25.0, "region": "west"},
            {"id": "G2", "substation": "S2", "kind": "wind",
             "p_min": 0.0, "p_max": 150.0, "ramp": 0.0, "region": "east"},
        ],
        "loads": [{"id": "D3", "substation": "S3"}],
        "slack": "G1",
        "layout": {"S1": [0.0, 0.0], "S2": [2.0, 0.0], "S3": [1.0, 1.6]},
    })


def t3_g3() -> Grid:
    """Triangle with a second dispatchable at S3 and a tight 90 MW limit on
    L13 — the minimal redispatch-LP case with one free variable."""
    doc = grid_to_document(t3())
    doc["lines"][1]["thermal_limit"] = 90.0  # L13
    doc["generators"].append(
        {"id": "G3", "substation": "S3", "kind": "dispatchable",
         "p_min": 0.0, "p_max": 100.0, "ramp": 50.0, "cost": 45.0, "region": "west"}
    )
    return load_grid(doc)


def radial4() -> Grid:
    """Four substations in a chain with wind at the far end: the line into
    the wind feeder can only be relieved by curtailment."""
    return load_grid({
        "substations": [{"id": "S1"}, {"id": "S2"}, {"id": "S3"}, {"id": "S4"}],
        "lines": [
            {"id": "L12", "from_substation": "S1", "to_substation": "S2",
             "susceptance": 1.0, "thermal_limit": 150.0},
            {"id": "L23", "from_substation": "S2", "to_substation": "S3",
             "susceptance": 1.0, "thermal_limit": 120.0},
            {"id": "L34", "from_substation": "S3", "to_substation": "S4",
             "susceptance": 1.0, "thermal_limit": 60.0},
        ],
        "generators": [
            {"id": "G1", "substation": "S1", "kind": "dispatchable",
             "p_min": 0.0, "p_max": 300.0, "ramp": 100.0, "cost": 25.0, "region": "west"},
            {"id": "W4", "substation": "S4", "kind": "wind",
             "p_min": 0.0, "p_max": 150.0, "ramp": 0.0, "region": "east"},
        ],
        "loads": [{"id": "D2", "substation": "S2"}],
        "slack": "G1",
        "layout": {"S1": [0.0, 0.0], "S2": [1.0, 0.0], "S3": [2.0, 0.0], "S4": [3.0, 0.0]},
    })


def enum_hub() -> Grid:
    """A four-element hub substation (three lines plus a generator) for
    enumeration oracles: the pinned endpoint is a line, so exactly four
    canonical splits are legal."""
    return load_grid({
        "substations": [{"id": "S0"}, {"id": "S1"}, {"id": "S2"}, {"id": "S3"}],
        "lines": [
            {"id": "LA", "from_substation": "S0", "to_substation": "S1",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "LB", "from_substation": "S0", "to_substation": "S2",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "LC", "from_substation": "S0", "to_substation": "S3",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "LR", "from_substation": "S1", "to_substation": "S2",
             "susceptance": 1.0, "thermal_limit": 100.0},
            {"id": "LS", "from_substation": "S2", "to_substation": "S3",
             "susceptance": 1.0, "thermal_limit": 100.0},
        ],
        "generators": [
            {"id": "G1", "substation": "S1", "kind": "dispatchable",
             "p_min": 0.0, "p_max": 300.0, "ramp": 60.0, "cost": 30.0, "region": "west"},
            {"id": "GH", "substation": "S0", "kind": "dispatchable",
             "p_min": 0.0, "p_max": 150.0, "ramp": 40.0, "cost": 40.0, "region": "west"},
        ],
        "loads": [{"id": "D2", "substation": "S2"}, {"id": "D3", "substation": "S3"}],
        "slack": "G1",
    })


def desk14() -> Grid:
    """Desk-scale 14-substation network: a load-heavy western region fed
    over three tie lines from a generation-heavy east (slack and most wind
    live there).  East wind surges push the corridor over its limits, which
    redispatch (west up / east down), bus splits around the corridor, or
    wind curtailment can relieve."""
    west = [f"S{i:02d}" for i in range(1, 8)]
    east = [f"S{i:02d}" for i in range(8, 15)]

    def line(i, a, b, susceptance, limit):
        return {"id": f"L{i:02d}", "from_substation": a, "to_substation": b,
                "susceptance": susceptance, "thermal_limit": limit}

    lines = [
        # west mesh
        line(1, "S01", "S02", 1.2, 140.0),
        line(2, "S02", "S03", 1.0, 110.0),
        line(3, "S03", "S04", 1.0, 110.0),
        line(4, "S04", "S05", 1.1, 130.0),
        line(5, "S05", "S06", 1.0, 120.0),
        line(6, "S06", "S01", 1.2, 150.0),
        line(7, "S02", "S07", 0.9, 100.0),
        line(8, "S07", "S04", 0.9, 100.0),
        # east mesh
        line(9, "S08", "S09", 1.0, 140.0),
        line(10, "S09", "S10", 1.0, 120.0),
        line(11, "S10", "S11", 1.1, 120.0),
        line(12, "S11", "S12", 1.0, 120.0),
        line(13, "S12", "S13", 1.0, 110.0),
        line(14, "S13", "S08", 1.1, 130.0),
        line(15, "S09", "S14", 0.9, 100.0),
        line(16, "S14", "S12", 0.9, 100.0),
        # inter-region ties (the congestion corridor)
        line(17, "S05", "S08", 0.8, 78.0),
        line(18, "S06", "S13", 0.8, 85.0),
        line(19, "S04", "S09", 0.7, 88.0),
    ]

    generators = [
        {"id": "G1", "substation": "S09", "kind": "dispatchable",
         "p_min": 0.0, "p_max": 400.0, "ramp": 60.0, "cost": 25.0, "region": "east"},
        {"id": "G2", "substation": "S06", "kind": "dispatchable",
         "p_min": 0.0, "p_max": 200.0, "ramp": 50.0, "cost": 35.0, "region": "west",
         "plan_weight": 2.5},
        {"id": "G3", "substation": "S11", "kind": "dispatchable",
         "p_min": 0.0, "p_max": 200.0, "ramp": 50.0, "cost": 40.0, "region": "east"},
        {"id": "W1", "substation": "S07", "kind": "wind",
         "p_min": 0.0, "p_max": 120.0, "ramp": 0.0, "region": "west"},
        {"id": "W2", "substation": "S08", "kind": "wind",
         "p_min": 0.0, "p_max": 150.0, "ramp": 0.0, "region": "east"},
        {"id": "W3", "substation": "S14", "kind": "wind",
         "p_min": 0.0, "p_max": 120.0, "ramp": 0.0, "region": "east"},
        {"id": "PV1", "substation": "S03", "kind": "solar",
         "p_min": 0.0, "p_max": 80.0, "ramp": 0.0, "region": "west"},
    ]

    load_sizes = {
        "S01": 45.0, "S02": 70.0, "S03": 55.0, "S04": 75.0, "S05": 60.0,
        "S10": 35.0, "S11": 30.0, "S12": 40.0, "S13": 35.0,
    }
    loads = [
        {"id": f"D{s[1:]}", "substation": s, "peak_mw": peak}
        for s, peak in load_sizes.items()
    ]

    layout = {}
    for i, s in enumerate(west):
        layout[s] = [float(i % 3), 2.0 - i // 3 * 1.2]
    for i, s in enumerate(east):
        layout[s] = [4.0 + float(i % 3), 2.0 - i // 3 * 1.2]

    return load_grid({
        "substations": [{"id": s} for s in west + east],
        "lines": lines,
        "generators": generators,
        "loads": loads,
        "slack": "G1",
        "layout": layout,
    })


# nominal per-load peaks and schedule weights for desk14 scenario generation;
# the western G2 is favored in the day-ahead schedule (local generation for
# the load center) so calm days keep the corridor well clear of its limits
DESK14_LOAD_PEAKS = {
    "D01": 45.0, "D02": 70.0, "D03": 55.0, "D04": 75.0, "D05": 60.0,
    "D10": 35.0, "D11": 30.0, "D12": 40.0, "D13": 35.0,
}
DESK14_PLAN_WEIGHTS = {"G2": 2.5}


def synthetic_grid(n_substations: int, seed: int = 0) -> Grid:
    """Random meshed grid at a requested scale (ring plus chords, ~1.6
    lines per substation), with thermal limits sized around a nominal
    dispatch so stressed rows congest it but the base case solves."""
    rng = np.random.default_rng(seed)
    subs = [f"S{i:03d}" for i in range(n_substations)]
    half = n_substations // 2

    lines = []

    def add_line(a: int, b: int, susceptance: float):
        lines.append({
            "id": f"L{len(lines):03d}",
            "from_substation": subs[a],
            "to_substation": subs[b],
            "susceptance": susceptance,
            "thermal_limit": 1.0,  # sized below
        })

    for i in range(n_substations):
        add_line(i, (i + 1) % n_substations, float(rng.uniform(0.8, 1.4)))
    n_chords = max(1, int(0.6 * n_substations))
    attempts = 0
    seen = {(min(a, b), max(a, b)) for a, b in
            ((i, (i + 1) % n_substations) for i in range(n_substations))}
    while n_chords > 0 and attempts < 50 * n_substations:
        attempts += 1
        a = int(rng.integers(0, n_substations))
        span = int(rng.integers(2, max(3, n_substations // 6)))
        b = (a + span) % n_substations
        key = (min(a, b), max(a, b))
        if a == b or key in seen:
            continue
        seen.add(key)
        add_line(a, b, float(rng.uniform(0.7, 1.3)))
        n_chords -= 1

    generators = [{
        "id": "G000", "substation": subs[0], "kind": "dispatchable",
        "p_min": 0.0, "p_max": 60.0 * n_substations, "ramp": 0.6 * n_substations * 5,
        "cost": 25.0, "region": "west",
    }]
    gen_subs = rng.choice(np.arange(1, n_substations), size=max(2, n_substations // 4),
                          replace=False)
    for k, si in enumerate(sorted(int(x) for x in gen_subs)):
        region = "west" if si < half else "east"
        if k % 3 == 0:
            generators.append({
                "id": f"G{k + 1:03d}", "substation": subs[si], "kind": "dispatchable",
                "p_min": 0.0, "p_max": float(rng.uniform(80, 200)),
                "ramp": float(rng.uniform(30, 60)), "cost": float(rng.uniform(28, 45)),
                "region": region,
            })
        else:
            kind = "wind" if k % 3 == 1 else "solar"
            generators.append({
                "id": f"{'W' if kind == 'wind' else 'PV'}{k + 1:03d}",
                "substation": subs[si], "kind": kind,
                "p_min": 0.0, "p_max": float(rng.uniform(40, 120)), "ramp": 0.0,
                "region": region,
            })

    load_subs = rng.choice(np.arange(n_substations), size=max(3, int(0.6 * n_substations)),
                           replace=False)
    loads = [{"id": f"D{int(si):03d}", "substation": subs[int(si)],
              "peak_mw": float(rng.uniform(15, 45))}
             for si in sorted(int(x) for x in load_subs)]

    doc = {
        "substations": [{"id": s} for s in subs],
        "lines": lines,
        "generators": generators,
        "loads": loads,
        "slack": "G000",
    }
    grid = load_grid(doc)

    # size limits from a nominal flat-load solve
    from .powerflow import dc_solve

    nominal_load = {d["id"]: d["peak_mw"] for d in loads}
    total_load = sum(nominal_load.values())
    renewables = {g["id"]: 0.5 * g["p_max"] for g in generators
                  if g["kind"] != "dispatchable"}
    dispatchables = [g for g in generators if g["kind"] == "dispatchable"]
    residual = max(0.0, total_load - sum(renewables.values()))
    weight = sum(g["p_max"] for g in dispatchables)
    injections = dict(renewables)
    for g in dispatchables:
        injections[g["id"]] = residual * g["p_max"] / weight
    injections.update({d: -mw for d, mw in nominal_load.items()})

    sol = dc_solve(grid, grid.reference_topology, injections)
    assert not sol.diverged
    for i, line_doc in enumerate(lines):
        line_doc["thermal_limit"] = float(max(30.0, 1.6 * abs(sol.flows[i])))
    return load_grid(doc)


def stressed_row(grid: Grid, seed: int = 0, target_rho: tuple[float, float] = (1.0, 1.35)):
    """A chronic row that overloads a handful of lines on a synthetic grid:
    regional load/wind imbalances are drawn until the solved loading peaks
    inside the target band without blanket-overloading the network."""
    from .engine import ChronicRow, initial_state
    from .config import EngineConfig

    rng = np.random.default_rng([seed, 118])
    config = EngineConfig()
    n = len(grid.substations)
    renewables = [g for g in grid.generators if not g.dispatchable]
    dispatchables = [g for g in grid.generators if g.dispatchable]
    index_of = {s: i for i, s in enumerate(grid.substation_ids)}

    def build(split, load_hi, load_lo, ren_hi, ren_lo, x):
        """Interpolate between balance (x=0) and the drawn imbalance (x=1)."""
        lh, ll = 1 + x * (load_hi - 1), 1 + x * (load_lo - 1)
        rh, rl = 0.5 + x * (ren_hi - 0.5), 0.5 + x * (ren_lo - 0.5)
        loads = {
            d.id: d.peak_mw * (lh if index_of[d.substation] < split * n else ll)
            for d in grid.loads
        }
        ren = {
            g.id: g.p_max * (rl if index_of[g.substation] < split * n else rh)
            for g in renewables
        }
        residual = max(0.0, sum(loads.values()) - sum(ren.values()))
        wsum = sum(g.p_max for g in dispatchables)
        plan = {g.id: min(residual * g.p_max / wsum, 0.9 * g.p_max)
                for g in dispatchables}
        return ChronicRow(loads=loads, renewables=ren, plan=plan)

    for _ in range(40):
        params = (rng.uniform(0.3, 0.7), rng.uniform(1.3, 1.9),
                  rng.uniform(0.5, 0.9), rng.uniform(0.85, 1.0),
                  rng.uniform(0.05, 0.3))
        lo, hi = 0.0, 1.0
        for _ in range(12):
            x = 0.5 * (lo + hi)
            row = build(*params, x)
            state = initial_state(grid, row, config)
            bad = state.diverged or state.auto_disconnected
            worst = float("inf") if bad else state.max_rho
            if bad or worst > target_rho[1]:
                hi = x
            elif worst <= target_rho[0]:
                lo = x
            else:
                overloads = state.solution.overloaded_lines()
                if 1 <= len(overloads) <= 12:
                    return row
                hi = x  # too broad an overload: back off
    raise RuntimeError(f"no stressed row found for seed {seed}")


def write_grid(grid: Grid, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(grid_to_document(grid), indent=2) + "\n", encoding="utf-8")
    return path
