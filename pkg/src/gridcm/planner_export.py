"""Serialization of plans, comparison tables and sensitivity results.

Plan files are JSON with a fixed schema (round-trippable); tables and
profiles are CSV with fixed column orders so downstream plotting stays
stable.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING

from .actions import action_from_dict

if TYPE_CHECKING:
    from .planner import (
        ComparisonTable,
        OperationalPlan,
        SensitivityRecord,
        SensitivitySummary,
    )

PLAN_SCHEMA_VERSION = 1


def _num(x: float):
    return "inf" if math.isinf(x) else x


def _denum(x) -> float:
    return float("inf") if x == "inf" else float(x)


def plan_to_document(plan: "OperationalPlan") -> dict:
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "scenario": plan.scenario_id,
        "alpha": plan.alpha,
        "truncated_at": plan.truncated_at,
        "steps": [
            {"step": s.step, "action": s.action.to_dict(), "max_rho": _num(s.max_rho)}
            for s in plan.steps
        ],
        "metrics": {
            "remaining_congestion_mwh": plan.metrics.remaining_congestion_mwh,
            "switching_operations": plan.metrics.switching_operations,
            "redispatch_mwh": plan.metrics.redispatch_mwh,
            "curtailment_mwh": plan.metrics.curtailment_mwh,
            "survived": plan.metrics.survived,
        },
        "profiles": {
            name: [_num(v) for v in series]
            for name, series in plan.profiles.items()
        },
    }


def plan_from_document(doc: dict) -> "OperationalPlan":
    from .planner import OperationalPlan, PlanMetrics, PlanStep

    m = doc["metrics"]
    return OperationalPlan(
        scenario_id=doc["scenario"],
        alpha=float(doc["alpha"]),
        steps=tuple(
            PlanStep(
                step=int(s["step"]),
                action=action_from_dict(s["action"]),
                max_rho=_denum(s["max_rho"]),
            )
            for s in doc["steps"]
        ),
        metrics=PlanMetrics(
            remaining_congestion_mwh=float(m["remaining_congestion_mwh"]),
            switching_operations=int(m["switching_operations"]),
            redispatch_mwh=float(m["redispatch_mwh"]),
            curtailment_mwh=float(m["curtailment_mwh"]),
            survived=bool(m["survived"]),
        ),
        profiles={
            name: tuple(_denum(v) for v in series)
            for name, series in doc["profiles"].items()
        },
        truncated_at=doc.get("truncated_at"),
    )


def write_plan(plan: "OperationalPlan", path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(plan_to_document(plan), indent=1) + "\n", encoding="utf-8")
    return path


def read_plan(path: str | Path) -> "OperationalPlan":
    with open(path, encoding="utf-8") as fh:
        return plan_from_document(json.load(fh))


def write_profile_csv(plan: "OperationalPlan", path: str | Path) -> Path:
    """Per-step series: enough to redraw the three standard panels
    (loading, cumulative redispatch, distance to reference)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "max_rho", "cum_redispatch_mwh", "topo_distance"])
        for t in range(len(plan.profiles["max_rho"])):
            writer.writerow([
                t,
                f"{plan.profiles['max_rho'][t]:.6f}",
                f"{plan.profiles['cum_redispatch_mwh'][t]:.6f}",
                f"{plan.profiles['topology_distance'][t]:.0f}",
            ])
    return path


def write_table_csv(table: "ComparisonTable", path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "alpha", "remaining_congestion_pct", "switching_pct", "redispatch_pct",
        ])
        for row in table.rows:
            writer.writerow([
                row.label,
                f"{row.remaining_congestion_pct:.2f}",
                f"{row.switching_pct:.2f}",
                f"{row.redispatch_pct:.2f}",
            ])
    return path


def write_sensitivity_csv(
    records: list["SensitivityRecord"],
    summaries: list["SensitivitySummary"],
    path: str | Path,
) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "scenario", "perturbation", "episode_start", "episode_end",
            "delta_max_rho_pct_points", "diverged",
        ])
        for r in records:
            writer.writerow([
                r.scenario_id, r.perturbation, r.episode_start, r.episode_end,
                "" if r.delta_max_rho_pct_points is None
                else f"{r.delta_max_rho_pct_points:.4f}",
                int(r.diverged),
            ])
    summary_path = path.with_suffix(".summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "perturbation", "episodes", "diverged", "fraction_improved",
            "min", "q1", "median", "q3", "max",
        ])
        for s in summaries:
            writer.writerow([
                s.perturbation, s.episodes, s.diverged,
                f"{s.fraction_improved:.4f}",
                *(f"{q:.4f}" for q in s.quartiles),
            ])
    return path
