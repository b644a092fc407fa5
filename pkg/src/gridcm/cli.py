"""Command line entry points: day-ahead planning, alpha comparison,
sensitivity analysis, scenario generation, and the assistant service.

Exit codes: 0 success, 2 validation error, 3 plan truncated by blackout.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .chronics import (
    ALL_PERTURBATIONS,
    ChronicError,
    ScenarioGenerationError,
    generate_scenario,
    load_chronics,
    write_chronic,
)
from .config import EngineConfig, load_engine_config
from .grid import GridValidationError, load_grid
from .planner import compare_alphas, rollout_day, sensitivity_run
from .planner_export import (
    read_plan,
    write_plan,
    write_profile_csv,
    write_sensitivity_csv,
    write_table_csv,
)

EXIT_VALIDATION = 2
EXIT_BLACKOUT = 3


def _load_config(path: str | None) -> EngineConfig:
    try:
        return load_engine_config(path)
    except (ValueError, OSError) as exc:
        raise click.exceptions.Exit(_fail(f"engine config: {exc}"))


def _fail(message: str, code: int = EXIT_VALIDATION) -> int:
    click.echo(f"error: {message}", err=True)
    return code


@click.group()
def main() -> None:
    """Congestion-management toolkit: planner and assistant service."""


@main.command()
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--chronics", "chronic_path", required=True, type=click.Path(exists=True))
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--engine-config", "config_path", type=click.Path(exists=True))
@click.option("--profile-csv", type=click.Path(), help="also write the per-step profile")
def plan(grid_path, chronic_path, alpha, out_path, config_path, profile_csv):
    """Roll one day-ahead operational plan for a single chronic."""
    config = _load_config(config_path)
    try:
        grid = load_grid(grid_path)
        chronic = load_chronics(chronic_path)
        config = config.with_overrides(alpha=alpha)
    except (GridValidationError, ChronicError, ValueError) as exc:
        raise SystemExit(_fail(str(exc)))
    result = rollout_day(grid, chronic, config)
    write_plan(result, out_path)
    if profile_csv:
        write_profile_csv(result, profile_csv)
    m = result.metrics
    click.echo(
        f"plan {result.scenario_id} alpha={alpha:g}: congestion "
        f"{m.remaining_congestion_mwh:.2f} MWh, switching {m.switching_operations}, "
        f"redispatch {m.redispatch_mwh:.2f} MWh, curtailment "
        f"{m.curtailment_mwh:.2f} MWh, survived={m.survived}"
    )
    if result.truncated_at is not None:
        click.echo(f"plan truncated by blackout at step {result.truncated_at}", err=True)
        raise SystemExit(EXIT_BLACKOUT)


@main.command()
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--chronics-dir", required=True, type=click.Path(exists=True))
@click.option("--alphas", default="0,0.25,0.5,0.75,1", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--engine-config", "config_path", type=click.Path(exists=True))
@click.option("--plans-dir", type=click.Path(), help="also write every rolled plan")
def compare(grid_path, chronics_dir, alphas, out_path, config_path, plans_dir):
    """Run the alpha sweep over a directory of day chronics and write the
    normalized comparison table."""
    config = _load_config(config_path)
    try:
        grid = load_grid(grid_path)
        alpha_values = [float(a) for a in alphas.split(",") if a.strip() != ""]
        chronic_files = sorted(Path(chronics_dir).glob("*.csv"))
        if not chronic_files:
            raise ChronicError(f"no .csv chronics in {chronics_dir}")
        chronics = [load_chronics(p) for p in chronic_files]
    except (GridValidationError, ChronicError, ValueError) as exc:
        raise SystemExit(_fail(str(exc)))

    plans_out = {} if plans_dir else None
    try:
        table = compare_alphas(grid, chronics, alpha_values, config, plans_out=plans_out)
    except ValueError as exc:
        raise SystemExit(_fail(str(exc)))
    write_table_csv(table, out_path)
    if plans_dir:
        out_dir = Path(plans_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for (scenario, alpha), p in plans_out.items():
            write_plan(p, out_dir / f"{scenario}-alpha{alpha:g}.json")
    click.echo(
        f"compared {len(alpha_values)} alphas over {table.congested_days} congested "
        f"days ({table.filtered_out_days} congestion-free filtered out) -> {out_path}"
    )
    for row in table.rows:
        click.echo(
            f"  {row.label:>5}: congestion {row.remaining_congestion_pct:7.2f}%  "
            f"switching {row.switching_pct:7.2f}%  redispatch {row.redispatch_pct:7.2f}%"
        )


@main.command()
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--plans-dir", required=True, type=click.Path(exists=True))
@click.option("--chronics-dir", required=True, type=click.Path(exists=True),
              help="original chronics the plans were made for")
@click.option("--scenarios", default="all", show_default=True,
              help="'all', 'original', or a comma list of perturbation kinds")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--engine-config", "config_path", type=click.Path(exists=True))
def sensitivity(grid_path, plans_dir, chronics_dir, scenarios, out_path, config_path):
    """Replay topology-only plans open-loop on perturbed wind chronics."""
    config = _load_config(config_path)
    try:
        grid = load_grid(grid_path)
        plans = [read_plan(p) for p in sorted(Path(plans_dir).glob("*.json"))]
        chronics = [load_chronics(p) for p in sorted(Path(chronics_dir).glob("*.csv"))]
        if not plans:
            raise ValueError(f"no plan .json files in {plans_dir}")
        scenario_list = _parse_scenarios(scenarios)
        records, summaries = sensitivity_run(grid, chronics, plans, scenario_list, config)
    except (GridValidationError, ChronicError, ValueError) as exc:
        raise SystemExit(_fail(str(exc)))
    write_sensitivity_csv(records, summaries, out_path)
    click.echo(f"wrote {len(records)} episode records -> {out_path}")
    for s in summaries:
        click.echo(
            f"  {s.perturbation:>30}: {s.episodes} episodes, "
            f"{100 * s.fraction_improved:.1f}% improved, "
            f"median delta {s.quartiles[2]:+.2f} pct points, "
            f"{s.diverged} diverged"
        )


def _parse_scenarios(spec: str):
    if spec == "all":
        return [None, *ALL_PERTURBATIONS]
    out = []
    for kind in spec.split(","):
        kind = kind.strip()
        if kind == "original":
            out.append(None)
        else:
            from .chronics import PerturbationScenario

            out.append(PerturbationScenario(kind))
    return out


@main.command()
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--profile", type=click.Choice(["calm", "congested"]), default="congested",
              show_default=True)
@click.option("--days", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="chronics",
              show_default=True)
@click.option("--engine-config", "config_path", type=click.Path(exists=True))
def generate(grid_path, seed, profile, days, out_dir, config_path):
    """Generate synthetic day chronics (seed+i for day i)."""
    config = _load_config(config_path)
    try:
        grid = load_grid(grid_path)
    except GridValidationError as exc:
        raise SystemExit(_fail(str(exc)))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(days):
        try:
            chronic = generate_scenario(grid, seed + i, profile, config=config)
        except ScenarioGenerationError as exc:
            raise SystemExit(_fail(str(exc)))
        path = write_chronic(chronic, out / f"{chronic.scenario_id}.csv")
        click.echo(f"wrote {path}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--fixtures", "fixtures_dir", required=True, type=click.Path(exists=True))
@click.option("--engine-config", "config_path", type=click.Path(exists=True))
@click.option("--snapshot-dir", type=click.Path(), help="dump session snapshots on shutdown")
@click.option("--console-dir", type=click.Path(exists=True),
              help="serve the operator console from this directory under /console")
def serve(port, host, fixtures_dir, config_path, snapshot_dir, console_dir):
    """Run the operator-assistant HTTP service."""
    import uvicorn

    from .service import create_app

    config = _load_config(config_path)
    app = create_app(fixtures_dir, config, snapshot_dir=snapshot_dir,
                     console_dir=console_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    sys.exit(main())
