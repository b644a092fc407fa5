"""Engine and agent configuration, loadable from a TOML or JSON file.

Protection constants mirror common practice for this kind of simulator:
a line trips after 3 consecutive steps above its thermal limit or
instantly at twice the limit, and an auto-tripped line stays unavailable
for 12 steps.  None of these are physical constants; every value here can
be overridden per deployment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class EngineConfig:
    # overload protection
    soft_overflow_steps: int = 3       # consecutive steps at rho > 1.0 before trip
    hard_overflow_rho: float = 2.0     # instant trip threshold
    line_reconnect_cooldown: int = 12  # steps a protection-tripped line stays out
    line_action_cooldown: int = 3      # steps after a manual line switch
    substation_cooldown: int = 3       # steps after a busbar reconfiguration

    # solver tolerances
    balance_tolerance_mw: float = 1e-6
    solver_rtol: float = 1e-9

    # grid state observer
    alert_threshold: float = 0.97
    observer_horizon: int = 3

    # topology search
    search_depth: int = 2
    search_beam: int = 8
    search_k: int = 5
    search_budget_ms: float = 2500.0

    # agent preference and safe-state automation
    alpha: float = 0.5
    recovery_enabled: bool = True
    reset_enabled: bool = True
    # how far ahead a recovery/reset must stay clear before it is allowed,
    # and the minimum simulated relief that justifies acting below rho 1.0
    # (keeps breakers from churning on marginal near-threshold gains)
    recovery_lookahead: int = 6
    relief_deadband: float = 0.02

    # redispatch optimizer
    curtailment_penalty: float = 10.0  # per-MW weight relative to dispatch deltas

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 < self.alert_threshold < 2.0:
            raise ValueError("alert_threshold must lie in (0, 2)")
        if self.observer_horizon < 0 or self.search_depth < 1 or self.search_beam < 1:
            raise ValueError("observer_horizon >= 0, search depth/beam >= 1 required")

    def with_overrides(self, **kwargs) -> "EngineConfig":
        return replace(self, **kwargs)


def load_engine_config(path: str | Path | None) -> EngineConfig:
    """Read an EngineConfig from a .json or .toml file; None gives defaults.

    Unknown keys are rejected so typos do not silently fall back to
    defaults.
    """
    if path is None:
        return EngineConfig()
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text.decode("utf-8"))
    else:
        doc = json.loads(text)

    known = {f.name for f in fields(EngineConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown engine-config keys: {sorted(unknown)}")
    return EngineConfig(**doc)
