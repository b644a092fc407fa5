"""Congestion management toolkit for transmission grids.

Core layers: a DC load-flow engine with double-busbar topology semantics
and overload protection, a PTDF-based redispatch optimizer, a
simulation-guided bus-splitting search, the decision agent combining them
under an operator preference, a day-ahead planner, and a real-time
operator-assistant HTTP service.
"""

from .actions import (
    Action,
    Composite,
    Curtailment,
    LineAction,
    NoOp,
    Redispatch,
    SubstationAction,
    action_from_dict,
)
from .config import EngineConfig, load_engine_config
from .engine import ChronicRow, GridState, contingency_screen, initial_state, simulate, step
from .grid import (
    Grid,
    GridValidationError,
    NodeGraph,
    TopologyState,
    electrical_nodes,
    islands,
    line_endpoint_distance,
    load_grid,
    topology_distance,
    validate_topology,
)
from .powerflow import Diverged, FlowSolution, Ptdf, dc_solve, ptdf

__all__ = [
    "Action", "ChronicRow", "Composite", "Curtailment", "Diverged", "EngineConfig",
    "FlowSolution", "Grid", "GridState", "GridValidationError", "LineAction", "NoOp",
    "NodeGraph", "Ptdf", "Redispatch", "SubstationAction", "TopologyState",
    "action_from_dict", "contingency_screen", "dc_solve", "electrical_nodes",
    "initial_state", "islands", "line_endpoint_distance", "load_engine_config",
    "load_grid", "ptdf", "simulate", "step", "topology_distance", "validate_topology",
]

__version__ = "0.1.0"
