from .case import (
    Bus,
    CaseError,
    CaseInvariantError,
    Generator,
    GridCase,
    Line,
    Load,
    Substation,
    dump_case,
    load_case,
    read_case,
)
from .limits import LimitReport, evaluate_limits, line_loading
from .powerflow import (
    DivergenceError,
    Injections,
    PowerFlowError,
    PowerFlowOptions,
    PowerFlowSolution,
    SingularJacobianError,
    solve_power_flow,
)
from .topology import EffectiveGraph, Node, TopologyState, build_effective_graph

__all__ = [
    "Bus", "CaseError", "CaseInvariantError", "Generator", "GridCase", "Line", "Load",
    "Substation", "dump_case", "load_case", "read_case", "LimitReport",
    "evaluate_limits", "line_loading", "DivergenceError", "Injections",
    "PowerFlowError", "PowerFlowOptions", "PowerFlowSolution", "SingularJacobianError",
    "solve_power_flow", "EffectiveGraph", "Node", "TopologyState",
    "build_effective_graph",
]
