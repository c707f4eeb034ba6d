from .oum import (
    FROM_GOAL, FROM_START, MODES, UPSILON_CAP,
    AnisotropyClampWarning, NodeState, NodeTables, PlanResult, SlipClampWarning, SolverSide,
    UnreachableError, accepted_front_within, check_fin_condition, node_tables, offsets_table,
    path_headings, plan, solve_from,
)
from .path import PathDivergenceError, extract_path, interpolate_direction
from .updates import (
    eulerian_hex, eulerian_is_causal, golden_section, semi_lagrangian, update_psi, update_T,
    upwind_condition,
)
