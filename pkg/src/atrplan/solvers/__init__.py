from ..milp.model import MilpModel, MilpSolution
from .bnb import polish, solve_lp_relaxation, solve_milp_embedded
from .config import BACKENDS, SolverConfig
from .external import ExternalSolverError, solve_milp_external
from .simplex import LPResult, StandardForm, solve_lp


def solve(model: MilpModel, config: SolverConfig | None = None) -> MilpSolution:
    config = config or SolverConfig()
    if config.backend == "external":
        return polish(model, solve_milp_external(model, config), config)
    return solve_milp_embedded(model, config)


__all__ = ["BACKENDS", "ExternalSolverError", "LPResult", "polish", "SolverConfig", "StandardForm", "solve",
           "solve_lp", "solve_lp_relaxation", "solve_milp_embedded", "solve_milp_external"]
