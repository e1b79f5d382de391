"""Solvers for the SINR-constrained BCRLB design problem."""

from .baselines import solve_ao, solve_ipga
from .cmlt import solve_cmlt
from .config import SolverConfig, SolverReport, is_feasible, project_unit, ratio_slacks
from .init import feasible_init, relative_margin
from .pnqt import solve_pnqt
from .unknown_alpha import solve_unknown_alpha

__all__ = [
    "SolverConfig",
    "SolverReport",
    "feasible_init",
    "relative_margin",
    "is_feasible",
    "project_unit",
    "ratio_slacks",
    "solve_pnqt",
    "solve_cmlt",
    "solve_ipga",
    "solve_ao",
    "solve_unknown_alpha",
]
