"""RIS beamforming for joint angle sensing and multi-user communication.

Minimizes the Bayesian Cramer-Rao bound of a sensing user's angle under
SINR constraints for communication users, with fractional-programming
solvers, benchmark methods, grid posteriors and an experiment CLI.
"""

__version__ = "0.1.0"

from .numerics import ContractError, SingularMatrixError
from .scenario import ConfigError, PriorGrid, Scenario, build_scenario, default_prior, load_scenario, load_scenario_file
from .sensing import bcrlb, build_cache, metric_A, modified_bcrlb

__all__ = [
    "__version__",
    "ContractError",
    "SingularMatrixError",
    "ConfigError",
    "PriorGrid",
    "Scenario",
    "build_scenario",
    "default_prior",
    "load_scenario",
    "load_scenario_file",
    "bcrlb",
    "build_cache",
    "metric_A",
    "modified_bcrlb",
]
