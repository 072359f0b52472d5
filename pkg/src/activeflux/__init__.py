"""Active Flux solver for one-dimensional hyperbolic conservation laws."""

from activeflux.errors import (ActiveFluxError, CFLViolation, ConfigurationError, DomainError,
                               InadmissibleState, ReferenceUnavailable, StagnationError)
from activeflux.evolution import OperatorChoice, parse_operator
from activeflux.grid import AFState, Grid1D, build_grid, total_mass
from activeflux.harness import convergence_study, exact_reference, initial_condition
from activeflux.models import burgers, linear_advection, parse_model, shallow_water
from activeflux.reconstruction import global_eval, reconstruct_cell
from activeflux.update import max_stable_dt, run_until, step

__all__ = [
    "ActiveFluxError", "CFLViolation", "ConfigurationError", "DomainError",
    "InadmissibleState", "ReferenceUnavailable", "StagnationError",
    "OperatorChoice", "parse_operator", "AFState", "Grid1D", "build_grid", "total_mass",
    "convergence_study", "exact_reference", "initial_condition",
    "burgers", "linear_advection", "parse_model", "shallow_water",
    "global_eval", "reconstruct_cell", "max_stable_dt", "run_until", "step",
]
