"""One Active Flux time step and the time loop.

Point values at the half and full step are traced from the same old state;
the interface flux is the Simpson average of the flux over the step and the
cell averages get the usual conservative update.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from activeflux.errors import CFLViolation, InadmissibleState, StagnationError
from activeflux.evolution import OperatorChoice, check_compatible, evolve_interfaces
from activeflux.grid import AFState, Grid1D
from activeflux.models import ModelDescriptor
from activeflux.reconstruction import Reconstruction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    cfl_attained: float
    shock_guard_activations: int
    time_after: float


def max_speed(state: AFState, model: ModelDescriptor) -> float:
    """Largest characteristic speed magnitude over all degrees of freedom."""
    model.require_admissible(state.averages, "average ")
    model.require_admissible(state.point_values, "point value ")
    return float(max(np.abs(model.speeds(state.averages)).max(),
                     np.abs(model.speeds(state.point_values)).max()))


def max_stable_dt(state: AFState, grid: Grid1D, model: ModelDescriptor,
                  cfl_target: float, dt_max: float = math.inf) -> float:
    if not 0.0 < cfl_target <= 1.0:
        raise CFLViolation(f"CFL target {cfl_target} outside (0, 1]")
    smax = max_speed(state, model)
    if smax == 0.0:
        return dt_max
    return min(cfl_target * grid.dx / smax, dt_max)


def interface_flux_average(q_n, q_half, q_np1, model: ModelDescriptor) -> np.ndarray:
    """Simpson rule for the flux through an interface over one step."""
    return (model.flux(q_n) + 4.0 * model.flux(q_half) + model.flux(q_np1)) / 6.0


def _require_admissible(model, q, what):
    ok = np.atleast_1d(model.admissible(q))
    if not ok.all():
        raise InadmissibleState(
            f"{model.name}: inadmissible {what} at index {int(np.argmin(ok))}")


def step(state: AFState, grid: Grid1D, model: ModelDescriptor, operator: OperatorChoice,
         dt: float):
    """Advance ``state`` by ``dt``; returns the new state and a :class:`StepReport`.

    The input state is never modified.
    """
    check_compatible(operator, model)
    state.check(grid)
    smax = max_speed(state, model)
    cfl = smax * dt / grid.dx
    if dt < 0 or cfl > 1.0 + 1e-12:
        raise CFLViolation(f"dt={dt} gives CFL number {cfl:.6g} > 1")

    rec = Reconstruction(state, grid)
    q_half, n_half = evolve_interfaces(rec, model, operator, 0.5 * dt)
    q_new, n_full = evolve_interfaces(rec, model, operator, dt)
    _require_admissible(model, q_half, "half-step point value")
    _require_admissible(model, q_new, "point value")

    F = interface_flux_average(state.point_values, q_half, q_new, model)
    if grid.periodic:
        dF = np.roll(F, -1, axis=0) - F
    else:
        dF = F[1:] - F[:-1]
    avg = state.averages - (dt / grid.dx) * dF
    _require_admissible(model, avg, "cell average")

    new = AFState(avg, q_new, state.time + dt)
    if not new.is_finite():
        raise FloatingPointError(f"non-finite values after step at t={state.time}")
    return new, StepReport(dt, cfl, n_half + n_full, new.time)


def run_until(state: AFState, grid: Grid1D, model: ModelDescriptor, operator: OperatorChoice,
              t_end: float, cfl_target: float, dt_max: float = math.inf):
    """Step with the largest stable ``dt`` until ``t_end``, clipping the last step."""
    t0 = state.time
    if t_end < t0:
        raise ValueError(f"t_end={t_end} lies before the state time {t0}")
    reports = []
    if t_end == t0:
        return state, reports
    while True:
        remaining = t_end - state.time
        dt = max_stable_dt(state, grid, model, cfl_target, dt_max)
        if dt < 1e-14 * (t_end - t0):
            raise StagnationError(f"time step {dt:.3g} too small at t={state.time}")
        last = dt >= remaining
        state, report = step(state, grid, model, operator, remaining if last else dt)
        if last:
            state.time = t_end
            report = StepReport(report.dt_used, report.cfl_attained,
                                report.shock_guard_activations, t_end)
        reports.append(report)
        if last:
            break
    log.debug("reached t=%g in %d steps", t_end, len(reports))
    return state, reports
