"""Evolution operators for the interface point values.

Every operator maps the continuous reconstruction at the old time to point
values a time ``t`` later by following characteristics back to their
footpoints:

* ``exact_linear``: closed-form update for linear advection.
* ``scalar_fixed_point``: ``xi <- x - t a(q0(xi))`` iterated ``k`` times from
  ``xi = x``. The footpoint error after ``k`` iterations is ``O(t^(k+1))``.
* ``system_midpoint``: characteristic variables traced with the speed
  evaluated at an estimate of the half-time point of the characteristic.
  Third order in ``t``.
* ``system_naive``: two-step tracing that samples all characteristic
  variables at the first-guess footpoint. Only second order in ``t`` once
  the families are coupled; kept for comparison.

When characteristics cross, a shock guard traces one-sided candidates from
both neighbouring cells and picks one (see :func:`shock_guard`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from activeflux.errors import CFLViolation, ConfigurationError
from activeflux.grid import AFState, Grid1D
from activeflux.models import ModelDescriptor
from activeflux.reconstruction import Reconstruction

KINDS = ("exact_linear", "scalar_fixed_point", "system_midpoint", "system_naive")

# a footpoint this far past the neighbouring cell means crossing characteristics
CONE_TOL = 1e-10


@dataclass(frozen=True)
class OperatorChoice:
    kind: str = "scalar_fixed_point"
    iterations: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown operator kind {self.kind!r}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigurationError(f"iteration count must be >= 1, got {self.iterations}")

    @property
    def spec(self) -> str:
        return {"exact_linear": "exact",
                "scalar_fixed_point": f"fixedpoint:k={self.iterations}",
                "system_midpoint": "midpoint",
                "system_naive": "naive"}[self.kind]


def parse_operator(spec: str, k_default: int = 2) -> OperatorChoice:
    """Parse ``exact``, ``fixedpoint[:k=<int>]``, ``midpoint`` or ``naive``."""
    name, _, rest = spec.strip().partition(":")
    if name == "exact" and not rest:
        return OperatorChoice("exact_linear")
    if name == "midpoint" and not rest:
        return OperatorChoice("system_midpoint")
    if name == "naive" and not rest:
        return OperatorChoice("system_naive")
    if name == "fixedpoint":
        k = k_default
        if rest:
            key, _, value = rest.partition("=")
            if key.strip() != "k":
                raise ConfigurationError(f"fixedpoint takes only k=<int>, got {rest!r}")
            try:
                k = int(value)
            except ValueError:
                raise ConfigurationError(f"bad iteration count {value!r}") from None
        return OperatorChoice("scalar_fixed_point", k)
    raise ConfigurationError(f"unknown operator {spec!r}")


def check_compatible(op: OperatorChoice, model: ModelDescriptor) -> None:
    if op.kind == "exact_linear" and model.linear_speed is None:
        raise ConfigurationError(f"exact operator requires linear advection, not {model.name}")
    if op.kind == "scalar_fixed_point" and model.m != 1:
        raise ConfigurationError(f"fixed-point operator is scalar only; {model.name} has m={model.m}")
    if op.kind in ("system_midpoint", "system_naive") and not model.has_char_vars:
        raise ConfigurationError(f"{model.name} has no characteristic variables")


@dataclass
class FootpointResult:
    xi: float
    speed_used: float
    converged: bool = True
    candidates: List["FootpointResult"] = field(default_factory=list)


# ---------------------------------------------------------------------------
# closed form for linear advection

def point_update_linear_formula(lam, avg_up, q_up_far, q_here):
    """Point value after one step of exact linear advection at CFL number ``lam``.

    ``avg_up`` and ``q_up_far`` belong to the upwind cell, ``q_here`` is the
    current value at the interface. For negative speed pass the mirrored
    stencil and ``|lam|``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0.0) or np.any(lam > 1.0):
        raise CFLViolation(f"CFL number {lam} outside [0, 1]")
    return (-6.0 * np.asarray(avg_up) * (lam - 1.0) * lam
            + np.asarray(q_up_far) * lam * (3.0 * lam - 2.0)
            + np.asarray(q_here) * (lam - 1.0) * (3.0 * lam - 1.0))


# ---------------------------------------------------------------------------
# tracing on arbitrary data (callables of position)

def fixed_point_iterates(x, t, q0: Callable, speed: Callable, k: int) -> list:
    """Footpoint iterates ``[xi0, ..., xik]`` with ``xi0 = x``.

    ``q0`` evaluates the scalar data at an array of positions, ``speed``
    maps values to characteristic speeds.
    """
    x = np.asarray(x, dtype=float)
    iterates = [x]
    for _ in range(k):
        iterates.append(x - t * speed(q0(iterates[-1])))
    return iterates


def trace_system_midpoint(x, t, Q0: Callable, lam: Callable):
    """Characteristic variables at time ``t`` and their footpoints.

    ``Q0`` maps positions ``(n,)`` to characteristic variables ``(n, m)``,
    ``lam`` maps those to the ``m`` characteristic speeds. Family ``j`` is
    transported with the speed evaluated on ``Q_i0(x - t (lam_i + lam_j) / 2)``.
    """
    x = np.asarray(x, dtype=float)
    lam_x = lam(Q0(x))
    m = lam_x.shape[-1]
    out = np.empty_like(lam_x)
    xi = np.empty_like(lam_x)
    for j in range(m):
        inner = np.empty_like(lam_x)
        for i in range(m):
            inner[:, i] = Q0(x - t * (0.5 * (lam_x[:, i] + lam_x[:, j])))[:, i]
        xi[:, j] = x - t * lam(inner)[:, j]
        out[:, j] = Q0(xi[:, j])[:, j]
    return out, xi


def trace_system_naive(x, t, Q0: Callable, lam: Callable):
    """Like :func:`trace_system_midpoint` but all variables are sampled at ``x - t lam_j``."""
    x = np.asarray(x, dtype=float)
    lam_x = lam(Q0(x))
    m = lam_x.shape[-1]
    out = np.empty_like(lam_x)
    xi = np.empty_like(lam_x)
    for j in range(m):
        inner = Q0(x - t * lam_x[:, j])
        xi[:, j] = x - t * lam(inner)[:, j]
        out[:, j] = Q0(xi[:, j])[:, j]
    return out, xi


# ---------------------------------------------------------------------------
# shock guard

def _rh_speed(model: ModelDescriptor, j: int):
    """Shock speed estimate between two states of family ``j`` (char. variables)."""
    if model.m == 1:
        def speed(QL, QR):
            qL, qR = model.from_char(QL), model.from_char(QR)
            dq = (qR - qL)[..., 0]
            jump = (model.flux(qR) - model.flux(qL))[..., 0]
            small = np.abs(dq) <= 1e-14 * np.maximum(1.0, np.abs(qL[..., 0]))
            with np.errstate(divide="ignore", invalid="ignore"):
                s = jump / np.where(small, 1.0, dq)
            return np.where(small, model.speeds(qL)[..., 0], s)
        return speed

    def speed(QL, QR):
        return 0.5 * (model.speeds_of_char(QL)[..., j] + model.speeds_of_char(QR)[..., j])
    return speed


@dataclass
class _Traced:
    values: np.ndarray       # characteristic variables (n, m)
    xi: np.ndarray           # footpoints (n, m)
    speed: np.ndarray        # effective speeds (n, m)
    guarded: np.ndarray      # (n, m) bool
    candidates: list         # per family: dict of one-sided candidate arrays


def _one_sided(rec, charvals, cell, x, t, lam_j, k):
    """Fixed-point trace of one family using a single cell's parabola.

    Starts from the speed of that cell's average; ``consistent`` marks traces
    that settled on a genuine solution inside the cell rather than drifting
    towards its edge.
    """
    xi = x - t * lam_j(charvals.of_states(rec.avg[cell]))
    prev = xi
    for _ in range(k + 1):
        prev, xi = xi, x - t * lam_j(charvals.in_cell(cell, xi))
    consistent = np.abs(xi - prev) <= 0.5 * np.abs(x - prev)
    return prev, consistent


class _CharData:
    """Characteristic variables of a reconstruction."""

    def __init__(self, rec: Reconstruction, model: ModelDescriptor):
        self.rec = rec
        self.model = model

    def of_states(self, q):
        return self.model.to_char(q)

    def __call__(self, x):
        return self.model.to_char(self.rec(x))

    def in_cell(self, cell, x):
        return self.model.to_char(self.rec.in_cell(cell, x))


def _guard(rec, model, charvals, x, t, xi_c, k, diverging=None):
    """Detect crossing characteristics and pick a footpoint for each family.

    Returns ``(values, xi, guarded, candidates)``; ``values`` and ``xi`` are
    only meaningful where ``guarded`` is set.
    """
    dx = rec.grid.dx
    n, m = xi_c.shape
    values = np.full((n, m), np.nan)
    xi_out = np.full((n, m), np.nan)
    guarded = np.zeros((n, m), dtype=bool)
    candidates = []

    # one-sided candidates only make sense when x sits on an interface
    s = (x - rec.grid.x_left) / dx
    at_iface = np.abs(s - np.round(s)) <= 1e-9
    cell_L, _ = rec.locate(x - 0.5 * dx)
    cell_R, _ = rec.locate(x + 0.5 * dx)

    for j in range(m):
        def lam_j(Q, j=j):
            return model.speeds_of_char(Q)[..., j]

        xi_L, ok_L = _one_sided(rec, charvals, cell_L, x, t, lam_j, k)
        xi_R, ok_R = _one_sided(rec, charvals, cell_R, x, t, lam_j, k)
        slack = dx * (1.0 + CONE_TOL)
        valid_L = at_iface & ok_L & (xi_L <= x) & (xi_L >= x - slack)
        valid_R = at_iface & ok_R & (xi_R >= x) & (xi_R <= x + slack)
        Q_L = charvals.in_cell(cell_L, xi_L)
        Q_R = charvals.in_cell(cell_R, xi_R)
        s_L, s_R = lam_j(Q_L), lam_j(Q_R)

        crossing = valid_L & valid_R & (s_L > s_R) & (xi_R - xi_L > 1e-10 * dx)
        outside = np.abs(x - xi_c[:, j]) > slack
        trig = crossing | outside
        if diverging is not None:
            trig |= diverging
        guarded[:, j] = trig
        candidates.append({"xi_L": xi_L, "xi_R": xi_R, "valid_L": valid_L,
                           "valid_R": valid_R, "speed_L": s_L, "speed_R": s_R})
        if not trig.any():
            continue

        rh = _rh_speed(model, j)(Q_L, Q_R)
        take_L = valid_L & (~valid_R | (rh >= 0.0))
        take_R = valid_R & ~take_L
        neither = ~(take_L | take_R)

        xi_sel = np.where(take_L, xi_L, xi_R)
        val = np.where(take_L, Q_L[:, j], Q_R[:, j])
        if neither.any():
            clamped = np.clip(xi_c[:, j], x - dx, x + dx)
            xi_sel = np.where(neither, clamped, xi_sel)
            val = np.where(neither, charvals(clamped)[:, j], val)
        values[trig, j] = val[trig]
        xi_out[trig, j] = xi_sel[trig]
    return values, xi_out, guarded, candidates


def shock_guard(candidates: List[FootpointResult], x: float, state: AFState,
                grid: Grid1D, model: ModelDescriptor, family: int = 0) -> FootpointResult:
    """Select one footpoint among candidate characteristics reaching ``x``.

    A single converged candidate is returned as is. Otherwise the leftmost
    and rightmost converged candidates are compared through the shock-speed
    estimate between the states they carry (Rankine-Hugoniot for scalar
    laws, mean characteristic speed for systems): a non-negative shock
    speed means the left state overtakes ``x``, so the left candidate wins.
    """
    if not candidates:
        raise ValueError("shock_guard needs at least one candidate")
    good = [c for c in candidates if c.converged]
    if len(candidates) == 1 and good:
        return candidates[0]
    pool = good or candidates
    left = min(pool, key=lambda c: c.xi)
    right = max(pool, key=lambda c: c.xi)
    charvals = _CharData(Reconstruction(state, grid), model)
    Q = charvals(np.array([left.xi, right.xi]))
    s = _rh_speed(model, family)(Q[:1], Q[1:])[0]
    chosen = left if s >= 0.0 else right
    return FootpointResult(chosen.xi, chosen.speed_used, False, list(candidates))


# ---------------------------------------------------------------------------
# operators on a reconstruction

def _scalar_speed(model):
    return lambda q: model.speeds(q[..., None])[..., 0]


def trace_points(rec: Reconstruction, model: ModelDescriptor, op: OperatorChoice,
                 x, t: float) -> _Traced:
    """Trace all points ``x`` back over time ``t``; values in characteristic variables."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    charvals = _CharData(rec, model)
    diverging = None
    if op.kind == "scalar_fixed_point":
        speed = _scalar_speed(model)
        its = fixed_point_iterates(x, t, lambda y: rec(y)[:, 0], speed, op.iterations)
        xi = its[-1][:, None]
        values = model.to_char(rec(its[-1]))
        eff = ((x - its[-1]) / t if t > 0 else speed(rec(x)[:, 0]))[:, None]
        if len(its) >= 3:
            d1 = np.abs(its[-1] - its[-2])
            d0 = np.abs(its[-2] - its[-3])
            diverging = d1 > d0 * (1.0 + 1e-12) + 1e-14 * rec.grid.dx
        k = op.iterations
    elif op.kind in ("system_midpoint", "system_naive"):
        tracer = trace_system_midpoint if op.kind == "system_midpoint" else trace_system_naive
        values, xi = tracer(x, t, charvals, model.speeds_of_char)
        eff = (x[:, None] - xi) / t if t > 0 else model.speeds_of_char(charvals(x))
        k = 2
    else:
        raise ConfigurationError(f"trace_points does not handle {op.kind}")

    if t == 0:
        return _Traced(values, xi, eff, np.zeros(values.shape, dtype=bool), [])
    gvals, gxi, guarded, cands = _guard(rec, model, charvals, x, t, xi, k, diverging)
    if guarded.any():
        values = np.where(guarded, gvals, values)
        xi = np.where(guarded, gxi, xi)
        eff = np.where(guarded, (x[:, None] - xi) / t, eff)
    return _Traced(values, xi, eff, guarded, cands)


def _exact_linear_points(rec: Reconstruction, model: ModelDescriptor, t: float):
    grid = rec.grid
    c = model.linear_speed
    p = np.arange(grid.n_points)
    lam = abs(c) * t / grid.dx
    if c >= 0:
        cell = rec.cell_of_interface(p, "left")
        return point_update_linear_formula(lam, rec.avg[cell], rec.q_left[cell], rec.q_right[cell])
    cell = rec.cell_of_interface(p, "right")
    return point_update_linear_formula(lam, rec.avg[cell], rec.q_right[cell], rec.q_left[cell])


def evolve_interfaces(rec: Reconstruction, model: ModelDescriptor, op: OperatorChoice,
                      t: float):
    """New values ``(n_points, m)`` at every stored interface after time ``t``.

    Also returns the number of (interface, family) pairs handled by the
    shock guard.
    """
    if op.kind == "exact_linear":
        return _exact_linear_points(rec, model, t), 0
    traced = trace_points(rec, model, op, rec.grid.point_positions, t)
    return model.from_char(traced.values), int(traced.guarded.sum())


# ---------------------------------------------------------------------------
# single-point conveniences

def footpoint_scalar(x: float, t: float, state: AFState, grid: Grid1D,
                     model: ModelDescriptor, k: int = 2) -> FootpointResult:
    if t < 0:
        raise ValueError("t must be non-negative")
    if model.m != 1:
        raise ConfigurationError("footpoint_scalar needs a scalar model")
    rec = Reconstruction(state, grid)
    tr = trace_points(rec, model, OperatorChoice("scalar_fixed_point", k), [x], t)
    _check_finite(tr.values, x)
    result = FootpointResult(float(tr.xi[0, 0]), float(tr.speed[0, 0]),
                             converged=not bool(tr.guarded[0, 0]))
    if tr.guarded[0, 0]:
        c = tr.candidates[0]
        for side in "LR":
            if c[f"valid_{side}"][0]:
                result.candidates.append(FootpointResult(
                    float(c[f"xi_{side}"][0]), float(c[f"speed_{side}"][0])))
    return result


def _check_finite(values, x):
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"non-finite value traced at x={x}")


def _point_eval(x, t, state, grid, model, op):
    if t < 0:
        raise ValueError("t must be non-negative")
    check_compatible(op, model)
    rec = Reconstruction(state, grid)
    tr = trace_points(rec, model, op, [x], t)
    _check_finite(tr.values, x)
    return tr.values[0]


def evolve_point_scalar(x: float, t: float, state: AFState, grid: Grid1D,
                        model: ModelDescriptor, k: int = 2) -> np.ndarray:
    """Value at ``(t, x)`` transported from the fixed-point footpoint."""
    Q = _point_eval(x, t, state, grid, model, OperatorChoice("scalar_fixed_point", k))
    return model.from_char(Q)


def evolve_point_system_midpoint(x: float, t: float, state: AFState, grid: Grid1D,
                                 model: ModelDescriptor) -> np.ndarray:
    """Characteristic variables at ``(t, x)`` from the midpoint-speed operator."""
    return _point_eval(x, t, state, grid, model, OperatorChoice("system_midpoint"))


def evolve_point_system_naive(x: float, t: float, state: AFState, grid: Grid1D,
                              model: ModelDescriptor) -> np.ndarray:
    """Characteristic variables at ``(t, x)`` from the naive two-step operator."""
    return _point_eval(x, t, state, grid, model, OperatorChoice("system_naive"))
