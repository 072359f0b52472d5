"""Initial data, reference solutions, error norms, EOC and CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from activeflux.errors import ConfigurationError, ReferenceUnavailable
from activeflux.evolution import OperatorChoice, check_compatible, parse_operator
from activeflux.grid import AFState, Grid1D, build_grid
from activeflux.models import ModelDescriptor, parse_model
from activeflux.reconstruction import Reconstruction
from activeflux.update import run_until

log = logging.getLogger(__name__)

GAUSS_S, GAUSS_W = np.polynomial.legendre.leggauss(5)
GAUSS_S, GAUSS_W = 0.5 * GAUSS_S, 0.5 * GAUSS_W  # on [-1/2, 1/2], weights sum to 1


def gauss_points(grid: Grid1D) -> np.ndarray:
    """Five Gauss-Legendre nodes per cell, shape ``(n_cells, 5)``."""
    return grid.centers[:, None] + grid.dx * GAUSS_S[None, :]


# ---------------------------------------------------------------------------
# initial profiles

class Profile:
    """Initial data as a function of position, returning ``(n, m)`` arrays."""

    m = 1

    def __init__(self, grid: Grid1D):
        self.x_left = grid.x_left
        self.length = grid.length
        self.periodic = grid.periodic

    def _wrap(self, x):
        x = np.asarray(x, dtype=float)
        if self.periodic:
            return self.x_left + np.mod(x - self.x_left, self.length)
        return x

    def __call__(self, x) -> np.ndarray:
        return self.values(self._wrap(x)).reshape(np.shape(x) + (self.m,))

    def values(self, x):
        raise NotImplementedError

    def derivative(self, x) -> Optional[np.ndarray]:
        return None

    def cell_means(self, grid: Grid1D) -> np.ndarray:
        xs = gauss_points(grid)
        return np.einsum("ngm,g->nm", self(xs), GAUSS_W)


class Sine(Profile):
    """``mean + amplitude sin(2 pi (x - x_left) / L + phase)``."""

    def __init__(self, grid, amplitude=1.0, mean=0.0, phase=0.0):
        super().__init__(grid)
        self.amplitude, self.mean, self.phase = amplitude, mean, phase
        self.k = 2.0 * math.pi / self.length

    def values(self, x):
        return self.mean + self.amplitude * np.sin(self.k * (x - self.x_left) + self.phase)

    def derivative(self, x):
        x = self._wrap(x)
        return (self.amplitude * self.k * np.cos(self.k * (x - self.x_left) + self.phase))[..., None]

    def cell_means(self, grid):
        a = self.k * (grid.centers - 0.5 * grid.dx - self.x_left) + self.phase
        b = a + self.k * grid.dx
        integral = -(np.cos(b) - np.cos(a)) / self.k
        return (self.mean + self.amplitude * integral / grid.dx)[:, None]


class Gaussian(Profile):
    def __init__(self, grid, center=0.5, width=0.1, amplitude=1.0, floor=0.0):
        super().__init__(grid)
        if not width > 0:
            raise ConfigurationError("gaussian width must be positive")
        self.center, self.width, self.amplitude, self.floor = center, width, amplitude, floor

    def values(self, x):
        return self.floor + self.amplitude * np.exp(-((x - self.center) / self.width) ** 2)

    def derivative(self, x):
        x = self._wrap(x)
        z = (x - self.center) / self.width
        return (-2.0 * z / self.width * self.amplitude * np.exp(-z * z))[..., None]


class Step(Profile):
    def __init__(self, grid, left=1.0, right=0.0, x0=None):
        super().__init__(grid)
        self.left, self.right = left, right
        self.x0 = grid.x_left + 0.5 * grid.length if x0 is None else x0

    def values(self, x):
        mid = 0.5 * (self.left + self.right)
        return np.where(x < self.x0, self.left, np.where(x > self.x0, self.right, mid))

    def cell_means(self, grid):
        frac = np.clip((self.x0 - grid.interfaces[:-1]) / grid.dx, 0.0, 1.0)
        frac = np.where(np.abs(frac - np.round(frac)) < 1e-12, np.round(frac), frac)
        return (self.left * frac + self.right * (1.0 - frac))[:, None]


class ShallowWaterProfile(Profile):
    """Depth and velocity profiles mapped to conserved ``(h, hu)``."""

    m = 2

    def __init__(self, grid, depth: Profile, velocity: Optional[Profile] = None):
        super().__init__(grid)
        self.depth, self.velocity = depth, velocity

    def __call__(self, x):
        h = self.depth(x)[..., 0]
        u = self.velocity(x)[..., 0] if self.velocity is not None else np.zeros_like(h)
        return np.stack([h, h * u], axis=-1)

    def cell_means(self, grid):
        if self.velocity is None:
            h = self.depth.cell_means(grid)[:, 0]
            return np.stack([h, np.zeros_like(h)], axis=-1)
        return super().cell_means(grid)


class RandomData:
    """Independent uniform samples for every degree of freedom (stability tests)."""

    def __init__(self, amplitude=1.0, mean=0.0, seed=None):
        self.amplitude, self.mean, self.seed = amplitude, mean, seed

    def state(self, grid: Grid1D, m: int) -> AFState:
        rng = np.random.default_rng(self.seed)
        def draw(n):
            return self.mean + self.amplitude * rng.uniform(-1.0, 1.0, size=(n, m))
        return AFState(draw(grid.n_cells), draw(grid.n_points))


def _numbers(text: str, name: str, max_count: int) -> list:
    if not text:
        return []
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"bad numbers in initial condition {name}:{text}") from None
    if len(values) > max_count:
        raise ConfigurationError(f"{name} takes at most {max_count} parameters")
    return values


def make_profile(spec: str, grid: Grid1D, model: Optional[ModelDescriptor] = None,
                 seed: Optional[int] = None):
    """Parse an initial-condition spec.

    Scalar profiles: ``sine:amplitude,mean``,
    ``gaussian:center,width,amplitude,floor``, ``step:left,right,x0`` and
    ``random:amplitude,mean``. Shallow water additionally accepts
    ``swe-sine:h0,h_amp,u0,u_amp`` (depth ``h0 + h_amp sin``, velocity
    ``u0 + u_amp cos``) and ``swe-dam:h_left,h_right,x0``; a plain scalar
    profile is used as the depth of a fluid at rest.
    """
    name, _, rest = spec.strip().partition(":")
    m = 1 if model is None else model.m
    if name == "random":
        return RandomData(*_numbers(rest, name, 2), seed=seed)
    if name == "swe-sine":
        given = _numbers(rest, name, 4)
        h0, ha, u0, ua = given + [1.0, 0.2, 0.5, 0.25][len(given):]
        depth = Sine(grid, ha, h0)
        velocity = Sine(grid, ua, u0, phase=0.5 * math.pi)
        return _swe_only(ShallowWaterProfile(grid, depth, velocity), model)
    if name == "swe-dam":
        return _swe_only(ShallowWaterProfile(grid, Step(grid, *_numbers(rest, name, 3))), model)
    scalar = {"sine": (Sine, 2), "gaussian": (Gaussian, 4), "step": (Step, 3)}
    if name not in scalar:
        raise ConfigurationError(f"unknown initial condition {spec!r}")
    cls, count = scalar[name]
    profile = cls(grid, *_numbers(rest, name, count))
    if m == 2:
        return ShallowWaterProfile(grid, profile)
    if m != 1:
        raise ConfigurationError(f"no {m}-component wrapper for {name}")
    return profile


def _swe_only(profile, model):
    if model is not None and model.m != 2:
        raise ConfigurationError("shallow-water initial data needs a two-component model")
    return profile


def initial_condition(spec, grid: Grid1D, model: Optional[ModelDescriptor] = None,
                      seed: Optional[int] = None) -> AFState:
    """Averages are exact (or 5-point Gauss) cell means; point values are samples."""
    profile = make_profile(spec, grid, model, seed) if isinstance(spec, str) else spec
    m = 1 if model is None else model.m
    if isinstance(profile, RandomData):
        return profile.state(grid, m)
    return AFState(profile.cell_means(grid), profile(grid.point_positions))


# ---------------------------------------------------------------------------
# references

def shock_formation_time(model: ModelDescriptor, profile: Profile, samples: int = 4096) -> float:
    """Earliest crossing of characteristics for scalar data (``inf`` if none)."""
    if model.speed_prime is None or profile.derivative(0.0) is None:
        return 0.0
    x = profile.x_left + profile.length * (np.arange(samples) + 0.5) / samples
    rate = -(model.speed_prime(profile(x)) * profile.derivative(x))[:, 0]
    worst = rate.max()
    return math.inf if worst <= 0 else 1.0 / worst


def _characteristic_solve(model, profile, t, x, tol=1e-14, max_iter=100):
    """Newton solve of ``xi + t a(q0(xi)) = x`` for every ``x``."""
    speed = lambda q: model.speeds(q)[..., 0]
    xi = x - t * speed(profile(x))
    for _ in range(max_iter):
        q = profile(xi)
        r = xi + t * speed(q) - x
        dr = 1.0 + t * (model.speed_prime(q) * profile.derivative(xi))[..., 0]
        xi = xi - r / dr
        if np.all(np.abs(r) <= tol * np.maximum(1.0, np.abs(x))):
            break
    else:
        raise ReferenceUnavailable("characteristic Newton solve did not converge")
    return xi


def exact_reference(model: ModelDescriptor, ic, t: float, x, grid: Optional[Grid1D] = None):
    """Exact solution at ``(t, x)`` for advection and for scalar laws before shocks."""
    if isinstance(ic, str):
        ic = make_profile(ic, grid or build_grid(0.0, 1.0, 3), model)
    if isinstance(ic, RandomData):
        raise ReferenceUnavailable("no reference for random data")
    x = np.asarray(x, dtype=float)
    if t == 0:
        return ic(x)
    if model.linear_speed is not None:
        return ic(x - model.linear_speed * t)
    if model.m != 1:
        raise ReferenceUnavailable(f"no closed-form reference for {model.name}")
    if t >= shock_formation_time(model, ic):
        raise ReferenceUnavailable(f"t={t} is past the shock formation time")
    flat = np.atleast_1d(x).ravel()
    xi = _characteristic_solve(model, ic, t, flat)
    return ic(xi).reshape(np.shape(x) + (1,))


# ---------------------------------------------------------------------------
# errors and convergence

@dataclass
class ErrorReport:
    l1: np.ndarray
    linf: np.ndarray
    n_cells: int
    dofs: int


def compute_errors(state: AFState, grid: Grid1D, reference: Callable) -> ErrorReport:
    """L1 and max norms of reconstruction minus reference at 5 Gauss points per cell."""
    xs = gauss_points(grid)
    diff = np.abs(Reconstruction(state, grid)(xs.ravel()) - reference(xs.ravel()))
    diff = diff.reshape(grid.n_cells, 5, state.m)
    l1 = grid.dx * np.einsum("ngm,g->m", diff, GAUSS_W)
    return ErrorReport(l1, diff.max(axis=(0, 1)), grid.n_cells, grid.n_cells + grid.n_points)


def eoc(errors: Sequence[float], resolutions: Sequence[int]) -> list:
    """Pairwise orders ``log(e_k / e_k+1) / log(N_k+1 / N_k)``; zero errors give ``inf``."""
    if len(errors) != len(resolutions) or len(errors) < 2:
        raise ValueError("need at least two (error, resolution) pairs of equal length")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be strictly increasing")
    orders = []
    for (e0, e1), (n0, n1) in zip(zip(errors, errors[1:]), zip(resolutions, resolutions[1:])):
        if e0 == 0 or e1 == 0:
            orders.append(math.inf)
        else:
            orders.append(math.log(e0 / e1) / math.log(n1 / n0))
    return orders


@dataclass
class ConvergenceResult:
    resolutions: list
    reports: list
    eoc_l1: np.ndarray          # (len-1, m)
    eoc_linf: np.ndarray
    reference: str = "exact"
    reference_gap: Optional[float] = None
    activations: list = field(default_factory=list)


def simulate(model: ModelDescriptor, ic: str, n_cells: int, operator: OperatorChoice,
             cfl: float, t_end: float, boundary: str = "periodic", x_left: float = 0.0,
             x_right: float = 1.0, seed: Optional[int] = None):
    grid = build_grid(x_left, x_right, n_cells, boundary)
    check_compatible(operator, model)
    state = initial_condition(ic, grid, model, seed)
    state, reports = run_until(state, grid, model, operator, t_end, cfl)
    return grid, state, reports


def convergence_study(model: ModelDescriptor, ic: str, resolutions: Sequence[int],
                      operator: OperatorChoice, cfl: float, t_end: float,
                      boundary: str = "periodic", x_left: float = 0.0, x_right: float = 1.0,
                      reference_factor: int = 8,
                      reference_operator: Optional[OperatorChoice] = None,
                      richardson_check: bool = True) -> ConvergenceResult:
    """Errors and EOC over a resolution sweep.

    Uses :func:`exact_reference` when it exists; otherwise the reference is
    the same problem on ``reference_factor`` times the finest grid (midpoint
    operator by default for systems).
    """
    resolutions = sorted(int(n) for n in resolutions)
    runs = [simulate(model, ic, n, operator, cfl, t_end, boundary, x_left, x_right)
            for n in resolutions]
    grid0 = runs[0][0]
    profile = make_profile(ic, grid0, model)
    label, gap = "exact", None
    try:
        exact_reference(model, profile, t_end, np.array([x_left]))
        reference = lambda x: exact_reference(model, profile, t_end, x)
    except ReferenceUnavailable:
        if reference_operator is None:
            reference_operator = operator if model.m == 1 else OperatorChoice("system_midpoint")
        n_ref = reference_factor * resolutions[-1]
        gf, sf, _ = simulate(model, ic, n_ref, reference_operator, cfl, t_end,
                             boundary, x_left, x_right)
        reference = Reconstruction(sf, gf)
        label = f"fine:{n_ref}:{reference_operator.spec}"
        if richardson_check:
            gh, sh, _ = simulate(model, ic, n_ref // 2, reference_operator, cfl, t_end,
                                 boundary, x_left, x_right)
            finest_grid = runs[-1][0]
            gap = float(compute_errors(sh, gh, reference).l1.max())
            finest = float(compute_errors(runs[-1][1], finest_grid, reference).l1.max())
            if gap > 0.1 * finest:
                log.warning("fine reference not converged: gap %.3g vs finest error %.3g",
                            gap, finest)

    reports = [compute_errors(s, g, reference) for g, s, _ in runs]
    l1 = np.array([r.l1 for r in reports])
    linf = np.array([r.linf for r in reports])
    eoc_l1 = np.array([eoc(l1[:, c], resolutions) for c in range(l1.shape[1])]).T
    eoc_linf = np.array([eoc(linf[:, c], resolutions) for c in range(l1.shape[1])]).T
    acts = [sum(r.shock_guard_activations for r in rep) for _, _, rep in runs]
    return ConvergenceResult(resolutions, reports, eoc_l1, eoc_linf, label, gap, acts)


# ---------------------------------------------------------------------------
# CSV

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_state_csv(path, state: AFState, grid: Grid1D, model_spec: str) -> None:
    """Header comments ``# model=``, ``# t=``, ``# dx=``, then one row per DOF."""
    comps = [f"comp{c}" for c in range(state.m)]
    with open(path, "w", newline="") as fh:
        fh.write(f"# model={model_spec}\n# t={_fmt(state.time)}\n# dx={_fmt(grid.dx)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "index", "x", *comps])
        for i, (x, row) in enumerate(zip(grid.centers, state.averages)):
            w.writerow(["avg", i, _fmt(x), *map(_fmt, row)])
        for i, (x, row) in enumerate(zip(grid.point_positions, state.point_values)):
            w.writerow(["point", i, _fmt(x), *map(_fmt, row)])


def read_state_csv(path):
    """Inverse of :func:`write_state_csv`: returns ``(state, grid, meta)``."""
    meta, rows = {}, []
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    comps = sorted((k for k in rows[0] if k.startswith("comp")), key=lambda k: int(k[4:]))
    avg = [r for r in rows if r["kind"] == "avg"]
    pts = [r for r in rows if r["kind"] == "point"]
    averages = np.array([[float(r[c]) for c in comps] for r in avg])
    points = np.array([[float(r[c]) for c in comps] for r in pts])
    dx = float(meta["dx"])
    n = len(avg)
    x_left = float(pts[0]["x"])
    boundary = "periodic" if len(pts) == n else "outflow"
    grid = Grid1D(x_left, x_left + n * dx, n, boundary)
    return AFState(averages, points, float(meta["t"])), grid, meta


def write_convergence_csv(path, result: ConvergenceResult, header: dict) -> None:
    m = result.reports[0].l1.shape[0]
    cols = ["N", "dofs"]
    for c in range(m):
        cols += [f"l1_{c}", f"linf_{c}", f"eoc_l1_{c}", f"eoc_linf_{c}"]
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}={value}\n")
        fh.write(f"# reference={result.reference}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k, rep in enumerate(result.reports):
            row = [rep.n_cells, rep.dofs]
            for c in range(m):
                o1 = _fmt(result.eoc_l1[k - 1, c]) if k else ""
                oi = _fmt(result.eoc_linf[k - 1, c]) if k else ""
                row += [_fmt(rep.l1[c]), _fmt(rep.linf[c]), o1, oi]
            w.writerow(row)


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    model: str
    ic: str = "sine:1,0"
    n_cells: int = 100
    cfl: float = 0.9
    t_end: float = 1.0
    operator: str = "fixedpoint"
    boundary: str = "periodic"
    output_path: str = "run.csv"
    convergence_resolutions: Optional[list] = None
    k_iters: int = 2
    seed: Optional[int] = None

    def validate(self) -> None:
        parse_model(self.model)
        parse_operator(self.operator, self.k_iters)
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.boundary not in ("periodic", "outflow"):
            raise ConfigurationError(f"unknown boundary {self.boundary!r}")
        if self.convergence_resolutions is not None and len(self.convergence_resolutions) < 2:
            raise ConfigurationError("a convergence sweep needs at least two resolutions")


CONFIG_KEYS = {"model", "ic", "N", "cfl", "t-end", "operator", "boundary", "out",
               "convergence", "seed", "k-iters"}


def read_config_file(path) -> dict:
    """``key=value`` lines with the CLI flag names (without dashes); ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-")
        if not sep or key not in CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unrecognised line {raw!r}")
        values[key] = value.strip()
    return values
