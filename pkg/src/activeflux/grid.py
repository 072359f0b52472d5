"""Uniform 1-D mesh and the Active Flux degrees of freedom.

Averages live in cells, point values live on interfaces and are shared by
the two neighbouring cells. With periodic boundaries the last interface is
identified with the first, so there are ``n_cells`` point values; with
outflow boundaries there are ``n_cells + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from activeflux.errors import ConfigurationError

BOUNDARIES = ("periodic", "outflow")


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    x_right: float
    n_cells: int
    boundary: str = "periodic"

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        """All ``n_cells + 1`` interface positions, including both ends."""
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    @property
    def n_points(self) -> int:
        return self.n_cells if self.periodic else self.n_cells + 1

    @property
    def point_positions(self) -> np.ndarray:
        """Positions of the stored point values."""
        return self.interfaces[: self.n_points]


def build_grid(x_left: float, x_right: float, n_cells: int,
               boundary: str = "periodic") -> Grid1D:
    if not (np.isfinite(x_left) and np.isfinite(x_right)) or x_right <= x_left:
        raise ConfigurationError(f"degenerate domain [{x_left}, {x_right}]")
    if int(n_cells) != n_cells or n_cells < 3:
        raise ConfigurationError(f"n_cells must be an integer >= 3, got {n_cells}")
    if boundary not in BOUNDARIES:
        raise ConfigurationError(f"unknown boundary {boundary!r}; use one of {BOUNDARIES}")
    return Grid1D(float(x_left), float(x_right), int(n_cells), boundary)


@dataclass
class AFState:
    """Cell averages ``(n_cells, m)`` and interface point values ``(n_points, m)``."""

    averages: np.ndarray
    point_values: np.ndarray
    time: float = 0.0
    m: int = field(init=False)

    def __post_init__(self):
        self.averages = np.atleast_2d(np.asarray(self.averages, dtype=float).T).T.copy()
        self.point_values = np.atleast_2d(np.asarray(self.point_values, dtype=float).T).T.copy()
        if self.averages.shape[1] != self.point_values.shape[1]:
            raise ConfigurationError("averages and point values disagree on component count")
        self.m = self.averages.shape[1]

    def copy(self) -> "AFState":
        return AFState(self.averages.copy(), self.point_values.copy(), self.time)

    def check(self, grid: Grid1D) -> None:
        if self.averages.shape[0] != grid.n_cells:
            raise ConfigurationError(
                f"{self.averages.shape[0]} averages for a grid of {grid.n_cells} cells")
        if self.point_values.shape[0] != grid.n_points:
            raise ConfigurationError(
                f"{self.point_values.shape[0]} point values, expected {grid.n_points} "
                f"for {grid.boundary} boundary")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.averages)) and np.all(np.isfinite(self.point_values)))


def cell_triplets(state: AFState, grid: Grid1D):
    """Return ``(avg, q_left, q_right)`` arrays of shape ``(n_cells, m)``."""
    pv = state.point_values
    if grid.periodic:
        return state.averages, pv, np.roll(pv, -1, axis=0)
    return state.averages, pv[:-1], pv[1:]


def neighbor_values(state: AFState, grid: Grid1D, cell: int):
    """Average and the two bounding point values of one cell.

    Periodic grids wrap the right interface of the last cell onto interface 0.
    """
    if not 0 <= cell < grid.n_cells:
        raise IndexError(f"cell {cell} out of range [0, {grid.n_cells})")
    pv = state.point_values
    right = (cell + 1) % grid.n_cells if grid.periodic else cell + 1
    return state.averages[cell].copy(), pv[cell].copy(), pv[right].copy()


def total_mass(state: AFState, grid: Grid1D) -> np.ndarray:
    return state.averages.sum(axis=0) * grid.dx
