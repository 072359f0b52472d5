"""Continuous piecewise-parabolic reconstruction.

Each cell carries the quadratic ``c2 s^2 + c1 s + c0`` in the local
coordinate ``s = (x - x_i) / dx`` on ``[-1/2, 1/2]``, fixed by the two
interface point values and the cell average. Adjacent cells share the
interface value, so the global reconstruction is continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from activeflux.errors import DomainError
from activeflux.grid import AFState, Grid1D, cell_triplets

# footpoints may land on a cell edge up to roundoff
EDGE_TOL = 1e-12


def _snap(s):
    return np.where(np.abs(s + 0.5) <= EDGE_TOL, -0.5,
                    np.where(np.abs(s - 0.5) <= EDGE_TOL, 0.5, s))


def evaluate_local(s, avg, q_left, q_right):
    """Parabola value at local coordinate ``s`` from the three defining values.

    Cell edges return the interface value itself, so neighbouring cells agree
    bit for bit; constant data is reproduced exactly everywhere.
    """
    s = _snap(s)
    ss = 3.0 * s * s
    inner = avg + (ss - s - 0.25) * (q_left - avg) + (ss + s - 0.25) * (q_right - avg)
    return np.where(s == -0.5, q_left, np.where(s == 0.5, q_right, inner))


def parabola_coefficients(avg, q_left, q_right):
    avg, q_left, q_right = np.asarray(avg), np.asarray(q_left), np.asarray(q_right)
    c2 = -3.0 * (2.0 * avg - q_left - q_right)
    c1 = q_right - q_left
    c0 = (6.0 * avg - q_left - q_right) / 4.0
    return c2, c1, c0


@dataclass(frozen=True)
class CellParabola:
    avg: np.ndarray
    q_left: np.ndarray
    q_right: np.ndarray
    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray
    x_center: float
    dx: float

    def local(self, x) -> np.ndarray:
        s = (np.asarray(x, dtype=float) - self.x_center) / self.dx
        if np.any(np.abs(s) > 0.5 + EDGE_TOL):
            raise DomainError(
                f"x={x} lies outside the cell centred at {self.x_center} (dx={self.dx})")
        return np.clip(s, -0.5, 0.5)

    def __call__(self, x) -> np.ndarray:
        s = self.local(x)
        if np.ndim(s):
            s = s[..., None]
        return evaluate_local(s, self.avg, self.q_left, self.q_right)

    @property
    def mean(self) -> np.ndarray:
        return self.c0 + self.c2 / 12.0


def reconstruct_cell(avg, q_left, q_right, x_center: float, dx: float) -> CellParabola:
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")
    avg, q_left, q_right = (np.atleast_1d(np.asarray(v, dtype=float))
                            for v in (avg, q_left, q_right))
    c2, c1, c0 = parabola_coefficients(avg, q_left, q_right)
    return CellParabola(avg, q_left, q_right, c2, c1, c0, float(x_center), float(dx))


def evaluate(parabola: CellParabola, x) -> np.ndarray:
    return parabola(x)


class Reconstruction:
    """Vectorised evaluation of the global reconstruction of one state.

    Outflow grids get one ghost cell on each side: the ghost replicates the
    boundary cell average and has the boundary point value at both ends.
    Cells are addressed by *extended* index ``cell + offset``.
    """

    def __init__(self, state: AFState, grid: Grid1D):
        state.check(grid)
        avg, ql, qr = cell_triplets(state, grid)
        self.grid = grid
        if grid.periodic:
            self.offset = 0
        else:
            pv = state.point_values
            avg = np.vstack([avg[:1], avg, avg[-1:]])
            ql = np.vstack([pv[:1], ql, pv[-1:]])
            qr = np.vstack([pv[:1], qr, pv[-1:]])
            self.offset = 1
        self.avg, self.q_left, self.q_right = avg, ql, qr
        self.c2, self.c1, self.c0 = parabola_coefficients(avg, ql, qr)
        self.n_ext = avg.shape[0]
        self.x0 = grid.x_left - self.offset * grid.dx

    def locate(self, x: np.ndarray):
        """Extended cell index containing each ``x``, plus ``x`` after periodic wrap."""
        g = self.grid
        x = np.asarray(x, dtype=float)
        if g.periodic:
            x = g.x_left + np.mod(x - g.x_left, g.length)
        idx = np.floor((x - self.x0) / g.dx).astype(int)
        return np.clip(idx, 0, self.n_ext - 1), x

    def in_cell(self, cell: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate the parabola of extended cell ``cell`` at ``x``, clamped to that cell.

        For periodic grids ``x`` is interpreted modulo the domain length
        relative to the cell centre.
        """
        g = self.grid
        s = (np.asarray(x, dtype=float) - self.x0) / g.dx - (np.asarray(cell) + 0.5)
        if g.periodic:
            s = s - np.round(s / g.n_cells) * g.n_cells
        return evaluate_local(np.clip(s, -0.5, 0.5)[..., None],
                              self.avg[cell], self.q_left[cell], self.q_right[cell])

    def __call__(self, x) -> np.ndarray:
        """Values ``(len(x), m)`` of the reconstruction at ``x``."""
        cell, xw = self.locate(np.atleast_1d(x))
        return self.in_cell(cell, xw)

    def cell_of_interface(self, p: np.ndarray, side: str) -> np.ndarray:
        """Extended index of the cell left or right of stored interface ``p``."""
        if side == "left":
            c = p - 1 + self.offset
            return np.mod(c, self.n_ext) if self.grid.periodic else c
        c = p + self.offset
        return np.mod(c, self.n_ext) if self.grid.periodic else c


def global_eval(state: AFState, grid: Grid1D, x) -> np.ndarray:
    """Evaluate the continuous reconstruction at scalar or array ``x``.

    Periodic grids wrap ``x``; outflow grids reject points outside the domain.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if not grid.periodic:
        tol = EDGE_TOL * grid.dx
        if np.any(xa < grid.x_left - tol) or np.any(xa > grid.x_right + tol):
            raise DomainError(f"x outside [{grid.x_left}, {grid.x_right}] on an outflow grid")
        xa = np.clip(xa, grid.x_left, grid.x_right)
    out = Reconstruction(state, grid)(xa)
    return out[0] if np.ndim(x) == 0 else out
