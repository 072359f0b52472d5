import math

import numpy as np
import pytest

from activeflux.errors import CFLViolation, InadmissibleState, StagnationError
from activeflux.evolution import OperatorChoice
from activeflux.grid import AFState, build_grid, total_mass
from activeflux.models import burgers, linear_advection, shallow_water
from activeflux.reconstruction import Reconstruction
from activeflux.update import (interface_flux_average, max_stable_dt, run_until, step)

from conftest import sampled_state

TWO_PI = 2 * np.pi
GS, GW = np.polynomial.legendre.leggauss(5)

ALL_OPERATORS = [OperatorChoice("exact_linear"), OperatorChoice("scalar_fixed_point", 1),
                 OperatorChoice("scalar_fixed_point", 2), OperatorChoice("scalar_fixed_point", 3),
                 OperatorChoice("system_midpoint"), OperatorChoice("system_naive")]


def sine_state(grid, mean=0.0):
    return sampled_state(lambda x: mean + np.sin(TWO_PI * x), grid)


# --- time step size ----------------------------------------------------------

def test_max_stable_dt_examples():
    g = build_grid(0, 1, 10)
    s = AFState(np.ones(10), np.ones(10))
    assert max_stable_dt(s, g, linear_advection(2.0), 0.5) == pytest.approx(0.025, rel=1e-15)
    assert max_stable_dt(s, g, linear_advection(0.0), 0.5, dt_max=0.3) == 0.3
    assert max_stable_dt(s, g, linear_advection(0.0), 0.5) == math.inf
    s4 = AFState(np.ones(10), np.r_[np.ones(9), -4.0])
    assert max_stable_dt(s4, g, burgers(), 1.0) == pytest.approx(0.025, rel=1e-15)


@pytest.mark.parametrize("cfl", [0.0, -0.1, 1.5])
def test_max_stable_dt_rejects_cfl(cfl):
    g = build_grid(0, 1, 10)
    with pytest.raises(CFLViolation):
        max_stable_dt(AFState(np.ones(10), np.ones(10)), g, burgers(), cfl)


def test_max_stable_dt_rejects_dry_state():
    g = build_grid(0, 1, 4)
    s = AFState(np.array([[1, 0], [0, 0], [1, 0], [1, 0]], float), np.ones((4, 2)))
    with pytest.raises(InadmissibleState):
        max_stable_dt(s, g, shallow_water(1.0), 0.5)


# --- Simpson flux --------------------------------------------------------------

def test_flux_average_examples():
    adv = linear_advection(1.7)
    q = np.array([0.3])
    assert interface_flux_average(q, q, q, adv)[0] == pytest.approx(1.7 * 0.3, rel=1e-15)
    out = interface_flux_average(np.array([0.0]), np.array([1.0]), np.array([2.0]), burgers())
    assert out[0] == pytest.approx(2 / 3, rel=1e-15)


def test_flux_average_quadratic_exactness(rng):
    # with unit advection the flux trace is the state itself
    adv = linear_advection(1.0)
    for a, b, c in rng.normal(size=(100, 3)):
        trace = lambda tau: np.array([a + b * tau + c * tau ** 2])
        exact = a + b / 2 + c / 3
        assert interface_flux_average(trace(0), trace(0.5), trace(1), adv)[0] == \
            pytest.approx(exact, abs=1e-13)


# --- single step ----------------------------------------------------------

def test_unit_cfl_shifts_by_one_cell():
    g = build_grid(0, 1, 32)
    s = sine_state(g, 0.5)
    new, rep = step(s, g, linear_advection(1.0), OperatorChoice("exact_linear"), g.dx)
    np.testing.assert_allclose(new.averages, np.roll(s.averages, 1, axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(new.point_values, np.roll(s.point_values, 1, axis=0),
                               rtol=0, atol=1e-12)
    assert rep.cfl_attained == pytest.approx(1.0)


@pytest.mark.parametrize("c", [1.0, -2.5])
def test_one_step_is_exact_shift_of_reconstruction(c):
    g = build_grid(0, 1, 24)
    s = sine_state(g, 0.2)
    dt = 0.4 * g.dx / abs(c)
    shift = c * dt
    rec = Reconstruction(s, g)
    points = rec(g.point_positions - shift)

    # cell integrals of the shifted parabolas, split at the interface they straddle
    lo = g.interfaces[:-1] - shift
    hi = g.interfaces[1:] - shift
    cut = np.where(c > 0, g.interfaces[:-1], g.interfaces[1:])
    def gauss(a, b):
        xs = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * GS[None, :]
        return 0.5 * (b - a) * (rec(xs.ravel())[:, 0].reshape(xs.shape) @ GW)
    averages = (gauss(lo, cut) + gauss(cut, hi)) / g.dx

    for op in (OperatorChoice("exact_linear"), OperatorChoice("scalar_fixed_point", 2),
               OperatorChoice("system_midpoint")):
        new, _ = step(s, g, linear_advection(c), op, dt)
        np.testing.assert_allclose(new.point_values, points, rtol=0, atol=1e-12)
        np.testing.assert_allclose(new.averages[:, 0], averages, rtol=0, atol=1e-12)


@pytest.mark.parametrize("model, q", [(linear_advection(0.7), [0.4]), (burgers(), [-1.2]),
                                      (shallow_water(9.81), [2.0, 1.5])])
def test_constant_state_is_steady(model, q):
    g = build_grid(0, 1, 12)
    s = AFState(np.tile(q, (12, 1)), np.tile(q, (12, 1)))
    ops = [op for op in ALL_OPERATORS
           if not (op.kind == "exact_linear" and model.linear_speed is None)
           and not (op.kind == "scalar_fixed_point" and model.m > 1)]
    for op in ops:
        dt = max_stable_dt(s, g, model, 0.8)
        new, rep = step(s, g, model, op, dt)
        np.testing.assert_allclose(new.averages, s.averages, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(new.point_values, s.point_values, rtol=1e-15, atol=1e-15)
        assert rep.shock_guard_activations == 0


def test_cfl_violation_leaves_state_untouched():
    g = build_grid(0, 1, 16)
    s = sine_state(g)
    before = s.copy()
    with pytest.raises(CFLViolation):
        step(s, g, linear_advection(1.0), OperatorChoice("exact_linear"), 1.01 * g.dx)
    np.testing.assert_array_equal(s.averages, before.averages)
    np.testing.assert_array_equal(s.point_values, before.point_values)
    assert s.time == before.time


def test_dry_state_is_reported():
    g = build_grid(0, 1, 8)
    h = np.array([1, 1, 1, 0.01, 0.01, 1, 1, 1.0])
    hu = np.array([0, 0, 3.0, 0, 0, -3.0, 0, 0])
    s = AFState(np.stack([h, hu], -1), np.stack([h, hu], -1))
    with pytest.raises(InadmissibleState):
        run_until(s, g, shallow_water(1.0), OperatorChoice("system_midpoint"), 1.0, 0.9)


@pytest.mark.parametrize("model, m, op", [
    (linear_advection(1.0), 1, OperatorChoice("exact_linear")),
    (burgers(), 1, OperatorChoice("scalar_fixed_point", 2)),
    (burgers(), 1, OperatorChoice("system_naive")),
    (shallow_water(1.0), 2, OperatorChoice("system_midpoint")),
    (shallow_water(1.0), 2, OperatorChoice("system_naive")),
])
def test_periodic_conservation(model, m, op):
    g = build_grid(0, 1, 40)
    if m == 1:
        s = sampled_state(lambda x: 0.5 + 0.5 * np.sin(TWO_PI * x), g)
    else:
        s = sampled_state(lambda x: np.stack([1 + 0.2 * np.sin(TWO_PI * x),
                                              0.3 + 0.1 * np.cos(TWO_PI * x)], -1), g, m=2)
    m0 = total_mass(s, g)
    for _ in range(20):
        s, rep = step(s, g, model, op, max_stable_dt(s, g, model, 0.9))
        assert rep.cfl_attained <= 0.9 * (1 + 1e-12)
    np.testing.assert_allclose(total_mass(s, g), m0, rtol=1e-12)


def test_linear_scheme_spectral_radius():
    # the step is linear in the data for advection: assemble its matrix column by column
    n = 16
    g = build_grid(0, 1, n)
    model = linear_advection(1.0)
    for lam in np.linspace(0.05, 1.0, 20):
        cols = []
        for k in range(2 * n):
            e = np.zeros(2 * n)
            e[k] = 1.0
            new, _ = step(AFState(e[:n], e[n:]), g, model, OperatorChoice("exact_linear"),
                          lam * g.dx)
            cols.append(np.r_[new.averages[:, 0], new.point_values[:, 0]])
        radius = np.abs(np.linalg.eigvals(np.array(cols).T)).max()
        assert radius <= 1 + 1e-10, lam


# --- time loop ---------------------------------------------------------------

def test_run_until_no_steps():
    g = build_grid(0, 1, 8)
    s = sine_state(g)
    out, reps = run_until(s, g, burgers(), OperatorChoice("scalar_fixed_point", 2), 0.0, 0.5)
    assert out is s and reps == []


def test_run_until_rejects_past_time():
    g = build_grid(0, 1, 8)
    s = sine_state(g)
    s.time = 1.0
    with pytest.raises(ValueError):
        run_until(s, g, burgers(), OperatorChoice("scalar_fixed_point", 2), 0.5, 0.5)


def test_full_crossing_at_unit_cfl():
    g = build_grid(0, 1, 64)
    s = sine_state(g)
    out, reps = run_until(s, g, linear_advection(1.0), OperatorChoice("exact_linear"), 1.0, 1.0)
    assert len(reps) == 64
    np.testing.assert_allclose(out.averages, s.averages, rtol=0, atol=1e-11)
    np.testing.assert_allclose(out.point_values, s.point_values, rtol=0, atol=1e-11)


def test_final_step_is_clipped():
    g = build_grid(0, 1, 10)
    s = sine_state(g)
    out, reps = run_until(s, g, linear_advection(1.0), OperatorChoice("exact_linear"), 0.25, 0.9)
    assert out.time == 0.25
    assert reps[-1].time_after == 0.25
    assert reps[-1].dt_used < 0.09
    assert all(r.cfl_attained <= 0.9 * (1 + 1e-12) for r in reps)
    assert sum(r.dt_used for r in reps) == pytest.approx(0.25, rel=1e-14)


def test_stagnation_is_detected():
    g = build_grid(0, 1, 8)
    s = sine_state(g)
    with pytest.raises(StagnationError):
        run_until(s, g, linear_advection(1e20), OperatorChoice("exact_linear"), 1.0, 0.9)
