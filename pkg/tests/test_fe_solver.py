import math

import numpy as np
import pytest

from tracerinv.fe import LevelSpec, get_level_operators, imex_step, solve_forward
from tracerinv.fe.solver import BlowUp
from tracerinv.params import ParamPoint, builtin_expansion

TWO_PI = 2.0 * math.pi
NU = 0.1


def taylor_green(x, y):
    return np.cos(TWO_PI * x) * np.sin(TWO_PI * y), -np.sin(TWO_PI * x) * np.cos(TWO_PI * y)


def run_taylor_green(level, t_final):
    spec = LevelSpec(level=level)
    ops = get_level_operators(spec, NU)
    steps = int(round(t_final / ops.dt))
    u = ops.interpolate(taylor_green)
    p = np.zeros((ops.npr, ops.npr))
    u_prev = None
    for _ in range(steps):
        guess = (u, p) if u_prev is None else (2 * u - u_prev, p)
        u_new, p_new, stats = imex_step(ops, u, p, 0.0, guess=guess)
        u_prev = u
        u, p = u_new, p_new
    return ops, u, p, stats


def test_zero_state_zero_forcing_is_fixed_point():
    ops = get_level_operators(LevelSpec(level=1), NU)
    u = np.zeros((2, ops.nv, ops.nv))
    p = np.zeros((ops.npr, ops.npr))
    u1, p1, stats = imex_step(ops, u, p, 0.0)
    assert np.all(u1 == 0.0)
    assert np.all(p1 == 0.0)
    assert stats.iterations == 0


def test_taylor_green_tracks_analytic_decay():
    t_final = 0.25
    errs = []
    for level in (1, 2, 3):
        ops, u, _, _ = run_taylor_green(level, t_final)
        exact = math.exp(-8 * math.pi**2 * NU * t_final) * ops.interpolate(taylor_green)
        errs.append(ops.h1_norm(u - exact))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert all(0.7 < r < 1.4 for r in rates), (errs, rates)


def test_step_is_divergence_free_and_pressure_zero_mean(rng):
    ops = get_level_operators(LevelSpec(level=2), NU)
    u0 = ops.leray_project(rng.standard_normal((2, ops.nv, ops.nv)))
    p = np.zeros((ops.npr, ops.npr))
    u, _ = u0, None
    for _ in range(3):
        u, p, _ = imex_step(ops, u, p, 0.0)
        scale = np.abs(u).max()
        assert np.abs(ops.divergence(u)).max() < 1e-10 * max(scale, 1e-30)
        assert abs(p.mean()) < 1e-12


def test_energy_decays_without_forcing(rng):
    ops = get_level_operators(LevelSpec(level=2), NU)
    u = ops.leray_project(rng.standard_normal((2, ops.nv, ops.nv)))
    p = np.zeros((ops.npr, ops.npr))
    energies = [ops.l2_norm(u)]
    for _ in range(6):
        u, p, _ = imex_step(ops, u, p, 0.0)
        energies.append(ops.l2_norm(u))
    diffs = np.diff(energies)
    assert np.all(diffs <= 1e-12), energies


def test_forward_solve_zero_point_zero_fields():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    point = exp.point_from_physical(xi=(0.0,))
    spec = LevelSpec(level=1)
    final = solve_forward(point, spec, exp, NU)
    assert np.all(final.velocity == 0.0)
    assert final.time_index == spec.n_steps


def test_forward_solve_deterministic():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    point = exp.point_from_physical(xi=(0.63,))
    spec = LevelSpec(level=1)
    a = solve_forward(point, spec, exp, NU)
    b = solve_forward(point, spec, exp, NU)
    assert np.array_equal(a.velocity, b.velocity)
    assert np.array_equal(a.pressure, b.pressure)


def test_forward_solve_streams_in_order():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    point = exp.point_from_physical(xi=(0.8,))
    spec = LevelSpec(level=1)
    seen = []
    solve_forward(point, spec, exp, NU, observer=lambda f: seen.append(f.time_index))
    assert seen == list(range(spec.n_steps + 1))


def test_forward_self_convergence_first_order():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    point = exp.point_from_physical(xi=(0.7,))
    finals = {}
    for level in (0, 1, 2, 3):
        finals[level] = solve_forward(point, LevelSpec(level=level), exp, NU)
    diffs = []
    for level in (0, 1, 2):
        ops_f = get_level_operators(LevelSpec(level=level + 1), NU)
        coarse = finals[level].velocity
        fine = finals[level + 1].velocity
        # coarse bilinear field prolongated exactly onto the refined mesh
        up = np.zeros_like(fine)
        for c in range(2):
            up[c, ::2, ::2] = coarse[c]
            up[c, 1::2, ::2] = 0.5 * (coarse[c] + np.roll(coarse[c], -1, axis=0))
            up[c, ::2, 1::2] = 0.5 * (coarse[c] + np.roll(coarse[c], -1, axis=1))
            up[c, 1::2, 1::2] = 0.25 * (
                coarse[c]
                + np.roll(coarse[c], -1, axis=0)
                + np.roll(coarse[c], -1, axis=1)
                + np.roll(coarse[c], (-1, -1), axis=(0, 1))
            )
        diffs.append(ops_f.h1_norm(fine - up))
    ratios = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1)]
    assert all(1.5 < r < 2.8 for r in ratios), (diffs, ratios)


def test_blow_up_detection():
    ops = get_level_operators(LevelSpec(level=0), NU)
    u = np.full((2, ops.nv, ops.nv), np.nan)
    p = np.zeros((ops.npr, ops.npr))
    with pytest.raises(BlowUp):
        imex_step(ops, u, p, 0.0)
