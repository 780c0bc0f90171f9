import math

import numpy as np
import pytest

from tracerinv.fe import LevelSpec
from tracerinv.bayes import QoIFunctional
from tracerinv.params import builtin_expansion, unit_grid
from tracerinv.spectral import (
    SpectralForcing,
    SpectralSolver,
    solve_reference,
)

TWO_PI = 2.0 * math.pi
NU = 0.1


def taylor_green_field(n):
    x, y = unit_grid(n)
    return np.stack(
        [np.cos(TWO_PI * x) * np.sin(TWO_PI * y), -np.sin(TWO_PI * x) * np.cos(TWO_PI * y)]
    )


def test_requires_power_of_two():
    with pytest.raises(ValueError):
        SpectralSolver(96, NU)


def test_zero_state_stays_zero():
    solver = SpectralSolver(32, NU)
    state = solver.zero_state()
    for _ in range(10):
        state = solver.step(state, None, 1e-3)
    assert np.all(state.what == 0.0)
    assert np.all(state.mean_velocity == 0.0)


def test_taylor_green_decay_matches_analytic():
    solver = SpectralSolver(64, NU)
    state = solver.state_from_velocity(taylor_green_field(64))
    for _ in range(1000):
        state = solver.step(state, None, 1e-4)
    exact = math.exp(-8 * math.pi**2 * NU * 0.1) * taylor_green_field(64)
    u = solver.velocity_grid(state)
    assert np.abs(u - exact).max() / np.abs(exact).max() < 1e-8


def test_divergence_free_every_step(rng):
    solver = SpectralSolver(32, NU)
    u0 = rng.standard_normal((2, 32, 32))
    state = solver.state_from_velocity(u0)
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    forcing = SpectralForcing(exp, exp.point_from_physical(xi=(0.9,)), 32)
    for _ in range(20):
        state = solver.step(state, forcing, 1e-3)
        assert solver.max_divergence(state) < 1e-12


def test_energy_non_increasing_without_forcing(rng):
    solver = SpectralSolver(32, NU)
    state = solver.state_from_velocity(rng.standard_normal((2, 32, 32)))
    energies = [solver.energy(state)]
    for _ in range(30):
        state = solver.step(state, None, 1e-3)
        energies.append(solver.energy(state))
    assert np.all(np.diff(energies) <= 1e-13)


def test_spectral_self_convergence_beats_fixed_order():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    pt = exp.point_from_physical(xi=(0.8,))
    qois = {}
    for n in (16, 32, 64):
        run = solve_reference(pt, exp, n, 1e-3, NU, horizon=0.5)
        qois[n] = SpectralSolver(n, NU).qoi_weighted_curl(run.final_state)
    # smooth solution: doubling resolution shrinks the change much faster
    # than the second-order ratio 4
    d1 = abs(qois[32] - qois[16])
    d2 = abs(qois[64] - qois[32])
    assert d2 < d1 / 8.0, qois


def test_reference_run_tracers_stationary_for_zero_forcing():
    exp = builtin_expansion("lagrangian-1d", xi_bounds=((0.0, 1.0),))
    pt = exp.point_from_physical(xi=(0.0,))
    z0 = [(0.3, 0.4), (0.9, 0.1)]
    run = solve_reference(
        pt, exp, 32, 1e-2, NU, horizon=1.0, tracer_initial=z0, observation_times=(0.5, 1.0)
    )
    assert np.allclose(run.observed[0.5], z0)
    assert np.allclose(run.observed[1.0], z0)
    assert abs(SpectralSolver(32, NU).qoi_weighted_curl(run.final_state)) < 1e-14


def test_cross_solver_agreement_with_fe(benchmark_cfg, benchmark_obs):
    # same problem through both discretizations; FE error dominates and is
    # first order, so level 3 should agree to a few times 2^-3
    from tracerinv.harness import build_model

    fe = build_model(benchmark_cfg, benchmark_obs, solver="fe")
    exp = benchmark_cfg.expansion()
    pt = exp.point_from_physical(xi=(0.5,))
    fe_eval = fe.evaluate(pt, 3)
    run = solve_reference(
        pt, exp, 64, 5e-4, NU, horizon=1.0,
        tracer_initial=benchmark_obs.initial_positions,
        observation_times=benchmark_obs.times,
    )
    solver = SpectralSolver(64, NU)
    q_ref = QoIFunctional().of_spectral_state(solver, run.final_state)
    rel = abs(fe_eval.qoi - q_ref) / abs(q_ref)
    assert rel < 3.0 * 2.0**-3, (fe_eval.qoi, q_ref)


def test_qoi_weighted_curl_spectral_analytic():
    # u = (sin(2 pi y)/(2 pi), 0): integrand sqrt(xy) cos(2 pi y)
    n = 64
    x, y = unit_grid(n)
    u = np.stack([np.sin(TWO_PI * y) / TWO_PI, np.zeros_like(y)])
    solver = SpectralSolver(n, NU)
    state = solver.state_from_velocity(u)
    val = solver.qoi_weighted_curl(state)
    from scipy.integrate import quad

    ix = quad(lambda t: math.sqrt(t), 0, 1)[0]
    iy = quad(lambda t: math.sqrt(t) * math.cos(TWO_PI * t), 0, 1)[0]
    assert abs(val - 100.0 * ix * iy) < 1e-8, (val, 100.0 * ix * iy)


def test_velocity_point_eval_matches_grid(rng):
    solver = SpectralSolver(32, NU)
    state = solver.state_from_velocity(rng.standard_normal((2, 32, 32)))
    u = solver.velocity_grid(state)
    idx = rng.integers(0, 32, size=(6, 2))
    pts = idx / 32.0
    vals = solver.velocity_at(state, pts)
    for k, (i, j) in enumerate(idx):
        assert abs(vals[k, 0] - u[0, i, j]) < 1e-10
        assert abs(vals[k, 1] - u[1, i, j]) < 1e-10


def test_reference_configuration_matches_experiment_defaults(benchmark_cfg):
    assert benchmark_cfg.reference_resolution == 128
    assert benchmark_cfg.reference_dt == pytest.approx(1e-4)
