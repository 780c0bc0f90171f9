"""Bayesian layer: observation operator, mismatch potential, and QoI.

The forward observation map runs a leveled solve with streaming tracer
transport and extracts tracer positions at the observation times, flattened
in (component, tracer, time) order with the tracer index fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .fe.levels import LevelSpec, get_level_operators
from .fe.solver import BlowUp, SolverDiverged, VelocityField, solve_forward
from .params import (
    FieldExpansion,
    ParamPoint,
    truncation_dimension_for_level,
)
from .tracers import TracerIntegrator

__all__ = [
    "ObservationSet",
    "QoIFunctional",
    "LevelEval",
    "FEForwardModel",
    "SpectralForwardModel",
    "forward_map",
    "mismatch",
    "qoi_of_field",
]


@dataclass
class ObservationSet:
    """Observed tracer positions y with Gaussian noise covariance.

    ``values[k, j]`` is the observed position of tracer j at times[k];
    flattening runs over (time, tracer, component) with tracer fastest
    between times, i.e. index = 2*(k*J + j) + component.
    """

    times: tuple
    values: np.ndarray                  # (K, J, 2)
    initial_positions: np.ndarray       # (J, 2)
    noise_covariance: np.ndarray        # (2JK, 2JK) SPD

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.initial_positions = np.asarray(self.initial_positions, dtype=float)
        k, j, _ = self.values.shape
        if len(self.times) != k or self.initial_positions.shape != (j, 2):
            raise ValueError("inconsistent observation shapes")
        m = 2 * j * k
        cov = np.asarray(self.noise_covariance, dtype=float)
        if cov.shape != (m, m):
            raise ValueError(f"covariance must be {m}x{m}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        self._chol = np.linalg.cholesky(cov)  # raises if not SPD
        self._y = self.flatten(self.values)

    @classmethod
    def isotropic(cls, times, values, initial_positions, sigma2: float = 1.0):
        values = np.asarray(values, dtype=float)
        k, j, _ = values.shape
        return cls(tuple(times), values, initial_positions, sigma2 * np.eye(2 * j * k))

    @property
    def tracer_count(self) -> int:
        return self.values.shape[1]

    @property
    def data_vector(self) -> np.ndarray:
        return self._y

    @staticmethod
    def flatten(values) -> np.ndarray:
        """(K, J, 2) observations to the 2JK data vector, tracer index fastest."""
        return np.asarray(values, dtype=float).reshape(-1)

    def mismatch_of(self, g: np.ndarray) -> float:
        """0.5 * (y-g)^T Sigma^{-1} (y-g) via the Cholesky factor."""
        r = self._y - np.asarray(g, dtype=float)
        z = solve_triangular(self._chol, r, lower=True)
        return 0.5 * float(z @ z)

    def validate_times(self, base_steps: int, horizon: float):
        dt0 = horizon / base_steps
        for tau in self.times:
            if abs(round(tau / dt0) * dt0 - tau) > 1e-9 or not (0.0 < tau <= horizon):
                raise ValueError(f"observation time {tau} not on the coarsest time grid")


@dataclass(frozen=True)
class QoIFunctional:
    """Named bounded linear functional of the final-time velocity."""

    kind: str = "weighted-curl"
    scale: float = 100.0
    value: float = 0.0  # constant functional only

    def of_fe_field(self, field: VelocityField, viscosity: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "weighted-curl":
            ops = get_level_operators(field.spec, viscosity)
            return ops.qoi_weighted_curl(field.velocity, scale=self.scale)
        raise ValueError(f"unknown QoI kind {self.kind!r}")

    def of_spectral_state(self, solver, state) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "weighted-curl":
            return solver.qoi_weighted_curl(state, scale=self.scale)
        raise ValueError(f"unknown QoI kind {self.kind!r}")


@dataclass
class LevelEval:
    """One forward solve's products: potential, QoI, and the raw observation map."""

    phi: float
    qoi: float
    forward: np.ndarray


def qoi_of_field(field: VelocityField, viscosity: float, functional: QoIFunctional | None = None) -> float:
    return (functional or QoIFunctional()).of_fe_field(field, viscosity)


class FEForwardModel:
    """Level-indexed forward model: FE solve + tracers + mismatch + QoI.

    Forward-solve failures (divergence, blow-up) surface as LevelEval with
    phi = +inf so samplers can reject the proposal and keep running.
    """

    def __init__(
        self,
        expansion: FieldExpansion,
        observations: ObservationSet,
        viscosity: float,
        functional: QoIFunctional | None = None,
        base_resolution: int = 4,
        base_steps: int = 4,
        horizon: float = 1.0,
        dimension: int = 1,
        rtol: float = 1e-8,
    ):
        self.expansion = expansion
        self.observations = observations
        self.nu = viscosity
        self.functional = functional or QoIFunctional()
        self.base_resolution = base_resolution
        self.base_steps = base_steps
        self.horizon = horizon
        self.dimension = dimension
        self.rtol = rtol
        observations.validate_times(base_steps, horizon)
        self.failure_count = 0

    def level_spec(self, level: int) -> LevelSpec:
        trunc = min(
            truncation_dimension_for_level(level, self.expansion.truncation_rate),
            self.dimension,
        )
        return LevelSpec(
            level=level,
            base_resolution=self.base_resolution,
            base_steps=self.base_steps,
            horizon=self.horizon,
            truncation=trunc,
        )

    def evaluate(self, point: ParamPoint, level: int) -> LevelEval:
        spec = self.level_spec(level)
        integrator = TracerIntegrator(self.observations.initial_positions)
        try:
            final = solve_forward(
                point, spec, self.expansion, self.nu, observer=integrator, rtol=self.rtol
            )
        except (BlowUp, SolverDiverged):
            self.failure_count += 1
            return LevelEval(math.inf, math.nan, np.full(self.observations.data_vector.shape, np.nan))
        traj = integrator.trajectory()
        g = ObservationSet.flatten(
            np.stack([traj.at_time(t) for t in self.observations.times])
        )
        phi = self.observations.mismatch_of(g)
        q = self.functional.of_fe_field(final, self.nu)
        return LevelEval(phi, q, g)


class SpectralForwardModel:
    """Same contract as FEForwardModel but with the spectral reference solver;
    the level argument is ignored (single high-accuracy discretization)."""

    def __init__(
        self,
        expansion: FieldExpansion,
        observations: ObservationSet,
        viscosity: float,
        resolution: int = 128,
        dt: float = 1e-4,
        horizon: float = 1.0,
        functional: QoIFunctional | None = None,
    ):
        self.expansion = expansion
        self.observations = observations
        self.nu = viscosity
        self.resolution = resolution
        self.dt = dt
        self.horizon = horizon
        self.functional = functional or QoIFunctional()
        self.failure_count = 0

    def evaluate(self, point: ParamPoint, level: int | None = None) -> LevelEval:
        from .spectral import SpectralSolver, solve_reference

        del level
        run = solve_reference(
            point,
            self.expansion,
            self.resolution,
            self.dt,
            self.nu,
            horizon=self.horizon,
            tracer_initial=self.observations.initial_positions,
            observation_times=self.observations.times,
        )
        g = ObservationSet.flatten(
            np.stack([run.observed[t] for t in self.observations.times])
        )
        phi = self.observations.mismatch_of(g)
        solver = SpectralSolver(self.resolution, self.nu)
        q = self.functional.of_spectral_state(solver, run.final_state)
        return LevelEval(phi, q, g)


class ChebyshevTabulatedModel:
    """Lossless-cache stand-in for a one-parameter forward model.

    Potentials and QoI values are analytic in the single coordinate, so a
    Chebyshev interpolant through honest forward solves reproduces them to
    near machine precision; ``certify`` measures the actual interpolation
    error against direct solves at off-node points.  Only valid when the
    initial-condition coordinate is inert (no initial modes).
    """

    def __init__(self, base_model, levels, n_nodes: int = 65):
        from scipy.interpolate import BarycentricInterpolator

        if base_model.dimension != 1 or base_model.expansion.modes_initial:
            raise ValueError("tabulation requires a single active forcing coordinate")
        self.base = base_model
        self.dimension = 1
        self.n_nodes = n_nodes
        nodes = np.cos(np.pi * np.arange(n_nodes) / (n_nodes - 1))  # Chebyshev, 2nd kind
        self.nodes = nodes
        self._interp = {}
        for level in levels:
            phi_vals = np.empty(n_nodes)
            qoi_vals = np.empty(n_nodes)
            for i, xi in enumerate(nodes):
                ev = base_model.evaluate(ParamPoint((0.0,), (float(xi),)), level)
                phi_vals[i] = ev.phi
                qoi_vals[i] = ev.qoi
            self._interp[level] = (
                BarycentricInterpolator(nodes, phi_vals),
                BarycentricInterpolator(nodes, qoi_vals),
            )

    def evaluate(self, point: ParamPoint, level: int) -> LevelEval:
        phi_i, qoi_i = self._interp[level]
        x = point.xi[0]
        return LevelEval(float(phi_i(x)), float(qoi_i(x)), np.empty(0))

    def certify(self, rng, n_check: int = 9) -> dict:
        """Max |interpolant - direct solve| per level at random off-node points."""
        out = {}
        for level in self._interp:
            xs = rng.uniform(-1.0, 1.0, size=n_check)
            err_phi = 0.0
            err_qoi = 0.0
            for x in xs:
                pt = ParamPoint((0.0,), (float(x),))
                direct = self.base.evaluate(pt, level)
                tab = self.evaluate(pt, level)
                err_phi = max(err_phi, abs(direct.phi - tab.phi))
                err_qoi = max(err_qoi, abs(direct.qoi - tab.qoi))
            out[level] = (err_phi, err_qoi)
        return out


def forward_map(model, point: ParamPoint, level: int | None = None) -> np.ndarray:
    """Predicted observation vector G(point) for the given model/level."""
    return model.evaluate(point, level).forward


def mismatch(model, point: ParamPoint, level: int | None = None) -> float:
    """Potential 0.5 ||y - G(point)||^2_Sigma for the given model/level."""
    return model.evaluate(point, level).phi
