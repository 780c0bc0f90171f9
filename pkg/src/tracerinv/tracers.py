"""Passive tracer transport on the periodic velocity fields.

Tracer positions are kept unwrapped in the plane (observed data legitimately
leaves the unit square with the mean drift); wrapping into [0,1)^2 happens
only when looking up the velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fe.solver import VelocityField

__all__ = ["TracerTrajectory", "euler_step", "evaluate_velocity_at", "integrate_tracers", "TracerIntegrator"]


@dataclass
class TracerTrajectory:
    initial_positions: np.ndarray  # (J, 2)
    positions: np.ndarray          # (steps+1, J, 2), unwrapped
    times: np.ndarray              # (steps+1,), uniform spacing

    def at_time(self, t: float) -> np.ndarray:
        dt = self.times[1] - self.times[0] if len(self.times) > 1 else 1.0
        idx = int(round(t / dt))
        if idx >= len(self.times) or abs(self.times[idx] - t) > 1e-9:
            raise ValueError(f"time {t} not on the trajectory grid")
        return self.positions[idx]


def wrap_unit(z: np.ndarray) -> np.ndarray:
    """Map points into [0, 1)^2 for periodic velocity lookup."""
    return z - np.floor(z)


def euler_step(z, velocity_fn, dt: float):
    """Explicit position update z + dt * u(z) with the new-time velocity.

    The velocity is sampled at the wrapped current position; the returned
    position is unwrapped.
    """
    z = np.asarray(z, dtype=float)
    return z + dt * np.asarray(velocity_fn(wrap_unit(z)))


def evaluate_velocity_at(field: VelocityField, z):
    """Bilinear interpolation of a nodal FE velocity at arbitrary points.

    Exactly reproduces nodal values at mesh nodes and constants everywhere.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    u = field.velocity
    nv = u.shape[1]
    s = wrap_unit(z) * nv
    i0 = np.floor(s).astype(int) % nv
    t = s - np.floor(s)
    i1 = (i0 + 1) % nv
    ix0, iy0 = i0[:, 0], i0[:, 1]
    ix1, iy1 = i1[:, 0], i1[:, 1]
    tx, ty = t[:, 0], t[:, 1]
    out = np.empty_like(z)
    for c in range(2):
        v00 = u[c, ix0, iy0]
        v10 = u[c, ix1, iy0]
        v01 = u[c, ix0, iy1]
        v11 = u[c, ix1, iy1]
        out[:, c] = (
            v00 * (1 - tx) * (1 - ty)
            + v10 * tx * (1 - ty)
            + v01 * (1 - tx) * ty
            + v11 * tx * ty
        )
    return out


class TracerIntegrator:
    """Streaming observer advancing tracers as forward snapshots arrive.

    Feed it the snapshot sequence t_0..t_N in order; each new snapshot moves
    the tracers with the just-computed velocity evaluated at the previous
    positions.
    """

    def __init__(self, initial_positions):
        self.z = np.array(initial_positions, dtype=float)
        self._positions = [self.z.copy()]
        self._times = [0.0]
        self._next_index = 0

    def __call__(self, field: VelocityField):
        if field.time_index != self._next_index:
            raise ValueError(
                f"snapshots must arrive in order; expected {self._next_index}, got {field.time_index}"
            )
        if field.time_index > 0:
            self.z = euler_step(self.z, lambda zz: evaluate_velocity_at(field, zz), field.spec.time_step)
            self._positions.append(self.z.copy())
            self._times.append(field.time)
        self._next_index += 1

    def trajectory(self) -> TracerTrajectory:
        return TracerTrajectory(
            initial_positions=self._positions[0],
            positions=np.array(self._positions),
            times=np.array(self._times),
        )


def integrate_tracers(initial_positions, fields, spec=None) -> TracerTrajectory:
    """Advect tracers through a (possibly streaming) snapshot sequence."""
    integrator = TracerIntegrator(initial_positions)
    for field in fields:
        integrator(field)
    return integrator.trajectory()
