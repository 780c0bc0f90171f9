"""IMEX Euler time stepping for the leveled Navier-Stokes forward problem.

Each step solves one saddle-point system: diffusion and pressure implicit,
the convecting velocity lagged to the previous step, and the skew-symmetrized
convection form keeping the discrete kinetic energy non-increasing.  The
solver is FGMRES preconditioned with the exact Fourier-block Stokes
factorization; iterates therefore satisfy the divergence constraint to
rounding at every iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..params import FieldExpansion, ParamPoint, evaluate_initial_velocity, unit_grid
from .levels import LevelOperators, LevelSpec, get_level_operators

__all__ = [
    "VelocityField",
    "SaddleSolveStats",
    "SolverDiverged",
    "BlowUp",
    "imex_step",
    "solve_forward",
]


class SolverDiverged(RuntimeError):
    """FGMRES failed to reach the requested residual."""

    def __init__(self, residual, iterations):
        super().__init__(f"FGMRES stalled at relative residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class BlowUp(RuntimeError):
    """Non-finite values appeared in the state."""


@dataclass
class VelocityField:
    """One velocity/pressure snapshot of a leveled forward solve."""

    spec: LevelSpec
    time_index: int
    velocity: np.ndarray  # (2, nv, nv) nodal values on the fine mesh
    pressure: np.ndarray  # (npr, npr) nodal values on the coarse mesh

    @property
    def time(self) -> float:
        return self.time_index * self.spec.time_step


@dataclass
class SaddleSolveStats:
    iterations: int
    residual: float
    wall_time: float


def _fgmres(apply_op, apply_prec, b, x0, rtol, maxiter, restart=50):
    """Right-preconditioned (flexible) GMRES on flat vectors."""
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    x = x0.copy()
    total = 0
    while True:
        r = b - apply_op(x)
        rnorm = float(np.linalg.norm(r))
        if rnorm <= rtol * bnorm or total >= maxiter:
            return x, total, rnorm / bnorm
        m = min(restart, maxiter - total)
        V = [r / rnorm]
        Z = []
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = rnorm
        j_used = 0
        for j in range(m):
            z = apply_prec(V[j])
            Z.append(z)
            w = apply_op(z)
            for i in range(j + 1):
                H[i, j] = float(w @ V[i])
                w -= H[i, j] * V[i]
            H[j + 1, j] = float(np.linalg.norm(w))
            V.append(w / H[j + 1, j] if H[j + 1, j] > 0.0 else w)
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            d = math.hypot(H[j, j], H[j + 1, j])
            cs[j] = H[j, j] / d
            sn[j] = H[j + 1, j] / d
            H[j, j] = d
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            j_used = j + 1
            if abs(g[j + 1]) <= rtol * bnorm:
                break
        y = np.linalg.solve(H[:j_used, :j_used], g[:j_used])
        for i in range(j_used):
            x += y[i] * Z[i]


class _SaddleSystem:
    """Flat-vector view of the saddle operator and the Stokes preconditioner."""

    def __init__(self, ops: LevelOperators, conv9: np.ndarray):
        self.ops = ops
        self.conv9 = conv9
        self.nu_dofs = 2 * ops.nv * ops.nv
        self.np_dofs = ops.npr * ops.npr

    def pack(self, u, p):
        return np.concatenate([u.ravel(), p.ravel()])

    def unpack(self, x):
        ops = self.ops
        u = x[: self.nu_dofs].reshape(2, ops.nv, ops.nv)
        p = x[self.nu_dofs :].reshape(ops.npr, ops.npr)
        return u, p

    def apply(self, x):
        u, p = self.unpack(x)
        ru, rp = self.ops.operator_apply(self.conv9, u, p)
        return self.pack(ru, rp)

    def precondition(self, x):
        u, p = self.unpack(x)
        du, dp = self.ops.stokes_solve(u, p)
        return self.pack(du, dp)


def imex_step(
    ops: LevelOperators,
    u: np.ndarray,
    p: np.ndarray,
    load: np.ndarray,
    w: np.ndarray | None = None,
    guess=None,
    rtol: float = 1e-8,
    maxiter: int = 500,
):
    """Advance one IMEX Euler step.

    ``load`` is the consistent forcing load at the new time level; ``w`` the
    convecting velocity (defaults to the current state).  Returns the new
    velocity/pressure pair and solve statistics.
    """
    t0 = time.perf_counter()
    if w is None:
        w = u
    conv9 = ops.assemble_convection(w)
    system = _SaddleSystem(ops, conv9)
    bu = load + ops.mass_apply(u) / ops.dt
    b = system.pack(bu, np.zeros((ops.npr, ops.npr)))
    if guess is None:
        guess = (u, p)
    x0 = system.pack(*guess)
    x, iters, res = _fgmres(system.apply, system.precondition, b, x0, rtol, maxiter)
    if not np.all(np.isfinite(x)):
        raise BlowUp("non-finite state after saddle solve")
    if res > rtol:
        raise SolverDiverged(res, iters)
    u1, p1 = system.unpack(x)
    stats = SaddleSolveStats(iters, res, time.perf_counter() - t0)
    return u1, p1, stats


@lru_cache(maxsize=64)
def _forcing_loads(spec: LevelSpec, viscosity: float, expansion: FieldExpansion):
    """Per-mode spatial load vectors; modes are separable in time."""
    ops = get_level_operators(spec, viscosity)
    n_modes = min(spec.truncation, len(expansion.modes_forcing))
    mode_loads = [ops.load_vector(m.spatial) for m in expansion.modes_forcing[:n_modes]]
    mean_load = None
    if expansion.mean_forcing is not None:
        mean_load = ops.load_vector(expansion.mean_forcing.spatial)
    return mode_loads, mean_load


def _load_at(expansion, mode_loads, mean_load, xi_phys, t):
    shape_src = mean_load if mean_load is not None else (mode_loads[0] if mode_loads else None)
    if shape_src is None:
        return 0.0
    acc = np.zeros_like(shape_src)
    for load, mode, c in zip(mode_loads, expansion.modes_forcing, xi_phys):
        wgt = c * mode.time_factor(t)
        if wgt != 0.0:
            acc += wgt * load
    if mean_load is not None:
        acc += expansion.mean_forcing.time_factor(t) * mean_load
    return acc


def solve_forward(
    point: ParamPoint,
    spec: LevelSpec,
    expansion: FieldExpansion,
    viscosity: float,
    observer=None,
    collect: bool = False,
    rtol: float = 1e-8,
    maxiter: int = 500,
):
    """Run the level's full time loop from t=0 to the horizon.

    ``observer(field)`` is called with every snapshot (including the initial
    one) so tracers can be advanced in a streaming fashion.  With ``collect``
    the whole trajectory is returned, otherwise only the final snapshot.
    """
    n_modes = max(len(expansion.modes_forcing), len(expansion.modes_initial))
    needed = min(spec.truncation, n_modes)
    if point.dimension < needed:
        raise ValueError(
            f"point dimension {point.dimension} below level truncation {needed}"
        )
    ops = get_level_operators(spec, viscosity)
    p_trunc = point.truncated(min(spec.truncation, point.dimension))
    xi_phys = expansion.physical_xi(p_trunc)
    mode_loads, mean_load = _forcing_loads(spec, viscosity, expansion)

    grid = unit_grid(ops.nv)
    u = evaluate_initial_velocity(expansion, p_trunc, grid)
    p = np.zeros((ops.npr, ops.npr))
    trajectory = []

    field = VelocityField(spec, 0, u, p)
    if observer is not None:
        observer(field)
    if collect:
        trajectory.append(field)

    u_prev = None
    for n in range(1, spec.n_steps + 1):
        t_new = n * ops.dt
        load = _load_at(expansion, mode_loads, mean_load, xi_phys, t_new)
        if u_prev is None:
            guess = (u, p)
        else:
            guess = (2.0 * u - u_prev, p)
        u_new, p_new, _ = imex_step(ops, u, p, load, w=u, guess=guess, rtol=rtol, maxiter=maxiter)
        if not np.all(np.isfinite(u_new)):
            raise BlowUp(f"blow-up at step {n}")
        u_prev = u
        u, p = u_new, p_new
        field = VelocityField(spec, n, u, p)
        if observer is not None:
            observer(field)
        if collect:
            trajectory.append(field)
    return trajectory if collect else field
