"""Level geometry and discrete operators for the mixed Q1-iso-Q2/Q1 pair.

The pressure lives on a uniform n x n periodic quad mesh of the unit torus and
the velocity on its once-refined 2n x 2n mesh, both with bilinear elements.
Meshes are uniform and periodic, so every constant-coefficient operator is a
(two-scale) convolution: mass and stiffness reduce to 9-point stencils, the
velocity/pressure coupling to 5x5 two-scale stencils, and all of them
diagonalize over blocks of four aliased Fourier modes.  That block
factorization is used as an exact Stokes solve inside the preconditioner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import kernels

TWO_PI = 2.0 * math.pi

# Exact 1d coupling tables between coarse hats (spacing 2h) and fine hats
# (spacing h), offsets delta = fine_index - 2 * coarse_index in -2..2:
#   G1[d]  = integral q_J * phi_j' dx          (dimensionless)
#   MC[d]  = integral q_J * phi_j dx / h       (multiply by h)
G1_TABLE = np.array([-0.25, -0.5, 0.0, 0.5, 0.25])
MC_TABLE = np.array([1.0 / 12.0, 0.5, 5.0 / 6.0, 0.5, 1.0 / 12.0])

# 9-point stencil offsets in row-major (dx, dy) order, dx outer.
OFFSETS9 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
CORNERS = [(0, 0), (1, 0), (0, 1), (1, 1)]


@dataclass(frozen=True)
class LevelSpec:
    """Discretization level: mesh size and time step halve per level."""

    level: int
    base_resolution: int = 4  # pressure cells per side at level 0
    base_steps: int = 4       # time steps at level 0
    horizon: float = 1.0
    truncation: int = 1

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if self.base_resolution < 2:
            raise ValueError("base resolution must be at least 2 cells")

    @property
    def pressure_cells(self) -> int:
        return self.base_resolution * 2**self.level

    @property
    def velocity_cells(self) -> int:
        return 2 * self.pressure_cells

    @property
    def mesh_size(self) -> float:
        return 1.0 / self.pressure_cells

    @property
    def n_steps(self) -> int:
        return self.base_steps * 2**self.level

    @property
    def time_step(self) -> float:
        return self.horizon / self.n_steps

    def time_index(self, t: float) -> int:
        """Index of t on this level's grid; t must lie on the grid."""
        n = t / self.time_step
        idx = int(round(n))
        if abs(n - idx) > 1e-9:
            raise ValueError(f"time {t} not on level-{self.level} grid")
        return idx


def gauss_rule_01(npts: int):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def _q1_tables(npts: int):
    """Shape values and reference gradients of the 4 bilinear basis functions
    at the tensor Gauss points of the reference cell [0,1]^2."""
    g, w = gauss_rule_01(npts)
    pts = [(a, b) for a in g for b in g]
    wts = np.array([wa * wb for wa in w for wb in w])
    nq = len(pts)
    shp = np.empty((nq, 4))
    dxi = np.empty((nq, 4))
    deta = np.empty((nq, 4))
    for q, (xi, eta) in enumerate(pts):
        for c, (cx, cy) in enumerate(CORNERS):
            fx = xi if cx else 1.0 - xi
            fy = eta if cy else 1.0 - eta
            gx = 1.0 if cx else -1.0
            gy = 1.0 if cy else -1.0
            shp[q, c] = fx * fy
            dxi[q, c] = gx * fy
            deta[q, c] = fx * gy
    return np.array(pts), wts, shp, dxi, deta


class LevelOperators:
    """Assembled constant operators and Fourier tables for one level.

    All arrays are indexed ``[ix, iy]`` with node (ix, iy) at (ix*h, iy*h).
    Velocity fields are ``(2, nv, nv)``; pressures ``(npr, npr)``.
    """

    def __init__(self, spec: LevelSpec, viscosity: float):
        if viscosity <= 0:
            raise ValueError("viscosity must be positive")
        self.spec = spec
        self.nu = viscosity
        self.npr = spec.pressure_cells
        self.nv = spec.velocity_cells
        self.h = 1.0 / self.nv
        self.dt = spec.time_step

        h = self.h
        m1 = np.array([h / 6.0, 2.0 * h / 3.0, h / 6.0])
        k1 = np.array([-1.0 / h, 2.0 / h, -1.0 / h])
        self.mass9 = np.array([m1[dx + 1] * m1[dy + 1] for dx, dy in OFFSETS9])
        self.stiff9 = np.array(
            [k1[dx + 1] * m1[dy + 1] + m1[dx + 1] * k1[dy + 1] for dx, dy in OFFSETS9]
        )
        self.const9 = self.mass9 / self.dt + self.nu * self.stiff9

        # Fourier symbols on the fine grid (exact transforms of the stencils).
        theta = TWO_PI * np.arange(self.nv) / self.nv
        mhat = h * (2.0 / 3.0 + np.cos(theta) / 3.0)
        khat = (2.0 / h) * (1.0 - np.cos(theta))
        self.Mhat = np.outer(mhat, mhat)
        self.Khat = np.outer(khat, mhat) + np.outer(mhat, khat)
        self.Ahat = self.Mhat / self.dt + self.nu * self.Khat
        self.AhatInv = 1.0 / self.Ahat

        ghat = 1j * (np.sin(theta) + 0.5 * np.sin(2.0 * theta))
        mchat = h * (5.0 / 6.0 + np.cos(theta) + np.cos(2.0 * theta) / 6.0)
        self.dxhat = np.outer(ghat, mchat)
        self.dyhat = np.outer(mchat, ghat)

        # Schur scalar per coarse mode: sum over the four aliases.
        npr = self.npr
        absd2 = (np.abs(self.dxhat) ** 2 + np.abs(self.dyhat) ** 2) * self.AhatInv
        denom = absd2.reshape(2, npr, 2, npr).sum(axis=(0, 2))
        if denom.flat[1:].min() <= 0.0:
            raise RuntimeError("velocity/pressure pair failed the discrete inf-sup check")
        denom[0, 0] = 1.0  # constant pressure mode is fixed to zero below
        self.schur_inv = 1.0 / denom

        self.dx_phys = h * np.outer(G1_TABLE, MC_TABLE)  # (5,5) two-scale stencil, x part
        self.dy_phys = h * np.outer(MC_TABLE, G1_TABLE)

        # Convection contraction tensor: local matrix entries are bilinear in
        # the 8 nodal values of the convecting velocity; 2x2 Gauss integrates
        # the degree-(3,3) integrand exactly.
        pts, wts, shp, dxi, deta = _q1_tables(2)
        dx = dxi / h
        dy = deta / h
        wq = wts * h * h
        tmat = np.zeros((8, 16))
        for c in range(4):
            for i in range(4):
                for j in range(4):
                    tx = np.sum(wq * shp[:, i] * (shp[:, c] * dx[:, j] + 0.5 * dx[:, c] * shp[:, j]))
                    ty = np.sum(wq * shp[:, i] * (shp[:, c] * dy[:, j] + 0.5 * dy[:, c] * shp[:, j]))
                    tmat[c, 4 * i + j] = tx
                    tmat[4 + c, 4 * i + j] = ty
        self.conv_tensor = tmat

        # Degree-4-exact tensor Gauss rule used for loads and functionals.
        pts3, wts3, shp3, dxi3, deta3 = _q1_tables(3)
        self._q3_pts = pts3
        self._q3_w = wts3 * h * h
        self._q3_shp = shp3
        self._q3_dx = dxi3 / h
        self._q3_dy = deta3 / h
        cells = np.arange(self.nv) * h
        self._cell_x = cells[:, None]
        self._cell_y = cells[None, :]
        self._qoi_weights = None

    # ---- basic applications -------------------------------------------------

    def mass_apply(self, u):
        out = np.empty_like(u)
        for c in range(u.shape[0]):
            kernels.stencil9_const_apply(self.mass9, u[c], out[c])
        return out

    def stiffness_apply(self, u):
        out = np.empty_like(u)
        for c in range(u.shape[0]):
            kernels.stencil9_const_apply(self.stiff9, u[c], out[c])
        return out

    def operator_apply(self, conv9, u, p):
        """Momentum and continuity residual contributions A u - D^T p, D u."""
        ru = np.empty_like(u)
        kernels.stencil9_apply(conv9, self.const9, u[0], ru[0])
        kernels.stencil9_apply(conv9, self.const9, u[1], ru[1])
        gx, gy = self.gradient(p)
        ru[0] -= gx
        ru[1] -= gy
        rp = self.divergence(u)
        return ru, rp

    def divergence(self, u):
        """(div u, q) for all coarse pressure test functions q."""
        out = np.zeros((self.npr, self.npr))
        kernels.twoscale_restrict(self.dx_phys, u[0], out)
        kernels.twoscale_restrict(self.dy_phys, u[1], out)
        return out

    def gradient(self, p):
        """D^T p on the fine mesh (the momentum equation subtracts this)."""
        gx = np.zeros((self.nv, self.nv))
        gy = np.zeros((self.nv, self.nv))
        kernels.twoscale_prolong(self.dx_phys, p, gx)
        kernels.twoscale_prolong(self.dy_phys, p, gy)
        return gx, gy

    def assemble_convection(self, w):
        """9-point stencil coefficients of the skew-symmetrized convection form
        with convecting velocity ``w``; shared by both velocity components."""
        conv9 = np.empty((9, self.nv, self.nv))
        kernels.convection_assemble(
            self.conv_tensor, np.ascontiguousarray(w[0]), np.ascontiguousarray(w[1]), conv9
        )
        return conv9

    # ---- exact Stokes solve via aliased Fourier blocks ----------------------

    def stokes_solve(self, bu, bp=None):
        """Solve (M/dt + nu K) u - D^T p = bu, D u = bp exactly.

        Every output velocity satisfies the discrete divergence constraint to
        rounding, and the pressure has exactly zero mean.
        """
        npr = self.npr
        b0 = sfft.fft2(bu[0])
        b1 = sfft.fft2(bu[1])
        t = (self.dxhat * b0 + self.dyhat * b1) * self.AhatInv
        rhs = -t.reshape(2, npr, 2, npr).sum(axis=(0, 2))
        if bp is not None:
            rhs += 4.0 * sfft.fft2(bp)
        ph = rhs * self.schur_inv
        ph[0, 0] = 0.0
        ph_big = np.tile(ph, (2, 2))
        u0 = sfft.ifft2((b0 + np.conj(self.dxhat) * ph_big) * self.AhatInv).real
        u1 = sfft.ifft2((b1 + np.conj(self.dyhat) * ph_big) * self.AhatInv).real
        p = sfft.ifft2(ph).real
        return np.stack([u0, u1]), p

    def leray_project(self, u):
        """M-orthogonal projection onto the discretely divergence-free space."""
        saved_dt, saved_nu = self.dt, self.nu
        bu = self.mass_apply(u)
        b0 = sfft.fft2(bu[0])
        b1 = sfft.fft2(bu[1])
        npr = self.npr
        minv = 1.0 / self.Mhat
        t = (self.dxhat * b0 + self.dyhat * b1) * minv
        denom = ((np.abs(self.dxhat) ** 2 + np.abs(self.dyhat) ** 2) * minv).reshape(
            2, npr, 2, npr
        ).sum(axis=(0, 2))
        denom[0, 0] = 1.0
        ph = -t.reshape(2, npr, 2, npr).sum(axis=(0, 2)) / denom
        ph[0, 0] = 0.0
        ph_big = np.tile(ph, (2, 2))
        u0 = sfft.ifft2((b0 + np.conj(self.dxhat) * ph_big) * minv).real
        u1 = sfft.ifft2((b1 + np.conj(self.dyhat) * ph_big) * minv).real
        del saved_dt, saved_nu
        return np.stack([u0, u1])

    # ---- quadrature helpers --------------------------------------------------

    def quad_points(self):
        """Physical coordinates of the 3x3 Gauss points in every velocity cell,
        as a list of (x, y) grid pairs, one per quadrature point."""
        out = []
        for gx, gy in self._q3_pts:
            out.append((self._cell_x + gx * self.h, self._cell_y + gy * self.h))
        return out

    def load_vector(self, func):
        """Consistent load (f, v) for an analytic f(x, y) -> (fx, fy)."""
        nv = self.nv
        load = np.zeros((2, nv, nv))
        for q, (xq, yq) in enumerate(self.quad_points()):
            fx, fy = func(xq, yq)
            wfx = self._q3_w[q] * fx
            wfy = self._q3_w[q] * fy
            for c, (cx, cy) in enumerate(CORNERS):
                s = self._q3_shp[q, c]
                load[0] += s * np.roll(wfx, shift=(cx, cy), axis=(0, 1))
                load[1] += s * np.roll(wfy, shift=(cx, cy), axis=(0, 1))
        return load

    def qoi_weighted_curl(self, u, scale=100.0):
        """scale * integral of sqrt(x y) (du1/dy - du2/dx) over the unit square,
        evaluated with the per-cell degree-4 Gauss rule."""
        if self._qoi_weights is None:
            ws = []
            for q, (xq, yq) in enumerate(self.quad_points()):
                ws.append(self._q3_w[q] * np.sqrt(xq * yq))
            self._qoi_weights = ws
        total = 0.0
        for q in range(len(self._q3_w)):
            curl = np.zeros((self.nv, self.nv))
            for c, (cx, cy) in enumerate(CORNERS):
                shifted0 = np.roll(u[0], shift=(-cx, -cy), axis=(0, 1))
                shifted1 = np.roll(u[1], shift=(-cx, -cy), axis=(0, 1))
                curl += self._q3_dy[q, c] * shifted0 - self._q3_dx[q, c] * shifted1
            total += float(np.sum(self._qoi_weights[q] * curl))
        return scale * total

    # ---- norms ---------------------------------------------------------------

    def l2_norm(self, u) -> float:
        return math.sqrt(max(0.0, float(np.sum(u * self.mass_apply(u)))))

    def h1_norm(self, u) -> float:
        mu = self.mass_apply(u)
        ku = self.stiffness_apply(u)
        return math.sqrt(max(0.0, float(np.sum(u * (mu + ku)))))

    def interpolate(self, func):
        """Nodal interpolant of an analytic velocity field on this level."""
        x = self._cell_x  # node coordinates coincide with cell corners
        y = self._cell_y
        fx, fy = func(x + np.zeros_like(y), y + np.zeros_like(x))
        return np.stack([np.broadcast_to(fx, (self.nv, self.nv)).copy(),
                         np.broadcast_to(fy, (self.nv, self.nv)).copy()])


@lru_cache(maxsize=32)
def get_level_operators(spec: LevelSpec, viscosity: float) -> LevelOperators:
    """Shared read-only operator tables per (level spec, viscosity)."""
    return LevelOperators(spec, viscosity)
