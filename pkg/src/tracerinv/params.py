"""Uniform prior over expansion coordinates and truncated field evaluation.

The unknown initial velocity and body forcing are expanded in a fixed family
of divergence-free modes with coefficients living on [-1, 1] per coordinate.
An affine map (per-coordinate bounds) converts internal coordinates to the
physical coefficient range used by an experiment, e.g. [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParamPoint",
    "TrigVelocityMode",
    "ExperimentForcingMode",
    "FieldExpansion",
    "unit_grid",
    "sample_prior",
    "truncation_dimension_for_level",
    "evaluate_initial_velocity",
    "evaluate_forcing",
    "builtin_expansion",
]

TWO_PI = 2.0 * math.pi


class ConfigurationError(ValueError):
    """Inconsistent dimensions or parameter settings."""


@dataclass(frozen=True)
class ParamPoint:
    """A truncated coordinate pair; every coordinate lies in [-1, 1]."""

    zeta: tuple[float, ...]
    xi: tuple[float, ...]

    def __post_init__(self):
        if len(self.zeta) != len(self.xi):
            raise ConfigurationError(
                f"zeta and xi must have equal length, got {len(self.zeta)} and {len(self.xi)}"
            )
        for name, coords in (("zeta", self.zeta), ("xi", self.xi)):
            for c in coords:
                if not (-1.0 <= c <= 1.0) or not math.isfinite(c):
                    raise ConfigurationError(f"{name} coordinate {c} outside [-1, 1]")

    @property
    def dimension(self) -> int:
        return len(self.zeta)

    def truncated(self, dim: int) -> "ParamPoint":
        """Keep the first ``dim`` coordinates of both sequences."""
        if dim > self.dimension:
            raise ConfigurationError(
                f"cannot truncate dimension-{self.dimension} point to {dim} coordinates"
            )
        return ParamPoint(self.zeta[:dim], self.xi[:dim])

    @staticmethod
    def zeros(dim: int) -> "ParamPoint":
        return ParamPoint((0.0,) * dim, (0.0,) * dim)


def _affine_to_physical(coords, bounds):
    """Map internal [-1, 1] coordinates to the physical box given by ``bounds``.

    ``bounds`` is a sequence of (lo, hi) pairs, cycled if shorter than coords.
    """
    out = []
    for i, c in enumerate(coords):
        lo, hi = bounds[i % len(bounds)] if bounds else (-1.0, 1.0)
        out.append(lo + 0.5 * (c + 1.0) * (hi - lo))
    return tuple(out)


def _affine_to_internal(coords, bounds):
    out = []
    for i, c in enumerate(coords):
        lo, hi = bounds[i % len(bounds)] if bounds else (-1.0, 1.0)
        if hi <= lo:
            raise ConfigurationError(f"empty coordinate bounds ({lo}, {hi})")
        out.append(2.0 * (c - lo) / (hi - lo) - 1.0)
    return tuple(out)


@dataclass(frozen=True)
class TrigVelocityMode:
    """Divergence-free trigonometric velocity mode on the unit torus.

    The velocity is ``amplitude * (ky, -kx)/|k| * trig(2 pi k.x + phase)`` plus
    an optional constant drift; constants and rotated gradients of scalars are
    both exactly divergence-free.
    """

    kx: int
    ky: int
    amplitude: float
    trig: str = "sin"  # "sin" or "cos"
    phase: float = 0.0
    drift: tuple[float, float] = (0.0, 0.0)
    growth_rate: float = 0.0  # time factor exp(growth_rate * t)

    def spatial(self, x, y):
        arg = TWO_PI * (self.kx * np.asarray(x) + self.ky * np.asarray(y)) + self.phase
        s = np.sin(arg) if self.trig == "sin" else np.cos(arg)
        norm = math.hypot(self.kx, self.ky)
        if norm == 0.0:
            ux = np.full_like(s, self.drift[0])
            uy = np.full_like(s, self.drift[1])
            return self.amplitude * ux, self.amplitude * uy
        cx = self.amplitude * self.ky / norm
        cy = -self.amplitude * self.kx / norm
        return cx * s + self.amplitude * self.drift[0], cy * s + self.amplitude * self.drift[1]

    def time_factor(self, t: float) -> float:
        return math.exp(self.growth_rate * t)


@dataclass(frozen=True)
class ExperimentForcingMode:
    """The single random forcing mode of the Lagrangian benchmark problem.

    Spatial part ``(cos(2 pi x) sin(2 pi y) + 1, -(sin(2 pi x) cos(2 pi y) + 1))``
    with time factor ``exp(t)``; the constant offsets drive a uniform mean flow.
    """

    amplitude: float = 1.0

    def spatial(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        ux = np.cos(TWO_PI * x) * np.sin(TWO_PI * y) + 1.0
        uy = -(np.sin(TWO_PI * x) * np.cos(TWO_PI * y) + 1.0)
        return self.amplitude * ux, self.amplitude * uy

    def time_factor(self, t: float) -> float:
        return math.exp(t)


@dataclass(frozen=True)
class FieldExpansion:
    """Mode families and coordinate bounds for initial velocity and forcing.

    ``decay_exponent`` is the rate s in the mode-norm bound ||phi_i||_1 <= C i^-s;
    the induced truncation rate is q = s - 1.
    """

    modes_initial: tuple = ()
    modes_forcing: tuple = ()
    mean_initial: object = None
    mean_forcing: object = None
    decay_exponent: float = 2.0
    zeta_bounds: tuple = ((-1.0, 1.0),)
    xi_bounds: tuple = ((-1.0, 1.0),)

    def __post_init__(self):
        if self.decay_exponent <= 1.0:
            raise ConfigurationError("decay exponent must exceed 1")

    @property
    def truncation_rate(self) -> float:
        return self.decay_exponent - 1.0

    def physical_zeta(self, p: ParamPoint):
        return _affine_to_physical(p.zeta, self.zeta_bounds)

    def physical_xi(self, p: ParamPoint):
        return _affine_to_physical(p.xi, self.xi_bounds)

    def point_from_physical(self, zeta=(), xi=()) -> ParamPoint:
        dim = max(len(zeta), len(xi))
        zeta = tuple(zeta) + (0.0,) * (dim - len(zeta))
        xi = tuple(xi) + (0.0,) * (dim - len(xi))
        return ParamPoint(
            _affine_to_internal(zeta, self.zeta_bounds),
            _affine_to_internal(xi, self.xi_bounds),
        )


def unit_grid(n: int):
    """Nodes i/n of the n x n periodic grid, as ('ij'-indexed) coordinate arrays."""
    s = np.arange(n) / n
    return np.meshgrid(s, s, indexing="ij")


def sample_prior(dimension: int, rng: np.random.Generator) -> ParamPoint:
    """Draw a ParamPoint with i.i.d. Uniform(-1, 1) coordinates."""
    if dimension < 0:
        raise ConfigurationError("dimension must be nonnegative")
    zeta = rng.uniform(-1.0, 1.0, size=dimension)
    xi = rng.uniform(-1.0, 1.0, size=dimension)
    return ParamPoint(tuple(zeta), tuple(xi))


def truncation_dimension_for_level(level: int, q: float) -> int:
    """Smallest I with I^-q <= 2^-level, i.e. ceil(2^(level/q))."""
    if q <= 0:
        raise ConfigurationError("truncation decay rate q must be positive")
    if level < 0:
        raise ConfigurationError("level must be nonnegative")
    return int(math.ceil(2.0 ** (level / q) - 1e-12))


def _sum_modes(modes, coeffs, x, y, t=None):
    shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
    ux = np.zeros(shape)
    uy = np.zeros(shape)
    for mode, c in zip(modes, coeffs):
        w = c if t is None else c * mode.time_factor(t)
        if w == 0.0:
            continue
        mx, my = mode.spatial(x, y)
        ux += w * mx
        uy += w * my
    return ux, uy


def evaluate_initial_velocity(expansion: FieldExpansion, p: ParamPoint, grid):
    """Truncated initial velocity sampled on ``grid`` (a pair of coordinate arrays).

    Uses the first min(dimension, available modes) coordinates; the coordinate
    vector itself must cover the expansion's modes that are requested.
    """
    x, y = grid
    zeta = expansion.physical_zeta(p)
    n_use = min(len(zeta), len(expansion.modes_initial))
    ux, uy = _sum_modes(expansion.modes_initial[:n_use], zeta[:n_use], x, y)
    if expansion.mean_initial is not None:
        mx, my = expansion.mean_initial.spatial(x, y)
        ux += mx
        uy += my
    return np.stack([ux, uy])


def evaluate_forcing(expansion: FieldExpansion, p: ParamPoint, t: float, grid):
    """Truncated forcing at time ``t`` sampled on ``grid``."""
    x, y = grid
    xi = expansion.physical_xi(p)
    n_use = min(len(xi), len(expansion.modes_forcing))
    ux, uy = _sum_modes(expansion.modes_forcing[:n_use], xi[:n_use], x, y, t=t)
    if expansion.mean_forcing is not None:
        w = expansion.mean_forcing.time_factor(t)
        mx, my = expansion.mean_forcing.spatial(x, y)
        ux += w * mx
        uy += w * my
    return np.stack([ux, uy])


def _wavevector_sequence(count: int):
    """Enumerate nonzero integer wavevectors by increasing |k|, deterministic order."""
    ks = []
    radius = 1
    while len(ks) < count:
        cands = [
            (a, b)
            for a in range(-radius, radius + 1)
            for b in range(-radius, radius + 1)
            if (a, b) != (0, 0) and max(abs(a), abs(b)) == radius and (b > 0 or (b == 0 and a > 0))
        ]
        cands.sort(key=lambda ab: (ab[0] ** 2 + ab[1] ** 2, ab))
        ks.extend(cands)
        radius += 1
    return ks[:count]


def builtin_expansion(
    family: str,
    dimension: int = 1,
    decay_exponent: float = 2.0,
    zeta_bounds=((-1.0, 1.0),),
    xi_bounds=((-1.0, 1.0),),
) -> FieldExpansion:
    """Construct a named analytic mode family.

    ``lagrangian-1d``
        Zero initial velocity; the single benchmark forcing mode with exp(t)
        growth. ``dimension`` must be 1.
    ``trig-divfree``
        ``dimension`` rotated-gradient trig modes for both the initial velocity
        and the forcing, with amplitudes i^-s.
    """
    if family == "lagrangian-1d":
        if dimension != 1:
            raise ConfigurationError("lagrangian-1d family is one-dimensional")
        return FieldExpansion(
            modes_initial=(),
            modes_forcing=(ExperimentForcingMode(),),
            decay_exponent=decay_exponent,
            zeta_bounds=tuple(zeta_bounds),
            xi_bounds=tuple(xi_bounds),
        )
    if family == "trig-divfree":
        ks = _wavevector_sequence(dimension)
        modes_i = []
        modes_f = []
        for i, (kx, ky) in enumerate(ks, start=1):
            amp = float(i) ** (-decay_exponent)
            trig = "sin" if i % 2 else "cos"
            modes_i.append(TrigVelocityMode(kx, ky, amp, trig=trig))
            modes_f.append(TrigVelocityMode(kx, ky, amp, trig=trig, growth_rate=1.0))
        return FieldExpansion(
            modes_initial=tuple(modes_i),
            modes_forcing=tuple(modes_f),
            decay_exponent=decay_exponent,
            zeta_bounds=tuple(zeta_bounds),
            xi_bounds=tuple(xi_bounds),
        )
    raise ConfigurationError(f"unknown mode family {family!r}")


def mode_divergence_max(mode, n: int = 64) -> float:
    """Max |div| of a sampled mode via spectral differentiation (exact for trig modes)."""
    x, y = unit_grid(n)
    ux, uy = mode.spatial(x, y)
    k = np.fft.fftfreq(n, d=1.0 / n) * TWO_PI
    dux = np.real(np.fft.ifft2(1j * k[:, None] * np.fft.fft2(ux)))
    duy = np.real(np.fft.ifft2(1j * k[None, :] * np.fft.fft2(uy)))
    return float(np.max(np.abs(dux + duy)))


def mode_h1_norm(mode, n: int = 64) -> float:
    """Discrete H1 norm of a sampled mode (spectral quadrature on the torus)."""
    x, y = unit_grid(n)
    ux, uy = mode.spatial(x, y)
    k = np.fft.fftfreq(n, d=1.0 / n) * TWO_PI
    total = 0.0
    for comp in (ux, uy):
        ch = np.fft.fft2(comp) / n**2
        e2 = np.sum(np.abs(ch) ** 2)
        g2 = np.sum((k[:, None] ** 2 + k[None, :] ** 2) * np.abs(ch) ** 2)
        total += e2 + g2
    return math.sqrt(total)
