"""Metropolis-Hastings chains targeting the level-l posterior.

Both proposal kernels preserve the uniform prior, so the acceptance
probability reduces to 1 ^ exp(Phi(current) - Phi(proposed)) at the chain's
target level.  Retained states carry cached per-level evaluations; a forward
solve happens at most once per (state, level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import ParamPoint, sample_prior

__all__ = ["ChainConfig", "ChainResult", "run_chain", "batch_means_stderr", "resolve_burn_in"]


@dataclass(frozen=True)
class ChainConfig:
    """Sampler settings shared by all chains of one run."""

    sampler: str = "independence"  # or "reflection-random-walk"
    step_size: float = 0.5         # proposal half-width, random walk only
    burn_in: int | None = None     # explicit override; default is fraction rule
    burn_in_fraction: float = 0.1
    burn_in_min: int = 50

    def __post_init__(self):
        if self.sampler not in ("independence", "reflection-random-walk"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if not (0.0 < self.step_size <= 1.0):
            raise ValueError("step size must lie in (0, 1]")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn-in must be nonnegative")


def resolve_burn_in(cfg: ChainConfig, n_samples: int) -> int:
    if cfg.burn_in is not None:
        return cfg.burn_in
    return max(cfg.burn_in_min, int(math.ceil(cfg.burn_in_fraction * n_samples)))


def _reflect(x: np.ndarray) -> np.ndarray:
    """Fold real numbers into [-1, 1] by reflection at the endpoints."""
    y = np.mod(x + 1.0, 4.0)
    y = np.where(y > 2.0, 4.0 - y, y)
    return y - 1.0


class _State:
    __slots__ = ("point", "evals")

    def __init__(self, point: ParamPoint):
        self.point = point
        self.evals = {}

    def ensure(self, evaluator, level):
        if level not in self.evals:
            self.evals[level] = evaluator(self.point, level)
        return self.evals[level]


@dataclass
class ChainResult:
    target_level: int
    phi: dict          # level -> (n_samples,) potentials along the chain
    qoi: dict          # level -> (n_samples,) QoI values along the chain
    acceptance_rate: float
    inf_rejections: int
    n_samples: int
    burn_in: int

    def qoi_increment(self, l_hi: int, l_lo: int | None) -> np.ndarray:
        if l_lo is None:
            return self.qoi[l_hi]
        return self.qoi[l_hi] - self.qoi[l_lo]


def run_chain(
    evaluator,
    target_level: int,
    n_samples: int,
    dimension: int,
    cfg: ChainConfig,
    seed,
    phi_levels=(),
    qoi_levels=(),
) -> ChainResult:
    """Run one chain targeting gamma^{target_level} and record per-level values.

    ``evaluator(point, level)`` returns an object with ``phi`` and ``qoi``
    attributes (+inf potential rejects the proposal).  ``phi_levels`` and
    ``qoi_levels`` are recorded for every retained post-burn-in state.
    """
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    prop_ss, acc_ss = ss.spawn(2)
    rng_prop = np.random.default_rng(prop_ss)
    rng_acc = np.random.default_rng(acc_ss)

    burn = resolve_burn_in(cfg, n_samples)
    phi_levels = tuple(dict.fromkeys((target_level, *phi_levels)))
    qoi_levels = tuple(dict.fromkeys(qoi_levels))

    state = _State(sample_prior(dimension, rng_prop))
    phi_cur = state.ensure(evaluator, target_level).phi

    rec_phi = {lv: np.empty(n_samples) for lv in phi_levels}
    rec_qoi = {lv: np.empty(n_samples) for lv in qoi_levels}
    accepted = 0
    inf_rejections = 0
    total = burn + n_samples
    for step in range(total):
        if cfg.sampler == "independence":
            prop_point = sample_prior(dimension, rng_prop)
        else:
            cur = np.array(state.point.zeta + state.point.xi)
            eps = rng_prop.uniform(-cfg.step_size, cfg.step_size, size=cur.size)
            moved = _reflect(cur + eps)
            prop_point = ParamPoint(tuple(moved[:dimension]), tuple(moved[dimension:]))
        prop_state = _State(prop_point)
        phi_new = prop_state.ensure(evaluator, target_level).phi

        if phi_new <= phi_cur:
            accept = True
        else:
            accept = rng_acc.uniform() < math.exp(max(phi_cur - phi_new, -745.0))
        if accept:
            state = prop_state
            phi_cur = phi_new
            accepted += 1
        elif math.isinf(phi_new):
            inf_rejections += 1

        if step >= burn:
            i = step - burn
            for lv in phi_levels:
                rec_phi[lv][i] = state.ensure(evaluator, lv).phi
            for lv in qoi_levels:
                rec_qoi[lv][i] = state.ensure(evaluator, lv).qoi

    return ChainResult(
        target_level=target_level,
        phi=rec_phi,
        qoi=rec_qoi,
        acceptance_rate=accepted / total,
        inf_rejections=inf_rejections,
        n_samples=n_samples,
        burn_in=burn,
    )


def batch_means_stderr(x) -> float:
    """Standard error of the mean of a correlated sequence via batch means.

    NaN for length-one sequences, where no variance estimate exists.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return math.nan
    if n < 4:
        return float(np.std(x, ddof=1) / math.sqrt(n))
    nb = max(2, int(math.isqrt(n)))
    m = n // nb
    bm = x[: nb * m].reshape(nb, m).mean(axis=1)
    return float(np.std(bm, ddof=1) / math.sqrt(nb))
