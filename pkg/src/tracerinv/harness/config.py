"""Experiment configuration: one INI-style text file with sections.

All defaults reproduce the shipped Lagrangian benchmark preset; every output
file embeds the hash of the resolved settings so runs are traceable.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, asdict
from pathlib import Path

__all__ = ["ExperimentConfig", "load_config", "DEFAULTS"]

DEFAULTS = {
    "model": {"viscosity": "0.1", "horizon": "1.0"},
    "parametrization": {
        "family": "lagrangian-1d",
        "dimension": "1",
        "decay_exponent": "2.0",
        "zeta_lower": "-1.0",
        "zeta_upper": "1.0",
        "xi_lower": "0.0",
        "xi_upper": "1.0",
    },
    "fe": {"base_resolution": "4", "base_steps": "4", "solver_rtol": "1e-8"},
    "observations": {"source": "builtin:lagrangian-1d", "noise_sigma": "1.0"},
    "qoi": {"kind": "weighted-curl", "scale": "100.0"},
    "reference": {"quadrature_order": "32", "resolution": "128", "dt": "0.0001"},
    "mcmc": {
        "sampler": "independence",
        "step_size": "0.5",
        "burn_in_fraction": "0.1",
        "burn_in_min": "50",
    },
    "mlmcmc": {"levels": "4", "enlargement": "2"},
    "run": {"seed": "2026", "output": "out", "deterministic": "false", "threads": "1"},
}


@dataclass
class ExperimentConfig:
    viscosity: float = 0.1
    horizon: float = 1.0
    family: str = "lagrangian-1d"
    dimension: int = 1
    decay_exponent: float = 2.0
    zeta_bounds: tuple = (-1.0, 1.0)
    xi_bounds: tuple = (0.0, 1.0)
    base_resolution: int = 4
    base_steps: int = 4
    solver_rtol: float = 1e-8
    observations_source: str = "builtin:lagrangian-1d"
    noise_sigma: float = 1.0
    qoi_kind: str = "weighted-curl"
    qoi_scale: float = 100.0
    quadrature_order: int = 32
    reference_resolution: int = 128
    reference_dt: float = 1e-4
    sampler: str = "independence"
    step_size: float = 0.5
    burn_in_fraction: float = 0.1
    burn_in_min: int = 50
    levels: int = 4
    enlargement: float = 2.0
    seed: int = 2026
    output: str = "out"
    deterministic: bool = False
    threads: int = 1
    config_path: str = field(default="", compare=False)

    def __post_init__(self):
        if self.viscosity <= 0 or self.horizon <= 0:
            raise ValueError("physical parameters must be positive")

    def hash(self) -> str:
        """Stable hash of the resolved settings (path excluded)."""
        d = asdict(self)
        d.pop("config_path", None)
        canon = "\n".join(f"{k}={d[k]!r}" for k in sorted(d))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def expansion(self):
        from ..params import builtin_expansion

        return builtin_expansion(
            self.family,
            dimension=self.dimension,
            decay_exponent=self.decay_exponent,
            zeta_bounds=(tuple(self.zeta_bounds),),
            xi_bounds=(tuple(self.xi_bounds),),
        )


def _parser_with_defaults() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_dict(DEFAULTS)
    return cp


def _to_config(cp: configparser.ConfigParser, path: str = "") -> ExperimentConfig:
    return ExperimentConfig(
        viscosity=cp.getfloat("model", "viscosity"),
        horizon=cp.getfloat("model", "horizon"),
        family=cp.get("parametrization", "family"),
        dimension=cp.getint("parametrization", "dimension"),
        decay_exponent=cp.getfloat("parametrization", "decay_exponent"),
        zeta_bounds=(
            cp.getfloat("parametrization", "zeta_lower"),
            cp.getfloat("parametrization", "zeta_upper"),
        ),
        xi_bounds=(
            cp.getfloat("parametrization", "xi_lower"),
            cp.getfloat("parametrization", "xi_upper"),
        ),
        base_resolution=cp.getint("fe", "base_resolution"),
        base_steps=cp.getint("fe", "base_steps"),
        solver_rtol=cp.getfloat("fe", "solver_rtol"),
        observations_source=cp.get("observations", "source"),
        noise_sigma=cp.getfloat("observations", "noise_sigma"),
        qoi_kind=cp.get("qoi", "kind"),
        qoi_scale=cp.getfloat("qoi", "scale"),
        quadrature_order=cp.getint("reference", "quadrature_order"),
        reference_resolution=cp.getint("reference", "resolution"),
        reference_dt=cp.getfloat("reference", "dt"),
        sampler=cp.get("mcmc", "sampler"),
        step_size=cp.getfloat("mcmc", "step_size"),
        burn_in_fraction=cp.getfloat("mcmc", "burn_in_fraction"),
        burn_in_min=cp.getint("mcmc", "burn_in_min"),
        levels=cp.getint("mlmcmc", "levels"),
        enlargement=cp.getfloat("mlmcmc", "enlargement"),
        seed=cp.getint("run", "seed"),
        output=cp.get("run", "output"),
        deterministic=cp.getboolean("run", "deterministic"),
        threads=cp.getint("run", "threads"),
        config_path=path,
    )


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file over the defaults; ``overrides`` maps 'section.key' to values."""
    cp = _parser_with_defaults()
    if path is not None:
        with open(path) as f:
            cp.read_file(f)
    if overrides:
        for dotted, value in overrides.items():
            section, key = dotted.split(".", 1)
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, str(value))
    return _to_config(cp, str(path) if path else "")


def dump_config(cfg: ExperimentConfig) -> str:
    """Render the resolved configuration back to INI text."""
    cp = _parser_with_defaults()
    cp.set("model", "viscosity", repr(cfg.viscosity))
    cp.set("model", "horizon", repr(cfg.horizon))
    cp.set("parametrization", "family", cfg.family)
    cp.set("parametrization", "dimension", str(cfg.dimension))
    cp.set("parametrization", "decay_exponent", repr(cfg.decay_exponent))
    cp.set("parametrization", "zeta_lower", repr(cfg.zeta_bounds[0]))
    cp.set("parametrization", "zeta_upper", repr(cfg.zeta_bounds[1]))
    cp.set("parametrization", "xi_lower", repr(cfg.xi_bounds[0]))
    cp.set("parametrization", "xi_upper", repr(cfg.xi_bounds[1]))
    cp.set("fe", "base_resolution", str(cfg.base_resolution))
    cp.set("fe", "base_steps", str(cfg.base_steps))
    cp.set("fe", "solver_rtol", repr(cfg.solver_rtol))
    cp.set("observations", "source", cfg.observations_source)
    cp.set("observations", "noise_sigma", repr(cfg.noise_sigma))
    cp.set("qoi", "kind", cfg.qoi_kind)
    cp.set("qoi", "scale", repr(cfg.qoi_scale))
    cp.set("reference", "quadrature_order", str(cfg.quadrature_order))
    cp.set("reference", "resolution", str(cfg.reference_resolution))
    cp.set("reference", "dt", repr(cfg.reference_dt))
    cp.set("mcmc", "sampler", cfg.sampler)
    cp.set("mcmc", "step_size", repr(cfg.step_size))
    cp.set("mcmc", "burn_in_fraction", repr(cfg.burn_in_fraction))
    cp.set("mcmc", "burn_in_min", str(cfg.burn_in_min))
    cp.set("mlmcmc", "levels", str(cfg.levels))
    cp.set("mlmcmc", "enlargement", repr(cfg.enlargement))
    cp.set("run", "seed", str(cfg.seed))
    cp.set("run", "output", cfg.output)
    cp.set("run", "deterministic", str(cfg.deterministic).lower())
    cp.set("run", "threads", str(cfg.threads))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
