"""Observation CSV I/O and synthetic data generation.

Data files are plain CSV (tracer, time, x, y) with the t=0 rows holding the
initial tracer positions; the benchmark observations printed in the source
experiment ship as a package preset so the exact inverse problem can be rerun
without regeneration.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .. import __version__
from ..bayes import ObservationSet
from ..params import sample_prior
from ..spectral import solve_reference
from .config import ExperimentConfig

__all__ = ["load_observations", "read_observation_csv", "write_observation_csv", "generate_data"]


def read_observation_csv(text: str, noise_sigma: float = 1.0) -> ObservationSet:
    """Parse (tracer, time, x, y) rows; t=0 rows are the initial positions."""
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if [h.strip().lower() for h in header[:4]] != ["tracer", "time", "x", "y"]:
        raise ValueError("observation CSV must have header tracer,time,x,y")
    for row in reader:
        if not row or row[0].startswith("#"):
            continue
        rows.append((int(row[0]), float(row[1]), float(row[2]), float(row[3])))
    tracers = sorted({r[0] for r in rows})
    times = sorted({r[1] for r in rows if r[1] > 0.0})
    pos = {(r[0], r[1]): (r[2], r[3]) for r in rows}
    initial = np.array([pos[(j, 0.0)] for j in tracers])
    values = np.array([[pos[(j, t)] for j in tracers] for t in times])
    return ObservationSet.isotropic(times, values, initial, sigma2=noise_sigma**2)


def write_observation_csv(obs_times, values, initial_positions, header_lines=()) -> str:
    out = io.StringIO()
    for line in header_lines:
        out.write(f"# {line}\n")
    out.write("tracer,time,x,y\n")
    for j, (x, y) in enumerate(initial_positions):
        out.write(f"{j},0.0,{x!r},{y!r}\n")
    for k, t in enumerate(obs_times):
        for j, (x, y) in enumerate(values[k]):
            out.write(f"{j},{t!r},{x!r},{y!r}\n")
    return out.getvalue()


def load_observations(cfg: ExperimentConfig) -> ObservationSet:
    src = cfg.observations_source
    if src.startswith("builtin:"):
        name = src.split(":", 1)[1]
        fname = {"lagrangian-1d": "lagrangian1d_observations.csv"}.get(name)
        if fname is None:
            raise ValueError(f"unknown builtin observation set {name!r}")
        text = resources.files("tracerinv.presets").joinpath(fname).read_text()
    else:
        path = Path(src)
        if not path.is_absolute() and cfg.config_path:
            path = Path(cfg.config_path).parent / path
        text = path.read_text()
    return read_observation_csv(text, noise_sigma=cfg.noise_sigma)


def generate_data(cfg: ExperimentConfig, rng: np.random.Generator, output_dir=None):
    """Draw a prior parameter, run the spectral reference forward solve, add
    N(0, sigma^2 I) noise, and write the data file plus a truth sidecar.

    Returns (ObservationSet, truth record).  With zero noise the data equal
    the noiseless forward map; the returned set then carries a unit covariance
    so it stays usable for inference smoke tests.
    """
    expansion = cfg.expansion()
    point = sample_prior(cfg.dimension, rng)
    base = load_observations(cfg)  # initial positions come from the configured set
    times = base.times
    run = solve_reference(
        point,
        expansion,
        cfg.reference_resolution,
        cfg.reference_dt,
        cfg.viscosity,
        horizon=cfg.horizon,
        tracer_initial=base.initial_positions,
        observation_times=times,
    )
    clean = np.stack([run.observed[t] for t in times])
    noise = cfg.noise_sigma * rng.standard_normal(clean.shape)
    values = clean + noise
    sigma2 = cfg.noise_sigma**2 if cfg.noise_sigma > 0 else 1.0
    obs = ObservationSet.isotropic(times, values, base.initial_positions, sigma2=sigma2)

    truth = {
        "zeta": list(point.zeta),
        "xi": list(point.xi),
        "xi_physical": list(expansion.physical_xi(point)),
        "viscosity": cfg.viscosity,
        "noise_sigma": cfg.noise_sigma,
        "resolution": cfg.reference_resolution,
        "dt": cfg.reference_dt,
        "config_hash": cfg.hash(),
        "version": __version__,
    }
    if output_dir is not None:
        outdir = Path(output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        header = [f"config_hash={cfg.hash()}", f"version={__version__}"]
        (outdir / "observations.csv").write_text(
            write_observation_csv(times, values, base.initial_positions, header)
        )
        (outdir / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return obs, truth
