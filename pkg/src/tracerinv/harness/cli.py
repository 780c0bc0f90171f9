"""Command-line entry point.

Subcommands: generate-data, reference, run, dof-cost, convergence-plot-data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..mlmcmc import dof_cost, schedule
from .config import load_config
from .data import generate_data
from .experiment import convergence_csv, report_csv, run_experiment, chain_config
from .reference import reference_posterior

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracerinv",
        description="Multilevel MCMC inversion of periodic Navier-Stokes flows from tracer paths",
    )
    parser.add_argument("--version", action="version", version=f"tracerinv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--levels", type=int, default=None, help="finest level L")
        p.add_argument("--enlargement", type=float, default=None, help="sample-size enlargement a")
        p.add_argument("--output", type=Path, default=None, help="output directory")
        p.add_argument("--deterministic", action="store_true", help="byte-stable outputs")
        p.add_argument("--threads", type=int, default=None, help="worker processes")

    p = sub.add_parser("generate-data", help="draw a prior parameter and synthesize observations")
    common(p)

    p = sub.add_parser("reference", help="Gauss-Legendre reference posterior expectation")
    common(p)
    p.add_argument("--fe-level", type=int, default=None,
                   help="replace the spectral solver by the FE solver at this level")
    p.add_argument("--order", type=int, default=None, help="override quadrature order")

    p = sub.add_parser("run", help="one multilevel estimate at the configured finest level")
    common(p)

    p = sub.add_parser("dof-cost", help="print the sample schedule and cost proxy")
    common(p)

    p = sub.add_parser("convergence-plot-data", help="loop L=1..levels and emit the convergence CSV")
    common(p)
    p.add_argument("--reference-value", type=float, default=None,
                   help="skip the quadrature reference and use this value")
    return parser


def _config_from_args(args):
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "levels", None) is not None:
        overrides["mlmcmc.levels"] = args.levels
    if getattr(args, "enlargement", None) is not None:
        overrides["mlmcmc.enlargement"] = args.enlargement
    if getattr(args, "output", None) is not None:
        overrides["run.output"] = str(args.output)
    if args.deterministic:
        overrides["run.deterministic"] = "true"
    if getattr(args, "threads", None) is not None:
        overrides["run.threads"] = args.threads
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    outdir = Path(cfg.output)

    if args.command == "generate-data":
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        _, truth = generate_data(cfg, rng, output_dir=outdir)
        print(f"wrote {outdir / 'observations.csv'} (xi_physical={truth['xi_physical']})")
        return 0

    if args.command == "reference":
        res = reference_posterior(cfg, fe_level=args.fe_level, order=args.order, threads=cfg.threads)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "reference.csv"
        path.write_text(
            f"# config_hash={res.config_hash} version={__version__}\n"
            "value,quadrature_order,forward_resolution,dt,solver,viscosity\n"
            f"{res.value!r},{res.quadrature_order},{res.forward_resolution},"
            f"{res.dt!r},{res.solver},{res.viscosity!r}\n"
        )
        print(f"reference posterior expectation: {res.value:.6f} ({res.solver}, order {res.quadrature_order})")
        print(f"wrote {path}")
        return 0

    if args.command == "run":
        from ..mlmcmc import estimate
        from .reference import build_model

        model = build_model(cfg, solver="fe")
        report = estimate(model, cfg.levels, cfg.enlargement, chain_config(cfg),
                          np.random.SeedSequence(cfg.seed))
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"report_L{cfg.levels}.csv"
        path.write_text(report_csv(report, cfg))
        print(f"estimate at L={cfg.levels}, a={cfg.enlargement}: {report.estimate:.6f} "
              f"(stderr {report.stderr:.4f}, dof {report.dof_count})")
        if not report.complete:
            print(f"warning: {len(report.failures)} chain failures", file=sys.stderr)
        print(f"wrote {path}")
        return 0

    if args.command == "dof-cost":
        print("l,l_prime,samples")
        for e in schedule(cfg.levels, cfg.enlargement):
            print(f"{e.l},{e.l_prime},{e.samples}")
        print(f"total dof cost: {dof_cost(cfg.levels, cfg.enlargement)}")
        return 0

    if args.command == "convergence-plot-data":
        result = run_experiment(
            cfg,
            l_max=cfg.levels,
            reference_value=args.reference_value,
            output_dir=outdir,
        )
        print(f"reference value: {result.reference_value:.6f}")
        for L, a, est, err, dof, wall in result.rows:
            print(f"L={L}: estimate {est:+.6f}  |error| {err:.6f}  dof {dof}")
        print(f"wrote {outdir / 'convergence.csv'}")
        return 0

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
