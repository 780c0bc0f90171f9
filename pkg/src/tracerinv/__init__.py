"""Bayesian inversion of 2D periodic Navier-Stokes flows from tracer paths.

Leveled mixed-FE forward solvers, a spectral reference solver, Lagrangian
tracer transport, and a multilevel MCMC estimator for posterior expectations.
"""

__version__ = "0.1.0"
