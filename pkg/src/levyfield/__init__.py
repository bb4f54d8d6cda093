"""Spectral functionals, exact moments, samplers, and fixed-point solvers
for white-noise-driven heat and wave equations whose spatial operator is
the generator of a Levy process."""

__version__ = "0.1.0"

from . import config, errors, functionals, markov, moments, quadrature, sampler, semilinear, symbols  # noqa: F401
