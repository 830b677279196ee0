"""Continuous Galerkin space-time solver for wave equations with fading memory."""
from .convolution import ConvWeights, TimeGrid, weights
from .errors import (ConfigError, DomainError, NumericalError, StateError,
                     UnsupportedKernelError)
from .fem1d import BCSpec, Mesh1D, assemble
from .kernel import ExponentialSum, GammaKernel, ZeroKernel
from .timestepper import ProblemConfig, RunReport, Solver, init, run

__version__ = "0.1.0"
