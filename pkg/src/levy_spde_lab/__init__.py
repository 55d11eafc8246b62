"""Spectral Galerkin simulation of stochastic reaction-diffusion equations on
(0, 1) with Gaussian and compensated Poisson noise, plus the numerical checks
of their transportation-cost deviation bounds."""

from .integrator import (
    GaussianLaw,
    ModelSpec,
    Path,
    PointMass,
    TrajectoryEnsemble,
    multiresolution_errors,
    multiresolution_pair,
    simulate_coupled_pair,
    simulate_ensemble,
    simulate_path,
    step,
)
from .noise import BoundedDiffusion, ConstantDiffusion, DiagonalJumpCoefficient, JumpSpec
from .rates import RateFunctionSet, compute_K
from .spectral import (
    AffineReaction,
    BlowUpError,
    BoundedReaction,
    CubicReaction,
    SpectralField,
    ZeroReaction,
    hnorm,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "AffineReaction",
    "BlowUpError",
    "BoundedDiffusion",
    "BoundedReaction",
    "ConstantDiffusion",
    "CubicReaction",
    "DiagonalJumpCoefficient",
    "GaussianLaw",
    "JumpSpec",
    "ModelSpec",
    "Path",
    "PointMass",
    "RateFunctionSet",
    "SpectralField",
    "TrajectoryEnsemble",
    "ZeroReaction",
    "compute_K",
    "hnorm",
    "multiresolution_errors",
    "multiresolution_pair",
    "project",
    "simulate_coupled_pair",
    "simulate_ensemble",
    "simulate_path",
    "step",
]
