"""Potentials, test functions, grids and initial-data profiles."""
from .grids import SpatialGrid, VelocityGrid, next_pow2
from .panel import (ConstantFactor, GaussianFactor, MonomialGaussianFactor, TestFunction,
                    TestFunctionPanel, constant_function, default_test_panel,
                    position_square_function, velocity_function)
from .potentials import (KacScaling, TwoBodyPotential, kac_potential, kac_rescale,
                         make_constant_potential, make_gaussian_potential,
                         make_harmonic_potential, make_potential, make_zero_potential)
from .profiles import (DensityFromPdf, GaussianAmplitude, GaussianDensity, LinearPhase,
                       Phase, QuadraticPhase, SinePhase, ZeroPhase, make_phase)

__all__ = [
    "SpatialGrid", "VelocityGrid", "next_pow2",
    "ConstantFactor", "GaussianFactor", "MonomialGaussianFactor", "TestFunction",
    "TestFunctionPanel", "constant_function", "default_test_panel",
    "position_square_function", "velocity_function",
    "KacScaling", "TwoBodyPotential", "kac_potential", "kac_rescale",
    "make_constant_potential", "make_gaussian_potential", "make_harmonic_potential",
    "make_potential", "make_zero_potential",
    "DensityFromPdf", "GaussianAmplitude", "GaussianDensity", "LinearPhase", "Phase",
    "QuadraticPhase", "SinePhase", "ZeroPhase", "make_phase",
]
