"""Asymptotic charges of metrics and initial data, with numerical checks of their invariance."""

from .backgrounds import Background, StaticPotential, adm_constant, flat, hyperbolic, kernel_basis
from .charge import ChargeReport, Perturbation, charge_integrand, total_charge
from .diffeo import DiffeoAtInfinity
from .expr import parse
from .fields import scalar_field, tensor_field, vector_field
from .surface import QuadratureRule

__version__ = "0.1.0"

__all__ = [
    "Background",
    "StaticPotential",
    "ChargeReport",
    "DiffeoAtInfinity",
    "Perturbation",
    "QuadratureRule",
    "adm_constant",
    "charge_integrand",
    "flat",
    "hyperbolic",
    "kernel_basis",
    "parse",
    "scalar_field",
    "tensor_field",
    "total_charge",
    "vector_field",
]
