"""Contraction and decay functionals for m U_t = Lap U^m on periodic tori."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .admissible import (DiffusionParams, ExponentPair, ParameterError, RegionClass, classify,
                         derived_exponents, p_bounds)
from .grid import ScalarField, TorusGrid
from .quadforms import dissipation_e, dissipation_ebar, dissipation_ebarbar, m_matrix, q_matrix
from .solver import InstabilityError, SolverConfig, Trajectory, evolve, make_initial

__all__ = [
    "BACKEND", "DiffusionParams", "ExponentPair", "ParameterError", "RegionClass", "classify",
    "derived_exponents", "p_bounds", "ScalarField", "TorusGrid", "dissipation_e",
    "dissipation_ebar", "dissipation_ebarbar", "m_matrix", "q_matrix", "InstabilityError",
    "SolverConfig", "Trajectory", "evolve", "make_initial",
]
