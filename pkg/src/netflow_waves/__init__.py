"""Spectral Galerkin solver and a-priori bound checks for the nonlinear
wave equation u_tt = (F(u))_xx + g(u) on (0, l) with Dirichlet ends."""

from .galerkin import Scenario, Trajectory, integrate, integrate_v_form, v_to_u
from .nonlinearity import NonlinearModel, check_all, custom_model, power_family
from .scenario import parse_scenario
from .spectral import build_basis

__version__ = "0.1.0"

__all__ = [
    "NonlinearModel", "Scenario", "Trajectory", "build_basis", "check_all",
    "custom_model", "integrate", "integrate_v_form", "parse_scenario",
    "power_family", "v_to_u",
]
