"""Traveling breathers in Kerr-nonlinear waveguides via energy minimization."""

__version__ = "0.1.0"

from .config import (Discretization, PeriodicStep, PotentialSpec, ProblemSpec, PureStep,
                     derive_coefficients, load_spec, spec_from_dict, spec_to_dict, validate,
                     validate_periodic, validate_step)
from .discretization import DiscreteProfile, TimeGrid
from .energy import EnergyFunctional, EnergyReport, eval_energy, eval_gradient
from .estimator import BreatherSolver
from .fundsol import FundamentalSolutionTable, audit_assumptions, witnesses
from .kernel import KernelSpec, check_admissible, periodize
from .minimize import MinimizeOptions, MinimizeResult, minimize
from .reconstruction import (BreatherField, DiagnosticsReport, classify_spectrum, diagnose,
                             el_residual, extend_profile, f_monotonicity, segment_energy,
                             sweep_d)

__all__ = [
    "BreatherField", "BreatherSolver", "DiagnosticsReport", "DiscreteProfile",
    "Discretization", "EnergyFunctional", "EnergyReport", "FundamentalSolutionTable",
    "KernelSpec", "MinimizeOptions", "MinimizeResult", "PeriodicStep", "PotentialSpec",
    "ProblemSpec", "PureStep", "TimeGrid", "audit_assumptions", "check_admissible",
    "classify_spectrum", "derive_coefficients", "diagnose", "el_residual", "eval_energy",
    "eval_gradient", "extend_profile", "f_monotonicity", "load_spec", "minimize", "periodize",
    "segment_energy", "spec_from_dict", "spec_to_dict", "sweep_d", "validate",
    "validate_periodic", "validate_step", "witnesses",
]
