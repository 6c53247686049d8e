"""Absorption spectra of structured linear-response pencils by interpolatory model order reduction."""

__version__ = "0.1.0"

from .adaptive import AdaptiveError, PlanConfig, adaptive_spectrum, uniform_spectrum
from .pencil import (ComplexShift, DipoleBlock, PencilError, ResponsePencil, apply_full_shifted,
                     apply_mk, build_pencil, k_inner, pencil_from_mk)
from .reference import dense_cpp_spectrum, dense_structured_eig, lorentzian_spectrum, oscillator_table
from .rom import (ReducedModel, build_and_project_full, build_basis_mk, eval_reduced_tensor,
                  eval_spectrum, moment_match_check, project_mk)
from .solver import SolverConfig, SolveReport, solve_shifted_full, solve_shifted_mk
from .spectrum import FrequencyGrid, SpectrumResult, normalized_difference
from .synth import SynthSpec, generate

__all__ = [
    "AdaptiveError", "ComplexShift", "DipoleBlock", "FrequencyGrid", "PencilError", "PlanConfig",
    "ReducedModel", "ResponsePencil", "SolveReport", "SolverConfig", "SpectrumResult", "SynthSpec",
    "adaptive_spectrum", "apply_full_shifted", "apply_mk", "build_and_project_full",
    "build_basis_mk", "build_pencil", "dense_cpp_spectrum", "dense_structured_eig",
    "eval_reduced_tensor", "eval_spectrum", "generate", "k_inner", "lorentzian_spectrum",
    "moment_match_check", "normalized_difference", "oscillator_table", "pencil_from_mk",
    "project_mk", "solve_shifted_full", "solve_shifted_mk", "uniform_spectrum",
]
