"""Least-squares engine and the concrete model fits."""

from .models import (
    AmbiguousFitError,
    DoubletFit,
    FitError,
    SeparationFit,
    SidebandFitConfig,
    fit_lorentzian_doublet,
    fit_separation,
    fit_sideband_spectrum,
    format_uncertainty,
    sideband_model_rate,
)
from .solver import (
    MODELS,
    FitProblem,
    FitResult,
    forward_jacobian,
    jacobian,
    least_squares_solve,
    levenberg_marquardt,
    register_model,
)

__all__ = [
    "AmbiguousFitError", "DoubletFit", "FitError", "SeparationFit", "SidebandFitConfig",
    "fit_lorentzian_doublet", "fit_separation", "fit_sideband_spectrum", "format_uncertainty",
    "sideband_model_rate", "MODELS", "FitProblem", "FitResult", "forward_jacobian", "jacobian",
    "least_squares_solve", "levenberg_marquardt", "register_model",
]
