"""Phase-decoherence experiments for the periodic nonlinear Schroedinger equation."""
__version__ = "0.1.0"

from .closed_form import (
    NlsParams,
    TwoModeData,
    approx_two_mode,
    corrected_two_mode,
    cubic_correction,
    error_structure,
    plane_wave,
    quintic_error_structure,
    two_mode_correction,
)
from .errors import (
    AccuracyError,
    AliasingError,
    BlowupError,
    ConfigError,
    ConsistencyError,
    DivergenceError,
    InfeasibleError,
    NearResonanceError,
    NlsLabError,
)
from .mode_ode import ModeSystem, fnls_rhs, integrate
from .solver import SolverConfig, evolve, residual
from .spectral import ScalingMap, SpectralField, Trajectory, rescale_field, rescale_up, sobolev_norm

__all__ = [
    "AccuracyError",
    "AliasingError",
    "BlowupError",
    "ConfigError",
    "ConsistencyError",
    "DivergenceError",
    "InfeasibleError",
    "ModeSystem",
    "NearResonanceError",
    "NlsLabError",
    "NlsParams",
    "ScalingMap",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "TwoModeData",
    "approx_two_mode",
    "corrected_two_mode",
    "cubic_correction",
    "error_structure",
    "evolve",
    "fnls_rhs",
    "integrate",
    "plane_wave",
    "quintic_error_structure",
    "rescale_field",
    "rescale_up",
    "residual",
    "sobolev_norm",
    "two_mode_correction",
]
