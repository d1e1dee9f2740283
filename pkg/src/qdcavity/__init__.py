"""Lineshapes of a quantum emitter coupled to a lossy cavity mode.

Closed-form weak-drive spectra (plain and with emitter broadening), global
fits of detuning series, resonance-fluorescence saturation analysis and
brute-force reference solvers for checking all of them.
"""
from .broadening import BroadeningSpec, Mechanism, decompose_m2, spectrum_m2
from .errors import (
    DomainError,
    EmptyDataset,
    ExceptionalPoint,
    InconsistentFit,
    InsufficientData,
    NotConverged,
    ParseError,
    QDCavityError,
    SingularJacobian,
)
from .fitting import (
    FitConfig,
    FitParams,
    FitResult,
    SpectrumDataset,
    Sweep,
    fit_global,
    generate_synthetic,
    subtract_background,
)
from .model import (
    ModelParams,
    PoleDecomposition,
    TuningPoint,
    cavity_population_m1,
    cooperativity,
    coupling_estimate,
    decompose_m1,
    lifetime_to_linewidth,
    q_to_kappa,
    rabi_poles,
)
from .rf import RfParams, RfPowerSeries, fit_spectral_wandering, fit_three_level

__version__ = "0.1.0"

__all__ = [
    "BroadeningSpec", "DomainError", "EmptyDataset", "ExceptionalPoint",
    "FitConfig", "FitParams", "FitResult", "InconsistentFit", "InsufficientData",
    "Mechanism", "ModelParams", "NotConverged", "ParseError", "PoleDecomposition",
    "QDCavityError", "RfParams", "RfPowerSeries", "SingularJacobian", "SpectrumDataset",
    "Sweep", "TuningPoint", "cavity_population_m1", "cooperativity", "coupling_estimate",
    "decompose_m1", "decompose_m2", "fit_global", "fit_spectral_wandering",
    "fit_three_level", "generate_synthetic", "lifetime_to_linewidth", "q_to_kappa",
    "rabi_poles", "spectrum_m2", "subtract_background",
]
