"""Simulation of backaction-evading measurements on a quantum-mechanics-free
subsystem of two mechanical oscillators coupled to microwave cavities."""

__version__ = "0.1.0"

from .errors import (ConfigError, IllConditionedError, InstabilityError, PeaksOverlapWarning,
                     PeaksUnresolvedError, QMFSError, RegimeWarning, TransductionError)
from .model import (CavityMode, MechanicalMode, PumpTone, QuadratureSelector, SystemConfig,
                    ToneSet, collective, generalized, load_preset, paper_default_config,
                    parse_quadrature, single, validate)
from .dynamics import assemble_drift, output_routing, phases_for_quadrature
from .steadystate import (CovarianceMatrix, duan_quantity, quadrature_variance, solve_lyapunov,
                          steady_state, sweep)
from .spectra import (SpectrumTrace, calibrate_gain, effective_occupation, fit_two_lorentzians,
                      integrated_variance, output_spectrum)

__all__ = [
    "__version__",
    "CavityMode", "MechanicalMode", "PumpTone", "QuadratureSelector", "SystemConfig", "ToneSet",
    "collective", "generalized", "load_preset", "paper_default_config", "parse_quadrature",
    "single", "validate",
    "assemble_drift", "output_routing", "phases_for_quadrature",
    "CovarianceMatrix", "duan_quantity", "quadrature_variance", "solve_lyapunov",
    "steady_state", "sweep",
    "SpectrumTrace", "calibrate_gain", "effective_occupation", "fit_two_lorentzians",
    "integrated_variance", "output_spectrum",
    "ConfigError", "IllConditionedError", "InstabilityError", "PeaksOverlapWarning",
    "PeaksUnresolvedError", "QMFSError", "RegimeWarning", "TransductionError",
]
