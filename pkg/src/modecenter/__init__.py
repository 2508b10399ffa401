"""Center-of-symmetry estimation by kernel mode estimation with tuned bump kernels."""

from .errors import (
    ConfigurationError,
    DegenerateDensityError,
    DomainError,
    ModeCenterError,
    NumericError,
)
from .estimators import (
    IrwConfig,
    TrimConfig,
    andrews_sine,
    bootstrap_alpha,
    irw,
    kme_fixed,
    kme_tuned,
    sample_mean,
    sample_median,
    trimmed_mean,
    tukey_biweight,
    winsorized_mean,
)
from .kernels import KernelShape, normalize
from .pilot import PilotConfig, build_pilot
from .tuner import TunerConfig, madn, optimize_params
from .variance import asymptotic_variance_bump, asymptotic_variance_general, variance_curve

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateDensityError",
    "DomainError",
    "ModeCenterError",
    "NumericError",
    "IrwConfig",
    "TrimConfig",
    "andrews_sine",
    "bootstrap_alpha",
    "irw",
    "kme_fixed",
    "kme_tuned",
    "sample_mean",
    "sample_median",
    "trimmed_mean",
    "tukey_biweight",
    "winsorized_mean",
    "KernelShape",
    "normalize",
    "PilotConfig",
    "build_pilot",
    "TunerConfig",
    "madn",
    "optimize_params",
    "asymptotic_variance_bump",
    "asymptotic_variance_general",
    "variance_curve",
]
