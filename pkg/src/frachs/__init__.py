"""Numerical toolkit for the fractional Hardy-Schrodinger operator
(-Delta)^(alpha/2) - gamma/|x|^alpha on radial domains.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NumericsError
from .specfun import (
    ProblemParams,
    beta_pm,
    c_n_alpha,
    crit_exponent,
    gamma_crit,
    hardy_constant,
    log_gamma,
    psi,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericsError",
    "ProblemParams",
    "beta_pm",
    "c_n_alpha",
    "crit_exponent",
    "gamma_crit",
    "hardy_constant",
    "log_gamma",
    "psi",
    "__version__",
]
