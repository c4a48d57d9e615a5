"""Liouvillian spectra, relaxation times and atomic correlations for two
two-level atoms in a driven leaky cavity."""

from . import dynamics, linalg, models, observables, operators, spectra
from .models import ModelParams
from .operators import SystemSpace, atomic_space, make_space

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "SystemSpace",
    "atomic_space",
    "dynamics",
    "linalg",
    "make_space",
    "models",
    "observables",
    "operators",
    "spectra",
]
