"""Spectral construction and verification of singular metrics of constant
negative Q-curvature on punctured Euclidean space."""

__version__ = "0.1.0"

from .problem import (  # noqa: E402
    Case,
    ProblemError,
    ProblemSpec,
    RadialPolynomial,
    constants,
    sphere_volume,
    validate,
)
