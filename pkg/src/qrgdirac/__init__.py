"""Geometric Dirac operators and spectral triples from quantum Riemannian geometries.

Modules: algebra (coordinate algebras), calculus (differential calculi),
geometry (metrics, connections, curvature), spinor (spinor bundles, Dirac
operators, Hilbert-space checks), solver (multistart least squares and
continuation), presets (named configurations), cli (command line).
"""
from .errors import (ConfigurationError, DegenerateMetricError, NoPhiError, PreconditionError,
                     PresetMismatch)

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DegenerateMetricError", "NoPhiError", "PreconditionError", "PresetMismatch",
           "__version__"]
