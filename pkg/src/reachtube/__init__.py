"""Backward reachable tubes on grids and neural-operator surrogates.

The package has two halves.  The first solves a Hamilton-Jacobi variational
inequality with a monotone Lax-Friedrichs scheme to produce converged value
functions whose zero sublevel set is the backward reachable tube.  The second
trains Fourier and Galerkin-attention neural operators, on a small self
contained autodiff engine, to map initial value functions directly to the
converged ones.
"""

from __future__ import annotations

from .grid import Domain, ValueGrid
from .dynamics import Air3DSpec, Dubins4DSpec, Scalar1DSpec, TranslationSpec
from .hji import SolverConfig, SolveResult, solve

__all__ = [
    "Domain",
    "ValueGrid",
    "Air3DSpec",
    "Dubins4DSpec",
    "Scalar1DSpec",
    "TranslationSpec",
    "SolverConfig",
    "SolveResult",
    "solve",
]

__version__ = "0.1.0"
