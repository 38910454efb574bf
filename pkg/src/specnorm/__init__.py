"""Exact tools for integer-valued functions on F_2^n with small spectral norm.

The top-level namespace re-exports the objects most callers need; each
stage lives in its own module (``gf2core``, ``spectral``, ``sumset``,
``connectivity``, ``continuity``, ``freiman``, ``decompose``).
"""

from __future__ import annotations

from .decompose import (
    DecomposeConfig,
    Decomposition,
    SignedTerm,
    coset_to_subspaces,
    decompose,
    iteration_step,
    verify_decomposition,
)
from .dyadic import Dyadic
from .errors import BudgetExhausted, DimensionError, SpecnormError, StageError, WitnessFound
from .gf2core import Coset, Subspace, subspace_from_generators
from .spectral import FunctionTable, SpectrumTable, inverse_wht, round_almost_integer, spectral_norm, wht

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "Coset",
    "DecomposeConfig",
    "Decomposition",
    "DimensionError",
    "Dyadic",
    "FunctionTable",
    "SignedTerm",
    "SpecnormError",
    "SpectrumTable",
    "StageError",
    "Subspace",
    "WitnessFound",
    "coset_to_subspaces",
    "decompose",
    "inverse_wht",
    "iteration_step",
    "round_almost_integer",
    "spectral_norm",
    "subspace_from_generators",
    "verify_decomposition",
    "wht",
]
