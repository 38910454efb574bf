"""Seeded generators for test and experiment functions."""

from __future__ import annotations

from typing import Callable, Dict, List, Tuple

import numpy as np

from .decompose import SignedTerm, terms_table
from .dyadic import Dyadic
from .gf2core import Subspace, check_dim, subspace_from_generators
from .spectral import FunctionTable, SpectrumTable, inverse_wht

__all__ = ["GENERATORS", "generate", "random_subspace"]


def random_subspace(rng: np.random.Generator, n: int, dim: int) -> Subspace:
    """Uniform-ish subspace of the given dimension (rejection on rank)."""
    if not 0 <= dim <= n:
        raise ValueError("dim out of range")
    while True:
        gens = [int(x) for x in rng.integers(0, 1 << n, size=dim)] if n else []
        V = subspace_from_generators(gens, n)
        if V.dim == dim:
            return V


def subspace_sum(n: int, rng, L: int = 4, min_dim: int = 0, max_dim=None, M=None):
    """``sum_i s_i 1_{V_i}`` with random signs and dimensions; ground truth in metadata.

    Passing ``M`` instead asks for ``M`` positive terms.  Every Fourier
    coefficient of ``1_V`` is non-negative, so the spectral norm is then
    exactly ``M``.
    """
    if M is not None:
        L = int(M)
    if L < 0:
        raise ValueError("L must be non-negative")
    hi = n if max_dim is None else min(int(max_dim), n)
    terms = []
    for _ in range(L):
        V = random_subspace(rng, n, int(rng.integers(min(min_dim, hi), hi + 1)))
        sign = 1 if M is not None or rng.random() < 0.5 else -1
        terms.append(SignedTerm(sign, V))
    f = FunctionTable.from_ints(n, terms_table(n, terms).tolist())
    return f, terms


def character_sum(n: int, rng, k: int = 1):
    """Sum of ``k`` characters with linearly independent frequencies (``k <= n``)."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    while True:
        rs = [int(x) for x in rng.integers(1, 1 << n, size=k)] if k else []
        if subspace_from_generators(rs, n).dim == k:
            break
    f = FunctionTable.zeros(n)
    for r in rs:
        f = f + FunctionTable.character(n, r)
    return f, {"frequencies": rs}


def sparse_spectrum(n: int, rng, k: int = 4, scale: int = 3):
    """``k`` random frequencies with dyadic coefficients ``c / 2^scale``, ``|c| <= 2^scale``."""
    coeffs = [Dyadic(0)] * (1 << n)
    for r in rng.choice(1 << n, size=min(k, 1 << n), replace=False):
        c = int(rng.integers(-(1 << scale), (1 << scale) + 1))
        coeffs[int(r)] = Dyadic(c, scale)
    return inverse_wht(SpectrumTable.from_values(n, coeffs)), {}


def boolean_random(n: int, rng, density: float = 0.5):
    vals = (rng.random(1 << n) < float(density)).astype(int).tolist()
    return FunctionTable.from_ints(n, vals), {}


GENERATORS: Dict[str, Callable] = {
    "subspace-sum": subspace_sum,
    "character-sum": character_sum,
    "sparse-spectrum": sparse_spectrum,
    "boolean-random": boolean_random,
}


def generate(kind: str, n: int, seed: int, **params) -> Tuple[FunctionTable, dict]:
    """Build a function and its metadata; deterministic in ``(kind, n, seed, params)``."""
    from .formats import term_to_obj

    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    check_dim(n)
    rng = np.random.default_rng(seed)
    f, extra = GENERATORS[kind](n, rng, **params)
    meta = {"generator": kind, "seed": seed, "params": {k: params[k] for k in sorted(params)}}
    if kind == "subspace-sum":
        terms: List[SignedTerm] = extra
        if not np.array_equal(terms_table(n, terms), np.array(f.int_values(), dtype=np.int64)):
            raise AssertionError("ground-truth terms do not reproduce the table")
        meta["terms"] = [term_to_obj(t) for t in terms]
    else:
        meta.update(extra)
    return f, meta
