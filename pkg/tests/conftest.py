from __future__ import annotations

import random

import pytest
from hypothesis import strategies as st

from specnorm.gf2core import subspace_from_generators


def brute_span(gens, n):
    """Closure of ``gens`` under addition, as a sorted list."""
    pts = {0}
    for g in gens:
        pts |= {p ^ g for p in pts}
    return sorted(pts)


@st.composite
def subspaces(draw, n=None, max_n=6):
    n = draw(st.integers(1, max_n)) if n is None else n
    gens = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=n + 1))
    return subspace_from_generators(gens, n)


def random_subspace(rng: random.Random, n: int, dim: int | None = None):
    if dim is None:
        dim = rng.randint(0, n)
    while True:
        V = subspace_from_generators([rng.randrange(1 << n) for _ in range(dim)], n)
        if V.dim == dim:
            return V


@pytest.fixture
def rng():
    return random.Random(20240611)
