"""Additive combinatorics in F_2^n: sumsets, doubling, energy, BSG, covering.

Sets are carried as sorted tuples of int points; the heavy lifting is done on
boolean masks of length ``2**n`` with an int64 Walsh-Hadamard convolution,
which is exact as long as ``|A| * |B| * 2**n < 2**63``.

All convolutions in this module use *counting* measure; the probability
measure averages live in :mod:`specnorm.spectral` and the two are never mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, List, Sequence

import numpy as np

from .dyadic import Dyadic
from .errors import BudgetExhausted, DimensionError, StageError
from .gf2core import check_dim, check_point, subspace_from_generators
from .spectral import FunctionTable, fwht

__all__ = [
    "PointSet",
    "DoublingReport",
    "EnergyReport",
    "BSGConfig",
    "sumset",
    "iterated_sumset",
    "doubling",
    "doubling_report",
    "is_coset",
    "additive_energy",
    "representation_counts",
    "iterated_convolution",
    "iterated_convolution_at",
    "bsg_extract",
    "chang_cover",
    "mask_of",
    "sumset_mask",
]


@dataclass(frozen=True)
class PointSet:
    """Sorted, deduplicated set of points of F_2^n."""

    n: int
    elements: tuple = ()

    def __post_init__(self):
        check_dim(self.n)
        elems = tuple(sorted({check_point(x, self.n) for x in self.elements}))
        object.__setattr__(self, "elements", elems)

    @classmethod
    def from_mask(cls, n: int, mask: np.ndarray) -> "PointSet":
        return cls(n, tuple(int(x) for x in np.flatnonzero(mask)))

    def mask(self) -> np.ndarray:
        return mask_of(self.n, self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        i = np.searchsorted(self.elements, x)
        return i < len(self.elements) and self.elements[i] == x

    def translate(self, z: int) -> "PointSet":
        return PointSet(self.n, tuple(x ^ z for x in self.elements))

    def issubset(self, other: "PointSet") -> bool:
        return set(self.elements) <= set(other.elements)


def mask_of(n: int, points: Iterable[int]) -> np.ndarray:
    m = np.zeros(1 << n, dtype=bool)
    pts = np.fromiter(points, dtype=np.int64)
    m[pts] = True
    return m


def _conv_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Counting convolution ``#{(x, y) in a x b : x + y = s}`` of two 0/1 masks."""
    N = a.shape[0]
    if N <= 1 << 20:
        prod = fwht(a.astype(np.int64)) * fwht(b.astype(np.int64))
        return fwht(prod) // N
    # large ambient space: loop over the smaller set instead
    if a.sum() > b.sum():
        a, b = b, a
    idx = np.arange(N, dtype=np.int64)
    out = np.zeros(N, dtype=np.int64)
    for x in np.flatnonzero(a):
        out += b[idx ^ x]
    return out


def sumset_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if not a.any() or not b.any():
        return np.zeros_like(a, dtype=bool)
    return _conv_counts(a, b) > 0


def _same(A: PointSet, B: PointSet) -> None:
    if A.n != B.n:
        raise DimensionError(f"ambient dimensions differ: {A.n} vs {B.n}")


def sumset(A: PointSet, B: PointSet) -> PointSet:
    _same(A, B)
    return PointSet.from_mask(A.n, sumset_mask(A.mask(), B.mask()))


def iterated_sumset(A: PointSet, k: int) -> PointSet:
    """``kA = A + ... + A`` (k-fold)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return PointSet.from_mask(A.n, _iterated_mask(A.mask(), k))


def _iterated_mask(a: np.ndarray, k: int) -> np.ndarray:
    # binary powering on sumsets
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else sumset_mask(result, base)
        k >>= 1
        if k:
            base = sumset_mask(base, base)
    return result


def doubling(A: PointSet) -> Fraction:
    if not len(A):
        raise ValueError("doubling of the empty set is undefined")
    return Fraction(int(sumset_mask(A.mask(), A.mask()).sum()), len(A))


@dataclass(frozen=True)
class DoublingReport:
    set: PointSet
    sumset_size: int
    doubling: Fraction


def doubling_report(A: PointSet) -> DoublingReport:
    size = int(sumset_mask(A.mask(), A.mask()).sum())
    return DoublingReport(A, size, Fraction(size, len(A)))


def is_coset(A: PointSet) -> bool:
    """True iff ``A`` is a coset of a subspace."""
    if not len(A):
        return False
    a0 = A.elements[0]
    V = subspace_from_generators([a ^ a0 for a in A.elements], A.n)
    return V.size == len(A)


@dataclass(frozen=True)
class EnergyReport:
    set: PointSet
    energy: int

    @property
    def quadruple_bound(self) -> int:
        return len(self.set) ** 3


def representation_counts(A: PointSet) -> np.ndarray:
    """``r(s) = #{(a, b) in A^2 : a + b = s}`` as an int64 array."""
    m = A.mask()
    return _conv_counts(m, m)


def additive_energy(A: PointSet) -> EnergyReport:
    """Number of quadruples with ``a + b = c + d``, via the sum multiset."""
    if not len(A):
        raise ValueError("energy of the empty set is undefined")
    r = representation_counts(A)
    return EnergyReport(A, int(sum(int(v) * int(v) for v in r[r > 0])))


def iterated_convolution(f: FunctionTable, r: int) -> FunctionTable:
    """``f^(r)(x) = sum_{x_1 + ... + x_r = x} f(x_1)...f(x_r)``, ``f^(0) = 1_{0}``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    W = fwht(f.nums)
    return FunctionTable(f.n, fwht(W ** r), f.n + f.shift * r)


def iterated_convolution_at(f: FunctionTable, r: int, x: int) -> Dyadic:
    if r < 0:
        raise ValueError("r must be >= 0")
    check_point(x, f.n)
    W = fwht(f.nums)
    total = 0
    for s, w in enumerate(W):
        term = int(w) ** r
        total += -term if (s & x).bit_count() & 1 else term
    return Dyadic(total, f.n + f.shift * r)


# --- Balog-Szemeredi-Gowers ----------------------------------------------


@dataclass(frozen=True)
class BSGConfig:
    """Explicit constants for the extraction.

    The returned subset must satisfy ``|A| >= c1 |T|`` and ``doubling <= c2``
    with ``c1 = density_scale * frac**density_power`` and
    ``c2 = doubling_scale * frac**-doubling_power`` where ``frac`` is the
    energy fraction ``E(T) / |T|^3``.
    """

    density_scale: Fraction = Fraction(1, 2)
    density_power: int = 1
    doubling_scale: Fraction = Fraction(2)
    doubling_power: int = 1
    max_candidates: int = 32
    exhaustive_limit: int = 20
    exhaustive_budget: int = 200_000

    def c1(self, frac: Fraction) -> Fraction:
        return Fraction(self.density_scale) * Fraction(frac) ** self.density_power

    def c2(self, frac: Fraction) -> Fraction:
        return Fraction(self.doubling_scale) / Fraction(frac) ** self.doubling_power


def _candidate_masks(T: PointSet, frac: Fraction, cfg: BSGConfig) -> List[np.ndarray]:
    n = T.n
    N = 1 << n
    t = T.mask()
    idx = np.arange(N, dtype=np.int64)
    r = representation_counts(T)
    # popular sums: represented at least frac*|T|/2 times
    thresh = frac * len(T) / 2
    popular = np.array([int(v) >= thresh for v in r]) & (r > 0)
    cands = [t]

    order = sorted(np.flatnonzero(popular), key=lambda s: (-int(r[s]), int(s)))
    for s in order[: cfg.max_candidates]:
        if s:
            cands.append(t & t[idx ^ s])

    elems = np.array(T.elements, dtype=np.int64)
    degree = {int(x): int((popular[idx ^ x] & t).sum()) for x in elems}
    hubs = sorted(degree, key=lambda x: (-degree[x], x))[: max(1, cfg.max_candidates // 4)]
    for x in hubs:
        nbhd = t & popular[idx ^ x]
        if not nbhd.any():
            continue
        cands.append(nbhd)
        members = np.flatnonzero(nbhd)
        if len(members) > 512:
            continue
        # keep vertices joined to at least half of the neighbourhood
        keep = [a for a in members if (popular[idx[members] ^ a]).sum() * 2 >= len(members)]
        if keep:
            cands.append(mask_of(n, keep))
    return cands


def _pick(best, mask: np.ndarray, n: int, c1_size: Fraction, c2: Fraction):
    size = int(mask.sum())
    if size == 0 or size < c1_size:
        return best
    K = Fraction(int(sumset_mask(mask, mask).sum()), size)
    if K > c2:
        return best
    elems = tuple(int(x) for x in np.flatnonzero(mask))
    key = (-size, K, elems)
    if best is None or key < best[0]:
        return (key, elems, K)
    return best


def bsg_extract(T: PointSet, energy_fraction, config: BSGConfig | None = None) -> DoublingReport:
    """Find ``A subset T`` of size ``>= c1 |T|`` and doubling ``<= c2``.

    Candidates come from the popular-sum graph (whole set, popular-sum
    slices ``T & (T + s)``, hub neighbourhoods and their dense cores); the
    largest qualifying one wins, ties to smaller doubling then lexicographic.
    Small sets fall back to exhaustive search when no candidate qualifies.
    """
    cfg = config or BSGConfig()
    frac = Fraction(energy_fraction)
    if not len(T):
        raise ValueError("T must be non-empty")
    E = additive_energy(T).energy
    if E < frac * len(T) ** 3:
        raise ValueError(f"energy {E} is below energy_fraction * |T|^3")
    c1_size, c2 = cfg.c1(frac) * len(T), cfg.c2(frac)

    best = None
    for m in _candidate_masks(T, frac, cfg):
        best = _pick(best, m, T.n, c1_size, c2)
    if best is None and len(T) <= cfg.exhaustive_limit:
        best = _exhaustive_small_doubling(T, c1_size, c2, cfg.exhaustive_budget)
    if best is None:
        raise StageError(
            "bsg",
            f"no subset with |A| >= {float(c1_size):.3g} and doubling <= {c2} "
            f"(|T|={len(T)}, energy fraction {frac}); constants too tight",
        )
    A = PointSet(T.n, best[1])
    report = doubling_report(A)
    assert report.doubling == best[2]
    return report


def _exhaustive_small_doubling(T: PointSet, min_size, max_doubling, budget: int):
    elems = T.elements
    lo = max(1, math.ceil(min_size))
    evaluated = 0
    for size in range(len(elems), lo - 1, -1):
        best = None
        for sub in combinations(elems, size):
            evaluated += 1
            if evaluated > budget:
                raise BudgetExhausted("bsg", f"exhaustive search exceeded {budget} subsets")
            K = Fraction(len({a ^ b for a in sub for b in sub}), size)
            if K <= max_doubling and (best is None or (K, sub) < (best[2], best[1])):
                best = ((-size, K, sub), sub, K)
        if best is not None:
            return best
    return None


def largest_small_doubling_subset(R: PointSet, max_doubling, budget: int = 2_000_000) -> DoublingReport:
    """Exhaustive oracle: the largest subset of ``R`` with doubling ``<= max_doubling``.

    Ties go to the smaller doubling, then lexicographic order.
    """
    best = _exhaustive_small_doubling(R, 1, Fraction(max_doubling), budget)
    if best is None:
        raise StageError("bsg", "no subset meets the doubling bound")
    return doubling_report(PointSet(R.n, best[1]))


# --- Chang covering --------------------------------------------------------


def chang_cover(X: PointSet, budget: int) -> List[int]:
    """Greedy ``T subset X`` with ``3X subset span(T) + 2X``.

    Repeatedly take the least uncovered ``s`` in ``3X`` and the least
    ``x in X`` with ``s + x in 2X``; such an ``x`` lies outside ``span(T)``,
    so every step raises the dimension of ``span(T)``.
    """
    if not len(X):
        raise ValueError("X must be non-empty")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = X.n
    idx = np.arange(1 << n, dtype=np.int64)
    x_mask = X.mask()
    two = sumset_mask(x_mask, x_mask)
    three = sumset_mask(two, x_mask)
    covered = two.copy()
    T: List[int] = []
    while True:
        missing = np.flatnonzero(three & ~covered)
        if not len(missing):
            break
        s = int(missing[0])
        x = next(int(a) for a in X.elements if two[s ^ a])
        if len(T) >= budget:
            raise BudgetExhausted("chang_cover", f"covering needs more than {budget} points",
                                  trace=list(T))
        T.append(x)
        covered = covered | covered[idx ^ x]
    # exhaustive postcondition check
    span_pts = np.array(list(subspace_from_generators(T, n)), dtype=np.int64)
    cover = np.zeros(1 << n, dtype=bool)
    for v in span_pts:
        cover |= two[idx ^ v]
    if (three & ~cover).any():
        raise StageError("chang_cover", "postcondition 3X <= span(T) + 2X failed")
    return T
