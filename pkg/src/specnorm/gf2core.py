"""Linear algebra over F_2^n with points stored as int bitsets.

A point is a plain ``int`` in ``[0, 2**n)``; the integer order coincides with
the lexicographic order of the bit strings written most-significant bit
first, so "sorted" always means sorted as ints.  Subspaces keep a canonical
reduced row-echelon basis: the pivot of a row is its highest set bit, no
other row has that bit set, and rows are sorted ascending (so pivots are
strictly increasing).  Two subspaces are equal iff their bases are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, List, Sequence

import numpy as np

from .errors import DimensionError

MAX_DIM = 24

__all__ = [
    "MAX_DIM",
    "Subspace",
    "Coset",
    "check_dim",
    "check_point",
    "dot",
    "subspace_from_generators",
    "zero_subspace",
    "full_space",
    "contains",
    "perp",
    "intersect",
    "subspace_sum",
    "span_with",
    "enumerate_points",
    "cosets",
    "coset_of",
    "all_subspaces",
    "count_subspaces",
    "point_to_str",
]


def check_dim(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DIM:
        raise DimensionError(f"ambient dimension must be in [1, {MAX_DIM}], got {n!r}")
    return int(n)


def check_point(x: int, n: int) -> int:
    x = int(x)
    if x < 0 or x >> n:
        raise DimensionError(f"point {x:#x} does not live in F_2^{n}")
    return x


def dot(r: int, x: int) -> int:
    """The pairing ``r^t x`` over F_2."""
    return (r & x).bit_count() & 1


def point_to_str(x: int, n: int) -> str:
    return format(x, f"0{n}b")


def _reduce(x: int, rows: Sequence[int]) -> int:
    # rows must be fully reduced with distinct highest bits
    for row in reversed(rows):
        if (x >> (row.bit_length() - 1)) & 1:
            x ^= row
    return x


def _rref(gens: Iterable[int]) -> tuple:
    pivots: dict = {}
    for g in gens:
        # eliminate existing pivots from g, highest first
        for p in sorted(pivots, reverse=True):
            if (g >> p) & 1:
                g ^= pivots[p]
        if not g:
            continue
        p = g.bit_length() - 1
        for q, row in list(pivots.items()):
            if (row >> p) & 1:
                pivots[q] = row ^ g
        pivots[p] = g
    return tuple(sorted(pivots.values()))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of F_2^n in canonical RREF form."""

    n: int
    basis: tuple = ()

    def __post_init__(self):
        check_dim(self.n)
        if _rref(self.basis) != tuple(self.basis):
            raise ValueError("basis is not in canonical reduced row-echelon form; "
                             "use subspace_from_generators")
        for b in self.basis:
            check_point(b, self.n)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.n - len(self.basis)

    @property
    def size(self) -> int:
        return 1 << len(self.basis)

    @property
    def pivots(self) -> tuple:
        return tuple(b.bit_length() - 1 for b in self.basis)

    def __contains__(self, x: int) -> bool:
        return _reduce(int(x), self.basis) == 0

    def __le__(self, other: "Subspace") -> bool:
        _same_dim(self, other)
        return all(b in other for b in self.basis)

    def __lt__(self, other: "Subspace") -> bool:
        return self <= other and self.dim < other.dim

    def __iter__(self) -> Iterator[int]:
        return iter(enumerate_points(self))

    def __len__(self) -> int:
        return self.size

    def reduce(self, x: int) -> int:
        """Least element of ``x + V`` (clears every pivot bit)."""
        return _reduce(int(x), self.basis)

    def reduce_array(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`reduce` over an int array."""
        out = np.array(xs, dtype=np.int64, copy=True)
        for row in reversed(self.basis):
            bit = (out >> (row.bit_length() - 1)) & 1
            out ^= bit * row
        return out

    def indicator(self) -> np.ndarray:
        """Boolean membership mask of length ``2**n``."""
        mask = np.zeros(1 << self.n, dtype=bool)
        mask[np.asarray(enumerate_points(self), dtype=np.int64)] = True
        return mask

    def to_json(self) -> dict:
        width = max(1, (self.n + 3) // 4)
        return {"ambient_dim": self.n, "basis": [format(b, f"0{width}x") for b in self.basis]}

    @classmethod
    def from_json(cls, obj: dict) -> "Subspace":
        n = int(obj["ambient_dim"])
        return subspace_from_generators([int(h, 16) for h in obj["basis"]], n)

    def __repr__(self) -> str:
        rows = ",".join(point_to_str(b, self.n) for b in self.basis)
        return f"Subspace(n={self.n}, {{{rows}}})"


@dataclass(frozen=True)
class Coset:
    """``rep + subspace`` with ``rep`` the least element of the coset."""

    rep: int
    subspace: Subspace

    def __contains__(self, x: int) -> bool:
        return self.subspace.reduce(int(x) ^ self.rep) == 0

    def points(self) -> List[int]:
        return sorted(self.rep ^ v for v in enumerate_points(self.subspace))

    def __len__(self) -> int:
        return self.subspace.size


def _same_dim(V: Subspace, W: Subspace) -> None:
    if V.n != W.n:
        raise DimensionError(f"ambient dimensions differ: {V.n} vs {W.n}")


def subspace_from_generators(gens: Iterable[int], n: int) -> Subspace:
    """Span of ``gens`` in canonical form."""
    check_dim(n)
    gens = [check_point(g, n) for g in gens]
    return Subspace(n, _rref(gens))


def zero_subspace(n: int) -> Subspace:
    return Subspace(check_dim(n), ())


def full_space(n: int) -> Subspace:
    return Subspace(check_dim(n), tuple(1 << i for i in range(n)))


def contains(V: Subspace, x: int) -> bool:
    check_point(x, V.n)
    return x in V


def perp(V: Subspace) -> Subspace:
    """``{x : r.x = 0 for all r in V}``."""
    n = V.n
    piv = {b.bit_length() - 1: b for b in V.basis}
    gens = []
    for j in range(n):
        if j in piv:
            continue
        # e_j plus the pivots of rows that have bit j set
        v = 1 << j
        for p, row in piv.items():
            if (row >> j) & 1:
                v |= 1 << p
        gens.append(v)
    return Subspace(n, _rref(gens))


def subspace_sum(V: Subspace, W: Subspace) -> Subspace:
    _same_dim(V, W)
    return Subspace(V.n, _rref(V.basis + W.basis))


def intersect(V: Subspace, W: Subspace) -> Subspace:
    _same_dim(V, W)
    return perp(subspace_sum(perp(V), perp(W)))


def span_with(V: Subspace, x: int) -> Subspace:
    check_point(x, V.n)
    return Subspace(V.n, _rref(V.basis + (x,)))


def enumerate_points(V: Subspace) -> List[int]:
    """All ``2**dim`` elements of ``V``, ascending."""
    pts = [0]
    for b in V.basis:
        pts += [p ^ b for p in pts]
    pts.sort()
    return pts


def coset_of(V: Subspace, x: int) -> Coset:
    check_point(x, V.n)
    return Coset(V.reduce(x), V)


def cosets(n: int, V: Subspace) -> List[Coset]:
    """The ``2**(n - dim V)`` cosets of ``V``, ordered by representative.

    Representatives are exactly the points with every pivot bit cleared.
    """
    if V.n != n:
        raise DimensionError(f"subspace lives in F_2^{V.n}, not F_2^{n}")
    free = [j for j in range(n) if j not in set(V.pivots)]
    reps = [0]
    for j in free:
        reps += [r | (1 << j) for r in reps]
    reps.sort()
    return [Coset(r, V) for r in reps]


def _rref_bases(n: int, d: int) -> Iterator[tuple]:
    # every canonical basis of a d-dimensional subspace
    for pivots in combinations(range(n), d):
        pset = set(pivots)
        # row with pivot p may use the non-pivot bits below p
        free_bits = [[j for j in range(p) if j not in pset] for p in pivots]
        total = sum(len(f) for f in free_bits)
        for fill in product((0, 1), repeat=total):
            rows = []
            pos = 0
            for p, fb in zip(pivots, free_bits):
                row = 1 << p
                for j in fb:
                    if fill[pos]:
                        row |= 1 << j
                    pos += 1
                rows.append(row)
            yield tuple(rows)


def all_subspaces(n: int, dim: int | None = None) -> Iterator[Subspace]:
    """Every subspace of F_2^n (optionally only those of one dimension).

    Ordered by dimension, then pivot pattern, then fill bits.
    """
    check_dim(n)
    dims = range(n + 1) if dim is None else [dim]
    for d in dims:
        for rows in _rref_bases(n, d):
            yield Subspace(n, rows)


def count_subspaces(n: int, dim: int | None = None) -> int:
    """Gaussian binomial count, summed over dimensions if ``dim`` is None."""
    def gauss(n, k):
        num = den = 1
        for i in range(k):
            num *= (1 << (n - i)) - 1
            den *= (1 << (i + 1)) - 1
        return num // den
    if dim is not None:
        return gauss(n, dim)
    return sum(gauss(n, k) for k in range(n + 1))
