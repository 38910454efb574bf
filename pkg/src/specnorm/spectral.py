"""Exact Fourier analysis on F_2^n.

Tables store a numpy object array of Python-int numerators together with one
shared power-of-two denominator, so every value is ``nums[x] / 2**shift``.
With the normalization ``coeffs[r] = 2**-n * sum_x f(x) (-1)^(r.x)`` the
transform, its inverse, subspace averaging and rounding never leave the
dyadic rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List

import numpy as np

from .dyadic import Dyadic, as_dyadic, as_fraction
from .errors import DimensionError
from .gf2core import Coset, Subspace, check_dim, check_point

__all__ = [
    "FunctionTable",
    "SpectrumTable",
    "AlmostIntegerView",
    "fwht",
    "wht",
    "inverse_wht",
    "spectral_norm",
    "spec_set",
    "convolve_subspace",
    "round_almost_integer",
    "lp_gap_on_coset",
    "coset_power_sums",
]


def _obj(values) -> np.ndarray:
    vals = [int(v) for v in values]
    arr = np.empty(len(vals), dtype=object)
    arr[:] = vals
    return arr


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly, ``out[r] = sum_x a[x] (-1)^(r.x)``.

    Works for int64 and object arrays alike; returns a new array.
    """
    a = np.asarray(a)
    N = a.shape[0]
    if N & (N - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < N:
        blk = a.reshape(-1, 2, h)
        x, y = blk[:, 0, :], blk[:, 1, :]
        a = np.stack((x + y, x - y), axis=1).reshape(-1)
        h <<= 1
    return a.copy() if N == 1 else a


def _trailing_zeros_of_all(nums: np.ndarray) -> int | None:
    acc = 0
    for v in nums:
        acc |= int(v)
        if acc & 1:
            return 0
    if acc == 0:
        return None
    return (acc & -acc).bit_length() - 1


class _DyadicTable:
    """Dense table of ``2**n`` dyadic rationals with a shared denominator."""

    __slots__ = ("n", "nums", "shift")

    def __init__(self, n: int, nums, shift: int = 0):
        n = check_dim(n)
        nums = nums if isinstance(nums, np.ndarray) and nums.dtype == object else _obj(nums)
        if len(nums) != 1 << n:
            raise DimensionError(f"table for F_2^{n} needs {1 << n} entries, got {len(nums)}")
        if shift < 0:
            nums = nums * (1 << -shift)
            shift = 0
        if shift:
            tz = _trailing_zeros_of_all(nums)
            if tz is None:
                shift = 0
            elif tz:
                k = min(tz, shift)
                nums = nums // (1 << k)
                shift -= k
        nums.flags.writeable = False
        self.n = n
        self.nums = nums
        self.shift = shift

    # construction ---------------------------------------------------------

    @classmethod
    def from_values(cls, n: int, values: Iterable) -> "_DyadicTable":
        vals = [as_dyadic(v) for v in values]
        k = max((v.log2_denominator for v in vals), default=0)
        return cls(n, _obj(v.numerator << (k - v.log2_denominator) for v in vals), k)

    @classmethod
    def from_ints(cls, n: int, values: Iterable[int]) -> "_DyadicTable":
        return cls(n, _obj(values), 0)

    @classmethod
    def zeros(cls, n: int) -> "_DyadicTable":
        return cls(n, _obj([0] * (1 << check_dim(n))), 0)

    # access ---------------------------------------------------------------

    def __len__(self) -> int:
        return 1 << self.n

    def __getitem__(self, x: int) -> Dyadic:
        return Dyadic(self.nums[x], self.shift)

    def values(self) -> List[Dyadic]:
        return [Dyadic(v, self.shift) for v in self.nums]

    def fractions(self) -> List[Fraction]:
        den = 1 << self.shift
        return [Fraction(int(v), den) for v in self.nums]

    def is_integer(self) -> bool:
        return self.shift == 0

    def int_values(self) -> List[int]:
        if self.shift:
            raise ValueError("table is not integer-valued")
        return [int(v) for v in self.nums]

    def support(self) -> List[int]:
        return [x for x, v in enumerate(self.nums) if v]

    def max_abs(self) -> Dyadic:
        return Dyadic(max((abs(int(v)) for v in self.nums), default=0), self.shift)

    def is_zero(self) -> bool:
        return not any(self.nums)

    # arithmetic -----------------------------------------------------------

    def _check(self, other) -> None:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.n != self.n:
            raise DimensionError(f"ambient dimensions differ: {self.n} vs {other.n}")

    def _aligned(self, other):
        k = max(self.shift, other.shift)
        a = self.nums * (1 << (k - self.shift)) if k > self.shift else self.nums
        b = other.nums * (1 << (k - other.shift)) if k > other.shift else other.nums
        return a, b, k

    def __add__(self, other):
        self._check(other)
        a, b, k = self._aligned(other)
        return type(self)(self.n, a + b, k)

    def __sub__(self, other):
        self._check(other)
        a, b, k = self._aligned(other)
        return type(self)(self.n, a - b, k)

    def __neg__(self):
        return type(self)(self.n, -self.nums, self.shift)

    def scale(self, c) -> "_DyadicTable":
        c = as_dyadic(c)
        return type(self)(self.n, self.nums * c.numerator, self.shift + c.log2_denominator)

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (self.n == other.n and self.shift == other.shift
                and all(int(a) == int(b) for a, b in zip(self.nums, other.nums)))

    def __hash__(self):
        return hash((self.n, self.shift, tuple(int(v) for v in self.nums)))

    def __repr__(self) -> str:
        head = ", ".join(str(v) for v in self.values()[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"{type(self).__name__}(n={self.n}, [{head}{more}])"


class FunctionTable(_DyadicTable):
    """A function ``F_2^n -> Q_2`` stored densely, indexed by point."""

    __slots__ = ()

    @classmethod
    def indicator(cls, n: int, points: Iterable[int]) -> "FunctionTable":
        vals = [0] * (1 << check_dim(n))
        for x in points:
            vals[check_point(x, n)] = 1
        return cls.from_ints(n, vals)

    @classmethod
    def subspace_indicator(cls, V: Subspace) -> "FunctionTable":
        return cls.indicator(V.n, V)

    @classmethod
    def coset_indicator(cls, W: Coset) -> "FunctionTable":
        return cls.indicator(W.subspace.n, W.points())

    @classmethod
    def character(cls, n: int, r: int) -> "FunctionTable":
        check_point(r, check_dim(n))
        return cls.from_ints(n, [1 - 2 * ((r & x).bit_count() & 1) for x in range(1 << n)])

    def translate(self, z: int) -> "FunctionTable":
        """``x -> f(x + z)``."""
        check_point(z, self.n)
        idx = np.arange(1 << self.n, dtype=np.int64) ^ z
        return FunctionTable(self.n, self.nums[idx], self.shift)

    def mean(self) -> Dyadic:
        return Dyadic(sum(int(v) for v in self.nums), self.shift + self.n)


class SpectrumTable(_DyadicTable):
    """Fourier coefficients ``f^(r)``, indexed by frequency ``r``."""

    __slots__ = ()

    @property
    def coeffs(self) -> List[Dyadic]:
        return self.values()


@dataclass(frozen=True)
class AlmostIntegerView:
    """Nearest-integer rounding ``f_Z`` with its exact sup-distance.

    ``unique`` is False once ``epsilon >= 1/2``: the rounding is then only one
    of several admissible choices and callers must not rely on it.
    """

    f_Z: FunctionTable
    epsilon: Dyadic

    @property
    def unique(self) -> bool:
        return self.epsilon < Fraction(1, 2)


def wht(f: FunctionTable) -> SpectrumTable:
    return SpectrumTable(f.n, fwht(f.nums), f.shift + f.n)


def inverse_wht(F: SpectrumTable) -> FunctionTable:
    return FunctionTable(F.n, fwht(F.nums), F.shift)


def spectral_norm(F: SpectrumTable) -> Dyadic:
    """``sum_r |F[r]|``."""
    return Dyadic(sum(abs(int(v)) for v in F.nums), F.shift)


def spec_set(F: SpectrumTable, gamma, reference) -> List[int]:
    """Frequencies with ``|F[r]| >= gamma * reference``, ascending."""
    t = as_fraction(gamma) * as_fraction(reference)
    if t <= 0:
        raise ValueError("gamma and reference must be positive")
    a, b = t.numerator, t.denominator
    lhs_scale, rhs = b, a << F.shift
    return [r for r, v in enumerate(F.nums) if abs(int(v)) * lhs_scale >= rhs]


def convolve_subspace(f: FunctionTable, V: Subspace) -> FunctionTable:
    """``(f * mu_V)(x)``: the average of ``f`` over ``x + V``.

    Averaging along one basis vector at a time keeps this exact and
    ``O(dim V * 2**n)``.
    """
    if V.n != f.n:
        raise DimensionError(f"subspace lives in F_2^{V.n}, table in F_2^{f.n}")
    idx = np.arange(1 << f.n, dtype=np.int64)
    nums = f.nums
    for b in V.basis:
        nums = nums + nums[idx ^ b]
    return FunctionTable(f.n, nums, f.shift + V.dim)


def round_almost_integer(f: FunctionTable) -> AlmostIntegerView:
    """Round to the nearest integer (ties to even) and measure the distance."""
    s = f.shift
    if s == 0:
        return AlmostIntegerView(f, Dyadic(0))
    half = 1 << (s - 1)
    rounded = []
    worst = 0
    for v in f.nums:
        v = int(v)
        q, rem = v >> s, v & ((1 << s) - 1)
        if rem > half or (rem == half and q & 1):
            q += 1
        rounded.append(q)
        worst = max(worst, abs(v - (q << s)))
    return AlmostIntegerView(FunctionTable.from_ints(f.n, rounded), Dyadic(worst, s))


def _check_even_p(p) -> int:
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 2 or p % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p!r}")
    return int(p)


def lp_gap_on_coset(f: FunctionTable, g: FunctionTable, p: int, W: Coset) -> Dyadic:
    """``E_{x in W} (f - g)(x)**p`` -- the p-th power of the L_p(mu_W) distance."""
    p = _check_even_p(p)
    if W.subspace.n != f.n:
        raise DimensionError("coset and tables live in different ambient spaces")
    d = f - g
    total = sum(int(d.nums[x]) ** p for x in W.points())
    return Dyadic(total, d.shift * p + W.subspace.dim)


def coset_power_sums(h: FunctionTable, U: Subspace, p: int):
    """Per-coset p-th power means ``E_{x in W} h(x)**p`` for every coset of ``U``.

    Returns ``(reps, sums, log2_den)`` with ``reps`` ascending; the p-th
    power mean on coset ``W`` is ``sums[i] / 2**log2_den``.
    """
    p = _check_even_p(p)
    if U.n != h.n:
        raise DimensionError("subspace and table live in different ambient spaces")
    reps = U.reduce_array(np.arange(1 << h.n, dtype=np.int64))
    uniq, inv = np.unique(reps, return_inverse=True)
    sums = np.zeros(len(uniq), dtype=object)
    sums[:] = 0
    np.add.at(sums, inv, h.nums ** p)
    return [int(r) for r in uniq], [int(s) for s in sums], h.shift * p + U.dim
