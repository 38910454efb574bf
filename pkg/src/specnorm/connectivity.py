"""From small spectral norm to a small-doubling subset of ``supp f_Z``.

The route: look for an arithmetic-connectivity witness (a tuple from the
support whose odd subset sums all avoid the support), and when none exists
pick the odd convolution power with the largest normalized mass on the
support, then hand the support to BSG.  A Chebyshev pairing harness
evaluates the quantities that rule such witnesses out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dyadic import Dyadic, as_dyadic
from .errors import StageError, WitnessFound
from .spectral import FunctionTable, fwht, round_almost_integer, spectral_norm, wht
from .sumset import (
    BSGConfig,
    PointSet,
    additive_energy,
    bsg_extract,
    doubling_report,
    iterated_convolution,
    largest_small_doubling_subset,
)

__all__ = [
    "ChebyshevPoly",
    "ConnectivityParams",
    "ConnectivityConfig",
    "SmallDoublingCertificate",
    "PairingDiagnostics",
    "chebyshev_coeffs",
    "chebyshev_full",
    "connectivity_witness_search",
    "is_witness",
    "pairing_bound_check",
    "energy_averaging",
    "extract_small_doubling",
]

EXHAUSTIVE_LIMIT = 10 ** 6


# --- Chebyshev polynomials -------------------------------------------------


def chebyshev_full(k: int) -> List[int]:
    """All coefficients of ``T_k`` (index = degree) from ``T_{j+1} = 2x T_j - T_{j-1}``."""
    prev, cur = [1], [0, 1]
    if k == 0:
        return prev
    for _ in range(k - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class ChebyshevPoly:
    """``T_{2l+1}`` stored by its odd coefficients ``a_1, a_3, ..., a_{2l+1}``."""

    l: int
    odd_coeffs: tuple

    @property
    def degree(self) -> int:
        return 2 * self.l + 1

    def __call__(self, x):
        x = Fraction(x)
        x2 = x * x
        total, power = Fraction(0), x
        for a in self.odd_coeffs:
            total += a * power
            power *= x2
        return total


def chebyshev_coeffs(l: int) -> ChebyshevPoly:
    if not 0 <= l <= 64:
        raise ValueError("l must lie in [0, 64]")
    full = chebyshev_full(2 * l + 1)
    if any(full[0::2]):
        raise AssertionError("odd Chebyshev polynomial has an even-degree term")
    return ChebyshevPoly(l, tuple(full[1::2]))


# --- witness search --------------------------------------------------------


@dataclass(frozen=True)
class ConnectivityParams:
    """Tuple length ``m``, size bound ``l`` and search controls.

    Odd subset sizes in ``[min_size, max_size]`` are checked; ``max_size``
    defaults to ``2l + 1``.
    """

    m: int
    l: int
    seed: int = 0
    search_budget: int = 64
    min_size: int = 3
    max_size: Optional[int] = None

    def __post_init__(self):
        if not self.m >= self.l >= 1:
            raise ValueError("need m >= l >= 1")
        if self.search_budget < 1:
            raise ValueError("search_budget must be >= 1")

    @property
    def sizes(self) -> List[int]:
        hi = min(self.m, 2 * self.l + 1 if self.max_size is None else self.max_size)
        lo = max(1, self.min_size)
        return [k for k in range(lo, hi + 1) if k % 2 == 1]


class _SubsetSums:
    """Incremental reachability of subset sums, grouped by subset size."""

    def __init__(self, n: int, top: int):
        self.idx = np.arange(1 << n, dtype=np.int64)
        self.levels = [np.zeros(1 << n, dtype=bool) for _ in range(top + 1)]
        self.levels[0][0] = True

    def push(self, x: int) -> "_SubsetSums":
        out = _SubsetSums.__new__(_SubsetSums)
        out.idx = self.idx
        perm = self.idx ^ x
        out.levels = [self.levels[0]] + [
            self.levels[k] | self.levels[k - 1][perm] for k in range(1, len(self.levels))
        ]
        return out

    def hits(self, R_mask: np.ndarray, sizes: Sequence[int]) -> bool:
        return any((self.levels[k] & R_mask).any() for k in sizes)


def is_witness(R: PointSet, xs: Sequence[int], params: ConnectivityParams) -> bool:
    """Direct check: every odd-size subset sum in range avoids ``R``."""
    members = set(R.elements)
    for k in params.sizes:
        for sub in combinations(xs, k):
            s = 0
            for v in sub:
                s ^= v
            if s in members:
                return False
    return True


def connectivity_witness_search(R: PointSet, params: ConnectivityParams) -> Optional[Tuple[int, ...]]:
    """Search ``R^m`` for a tuple whose checked odd subset sums all avoid ``R``.

    Exhaustive (lexicographic backtracking) when ``|R|^m <= 10**6``, else
    ``search_budget`` seeded uniform draws.  ``None`` means nothing found.
    """
    if not len(R):
        raise ValueError("R must be non-empty")
    sizes = params.sizes
    top = max(sizes, default=0)
    R_mask = R.mask()
    elems = R.elements

    if len(elems) ** params.m <= EXHAUSTIVE_LIMIT:
        def extend(state, prefix):
            if len(prefix) == params.m:
                return tuple(prefix)
            for x in elems:
                nxt = state.push(x)
                if nxt.hits(R_mask, sizes):
                    continue
                found = extend(nxt, prefix + [x])
                if found is not None:
                    return found
            return None

        return extend(_SubsetSums(R.n, top), [])

    rng = np.random.default_rng(params.seed)
    for _ in range(params.search_budget):
        draw = rng.integers(0, len(elems), size=params.m)
        state = _SubsetSums(R.n, top)
        ok = True
        for i in draw:
            state = state.push(elems[int(i)])
            if state.hits(R_mask, sizes):
                ok = False
                break
        if ok:
            return tuple(int(elems[int(i)]) for i in draw)
    return None


# --- pairing harness -------------------------------------------------------


@dataclass(frozen=True)
class PairingDiagnostics:
    """Exact pairings ``<h^^(2k+1), f^>`` for ``0 <= k <= l`` and the Chebyshev combination."""

    m: int
    l: int
    omegas: tuple
    pairings: dict          # k -> <h^^(2k+1), f^>
    pairings_integer: dict  # k -> <h^^(2k+1), (f_Z)^>
    chebyshev_pairing: Fraction
    chebyshev_pairing_integer: Fraction
    max_abs_P: Fraction
    epsilon: Dyadic
    norm: Dyadic

    @property
    def young_ok(self) -> bool:
        """``|<h^^j, f^ - f_Z^>| <= eps`` for every recorded power."""
        eps = self.epsilon.to_fraction()
        return all(abs(self.pairings[k] - self.pairings_integer[k]) <= eps for k in self.pairings)

    @property
    def chebyshev_bounded(self) -> bool:
        """``|P(h^)| <= 1`` pointwise, hence ``|<P(h^), f^>| <= ||f||_A``."""
        return (self.max_abs_P <= 1
                and abs(self.chebyshev_pairing) <= self.norm.to_fraction())


def pairing_bound_check(f: FunctionTable, witness: Sequence[int], l: int,
                        params: Optional[ConnectivityParams] = None) -> PairingDiagnostics:
    """Build ``h^(r) = (1/m) sum_j w_j (-1)^(r.x_j)`` and evaluate the pairings exactly."""
    view = round_almost_integer(f)
    if not view.unique:
        raise ValueError("f must be eps-almost integer-valued with eps < 1/2")
    fz = view.f_Z
    m = len(witness)
    params = params or ConnectivityParams(m=m, l=min(l, m) or 1)
    R = PointSet(f.n, tuple(fz.support()))
    if not is_witness(R, witness, params):
        raise StageError("pairing", "witness invalid: an odd subset sum lands in supp f_Z")
    omegas = tuple(1 if fz.nums[x] > 0 else -1 if fz.nums[x] < 0 else 0 for x in witness)

    point_mass = np.zeros(1 << f.n, dtype=object)
    point_mass[:] = 0
    for w, x in zip(omegas, witness):
        point_mass[x] += w
    H = fwht(point_mass)  # h^(r) = H[r] / m

    F, FZ = wht(f), wht(fz)
    P = chebyshev_coeffs(l)

    def pair(S, j):
        total = sum(int(h) ** j * int(c) for h, c in zip(H, S.nums))
        return Fraction(total, m ** j * (1 << (f.n + S.shift)))

    pairings = {k: pair(F, 2 * k + 1) for k in range(l + 1)}
    pairings_z = {k: pair(FZ, 2 * k + 1) for k in range(l + 1)}
    cheb = sum(a * pairings[k] for k, a in enumerate(P.odd_coeffs))
    cheb_z = sum(a * pairings_z[k] for k, a in enumerate(P.odd_coeffs))
    max_abs = max(abs(P(Fraction(int(h), m))) for h in set(int(v) for v in H))
    return PairingDiagnostics(m, l, omegas, pairings, pairings_z, Fraction(cheb),
                              Fraction(cheb_z), max_abs, view.epsilon, spectral_norm(F))


# --- extraction ------------------------------------------------------------


@dataclass(frozen=True)
class ConnectivityConfig:
    """Knobs for :func:`extract_small_doubling`.

    ``l = ceil(C3 * M)`` with ``M = ||f||_A`` and ``m = max(2l + 1, ceil(C2 * l**3))``;
    the floor keeps every odd size up to ``2l + 1`` available in the tuple.
    """

    eps_threshold: Dyadic = Dyadic(1, 8)
    C2: Fraction = Fraction(1)
    C3: Fraction = Fraction(1)
    seed: int = 0
    search_budget: int = 64
    min_size: int = 3
    max_size: Optional[int] = None
    bsg: BSGConfig = field(default_factory=BSGConfig)
    exhaustive_limit: int = 18
    fallback_max_doubling: Fraction = Fraction(2)


@dataclass(frozen=True)
class SmallDoublingCertificate:
    A: PointSet
    support: PointSet
    k_selected: int
    diagnostics: dict = field(default_factory=dict, compare=False)
    doubling: Fraction = field(init=False)
    density: Fraction = field(init=False)

    def __post_init__(self):
        if not self.A.issubset(self.support):
            raise StageError("certificate", "A is not contained in supp f_Z")
        object.__setattr__(self, "doubling", doubling_report(self.A).doubling)
        object.__setattr__(self, "density", Fraction(len(self.A), len(self.support)))


def energy_averaging(T: PointSet, R: PointSet, l: int, m: int):
    """Pick ``1 <= k <= l`` maximizing ``<1_T^(2k+1), 1_R> * m * C(m, 2k+1) / |R|^(2k+1)``.

    Returns ``(k, records)``; ties go to the smallest ``k``.  Each record also
    carries the Cauchy-Schwarz and energy-chain quantities, checked exactly.
    """
    ind_T = FunctionTable.indicator(T.n, T.elements)
    E = additive_energy(T).energy
    R_idx = list(R.elements)
    best_k, best_score, records = None, None, []
    for k in range(1, l + 1):
        j = 2 * k + 1
        if j > m:
            break
        conv = iterated_convolution(ind_T, j)
        inner = sum(int(conv.nums[x]) for x in R_idx)
        score = Fraction(inner * m * math.comb(m, j), len(R) ** j)
        at_zero = int(iterated_convolution(ind_T, 2 * j).nums[0])
        rec = {
            "k": k,
            "inner": inner,
            "score": score,
            "cauchy_schwarz": inner * inner <= at_zero * len(R),
            "energy_chain": at_zero <= len(T) ** (4 * k - 2) * E,
        }
        if not (rec["cauchy_schwarz"] and rec["energy_chain"]):
            raise StageError("energy_averaging", f"monitored inequality failed at k={k}", rec)
        records.append(rec)
        if best_score is None or score > best_score:
            best_k, best_score = k, score
    return (best_k if best_k is not None else 1), records


def extract_small_doubling(f: FunctionTable, config: Optional[ConnectivityConfig] = None,
                           ) -> SmallDoublingCertificate:
    """Find ``A subset supp f_Z`` with small doubling and large relative size.

    When ``|supp f_Z| <= config.exhaustive_limit`` the answer is checked
    against the exhaustive largest subset of doubling at most
    ``config.fallback_max_doubling`` and replaced by it if BSG fell short.
    """
    cfg = config or ConnectivityConfig()
    view = round_almost_integer(f)
    if view.epsilon > as_dyadic(cfg.eps_threshold) or not view.unique:
        raise ValueError(f"f is only {view.epsilon}-almost integer-valued; "
                         f"threshold is {cfg.eps_threshold}")
    R = PointSet(f.n, tuple(view.f_Z.support()))
    if not len(R):
        raise ValueError("supp f_Z is empty")

    M = spectral_norm(wht(f)).to_fraction()
    l = max(1, math.ceil(cfg.C3 * M))
    m = max(2 * l + 1, math.ceil(cfg.C2 * l ** 3))
    params = ConnectivityParams(m=m, l=l, seed=cfg.seed, search_budget=cfg.search_budget,
                                min_size=cfg.min_size, max_size=cfg.max_size)
    witness = connectivity_witness_search(R, params)
    if witness is not None:
        raise WitnessFound("connectivity",
                           f"found a connectivity witness of length {m}; eps or M out of range",
                           trace={"witness": witness, "l": l, "m": m})

    T = R
    k, records = energy_averaging(T, R, l, m)
    energy = additive_energy(T).energy
    frac = Fraction(energy, len(T) ** 3)
    diag = {"M": M, "l": l, "m": m, "energy": energy, "energy_fraction": frac,
            "averaging": records, "route": "bsg"}
    try:
        report = bsg_extract(T, frac, cfg.bsg)
    except StageError:
        if len(R) > cfg.exhaustive_limit:
            raise
        report = None
    if len(R) <= cfg.exhaustive_limit:
        # small supports: the exhaustive optimum replaces a weaker BSG answer
        best = largest_small_doubling_subset(R, cfg.fallback_max_doubling)
        if (report is None or report.doubling > cfg.fallback_max_doubling
                or len(report.set) < len(best.set)):
            diag["bsg_candidate"] = None if report is None else report.set.elements
            diag["route"] = "exhaustive"
            report = best
    return SmallDoublingCertificate(report.set, R, k, diag)
