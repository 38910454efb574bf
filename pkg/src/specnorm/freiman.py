"""A Freiman-type step: from a small-doubling set ``A`` to a comparable subspace.

The constructive route mirrors the bootstrapping argument: a set ``X`` of
popular differences with ``mX`` inside ``8A``, a Chang cover showing its
span ``U`` is a bounded iterated sumset, a pigeonholed ``L = A + sX`` and a
coset slice ``B`` with small ``|B + X| / |B|``, and finally the annihilator
of the large spectrum of ``1_X`` inside ``U``.  Every set-level claim is
checked exactly before returning.  For small ``n`` an exhaustive search over
all subspaces gives the ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import DimensionError, StageError
from .gf2core import Subspace, _rref, intersect, perp, span_with, subspace_from_generators
from .spectral import fwht
from .sumset import (
    PointSet,
    _conv_counts,
    _iterated_mask,
    chang_cover,
    representation_counts,
    sumset_mask,
)

__all__ = [
    "FreimanConfig",
    "FreimanResult",
    "chang_spectrum_basis",
    "freiman_subspace",
    "exhaustive_best_subspace",
    "default_objective",
    "alpha_delta",
]

Objective = Callable[[Fraction, Fraction], Fraction]

ORACLE_MAX_DIM = 12


def default_objective(alpha: Fraction, delta: Fraction) -> Fraction:
    """``alpha * min(delta, 1)``: dense subspaces no larger than ``A`` are preferred."""
    return alpha * min(delta, Fraction(1))


def alpha_delta(alpha: Fraction, delta: Fraction) -> Fraction:
    return alpha * delta


@dataclass(frozen=True)
class FreimanConfig:
    """Pipeline knobs.

    ``m`` defaults to ``max(4, ceil(4 log2 K))``; ``l`` bounds the size of
    the Chang cover (default ``n``).  Instances with ``n <= oracle_threshold``
    are answered by the exhaustive search.
    """

    m: Optional[int] = None
    l: Optional[int] = None
    seed: int = 0
    oracle_threshold: int = 6
    slack: int = 8
    objective: Optional[Objective] = None

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ValueError("m must be positive")
        if self.l is not None and self.l < 1:
            raise ValueError("l must be positive")
        if self.slack < 1:
            raise ValueError("slack must be positive")

    def m_for(self, K: Fraction) -> int:
        if self.m is not None:
            return self.m
        return max(4, math.ceil(4 * math.log2(K))) if K > 1 else 4


@dataclass(frozen=True)
class FreimanResult:
    A: PointSet = field(repr=False)
    V: Subspace
    pipeline_trace: dict = field(default_factory=dict, compare=False, repr=False)
    route: str = "pipeline"
    alpha: Fraction = field(init=False)
    delta: Fraction = field(init=False)

    def __post_init__(self):
        hits = sum(1 for a in self.A if a in self.V)
        if hits == 0:
            raise StageError("freiman", "returned subspace misses A entirely")
        object.__setattr__(self, "alpha", Fraction(hits, self.V.size))
        object.__setattr__(self, "delta", Fraction(self.V.size, len(self.A)))

    @property
    def alpha_delta(self) -> Fraction:
        return self.alpha * self.delta


# --- exhaustive oracle -----------------------------------------------------


def _pattern_rows(n: int, pivots: Tuple[int, ...], t: np.ndarray) -> List[np.ndarray]:
    """Rows of every RREF basis with the given pivots, indexed by fill integers ``t``."""
    pset = set(pivots)
    rows, k = [], 0
    for p in pivots:
        row = np.full(t.shape, 1 << p, dtype=np.int64)
        for j in range(p):
            if j not in pset:
                row |= ((t >> k) & 1) << j
                k += 1
        rows.append(row)
    return rows


def exhaustive_best_subspace(A: PointSet, objective: Optional[Objective] = None) -> FreimanResult:
    """Maximise ``objective(alpha, delta)`` over every subspace of ``F_2^n``.

    Ties go to higher alpha, then higher delta, then the lexicographically
    least canonical basis.  Only ``(dim, |A & V|)`` matter for the objective,
    so each pivot pattern is scanned in vectorised chunks and only the least
    basis per pair is kept.
    """
    n = A.n
    if n > ORACLE_MAX_DIM:
        raise DimensionError(f"exhaustive search supports n <= {ORACLE_MAX_DIM}, got {n}")
    if not len(A):
        raise ValueError("A must be non-empty")
    objective = objective or default_objective
    a = np.asarray(A.elements, dtype=np.int64)[:, None]
    best: Dict[Tuple[int, int], Tuple[int, ...]] = {}
    chunk_cap = max(1, (1 << 21) // len(A))
    for d in range(n + 1):
        for pivots in combinations(range(n), d):
            free = sum(p - i for i, p in enumerate(pivots))
            total = 1 << free
            for lo in range(0, total, chunk_cap):
                t = np.arange(lo, min(total, lo + chunk_cap), dtype=np.int64)
                rows = _pattern_rows(n, pivots, t)
                red = np.broadcast_to(a, (len(A), len(t))).copy()
                for p, row in sorted(zip(pivots, rows), reverse=True):
                    red ^= ((red >> p) & 1) * row[None, :]
                counts = (red == 0).sum(axis=0)
                for c in np.unique(counts):
                    if c == 0:
                        continue
                    idx = np.flatnonzero(counts == c)
                    if d:
                        keys = tuple(r[idx] for r in reversed(rows))
                        idx = idx[np.lexsort(keys)]
                    basis = tuple(int(r[idx[0]]) for r in rows)
                    key = (d, int(c))
                    if key not in best or basis < best[key]:
                        best[key] = basis
    size = len(A)
    scored = []
    for (d, c), basis in best.items():
        alpha, delta = Fraction(c, 1 << d), Fraction(1 << d, size)
        scored.append(((objective(alpha, delta), alpha, delta), basis))
    top = max(s[0] for s in scored)
    basis = min(b for s, b in scored if s == top)
    return FreimanResult(A, Subspace(n, basis), {"optimum": top[0]}, route="oracle")


# --- Chang spectrum --------------------------------------------------------


def chang_spectrum_basis(X: PointSet, U: Subspace, gamma=None, gamma_squared=None) -> List[int]:
    """Basis (canonical, modulo ``U^perp``) of the span of ``Spec_gamma(1_X)`` relative to ``U``.

    Membership is ``|sum_{x in X} (-1)^(r.x)| >= gamma |X|``, tested in the
    squared form ``S(r)^2 >= gamma^2 |X|^2`` so ``gamma_squared`` may be any
    positive rational.  Frequencies are reduced modulo ``U^perp``, which is a
    linear map, so the returned rows span the image of the spectrum.
    """
    if (gamma is None) == (gamma_squared is None):
        raise ValueError("give exactly one of gamma, gamma_squared")
    g2 = Fraction(gamma) ** 2 if gamma is not None else Fraction(gamma_squared)
    if g2 <= 0:
        raise ValueError("gamma must be positive")
    if not all(x in U for x in X):
        raise ValueError("X must lie inside U")
    S = fwht(X.mask().astype(np.int64)).astype(object)
    size = len(X)
    spec = [r for r, s in enumerate(S) if int(s) ** 2 * g2.denominator >= g2.numerator * size ** 2]
    Up = perp(U)
    return list(_rref(Up.reduce(r) for r in spec))


# --- pipeline --------------------------------------------------------------


def _points(mask: np.ndarray) -> Tuple[int, ...]:
    return tuple(int(x) for x in np.flatnonzero(mask))


def _popular_differences(A: PointSet, m: int, target: np.ndarray):
    """Largest ``X = {t : |A & (A+t)| >= theta}`` (theta > 0) with ``mX`` inside ``target``."""
    r = representation_counts(A)
    for theta in sorted({int(v) for v in r if v > 0}):
        x = r >= theta
        if not (_iterated_mask(x, m) & ~target).any():
            return x, theta
    raise StageError("popular_differences", "no threshold gives mX inside 8A")


def freiman_subspace(A: PointSet, K_observed, config: Optional[FreimanConfig] = None) -> FreimanResult:
    """Subspace ``V`` with ``|A & V| / |V|`` and ``|V| / |A|`` both controlled."""
    cfg = config or FreimanConfig()
    K = Fraction(K_observed)
    n = A.n
    if not len(A):
        raise ValueError("A must be non-empty")
    a_mask = A.mask()
    two_a = sumset_mask(a_mask, a_mask)
    if int(two_a.sum()) > K * len(A):
        raise ValueError(f"|A+A| = {int(two_a.sum())} exceeds K|A| = {K * len(A)}")
    if n <= cfg.oracle_threshold:
        return exhaustive_best_subspace(A, cfg.objective)

    trace: dict = {"K": K}
    m = cfg.m_for(K)
    # (1) S = 2A with companion cs_T = A and r = 1
    S = two_a
    trace["S"], trace["cs_T"], trace["r"], trace["m"] = _points(S), A.elements, 1, m
    # (2) popular differences X with mX inside 4S = 8A
    eight_a = _iterated_mask(a_mask, 8)
    x_mask, theta = _popular_differences(A, m, eight_a)
    X = PointSet.from_mask(n, x_mask)
    trace["X"], trace["theta"] = X.elements, theta
    # (3) Chang cover: U = (k+2)X is the span of X
    cover_T = chang_cover(X, cfg.l or n)
    U = subspace_from_generators(X.elements, n)
    if not np.array_equal(_iterated_mask(x_mask, len(cover_T) + 2), U.indicator()):
        raise StageError("chang_cover", "(k+2)X is not the span of X", trace)
    trace["cover_T"], trace["U"] = tuple(cover_T), U
    # (4) pigeonhole over L = A + sX
    best = None
    L = a_mask.copy()
    for s in range(m):
        ratio = Fraction(int(sumset_mask(L, x_mask).sum()), int(L.sum()))
        if best is None or ratio < best[0]:
            best = (ratio, s, L.copy())
        L = sumset_mask(L, x_mask)
    ratio, s, L = best
    trace["s"], trace["L_ratio"] = s, ratio
    # (5) coset of U with the smallest |B + X| / |B|, translated into U
    reps = U.reduce_array(np.flatnonzero(L))
    pts = np.flatnonzero(L)
    choice = None
    for w in sorted(set(int(v) for v in reps)):
        b = np.zeros_like(L)
        b[pts[reps == w] ^ w] = True
        D = Fraction(int(sumset_mask(b, x_mask).sum()), int(b.sum()))
        key = (D, -int(b.sum()), w)
        if choice is None or key < choice[0]:
            choice = (key, b, w, D)
    _, b_mask, w, D = choice
    B = PointSet.from_mask(n, b_mask)
    trace["W_rep"], trace["B"], trace["D"] = w, B.elements, D
    # (6) Chang spectrum of 1_X inside U at gamma^2 = 1/(4D)
    Lam = chang_spectrum_basis(X, U, gamma_squared=1 / (4 * D))
    trace["Lambda"] = tuple(Lam)
    # (7) V = <Lambda>^perp within U, with the bootstrap inequalities checked
    V = intersect(U, perp(subspace_from_generators(Lam, n)))
    trace["V0"] = V
    _check_bootstrap(b_mask, x_mask, V, D, trace)
    if (V.indicator() & ~_iterated_mask(a_mask, 18)).any():
        raise StageError("containment", "V is not inside 18A", trace)
    # (8) enlarge by the densest translate
    counts = np.bincount(V.reduce_array(np.asarray(A.elements, dtype=np.int64)), minlength=1 << n)
    x = int(np.argmax(counts))
    V_final = span_with(V, x)
    trace["x"] = x
    return FreimanResult(A, V_final, trace, route="pipeline")


def _check_bootstrap(b_mask, x_mask, V: Subspace, D: Fraction, trace) -> None:
    """Exact checks on ``F = 1_B * 1_B * 1_X * 1_X`` (counting measure)."""
    bx = _conv_counts(b_mask, x_mask).astype(object)
    F = fwht(fwht(bx) ** 2) // len(bx)  # F(v) = sum_z bx(z) bx(z + v)
    nb, nx = int(b_mask.sum()), int(x_mask.sum())
    main = Fraction(nb * nx * nx) / D
    if F[0] < main:
        raise StageError("bootstrap", "Cauchy-Schwarz lower bound on F(0) failed", trace)
    pts = np.fromiter(V, dtype=np.int64)
    if any(abs(int(F[v]) - int(F[0])) > main / 2 for v in pts):
        raise StageError("bootstrap", "Parseval bound |F(x) - F(0)| failed on V", trace)
    bbxx = sumset_mask(sumset_mask(b_mask, b_mask), sumset_mask(x_mask, x_mask))
    if not bbxx[pts].all():
        raise StageError("bootstrap", "V is not inside B+B+X+X", trace)
