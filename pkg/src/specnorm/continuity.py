"""Quantitative continuity: a subspace ``U <= V`` on whose cosets ``f`` is nearly constant.

``cls_sample_approx`` samples frequencies with probability proportional to
``|f^(r)|`` and intersects their kernels; an exact ``L_p`` check on ``V``
guards the result.  ``quantitative_continuity`` runs the dyadic chain
iteration until no coset of the current subspace violates the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Union

import numpy as np

from .dyadic import Dyadic, as_fraction
from .errors import BudgetExhausted
from .gf2core import Subspace, intersect, perp, subspace_from_generators, subspace_sum
from .spectral import (
    FunctionTable,
    _check_even_p,
    convolve_subspace,
    coset_power_sums,
    spectral_norm,
    wht,
)

__all__ = [
    "ContinuityParams",
    "ChainLevel",
    "IterationRecord",
    "ContinuityResult",
    "CosetGap",
    "cls_sample_approx",
    "quantitative_continuity",
    "check_continuity",
    "coset_gaps",
]

Seed = Union[int, np.random.Generator, None]


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _epsilon(eps) -> Fraction:
    e = as_fraction(eps)
    if not 0 < e <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {e}")
    return e


def coset_gaps(f: FunctionTable, U: Subspace, p: int):
    """``(reps, gaps)`` with ``gaps[i] = E_W |f - f*mu_U|^p`` for every coset ``W`` of ``U``."""
    h = f - convolve_subspace(f, U)
    reps, sums, k = coset_power_sums(h, U, p)
    return reps, [Dyadic(s, k) for s in sums]


def _gap_on_subspace(h: FunctionTable, V: Subspace, p: int) -> Dyadic:
    """``E_{x in V} h(x)^p``."""
    total = sum(int(h.nums[x]) ** p for x in V)
    return Dyadic(total, h.shift * p + V.dim)


def cls_sample_approx(f: FunctionTable, V: Subspace, epsilon, p: int, seed: Seed = None,
                      c_cls=4, resample_budget: int = 32) -> Subspace:
    """Sample ``k = ceil(c_cls * p / eps^2)`` frequencies and return ``V & ker(r_1..r_k)``.

    The result satisfies ``E_V |f*mu_U - f|^p <= (eps ||f||_A)^p`` exactly;
    failing samples are redrawn up to ``resample_budget`` times.
    """
    p = _check_even_p(p)
    eps = _epsilon(epsilon)
    F = wht(f)
    norm = spectral_norm(F)
    if norm == 0:
        return V
    rng = _rng(seed)
    k = math.ceil(Fraction(c_cls) * p / eps ** 2)
    weights = np.array([abs(int(v)) for v in F.nums], dtype=float)
    weights /= weights.sum()
    bound = (eps * norm.to_fraction()) ** p
    for _ in range(resample_budget):
        rs = rng.choice(len(weights), size=k, p=weights)
        U = intersect(V, perp(subspace_from_generators(np.unique(rs).tolist(), f.n)))
        if _gap_on_subspace(convolve_subspace(f, U) - f, V, p) <= bound:
            return U
    raise BudgetExhausted("cls_sample", f"no sample of {k} frequencies met the L_{p} bound "
                          f"after {resample_budget} draws; raise c_cls")


@dataclass(frozen=True)
class ContinuityParams:
    epsilon: Fraction
    p: int = 2
    seed: int = 0
    resample_budget: int = 32
    codim_budget: Optional[int] = None
    c_cls: Fraction = Fraction(4)
    M_bound: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _epsilon(self.epsilon))
        _check_even_p(self.p)
        if self.resample_budget < 1:
            raise ValueError("resample_budget must be >= 1")
        if self.codim_budget is not None and self.codim_budget < 0:
            raise ValueError("codim_budget must be non-negative")


@dataclass(frozen=True)
class ChainLevel:
    Z: Subspace
    codim: int          # codimension inside the current U_i
    epsilon: Fraction   # eps_j = 2^(j-1) eps
    norm: Dyadic        # ||f * mu_{Z_j}||_A


@dataclass(frozen=True)
class IterationRecord:
    coset_rep: int
    violation: Dyadic   # E_W |f - f*mu_{U_i}|^p on the violating coset
    levels: tuple
    selected: int
    d: int              # codim_{U_i} U_{i+1}
    norm_step: Dyadic   # ||f*mu_{U_{i+1}} - f*mu_{U_i}||_A


@dataclass(frozen=True)
class ContinuityResult:
    f: FunctionTable = field(repr=False, compare=False)
    V: Subspace
    U: Subspace
    p: int
    epsilon: Fraction
    M: Fraction
    chain_trace: tuple = ()
    codim_in_V: int = field(init=False)
    worst_coset_gap: Dyadic = field(init=False)
    norm_budget: Dyadic = field(init=False)

    def __post_init__(self):
        if not self.U <= self.V:
            raise ValueError("U must be a subspace of V")
        _, gaps = coset_gaps(self.f, self.U, self.p)
        object.__setattr__(self, "codim_in_V", self.V.dim - self.U.dim)
        object.__setattr__(self, "worst_coset_gap", max(gaps))
        object.__setattr__(self, "norm_budget",
                           sum((r.norm_step for r in self.chain_trace), Dyadic(0)))

    @property
    def bound(self) -> Fraction:
        return (self.epsilon * self.M) ** self.p

    @property
    def ok(self) -> bool:
        return self.worst_coset_gap <= self.bound


@dataclass(frozen=True)
class CosetGap:
    rep: int
    gap: Dyadic
    passes: bool


def check_continuity(f: FunctionTable, U: Subspace, epsilon, M_bound, p: int) -> List[CosetGap]:
    """Exact ``p``-th power gap against ``(eps * M_bound)^p`` on every coset of ``U``."""
    bound = (as_fraction(epsilon) * as_fraction(M_bound)) ** p
    reps, gaps = coset_gaps(f, U, p)
    return [CosetGap(r, g, g <= bound) for r, g in zip(reps, gaps)]


def _chain(f: FunctionTable, Ui: Subspace, eps: Fraction, norm_f: Fraction, params, rng):
    """Build ``Z_0 <= Z_1 <= ... <= Z_J = U_i`` for ``f`` already translated onto ``U_i``."""
    t = 0  # t = ceil(log2(1/eps)), computed exactly
    while (1 << t) * eps < 1:
        t += 1
    J = t + 2
    levels = []

    def level(Z, e):
        g = convolve_subspace(f, Z)
        levels.append(ChainLevel(Z, Ui.dim - Z.dim, e, spectral_norm(wht(g))))
        return g

    Z = cls_sample_approx(f, Ui, eps / 2, params.p, rng, params.c_cls, params.resample_budget)
    g = level(Z, eps / 2)
    for j in range(J):
        e_next = Fraction(2) ** j * eps  # eps_{j+1}
        if e_next >= 2 or Z == Ui:
            Z = Ui
        else:
            Y = cls_sample_approx(g, Ui, min(e_next, Fraction(1)), params.p, rng,
                                  params.c_cls, params.resample_budget)
            Z = subspace_sum(Z, Y)
        g = level(Z, e_next)
    target = eps * norm_f / (2 * (J + 1))
    selected = 0
    for j in range(J - 1, -1, -1):
        lv = levels[j]
        if lv.Z != Ui and Fraction(2) ** j * eps * lv.norm.to_fraction() >= target:
            selected = j
            break
    return levels, selected


def quantitative_continuity(f: FunctionTable, V: Subspace, params: ContinuityParams,
                            ) -> ContinuityResult:
    """Shrink ``U`` from ``V`` until ``E_W |f - f*mu_U|^p <= (eps M)^p`` on every coset.

    ``M`` is ``params.M_bound`` or ``||f||_A``.  Violating cosets are taken
    in canonical order; each step translates ``f`` onto the violator, builds
    the dyadic chain and moves to the selected level.
    """
    eps = params.epsilon
    p = params.p
    norm_f = spectral_norm(wht(f)).to_fraction()
    M = norm_f if params.M_bound is None else Fraction(params.M_bound)
    if M < norm_f:
        raise ValueError(f"M_bound {M} is below ||f||_A = {norm_f}")
    budget = V.dim if params.codim_budget is None else min(params.codim_budget, f.n)
    bound = (eps * M) ** p
    rng = _rng(params.seed)

    U = V
    trace: List[IterationRecord] = []
    prev = convolve_subspace(f, U)
    while True:
        reps, gaps = coset_gaps(f, U, p)
        bad = next((i for i, g in enumerate(gaps) if g > bound), None)
        if bad is None:
            break
        z = reps[bad]
        levels, j = _chain(f.translate(z), U, eps, norm_f, params, rng)
        U_next = levels[j].Z
        if U_next == U:  # cannot happen when Z_0 met its own bound
            raise BudgetExhausted("continuity", "chain produced no proper subspace",
                                  trace=tuple(trace))
        cur = convolve_subspace(f, U_next)
        step = spectral_norm(wht(cur - prev))
        trace.append(IterationRecord(z, gaps[bad], tuple(levels), j, U.dim - U_next.dim, step))
        U, prev = U_next, cur
        if V.dim - U.dim > budget:
            raise BudgetExhausted("continuity",
                                  f"codimension {V.dim - U.dim} exceeds budget {budget}",
                                  trace=tuple(trace))
    return ContinuityResult(f, V, U, p, eps, M, tuple(trace))
