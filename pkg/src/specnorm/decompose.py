"""The decomposition loop: write ``f_Z`` as a signed sum of subspace indicators.

Each outer step finds a subspace ``V`` such that ``f * mu_V`` is still
almost integer-valued and not identically rounded to zero, peels it off as
``f_{i+1} = f_i - f_i * mu_V`` and records the rounded coset values as
signed subspace terms.  Every step loses at least ``1/2`` of spectral norm,
so the loop ends after at most ``2 ceil(M) + 1`` steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .connectivity import ConnectivityConfig, extract_small_doubling
from .continuity import ContinuityParams, quantitative_continuity
from .dyadic import Dyadic, as_dyadic
from .errors import StageError
from .freiman import FreimanConfig, freiman_subspace
from .gf2core import Coset, Subspace, coset_of, span_with
from .spectral import FunctionTable, convolve_subspace, round_almost_integer, spectral_norm, wht

__all__ = [
    "SignedTerm",
    "Decomposition",
    "StepRecord",
    "IterationTrace",
    "DecomposeConfig",
    "coset_to_subspaces",
    "iteration_step",
    "decompose",
    "verify_decomposition",
    "terms_table",
]


@dataclass(frozen=True)
class SignedTerm:
    sign: int
    subspace: Subspace

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")


def terms_table(n: int, terms) -> np.ndarray:
    """``sum sign * 1_V`` as an int64 array of length ``2**n``."""
    out = np.zeros(1 << n, dtype=np.int64)
    for t in terms:
        if t.subspace.n != n:
            raise ValueError("term lives in a different ambient space")
        out[t.subspace.indicator()] += t.sign
    return out


@dataclass(frozen=True)
class Decomposition:
    """Signed subspace terms; when ``target`` is given the sum is checked against it."""

    n: int
    terms: Tuple[SignedTerm, ...]
    source_norm: Dyadic = Dyadic(0)
    target: Optional[FunctionTable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.target is not None:
            ok, _, dev = verify_decomposition(self.target, self)
            if not ok:
                raise StageError("decomposition", f"terms miss the target by {dev}")

    @property
    def L(self) -> int:
        return len(self.terms)


def verify_decomposition(f_Z: FunctionTable, d: Decomposition):
    """Exact pointwise check of ``sum sign * 1_V == f_Z``; returns ``(ok, L, max deviation)``."""
    if f_Z.n != d.n:
        raise ValueError("dimension mismatch")
    if not f_Z.is_integer():
        raise ValueError("f_Z must be integer-valued")
    got = terms_table(d.n, d.terms)
    want = np.array(f_Z.int_values(), dtype=object)
    dev = max((abs(int(a) - int(b)) for a, b in zip(got, want)), default=0)
    return dev == 0, d.L, dev


def coset_to_subspaces(sign: int, W: Coset) -> List[SignedTerm]:
    """``sign * 1_{x+V}`` as at most two signed subspace indicators.

    Uses ``1_{x+V} = 1_{span(V, x)} - 1_V`` when ``x`` is not in ``V``.
    """
    V, x = W.subspace, W.rep
    if x in V:
        return [SignedTerm(sign, V)]
    return [SignedTerm(sign, span_with(V, x)), SignedTerm(-sign, V)]


@dataclass(frozen=True)
class DecomposeConfig:
    """Thresholds and sub-stage configuration.

    ``eps_threshold`` defaults to ``2^-(8 + ceil M)`` and ``eta`` to
    ``eps_threshold / 16``; both are resolved against the input's norm.
    """

    eta: Optional[Dyadic] = None
    eps_threshold: Optional[Dyadic] = None
    p_cap: int = 16
    seed: int = 0
    connectivity: ConnectivityConfig = field(default_factory=ConnectivityConfig)
    freiman: FreimanConfig = field(default_factory=FreimanConfig)
    c_cls: Fraction = Fraction(4)
    resample_budget: int = 32

    def __post_init__(self):
        if self.p_cap < 2 or self.p_cap % 2:
            raise ValueError("p_cap must be an even integer >= 2")
        if self.eta is not None and as_dyadic(self.eta) <= 0:
            raise ValueError("eta must be positive")
        if self.eps_threshold is not None and not 0 <= as_dyadic(self.eps_threshold) < Fraction(1, 2):
            raise ValueError("eps_threshold must lie in [0, 1/2)")

    def resolve(self, M: Fraction) -> "DecomposeConfig":
        eps = self.eps_threshold
        if eps is None:
            eps = Dyadic(1, 8 + math.ceil(M))
        eta = self.eta if self.eta is not None else as_dyadic(eps).shift(-4)
        return replace(self, eps_threshold=as_dyadic(eps), eta=as_dyadic(eta))


@dataclass(frozen=True)
class StepRecord:
    i: int
    V: Subspace
    norm: Dyadic
    epsilon: Dyadic
    V_dim: int
    coset_count: int
    support_size: int
    p: int
    p_eta: int             # p the eta condition alone would ask for (diagnostic)
    small_doubling: Fraction
    density_in_U: Fraction
    g_epsilon: Dyadic
    g_support: int
    next_norm: Optional[Dyadic] = None
    next_epsilon: Optional[Dyadic] = None


@dataclass
class IterationTrace:
    steps: List[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def _p_from_eta(M: Fraction, eta: Dyadic) -> int:
    p = 2
    while M * Fraction(2) ** (3 - p) > eta.to_fraction():
        p += 2
    return p


def _continuity_epsilon(M: Fraction) -> Dyadic:
    """The largest ``2^-k`` with ``2^-k M <= 1/16``."""
    k = 0
    while Fraction(M, 1 << k) > Fraction(1, 16):
        k += 1
    return Dyadic(1, k)


def iteration_step(f: FunctionTable, config: Optional[DecomposeConfig] = None, step: int = 0,
                   eps_budget=None):
    """One outer iteration: pick V and average f over its cosets.

    Returns ``(V, g, record)`` with ``g = f * mu_V`` verified to be
    ``(eps + eta)``-almost integer-valued and ``g_Z`` not identically zero.
    ``p`` starts at the smallest even value with ``2^-p < |A & U| / |U|`` and
    grows by two until that verification passes or ``p_cap`` is exceeded.
    """
    F = wht(f)
    M = spectral_norm(F).to_fraction()
    cfg = (config or DecomposeConfig()).resolve(M)
    budget = cfg.eps_threshold if eps_budget is None else max(as_dyadic(eps_budget), cfg.eps_threshold)
    view = round_almost_integer(f)
    if view.epsilon > budget or not view.unique:
        raise ValueError(f"f is only {view.epsilon}-almost integer-valued; budget is {budget}")
    support = view.f_Z.support()
    if not support:
        raise ValueError("supp f_Z is empty")

    cert = extract_small_doubling(f, replace(cfg.connectivity, eps_threshold=budget))
    fr = freiman_subspace(cert.A, cert.doubling, cfg.freiman)
    U = fr.V
    density = Fraction(sum(1 for a in cert.A if a in U), U.size)
    p = 2
    while Fraction(1, 1 << p) >= density:
        p += 2
    eps_c = _continuity_epsilon(M)
    allowed = view.epsilon + cfg.eta
    while p <= cfg.p_cap:
        res = quantitative_continuity(
            f, U, ContinuityParams(eps_c.to_fraction(), p=p, seed=cfg.seed + 1009 * step + p,
                                   resample_budget=cfg.resample_budget, c_cls=cfg.c_cls))
        V = res.U
        g = convolve_subspace(f, V)
        gv = round_almost_integer(g)
        if gv.epsilon <= allowed and gv.unique and not gv.f_Z.is_zero():
            record = StepRecord(
                i=step, V=V, norm=spectral_norm(F), epsilon=view.epsilon, V_dim=V.dim,
                coset_count=len({V.reduce(x) for x in gv.f_Z.support()}),
                support_size=len(support), p=p, p_eta=_p_from_eta(M, cfg.eta),
                small_doubling=cert.doubling, density_in_U=density,
                g_epsilon=gv.epsilon, g_support=len(gv.f_Z.support()),
            )
            return V, g, record
        p += 2
    raise StageError("iteration", f"no p <= {cfg.p_cap} gave an almost integer-valued f * mu_V",
                     trace={"U": U, "density": density})


def _schedule(i: int, eps0: Dyadic, M: Fraction, eps_threshold: Dyadic) -> Dyadic:
    """``eps_i = 2^i eps_0 + 4^(i - 2 ceil(M) - 4) eps_threshold``."""
    return eps0.shift(i) + eps_threshold.shift(2 * (i - 2 * math.ceil(M) - 4))


def decompose(f: FunctionTable, config: Optional[DecomposeConfig] = None):
    """Signed subspace decomposition of ``f_Z`` and the per-step trace."""
    F = wht(f)
    M = spectral_norm(F).to_fraction()
    cfg = (config or DecomposeConfig()).resolve(M)
    view = round_almost_integer(f)
    if view.epsilon > cfg.eps_threshold or not view.unique:
        raise ValueError(f"f is only {view.epsilon}-almost integer-valued; "
                         f"threshold is {cfg.eps_threshold}")
    target = view.f_Z
    cap = 2 * math.ceil(M) + 1
    trace = IterationTrace()
    terms: List[SignedTerm] = []
    fi = f
    eps0 = view.epsilon
    i = 0
    while True:
        vi = round_almost_integer(fi)
        if vi.f_Z.is_zero():
            break
        if i >= cap:
            raise StageError("decompose", f"step cap {cap} exceeded", trace=trace)
        budget = _schedule(i, eps0, M, cfg.eps_threshold)
        V, g, rec = iteration_step(fi, cfg, step=i, eps_budget=budget)
        gz = round_almost_integer(g).f_Z
        # value range and support growth of the rounded average
        vals = gz.int_values()
        if max(abs(v) for v in vals) > M + 1:
            raise StageError("decompose", "coset value outside [-(M+1), M+1]", trace=trace)
        if rec.g_support > 2 * rec.support_size:
            raise StageError("decompose", "support of (f_i * mu_V)_Z more than doubled", trace=trace)
        for rep in sorted({V.reduce(x) for x in gz.support()}):
            v = vals[rep]
            for _ in range(abs(v)):
                terms.extend(coset_to_subspaces(1 if v > 0 else -1, coset_of(V, rep)))
        nxt = fi - g
        next_norm = spectral_norm(wht(nxt))
        next_eps = round_almost_integer(nxt).epsilon
        rec = replace(rec, next_norm=next_norm, next_epsilon=next_eps)
        trace.steps.append(rec)
        if next_norm > rec.norm - Dyadic(1, 1):
            raise StageError("decompose", "spectral norm dropped by less than 1/2", trace=trace)
        if next_eps > rec.epsilon.shift(1) + cfg.eta:
            raise StageError("decompose", "almost-integer drift exceeded 2 eps + eta", trace=trace)
        fi = nxt
        i += 1
    return Decomposition(f.n, tuple(terms), spectral_norm(F), target=target), trace
