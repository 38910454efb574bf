from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specnorm.errors import DimensionError, StageError
from specnorm.gf2core import subspace_from_generators
from specnorm.spectral import FunctionTable
from specnorm.sumset import (
    BSGConfig,
    PointSet,
    additive_energy,
    bsg_extract,
    chang_cover,
    doubling,
    doubling_report,
    is_coset,
    iterated_convolution,
    iterated_convolution_at,
    iterated_sumset,
    largest_small_doubling_subset,
    sumset,
)

from conftest import brute_span, random_subspace


def brute_sumset(A, B):
    return sorted({a ^ b for a in A for b in B})


def brute_energy(A):
    return sum(1 for a, b, c in product(A, repeat=3) if a ^ b ^ c in set(A))


def brute_conv(vals, r, x, n):
    if r == 0:
        return 1 if x == 0 else 0
    total = 0
    for xs in product(range(1 << n), repeat=r - 1):
        last = x
        prod = 1
        for y in xs:
            last ^= y
            prod *= vals[y]
        total += prod * vals[last]
    return total


point_sets = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.integers(0, (1 << n) - 1), min_size=1, max_size=16).map(
        lambda xs: PointSet(n, tuple(xs))
    )
)


class TestSumset:
    def test_subspace_closed(self):
        V = subspace_from_generators([1, 6], 3)
        A = PointSet(3, tuple(V))
        assert sumset(A, A) == A

    def test_three_points(self):
        A = PointSet(3, (0b000, 0b001, 0b010))
        assert sumset(A, A).elements == (0, 1, 2, 3)
        assert doubling(A) == Fraction(4, 3)

    def test_singleton(self):
        A = PointSet(4, (0b1011,))
        assert sumset(A, A).elements == (0,)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            sumset(PointSet(3, (1,)), PointSet(4, (1,)))

    @given(point_sets, st.data())
    def test_brute_force(self, A, data):
        B = data.draw(st.lists(st.integers(0, (1 << A.n) - 1), min_size=1, max_size=10))
        assert list(sumset(A, PointSet(A.n, tuple(B))).elements) == brute_sumset(A, B)


class TestIterated:
    def test_k1(self):
        A = PointSet(4, (1, 2, 7))
        assert iterated_sumset(A, 1) == A

    def test_two_points(self):
        A = PointSet(4, (0, 1))
        assert iterated_sumset(A, 3).elements == (0, 1)

    def test_subspace(self):
        A = PointSet(4, tuple(subspace_from_generators([3, 12], 4)))
        for k in range(1, 6):
            assert iterated_sumset(A, k) == A

    def test_rejects_k0(self):
        with pytest.raises(ValueError):
            iterated_sumset(PointSet(2, (1,)), 0)

    @settings(max_examples=30)
    @given(point_sets, st.integers(1, 5))
    def test_brute_force(self, A, k):
        acc = list(A)
        for _ in range(k - 1):
            acc = brute_sumset(acc, A)
        assert list(iterated_sumset(A, k).elements) == acc

    @settings(max_examples=40)
    @given(point_sets, st.integers(1, 5))
    def test_plunnecke_growth(self, A, k):
        # |kA| <= K^k |A| is a known inequality; checked here on random sets
        K = doubling(A)
        assert len(iterated_sumset(A, k)) <= K ** k * len(A)


class TestDoubling:
    def test_coset_iff_doubling_one(self, rng):
        for _ in range(300):
            n = rng.randint(1, 6)
            size = rng.randint(1, min(16, 1 << n))
            A = PointSet(n, tuple(rng.sample(range(1 << n), size)))
            assert (doubling(A) == 1) == is_coset(A)
        for n in range(1, 7):
            V = random_subspace(rng, n, min(n, 4))
            z = rng.randrange(1 << n)
            A = PointSet(n, tuple(v ^ z for v in V))
            assert doubling(A) == 1 and is_coset(A)


class TestEnergy:
    def test_subspace_of_size_four(self):
        A = PointSet(4, tuple(subspace_from_generators([1, 2], 4)))
        assert additive_energy(A).energy == 64

    def test_singleton(self):
        assert additive_energy(PointSet(3, (5,))).energy == 1

    def test_basis_vectors(self):
        # brute force over the 81 ordered triples
        A = PointSet(4, (1, 2, 4))
        assert brute_energy(A.elements) == 21
        assert additive_energy(A).energy == 21

    @given(point_sets)
    def test_bounds_and_brute_force(self, A):
        E = additive_energy(A).energy
        assert E == brute_energy(A.elements)
        assert len(A) ** 2 <= E <= len(A) ** 3
        assert (E == len(A) ** 3) == is_coset(A)


class TestIteratedConvolution:
    def test_r0_is_delta(self):
        f = FunctionTable.from_ints(3, [2, -1, 0, 3, 1, 1, 0, 5])
        assert [iterated_convolution_at(f, 0, x) for x in range(8)] == [1] + [0] * 7

    def test_r1(self):
        f = FunctionTable.from_values(3, [2, -1, "1/2^2", 3, 1, 1, 0, 5])
        assert [iterated_convolution_at(f, 1, x) for x in range(8)] == f.values()

    def test_pair(self):
        f = FunctionTable.indicator(3, [0, 1])
        assert iterated_convolution_at(f, 2, 1) == 2

    @settings(max_examples=30)
    @given(st.integers(1, 3), st.integers(0, 4), st.data())
    def test_brute_force(self, n, r, data):
        vals = data.draw(st.lists(st.integers(-3, 3), min_size=1 << n, max_size=1 << n))
        f = FunctionTable.from_ints(n, vals)
        full = iterated_convolution(f, r)
        for x in range(1 << n):
            expected = brute_conv(vals, r, x, n)
            assert iterated_convolution_at(f, r, x) == expected
            assert full[x] == expected


def energy_fraction(T):
    return Fraction(additive_energy(T).energy, len(T) ** 3)


class TestBSG:
    def test_subspace_returns_itself(self):
        T = PointSet(5, tuple(subspace_from_generators([1, 2, 12], 5)))
        rep = bsg_extract(T, energy_fraction(T))
        assert rep.set == T and rep.doubling == 1

    def test_subspace_plus_point(self):
        for n in range(3, 7):
            V = subspace_from_generators([1 << i for i in range(n - 1)], n)
            w = 1 << (n - 1)
            T = PointSet(n, tuple(V) + (w,))
            rep = bsg_extract(T, energy_fraction(T))
            assert len(rep.set) >= V.size
            assert rep.doubling <= 2
            assert rep.doubling == doubling(rep.set)
            assert rep.set.issubset(T)

    def test_low_energy_error_path(self):
        rng = random.Random(3)
        # rejection-sample a Sidon set: only the forced quadruples survive
        while True:
            T = PointSet(6, tuple(rng.sample(range(64), 8)))
            if additive_energy(T).energy == 3 * len(T) ** 2 - 2 * len(T):
                break
        frac = energy_fraction(T)
        # demand the whole of T with doubling at most 1: impossible, T is no coset
        tight = BSGConfig(density_scale=1 / frac, doubling_scale=frac)
        with pytest.raises(StageError):
            bsg_extract(T, frac, tight)

    def test_precondition(self):
        T = PointSet(4, (1, 2, 4, 8))
        with pytest.raises(ValueError):
            bsg_extract(T, 1)

    @settings(max_examples=30, deadline=None)
    @given(point_sets)
    def test_report_is_self_consistent(self, T):
        try:
            rep = bsg_extract(T, energy_fraction(T))
        except StageError:
            return
        assert rep.set.issubset(T)
        assert rep == doubling_report(rep.set)

    def test_oracle(self):
        R = PointSet(4, (0, 1, 2, 3, 4, 8))
        rep = largest_small_doubling_subset(R, 1)
        assert rep.doubling == 1 and len(rep.set) == 4


class TestChangCover:
    def test_subspace_needs_nothing(self):
        X = PointSet(4, tuple(subspace_from_generators([3, 4], 4)))
        assert chang_cover(X, 4) == []

    def test_two_points(self):
        # 2X = {0, e1} and 3X = {0, e1}: already covered
        X = PointSet(4, (0, 1))
        assert chang_cover(X, 1) == []

    def test_zero_and_basis(self):
        X = PointSet(4, (0, 1, 2, 4))
        T = chang_cover(X, 3)
        assert len(T) <= 3 and set(T) <= set(X)
        span = brute_span(T, 4)
        two = brute_sumset(X, X)
        three = brute_sumset(two, X)
        assert set(three) <= {v ^ s for v in span for s in two}

    @settings(max_examples=40)
    @given(point_sets)
    def test_postcondition(self, X):
        T = chang_cover(X, X.n)
        assert set(T) <= set(X)
        span = brute_span(T, X.n)
        two = brute_sumset(X, X)
        three = brute_sumset(two, X)
        assert set(three) <= {v ^ s for v in span for s in two}
