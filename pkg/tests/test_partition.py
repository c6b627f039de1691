from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weylexit.partition import (
    DriftVector,
    ParseError,
    StartVector,
    coalescing_groups,
    groups_to_boundaries,
    is_irreducible,
    is_stable,
    parse_vector,
    partition_dict,
    stable_partition,
    stable_partitions_brute_force,
    strong_representation,
)

small_ints = st.integers(-4, 4)
drifts = st.lists(small_ints, min_size=1, max_size=8)
rational = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def mean(v):
    return sum(v, Fraction(0)) / len(v)


@pytest.mark.parametrize("a,expected", [((3, 1), True), ((1, 2), False), ((3, 1, 2), False),
                                        ((5,), True), ((1, 1), False), ((2, 0), True)])
def test_is_irreducible_examples(a, expected):
    assert is_irreducible(a) is expected


def test_example_partition():
    p = stable_partition((3, 1, 2, 5, 1))
    assert p.m == (2, 3, 5)
    assert p.nu == (2, 1, 2)
    assert p.f_block == (2, 2, 3)
    assert p.f_full == (2, 2, 2, 3, 3)
    sr = strong_representation(p)
    assert sr.m_prime == (3, 5)
    assert sr.nu_prime == (3, 2)
    assert sr.q_prime == 2
    assert sr.k0 == 4
    assert sr.source_indices == (2, 3)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_equal_drifts_give_singletons(n):
    p = stable_partition([Fraction(7, 3)] * n)
    assert p.m == tuple(range(1, n + 1))
    assert set(p.f_block) == {Fraction(7, 3)}
    sr = strong_representation(p)
    assert sr.m_prime == (n,) and sr.k0 == comb(n, 2)


def test_two_zero_three():
    p = stable_partition((2, 0, 3))
    assert (p.m, p.nu, p.f_block) == ((2, 3), (2, 1), (1, 3))


def test_strictly_increasing():
    p = stable_partition((0, 1, 2, 3))
    sr = strong_representation(p)
    assert p.m == sr.m_prime == (1, 2, 3, 4)
    assert sr.k0 == 0


@given(drifts)
def test_partition_invariants(a):
    p = stable_partition(a)
    vals = DriftVector.of(a).values
    assert sum(p.nu) == len(a)
    assert all(u <= v for u, v in zip(p.f_block, p.f_block[1:]))
    for blk, f in zip(p.blocks(), p.f_block):
        block = vals[blk.start:blk.stop]
        assert is_irreducible(block)
        assert mean(block) == f
    sr = strong_representation(p)
    means = [p.f_block[i - 1] for i in sr.source_indices]
    assert all(u < v for u, v in zip(means, means[1:]))
    assert sr.q_prime == 1 + sum(u < v for u, v in zip(p.f_block, p.f_block[1:]))
    assert set(sr.m_prime) <= set(p.m) and sr.m_prime[-1] == len(a)
    assert (sr.k0 == 0) == all(v == 1 for v in sr.nu_prime)


@given(st.lists(small_ints, min_size=1, max_size=6))
def test_unique_by_exhaustive_search(a):
    assert stable_partitions_brute_force(a) == [stable_partition(a).m]


@given(st.lists(rational, min_size=1, max_size=6))
def test_unique_rational(a):
    assert stable_partitions_brute_force(a) == [stable_partition(a).m]


@given(drifts, st.integers(-3, 3))
def test_shift_invariance(a, c):
    assert stable_partition(a).m == stable_partition([v + c for v in a]).m


@given(st.lists(small_ints, min_size=2, max_size=8).filter(is_irreducible))
def test_irreducible_prefix_means_dominate(a):
    vals = [Fraction(v) for v in a]
    total = mean(vals)
    for k in range(1, len(vals)):
        assert mean(vals[:k]) > total > mean(vals[k:])


@given(st.lists(small_ints, min_size=1, max_size=4).filter(is_irreducible),
       st.lists(small_ints, min_size=1, max_size=4).filter(is_irreducible))
def test_concatenation_of_irreducible(u, v):
    if mean([Fraction(x) for x in u]) > mean([Fraction(x) for x in v]):
        assert is_irreducible(u + v)


def test_coalescing_example():
    assert coalescing_groups((0, 1, 2, 3, 4), (3, 1, 2, 5, 1)) == [[1, 2], [3], [4, 5]]
    assert coalescing_groups((0, 1), (0, 1)) == [[1], [2]]
    assert coalescing_groups((0, 1), (1, 0)) == [[1, 2]]


def test_coalescing_simultaneous_hits():
    # both pairs meet at t=1 and the merged clusters then separate
    assert coalescing_groups((0, 1, 10, 11), (1, 0, 1, 0)) == [[1, 2], [3, 4]]
    # three-way meeting at one instant
    assert coalescing_groups((0, 1, 2), (1, 0, -1)) == [[1, 2, 3]]


@given(drifts.filter(lambda a: len(a) >= 2),
       st.lists(st.floats(0.01, 5), min_size=8, max_size=8))
def test_coalescing_matches_partition(a, gaps):
    x = np.cumsum([0.0] + gaps[:len(a) - 1])
    assert groups_to_boundaries(coalescing_groups(x, a)) == stable_partition(a).m


def test_coalescing_rejects_outside_chamber():
    with pytest.raises(ValueError):
        coalescing_groups((0, 0), (1, 0))


def test_is_stable_direct():
    assert is_stable((3, 1, 2, 5, 1), (2, 3, 5))
    assert not is_stable((3, 1, 2, 5, 1), (1, 3, 5))


def test_parse_vector():
    assert parse_vector("1/2, -1/3,0.25") == [Fraction(1, 2), Fraction(-1, 3), Fraction(1, 4)]
    with pytest.raises(ParseError):
        parse_vector("1,,2")
    with pytest.raises(ParseError):
        parse_vector("1,a")


def test_rational_ties_are_exact():
    # mean(0.3, 0.1) ties 0.2 exactly when read as decimals
    p = stable_partition(parse_vector("0.3,0.1,0.2"))
    assert p.m == (2, 3) and p.f_block == (Fraction(1, 5), Fraction(1, 5))
    assert stable_partition(parse_vector("1/3,1/3")).m == (1, 2)


def test_float_tolerance():
    a = DriftVector.of([0.1 + 0.2, 0.3])
    assert a.tol == Fraction(1e-12)
    assert stable_partition(a).m == (1, 2)
    exact = DriftVector.of([0.1 + 0.2, 0.3], tol=0)
    assert stable_partition(exact).m == (2,)


def test_start_vector_validation():
    with pytest.raises(ValueError, match="Weyl chamber"):
        StartVector.of((1, 1))
    assert StartVector.of("0,1/2,2").values == (0.0, 0.5, 2.0)


def test_partition_dict_shape():
    d = partition_dict(stable_partition((3, 1, 2, 5, 1)))
    assert d == {"m": [2, 3, 5], "nu": [2, 1, 2], "f_block": [2.0, 2.0, 3.0],
                 "m_prime": [3, 5], "q": 3, "q_prime": 2, "k0": 4}
