import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from weylexit.asymptotics import (
    alpha,
    asymptotic_law,
    big_h,
    big_h_array,
    centered_cross_sum,
    centered_square_sum,
    gamma,
    h_descriptor,
    h_eval,
    leading_term,
    log_h,
    pair_cross_sum,
    pair_square_sum,
    perturbed_det,
    schur_ratio,
    shifted_square_expansion,
    vandermonde,
)
from weylexit.partition import stable_partition, strong_representation

drifts = st.lists(st.integers(-4, 4), min_size=2, max_size=6)


def increasing(n, lo=-2.0, hi=2.0):
    return st.lists(st.floats(lo, hi), min_size=n, max_size=n, unique=True).map(sorted).filter(
        lambda v: min(np.diff(v)) > 1e-3)


def test_gamma_examples():
    assert gamma((2, 0, 3)) == 1.0
    assert gamma((0, 0, 0)) == 0.0
    assert gamma((3, 1, 2, 5, 1)) == 5.0
    with pytest.raises(ValueError):
        gamma((2, 0, 3), stable_partition((0, 0, 0)))


@given(drifts)
def test_gamma_centered_form(a):
    p = stable_partition(a)
    centered = 0.5 * sum(centered_square_sum(np.array(a[b.start:b.stop], float)) for b in p.blocks())
    assert math.isclose(gamma(a), centered, rel_tol=1e-12, abs_tol=1e-12)
    assert (gamma(a) == 0) == all(v == 1 for v in p.nu)


def test_alpha_examples():
    assert alpha(stable_partition((0, 0, 0))) == Fraction(3, 2)
    assert alpha(stable_partition((2, 0, 3))) == Fraction(3, 2)
    assert alpha(stable_partition((3, 1, 2, 5, 1))) == 4


@given(drifts, st.integers(-5, 5))
def test_exponents_shift_invariant(a, c):
    b = [v + c for v in a]
    assert gamma(a) == gamma(b)
    assert alpha(stable_partition(a)) == alpha(stable_partition(b))
    al = alpha(stable_partition(a))
    assert al >= 0 and (2 * al).denominator == 1


def test_h_descriptor_examples():
    hp = h_descriptor((0, 0, 0))
    assert list(hp.p) == [0, 1, 2] and list(hp.f) == [0, 0, 0]
    hp = h_descriptor((0, 1, 2))
    assert list(hp.p) == [0, 0, 0] and list(hp.f) == [0, 1, 2]
    hp = h_descriptor((2, 0, 3))
    assert list(zip(hp.f, hp.p)) == [(1, 0), (1, 1), (3, 0)]


def test_h_eval_examples():
    assert math.isclose(h_eval(h_descriptor((1, -1)), (0, 1)), math.e, rel_tol=1e-14)
    assert math.isclose(h_eval(h_descriptor((0, 0, 0)), (1, 2, 3)), 2.0, rel_tol=1e-14)
    assert math.isclose(h_eval(h_descriptor((2, 0)), (0, 1)), math.e, rel_tol=1e-14)
    with pytest.raises(ValueError):
        h_eval(h_descriptor((2, 0)), (1, 0))


@given(drifts.filter(lambda a: len(a) <= 4), st.integers(-3, 3), st.data())
def test_h_shift_invariance(a, c, data):
    x = data.draw(increasing(len(a)))
    h1 = h_eval(h_descriptor(a), x)
    h2 = h_eval(h_descriptor([v + c for v in a]), x)
    assert math.isclose(h1, h2, rel_tol=1e-10, abs_tol=1e-300)


@given(drifts.filter(lambda a: len(a) <= 4), st.data())
def test_h_matches_mpmath(a, data):
    x = data.draw(increasing(len(a), -10, 10))
    hp = h_descriptor(a)
    mp.mp.dps = 60
    M = mp.matrix([[mp.exp(mp.mpf(xi) * mp.mpf(fj)) * mp.mpf(xi) ** int(pj) for fj, pj in zip(hp.f, hp.p)]
                   for xi in x])
    ref = mp.exp(-sum(mp.mpf(xi) * ai for xi, ai in zip(x, a))) * mp.det(M)
    s, lv = log_h(hp, x)
    assert s == mp.sign(ref)
    assert abs(lv - float(mp.log(abs(ref)))) < 1e-9


def test_strong_block_exponents_agree():
    # f at the strong-representation boundaries equals the means at m_{i_l}
    p = stable_partition((3, 1, 2, 5, 1))
    sr = strong_representation(p)
    hp = h_descriptor((3, 1, 2, 5, 1), p, sr)
    for m_prime, i in zip(sr.m_prime, sr.source_indices):
        assert hp.f[m_prime - 1] == float(p.f_block[i - 1]) == float(p.f_full[p.m[i - 1] - 1])


def test_big_h_examples():
    assert big_h([2.0]) == 2.0
    assert big_h([1.0, 1.0]) == 2.0
    assert big_h([]) == 1.0


@given(st.lists(st.floats(0, 3), min_size=0, max_size=5))
def test_big_h_is_vandermonde_of_partial_sums(s):
    partial = [Fraction(0)]
    for v in s:
        partial.append(partial[-1] + Fraction(v))
    exact = math.prod(partial[j] - partial[i] for i in range(len(partial)) for j in range(i + 1, len(partial)))
    assert math.isclose(big_h(s), float(exact), rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(big_h_array(np.array([s]))[0], big_h(s), rel_tol=1e-12, abs_tol=1e-300)


def test_vandermonde_examples():
    assert vandermonde([1, 2, 3]) == 2
    assert vandermonde([5]) == 1
    assert vandermonde([0, 1, 3, 6]) == 540


def test_schur_ratio_examples():
    assert math.isclose(schur_ratio((0, 1, 2), (0.3, -1.0, 2.5)), 1.0)
    assert math.isclose(schur_ratio((0, 2), (1, 2)), 3.0)
    assert math.isclose(schur_ratio((1, 2), (1, 2)), 2.0)
    # repeated entries take the polynomial limit
    assert math.isclose(schur_ratio((0, 2), (1, 1)), 2.0)
    with pytest.raises(ValueError):
        schur_ratio((0, 1), (1, 2, 3))
    with pytest.raises(ValueError):
        schur_ratio((1, 1), (1, 2))


@given(st.lists(st.integers(0, 6), min_size=1, max_size=4, unique=True).map(sorted), st.data())
def test_schur_ratio_against_bialternant(k, data):
    z = data.draw(st.lists(st.floats(-2, 2), min_size=len(k), max_size=len(k), unique=True))
    gaps = np.abs(np.subtract.outer(z, z)) + np.eye(len(z))
    assume(gaps.min() > 0.05)
    num = np.linalg.det(np.power.outer(np.array(z), np.array(k, dtype=float)))
    den = vandermonde(z)
    assert math.isclose(schur_ratio(k, z), num / den, rel_tol=1e-7, abs_tol=1e-7)


def mp_det(M):
    # mpmath's LU raises on exactly singular input
    try:
        return float(mp.det(M))
    except (TypeError, ZeroDivisionError):
        return 0.0


def test_perturbed_det_examples():
    assert math.isclose(perturbed_det((0, 1), (0, 1), (0, 0), 1.0), math.e - 1, rel_tol=1e-13)
    x, f = np.array([0.0, 0.4, 1.1]), np.array([-1.0, 0.5, 2.0])
    ref = np.linalg.det(np.exp(np.outer(x, f)))
    assert math.isclose(perturbed_det(x, np.zeros(3), f, 1e12), ref, rel_tol=1e-10)


@given(drifts.filter(lambda a: len(a) <= 4), st.sampled_from([1.0, 1e2, 1e4, 1e8]), st.data())
def test_perturbed_det_matches_mpmath(a, t, data):
    n = len(a)
    x = data.draw(increasing(n, 0, 1))
    z = data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    f = h_descriptor(a).f
    mp.mp.dps = 80
    M = mp.matrix([[mp.exp(mp.mpf(xi) * (mp.mpf(zj) / mp.sqrt(t) + mp.mpf(fj))) for zj, fj in zip(z, f)]
                   for xi in x])
    ref = mp_det(M)
    got = perturbed_det(x, z, f, t)
    scale = float(np.abs(np.exp(np.outer(x, np.array(z) / math.sqrt(t) + f))).sum(0).max()) ** n
    assert abs(got - ref) <= 1e-9 * abs(ref) + 1e-15 * scale


def test_leading_term_examples():
    x, z, t = np.array([0.2, 0.7]), np.array([0.1, 0.9]), 50.0
    a = (0.3, 0.3)
    p = stable_partition(a)
    sr = strong_representation(p)
    lt = leading_term(x, z, h_descriptor(a, p, sr), sr, t)
    expected = t ** -0.5 * (z[1] - z[0]) * (x[1] - x[0]) * math.exp(0.3 * x.sum())
    assert math.isclose(lt, expected, rel_tol=1e-12)
    a = (0, 1, 2)
    p = stable_partition(a)
    sr = strong_representation(p)
    x = np.array([0.0, 0.5, 1.0])
    lt = leading_term(x, np.zeros(3), h_descriptor(a, p, sr), sr, 7.0)
    assert math.isclose(lt, np.linalg.det(np.exp(np.outer(x, [0, 1, 2]))), rel_tol=1e-12)


@pytest.mark.parametrize("a", [(0, 0), (0, 0, 0), (2, 0, 3), (3, 1, 2, 5), (1, -1, 0, 0)])
def test_leading_term_converges(a):
    rng = np.random.default_rng(7)
    n = len(a)
    x, z = np.sort(rng.random(n)), rng.random(n)
    p = stable_partition(a)
    sr = strong_representation(p)
    hp = h_descriptor(a, p, sr)
    dev = [abs(perturbed_det(x, z, hp.f, t) / leading_term(x, z, hp, sr, t) - 1) for t in (1e2, 1e3, 1e4)]
    assert dev[0] > dev[1] > dev[2] and dev[2] < 0.05


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_square_identity(a):
    assert math.isclose(centered_square_sum(a), pair_square_sum(a), rel_tol=1e-9, abs_tol=1e-9)


def test_cross_identity_constant_by_brute_force():
    # fix the constant c in  sum z_i (mean a - a_i) = (c/m) sum_{u<v} (z_v - z_u)(a_u - a_v)
    rng = np.random.default_rng(0)
    consts = []
    for _ in range(200):
        m = int(rng.integers(2, 9))
        z, a = rng.normal(size=m), rng.normal(size=m)
        pairs = sum((z[v] - z[u]) * (a[u] - a[v]) for u in range(m) for v in range(u + 1, m))
        consts.append(m * centered_cross_sum(z, a) / pairs)
    assert np.allclose(consts, 1.0, rtol=1e-9)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=8))
def test_cross_identity(pairs):
    z, a = np.array(pairs).T
    assert math.isclose(centered_cross_sum(z, a), pair_cross_sum(z, a), rel_tol=1e-9, abs_tol=1e-9)


@given(drifts, st.floats(0.01, 100), st.data())
def test_shifted_square_expansion(a, t, data):
    z = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=len(a), max_size=len(a))))
    f = np.array([float(v) for v in stable_partition(a).f_full])
    direct = float(np.sum((f * math.sqrt(t) - np.array(a, float) * math.sqrt(t) + z) ** 2))
    assert math.isclose(direct, shifted_square_expansion(z, a, t), rel_tol=1e-9, abs_tol=1e-9)


def test_law_serialization():
    d = asymptotic_law((2, 0, 3)).to_dict()
    assert d["gamma"] == 1.0 and (d["alpha_num"], d["alpha_den"]) == (3, 2)
    assert d["h"] == {"drift": [2.0, 0.0, 3.0], "f": [1.0, 1.0, 3.0], "p": [0, 1, 0]}
