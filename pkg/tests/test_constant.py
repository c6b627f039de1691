import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weylexit.asymptotics import c_const
from weylexit.constant import (
    FLAGS,
    AsymptoticRegimeError,
    ConstantReport,
    constant_direct,
    constant_extracted,
    difference_matrix,
    equal_drift_D,
    gram_entry,
    gram_matrix,
)
from weylexit.numerics import CapabilityError

C_PAIR = 2 ** 1.5 / (4 * math.sqrt(2 * math.pi))


def mehta_D(n):
    """c_n / n! * prod_j Gamma(1 + j/2) / Gamma(3/2), from the Selberg-type Gaussian integral."""
    prod = math.prod(math.gamma(1 + j / 2) / math.gamma(1.5) for j in range(1, n + 1))
    return c_const(n) / math.factorial(n) * prod


def test_gram_n3():
    G = gram_matrix(3).entries
    assert np.allclose(G[:2, :2], [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-14)
    assert np.allclose(G[2], [0, 0, 1 / 3], atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
def test_gram_closed_form_and_last_row(n):
    G = gram_matrix(n).entries
    for k in range(1, n):
        for l in range(1, n):
            assert abs(G[k - 1, l - 1] - float(gram_entry(k, l, n))) < 1e-12
    assert np.allclose(G[n - 1, :n - 1], 0, atol=1e-12)
    assert abs(G[n - 1, n - 1] - 1 / n) < 1e-12
    assert gram_entry(1, n - 1, n) == Fraction(1, n)


def test_gram_quadratic_form_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        z = rng.normal(size=n)
        s = difference_matrix(n) @ z
        assert abs(gram_matrix(n).quadratic_form(s) - z @ z) < 1e-10 * (1 + z @ z)


def test_gram_rejects_n1():
    with pytest.raises(ValueError):
        gram_matrix(1)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_equal_drift_D_matches_closed_form(n):
    assert abs(equal_drift_D(n) / mehta_D(n) - 1) < 1e-8


def test_equal_drift_D_values():
    assert abs(equal_drift_D(2) - 1 / math.sqrt(math.pi)) < 1e-10
    with pytest.raises(CapabilityError):
        equal_drift_D(5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_direct_equal_drifts_is_D(n):
    assert abs(constant_direct([0] * n).c_direct / mehta_D(n) - 1) < 1e-8


@pytest.mark.parametrize("a", [(1, -1), (2, 0, 3)])
def test_direct_pair_constant(a):
    rep = constant_direct(a)
    assert abs(rep.c_direct - C_PAIR) < 1e-10
    assert rep.flags == FLAGS


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=3), st.integers(-20, 20))
def test_direct_shift_invariant(a, shift):
    base = constant_direct(a).c_direct
    moved = constant_direct([v + shift for v in a]).c_direct
    assert abs(moved - base) <= 1e-8 * base


def test_direct_factors_multiply():
    rep = constant_direct((3, 1, 2, 5))
    assert abs(rep.a1 * rep.a2 * rep.a3 - rep.c_direct) < 1e-15
    assert rep.error < 1e-10 * rep.c_direct


def test_extracted_pair():
    rep = constant_extracted((0, 1), (1, -1), t_grid=[16, 32, 64, 128, 256, 512])
    assert abs(rep.c_extracted / C_PAIR - 1) < 0.02
    assert all(u > w for u, w in zip(rep.increments, rep.increments[1:]))


def test_extracted_oracles_agree():
    grid = [16, 32, 64, 128, 256, 512]
    e = constant_extracted((0, 1), (1, -1), t_grid=grid).c_extracted
    c = constant_extracted((0, 1), (1, -1), t_grid=grid, oracle="closed2").c_extracted
    assert abs(e / c - 1) < 1e-8


def test_extracted_km_equal_drifts():
    rep = constant_extracted((0, 1, 2), (0, 0, 0), t_grid=[100, 300, 1000, 3000, 10000], oracle="km")
    assert abs(rep.c_extracted / mehta_D(3) - 1) < 1e-3


def test_extracted_matches_direct_three_particles():
    grid = [400, 800, 1600, 3200, 6400, 12800]
    rep = constant_extracted((0, 1, 2), (1, 0, -1), t_grid=grid)
    assert abs(rep.c_extracted / constant_direct((1, 0, -1)).c_direct - 1) < 0.01


def test_extracted_independent_of_start():
    grid = [16, 32, 64, 128, 256, 512]
    vals = [constant_extracted((0, g), (1, -1), t_grid=grid).c_extracted for g in (0.5, 1.0, 2.0)]
    assert max(vals) / min(vals) - 1 < 0.02


def test_bad_grid_raises_regime_error():
    with pytest.raises(AsymptoticRegimeError):
        constant_extracted((0, 5), (1, -1), t_grid=[0.01, 0.02, 0.05, 0.1, 1.0])


def test_extraction_input_checks():
    with pytest.raises(ValueError):
        constant_extracted((0, 1), (1, -1), t_grid=[1, 2, 3])
    with pytest.raises(ValueError):
        constant_extracted((0, 1), (1, -1), t_grid=[1, 2, 3, 4], oracle="nope")
    with pytest.raises(ValueError):
        constant_extracted((0, 1), (1, -1), t_grid=[1, 2, 3, 4], oracle="km")


def test_report_validation_and_dict():
    with pytest.raises(ValueError):
        ConstantReport(-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ConstantReport(1.0, 1.0, 1.0, fit_residual=-1.0)
    d = constant_direct((1, -1)).to_dict()
    assert set(d) >= {"a1", "a2", "a3", "c_direct", "c_extracted", "fit_residual", "flags"}


def test_direct_capability_limit():
    with pytest.raises(CapabilityError):
        constant_direct((0, 0, 0, 0, 0))
