"""Exponents, prefactor and determinant expansion of the collision-time tail.

For drifts ``a`` with stable partition ``p`` and strong representation
``sr`` the tail behaves like ``C h(x) t^(-alpha) exp(-gamma t)``.  This module
computes ``gamma``, ``alpha`` (as an exact Fraction) and ``h``, plus the small
algebraic helpers used throughout: Vandermonde products, the ``H`` polynomial
and Schur ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .numerics import complete_homogeneous, exp_det_factored, scaled_slogdet
from .partition import (
    DriftVector,
    StablePartition,
    StartVector,
    StrongRepresentation,
    stable_partition,
    strong_representation,
)


def c_const(m: int) -> float:
    """``c_m = 1 / prod_{j=1}^{m-1} j!``."""
    return 1.0 / math.prod(math.factorial(j) for j in range(1, m))


def _check_consistent(a: DriftVector, p: StablePartition):
    if p.n != a.n:
        raise ValueError(f"partition covers {p.n} coordinates, drift vector has {a.n}")
    for blk, f in zip(p.blocks(), p.f_block):
        vals = a.values[blk.start:blk.stop]
        if sum(vals, Fraction(0)) / len(vals) != f:
            raise ValueError("partition block means do not match the drift vector")


def gamma(a, p: StablePartition | None = None) -> float:
    """Exponential decay rate ``1/2 sum_l (1/nu_l) sum_{u<v in l} (a_u - a_v)^2``."""
    a = DriftVector.of(a)
    if p is None:
        p = stable_partition(a)
    _check_consistent(a, p)
    total = Fraction(0)
    for blk in p.blocks():
        vals = a.values[blk.start:blk.stop]
        s = sum(((vals[u] - vals[v]) ** 2 for u in range(len(vals)) for v in range(u + 1, len(vals))),
                Fraction(0))
        total += s / len(vals)
    return float(total / 2)


def alpha(p: StablePartition, sr: StrongRepresentation | None = None) -> Fraction:
    """Polynomial exponent, exact: ``(sum C(nu'_j,2) + (n - q) + sum C(nu_j,2)) / 2``."""
    if sr is None:
        sr = strong_representation(p)
    return Fraction(sr.k0 + (p.n - p.q) + sum(comb(v, 2) for v in p.nu), 2)


@dataclass(frozen=True)
class HPrefactor:
    """``h(x) = exp(-<x, drift>) det[exp(x_i f_j) x_i^{p_j}]``."""

    drift: np.ndarray
    f: np.ndarray
    p: np.ndarray

    def to_dict(self) -> dict:
        return {"drift": self.drift.tolist(), "f": self.f.tolist(), "p": [int(v) for v in self.p]}


def h_descriptor(a, p: StablePartition | None = None, sr: StrongRepresentation | None = None) -> HPrefactor:
    a = DriftVector.of(a)
    if p is None:
        p = stable_partition(a)
    if sr is None:
        sr = strong_representation(p)
    _check_consistent(a, p)
    powers = np.zeros(a.n, dtype=int)
    for blk in sr.blocks():
        powers[blk.start:blk.stop] = np.arange(len(blk))
    f = np.array([float(v) for v in p.f_full])
    return HPrefactor(a.array(), f, powers)


def _h_matrix_log(hp: HPrefactor, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise (sign, log|.|) of ``exp(x_i f_j) x_i^{p_j}``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logabs = np.outer(x, hp.f) + np.where(hp.p[None, :] > 0, hp.p[None, :] * np.log(np.abs(x))[:, None], 0.0)
    sign = np.where(hp.p[None, :] % 2 == 1, np.sign(x)[:, None], 1.0) * np.ones((len(x), len(hp.f)))
    return sign, logabs


def h_matrix(hp: HPrefactor, x) -> np.ndarray:
    sign, logabs = _h_matrix_log(hp, np.asarray(x, dtype=float))
    return sign * np.exp(logabs)


def log_h(hp: HPrefactor, x) -> tuple[float, float]:
    """``(sign, log|h(x)|)`` computed on an equilibrated matrix."""
    xs = StartVector.of(x).array()
    if len(xs) != len(hp.f):
        raise ValueError("start vector length does not match the prefactor")
    sign, logabs = _h_matrix_log(hp, xs)
    # equilibrate in log space before exponentiating
    finite = np.where(np.isfinite(logabs), logabs, -np.inf)
    row = np.max(finite, axis=1, keepdims=True)
    scaled = finite - row
    col = np.max(scaled, axis=0, keepdims=True)
    mat = sign * np.exp(scaled - col)
    s, ld = scaled_slogdet(mat)
    return float(s), float(ld + row.sum() + col.sum() - float(xs @ hp.drift))


def h_eval(hp: HPrefactor, x) -> float:
    s, ld = log_h(hp, x)
    return s * math.exp(ld) if s != 0 else 0.0


def vandermonde(z: Sequence[float]) -> float:
    """``prod_{i<j} (z_j - z_i)``."""
    z = list(z)
    return math.prod(z[j] - z[i] for i in range(len(z)) for j in range(i + 1, len(z)))


def big_h(s: Sequence[float]) -> float:
    """``H(s_1..s_l) = prod_{i<j<=l+1} (s_i + ... + s_{j-1})``.

    This is the Vandermonde product of the partial sums ``0, s_1, s_1+s_2, ...``,
    computed from the gap sums directly.
    """
    s = list(s)
    out = 1.0
    for i in range(len(s)):
        acc = 0.0
        for j in range(i, len(s)):
            acc += s[j]
            out *= acc
    return out


def big_h_array(s: np.ndarray) -> np.ndarray:
    """Vectorized :func:`big_h` over the last axis."""
    s = np.asarray(s, dtype=float)
    out = np.ones(s.shape[:-1])
    for i in range(s.shape[-1]):
        acc = np.zeros(s.shape[:-1])
        for j in range(i, s.shape[-1]):
            acc = acc + s[..., j]
            out = out * acc
    return out


def schur_ratio(k: Sequence[int], z: Sequence[float]) -> float:
    """``det[z_i^{k_j}] / det[z_i^{j-1}]`` for strictly increasing ``k >= 0``.

    Evaluated as the Schur polynomial ``s_lambda(z)`` with
    ``lambda_{n+1-j} = k_j - (j-1)`` through the Jacobi-Trudi determinant, so
    repeated entries of ``z`` need no special treatment.
    """
    k = [int(v) for v in k]
    z = np.asarray(z, dtype=float)
    n = len(k)
    if len(z) != n:
        raise ValueError(f"dimension mismatch: |k|={n}, |z|={len(z)}")
    if any(v < 0 for v in k) or any(b <= a for a, b in zip(k, k[1:])):
        raise ValueError("k must be strictly increasing nonnegative integers")
    if n == 0:
        return 1.0
    lam = [k[n - 1 - i] - (n - 1 - i) for i in range(n)]  # descending
    kmax = max(lam) + n
    h = complete_homogeneous(z, kmax)

    def hh(r):
        return h[r] if 0 <= r <= kmax else 0.0

    m = np.array([[hh(lam[i] - i + j) for j in range(n)] for i in range(n)])
    return float(np.linalg.det(m))


def _clusters(f: np.ndarray):
    """Split column indices into runs of equal ``f`` (input need not be sorted)."""
    order = np.argsort(f, kind="stable")
    runs, cur = [], [order[0]]
    for j in order[1:]:
        if f[j] == f[cur[-1]]:
            cur.append(j)
        else:
            runs.append(cur)
            cur = [j]
    runs.append(cur)
    return order, runs


def _perm_sign(order) -> int:
    order = list(order)
    sign, seen = 1, [False] * len(order)
    for i in range(len(order)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = order[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return sign


def perturbed_det(x, z, f, t: float) -> float:
    """``det[exp(x_i (z_j / sqrt(t) + f_j))]``.

    Columns sharing an ``f`` value are rewritten as divided differences, so the
    ``t^(-k0/2)`` smallness is carried by explicit node differences instead of
    emerging from cancellation.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if not (len(x) == len(z) == len(f)):
        raise ValueError("x, z and f must have equal length")
    if t <= 0:
        raise ValueError("t must be positive")
    order, runs = _clusters(f)
    rt = math.sqrt(t)
    centers = [float(f[r[0]]) for r in runs]
    nodes = [z[r] / rt for r in runs]
    vand, det_dd = exp_det_factored(x, centers, nodes)
    return _perm_sign([j for r in runs for j in r]) * float(vand) * float(det_dd)


def leading_term(x, z, hp: HPrefactor, sr: StrongRepresentation, t: float) -> float:
    """Leading large-``t`` term of :func:`perturbed_det`:
    ``t^(-k0/2) prod c_{nu'} prod Delta(z_block) det[exp(x_k f_j) x_k^{p_j}]``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    coeff = math.prod(c_const(v) for v in sr.nu_prime)
    vand = math.prod(vandermonde(z[b.start:b.stop]) for b in sr.blocks())
    return t ** (-sr.k0 / 2) * coeff * vand * float(np.linalg.det(h_matrix(hp, x)))


@dataclass(frozen=True)
class AsymptoticLaw:
    gamma: float
    alpha: Fraction
    h: HPrefactor

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "alpha_num": self.alpha.numerator,
                "alpha_den": self.alpha.denominator, "h": self.h.to_dict()}


def asymptotic_law(a) -> AsymptoticLaw:
    a = DriftVector.of(a)
    p = stable_partition(a)
    sr = strong_representation(p)
    return AsymptoticLaw(gamma(a, p), alpha(p, sr), h_descriptor(a, p, sr))


def centered_square_sum(a) -> float:
    """``sum_i (mean(a) - a_i)^2``."""
    a = np.asarray(a, dtype=float)
    return float(np.sum((a.mean() - a) ** 2))


def pair_square_sum(a) -> float:
    """``(1/m) sum_{u<v} (a_u - a_v)^2``; equals :func:`centered_square_sum`."""
    a = np.asarray(a, dtype=float)
    d = np.subtract.outer(a, a)
    return float(np.sum(np.triu(d * d, 1)) / len(a))


def centered_cross_sum(z, a) -> float:
    """``sum_i z_i (mean(a) - a_i)``."""
    z, a = np.asarray(z, dtype=float), np.asarray(a, dtype=float)
    return float(z @ (a.mean() - a))


def pair_cross_sum(z, a) -> float:
    """``(1/m) sum_{u<v} (z_v - z_u)(a_u - a_v)``; equals :func:`centered_cross_sum`."""
    z, a = np.asarray(z, dtype=float), np.asarray(a, dtype=float)
    prod = np.subtract.outer(z, z).T * np.subtract.outer(a, a)
    return float(np.sum(np.triu(prod, 1)) / len(a))


def shifted_square_expansion(z, a, t: float) -> float:
    """``|z|^2 + 2 gamma t + 2 sqrt(t) sum_blocks pair_cross_sum``: the
    block-wise expansion of ``|f sqrt(t) - a sqrt(t) + z|^2``."""
    a = DriftVector.of(a)
    p = stable_partition(a)
    z = np.asarray(z, dtype=float)
    av = a.array()
    cross = sum(pair_cross_sum(z[b.start:b.stop], av[b.start:b.stop]) for b in p.blocks())
    return float(z @ z) + 2 * gamma(a, p) * t + 2 * math.sqrt(t) * cross
