"""The multiplicative constant of the tail law.

``C`` is the limit of ``P_x(tau > t) / (h(x) t^(-alpha) exp(-gamma t))``.  It
is computed two ways: directly as a product of three factors (a closed-form
normalization, orthant integrals over the gaps inside stable blocks, and a
Gaussian integral over the gaps between blocks), and by fitting the exact tail
on a grid of times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .asymptotics import AsymptoticLaw, asymptotic_law, c_const, log_h
from .exact_tail import MAX_N, i_integral_result, km_survival, tail_exact, tail_n2_closed
from .numerics import CapabilityError, QuadratureSpec, gauss_laguerre_orthant, tensor_quadrature
from .partition import (
    DriftVector,
    StablePartition,
    StartVector,
    StrongRepresentation,
    stable_partition,
    strong_representation,
)

FLAGS = {
    "mean_jacobian": "1/n",
    "gram_convention": "k(n-l)/n",
    "between_block_variables": "m_1..m_(q-1)",
}


class AsymptoticRegimeError(RuntimeError):
    """The fitted residuals do not settle down: the grid is not asymptotic yet."""


@dataclass(frozen=True)
class GramMatrix:
    n: int
    entries: np.ndarray

    def quadratic_form(self, s) -> float:
        s = np.asarray(s, dtype=float)
        return float(s @ self.entries @ s)


def difference_matrix(n: int) -> np.ndarray:
    """Rows ``e_{k+1} - e_k`` for k < n, last row all ones."""
    A = np.zeros((n, n))
    for k in range(n - 1):
        A[k, k], A[k, k + 1] = -1.0, 1.0
    A[n - 1, :] = 1.0
    return A


def gram_matrix(n: int) -> GramMatrix:
    """``(A^-1)^T A^-1``: the form with ``|z|^2 = (Az)^T G (Az)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    Ainv = np.linalg.inv(difference_matrix(n))
    G = Ainv.T @ Ainv
    return GramMatrix(n, 0.5 * (G + G.T))


def gram_entry(k: int, l: int, n: int) -> Fraction:
    """Closed form of the gap block (1-based ``k, l < n``)."""
    k, l = min(k, l), max(k, l)
    return Fraction(k * (n - l), n)


@dataclass
class ConstantReport:
    a1: float
    a2: float
    a3: float
    c_direct: float | None = None
    c_extracted: float | None = None
    fit_residual: float = 0.0
    t_grid: list = field(default_factory=list)
    error: float = 0.0
    increments: list = field(default_factory=list)
    flags: dict = field(default_factory=lambda: dict(FLAGS))

    def __post_init__(self):
        if self.a1 is not None and not self.a1 > 0:
            raise ValueError("a1 must be positive")
        if not self.fit_residual >= 0:
            raise ValueError("fit residual must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "a1": self.a1, "a2": self.a2, "a3": self.a3,
            "c_direct": self.c_direct, "c_extracted": self.c_extracted,
            "fit_residual": self.fit_residual, "t_grid": list(self.t_grid),
            "error": self.error, "increments": list(self.increments),
            "flags": dict(self.flags),
        }


def equal_drift_D(n: int, q: QuadratureSpec | None = None) -> float:
    """``(2 pi)^(-n/2) c_n int_W exp(-|y|^2/2) Delta(y) dy``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > MAX_N:
        raise CapabilityError(f"equal_drift_D supports n <= {MAX_N}")
    res = i_integral_result([0] * n, 1.0, q)
    return (2 * math.pi) ** (-n / 2) * c_const(n) * res.value


def _block_rates(a: DriftVector, p: StablePartition):
    out = []
    for blk, fb in zip(p.blocks(), p.f_block):
        rates = []
        for k in range(blk.start, blk.stop - 1):
            suffix = a.values[k + 1:blk.stop]
            beta = len(suffix) * (fb - sum(suffix, Fraction(0)) / len(suffix))
            if not beta > 0:
                raise ArithmeticError(f"non-decaying direction at gap {k + 1}: rate {beta}")
            rates.append(float(beta))
        out.append(rates)
    return out


def _orthant_factor(a: DriftVector, p: StablePartition) -> float:
    """Product over stable blocks of ``int_(0,inf)^(nu-1) exp(-beta . xi) H(xi) d xi``."""
    total = 1.0
    for rates in _block_rates(a, p):
        if not rates:
            continue
        d = len(rates)

        def hpoly(xi, d=d):
            out = np.ones(len(xi))
            for i in range(d):
                acc = np.zeros(len(xi))
                for j in range(i, d):
                    acc = acc + xi[:, j]
                    out = out * acc
            return out

        total *= gauss_laguerre_orthant(hpoly, rates, npts=max(8, d * d + 2))
    return total


def _boundary_factor(p: StablePartition, sr: StrongRepresentation, q: QuadratureSpec):
    """Gaussian integral over the gaps at the stable-block boundaries.

    Gaps at strong boundaries range over the whole line, the others over the
    half-line.  Within each strong block, stable blocks ``b < b'`` contribute
    ``(sum of boundary gaps between them)^(nu_b nu_b')``.
    """
    n, qn = p.n, p.q
    bidx = list(p.m[:-1])  # 1-based gap indices
    d = len(bidx)
    if d == 0:
        return 1.0, 0.0
    G = np.array([[float(gram_entry(k, l, n)) for l in bidx] for k in bidx])
    strong = [m in sr.m_prime for m in bidx]
    # stable blocks grouped by strong block
    owner = []
    sb = 0
    for j in range(qn):
        owner.append(sb)
        if j < qn - 1 and strong[j]:
            sb += 1
    pairs = [(b, c) for b in range(qn) for c in range(b + 1, qn) if owner[b] == owner[c]]

    def f(xi):
        w = np.exp(-0.5 * np.einsum("pk,kl,pl->p", xi, G, xi))
        cs = np.concatenate([np.zeros((len(xi), 1)), np.cumsum(xi, axis=1)], axis=1)
        for b, c in pairs:
            w = w * (cs[:, c] - cs[:, b]) ** (p.nu[b] * p.nu[c])
        return w

    sd = np.sqrt(np.diag(np.linalg.inv(G)))
    deg = sum(p.nu[b] * p.nu[c] for b, c in pairs)
    half = (q.truncation + 2 * math.sqrt(deg + 1)) * sd
    lows = [-h if s else 0.0 for h, s in zip(half, strong)]
    res = tensor_quadrature(f, lows, list(half), q)
    return res.value, res.error_bound


def constant_direct(a, p: StablePartition | None = None, sr: StrongRepresentation | None = None,
                    q: QuadratureSpec | None = None) -> ConstantReport:
    a = DriftVector.of(a)
    if a.n > MAX_N:
        raise CapabilityError(f"constant_direct supports n <= {MAX_N}")
    if p is None:
        p = stable_partition(a)
    if sr is None:
        sr = strong_representation(p)
    q = q or QuadratureSpec()
    n = a.n
    a1 = (2 * math.pi) ** (-n / 2) * math.sqrt(2 * math.pi / n) * math.prod(c_const(v) for v in sr.nu_prime)
    a2 = _orthant_factor(a, p)
    a3, e3 = _boundary_factor(p, sr, q)
    return ConstantReport(a1, a2, a3, c_direct=a1 * a2 * a3, error=a1 * a2 * e3)


_ORACLES = {
    "exact": lambda x, a, t: tail_exact(x, a, t),
    "closed2": lambda x, a, t: tail_n2_closed(x, a, t),
    "km": lambda x, a, t: km_survival(x, t),
}


def constant_extracted(x, a, law: AsymptoticLaw | None = None, t_grid: Sequence[float] = (),
                       oracle: str = "exact", check_trend: bool = True) -> ConstantReport:
    """Fit ``log P(t) + gamma t + alpha log t - log h(x) = log C + c1 / sqrt(t)``
    on the later half of ``t_grid``.

    The residual trend is the sequence of increments of the left-hand side
    between consecutive grid points; unless it shrinks, the grid is not
    asymptotic and :class:`AsymptoticRegimeError` is raised.
    """
    xs = StartVector.of(x).array()
    a = DriftVector.of(a)
    if law is None:
        law = asymptotic_law(a)
    if oracle not in _ORACLES:
        raise ValueError(f"unknown oracle {oracle!r}; choose from {sorted(_ORACLES)}")
    if oracle == "km" and any(v != a.values[0] for v in a.values):
        raise ValueError("the km oracle is for equal drifts only")
    grid = sorted(float(t) for t in t_grid)
    if len(grid) < 4:
        raise ValueError("t_grid needs at least 4 points")
    hs, hl = log_h(law.h, xs)
    if hs <= 0:
        raise ValueError("h(x) must be positive at the start point")
    alpha = float(law.alpha)
    r = []
    for t in grid:
        est = _ORACLES[oracle](xs, a, t)
        r.append(est.log + law.gamma * t + alpha * math.log(t) - hl)
    r = np.array(r)
    inc = np.abs(np.diff(r))
    tail = max(4, len(grid) // 2)
    tt, rr = np.array(grid[-tail:]), r[-tail:]
    X = np.column_stack([np.ones_like(tt), tt ** -0.5])
    coef, *_ = np.linalg.lstsq(X, rr, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - rr) ** 2)))
    if check_trend and np.any(np.diff(inc) > 1e-12 * (1 + np.abs(r).max())):
        raise AsymptoticRegimeError(
            f"asymptotic regime not reached: increments {np.array2string(inc, precision=3)} do not shrink")
    rep = ConstantReport(None, None, None, c_extracted=math.exp(coef[0]), fit_residual=resid,
                         t_grid=grid, increments=inc.tolist())
    return rep
