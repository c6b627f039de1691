"""Non-asymptotic evaluation of P_x(tau > t).

All quadrature routes use the same coordinates.  The standardized endpoint
``y`` is written as ``y = f sqrt(t) + z`` (``f`` the block-mean vector of the
stable partition), ``z`` is split into its mean and its ``n - 1`` gaps
``s_k = z_{k+1} - z_k``, and the mean is integrated in closed form.  In these
coordinates the drift enters only through positive decay rates on the gaps
inside stable blocks, and the determinant is factored into within-cluster
Vandermonde products times a well-conditioned divided-difference matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .asymptotics import HPrefactor, c_const, gamma, h_descriptor, log_h
from .numerics import (
    CapabilityError,
    IntegrationResult,
    QuadratureSpec,
    exp_divided_differences,
    scaled_slogdet,
    tensor_quadrature,
)
from .partition import (
    DriftVector,
    StablePartition,
    StartVector,
    StrongRepresentation,
    stable_partition,
    strong_representation,
)

MAX_N = 4
METHODS = ("km", "exact", "proposition", "closed2", "mc", "asymptotic")
_BOUNDED = ("km", "exact", "mc")


@dataclass(frozen=True)
class TailEstimate:
    value: float
    error: float
    method: str
    log_value: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not self.error >= 0:
            raise ValueError("error must be nonnegative")
        if not math.isfinite(self.value):
            raise ValueError("tail value must be finite")
        slack = self.error + 1e-12
        if self.method in _BOUNDED and not (-slack <= self.value <= 1 + slack):
            raise ValueError(f"{self.method} estimate {self.value} outside [0, 1 + error]")

    @property
    def log(self) -> float:
        if self.log_value is not None:
            return self.log_value
        return math.log(self.value) if self.value > 0 else -math.inf

    def to_dict(self, t: float | None = None, n: int | None = None) -> dict:
        out = {"value": self.value, "error": self.error, "method": self.method}
        if t is not None:
            out["t"] = t
        if n is not None:
            out["n"] = n
        if self.log_value is not None:
            out["log_value"] = self.log_value
        return out


def default_spec(n: int) -> QuadratureSpec:
    """Node budget by gap dimension (n - 1)."""
    if n <= 3:
        return QuadratureSpec(points_per_dim=32, panels=4)
    return QuadratureSpec(points_per_dim=20, panels=3)


def gap_gram(n: int) -> np.ndarray:
    """Quadratic form of the zero-mean part of ``z`` in gap coordinates:
    ``|z - mean(z)|^2 = s^T G s`` with ``G_kl = min(k,l) (n - max(k,l)) / n``."""
    k = np.arange(1, n)
    return np.minimum.outer(k, k) * (n - np.maximum.outer(k, k)) / n


@dataclass
class _GapModel:
    """Geometry of the gap-coordinate integrand for given drifts and time."""

    n: int
    t: float
    p: StablePartition
    sr: StrongRepresentation
    f: np.ndarray
    beta: np.ndarray
    interior: np.ndarray
    strong: np.ndarray
    G: np.ndarray

    @classmethod
    def build(cls, a: DriftVector, t: float):
        p = stable_partition(a)
        sr = strong_representation(p)
        n = a.n
        interior = np.ones(n - 1, dtype=bool)
        for m in p.m[:-1]:
            interior[m - 1] = False
        strong = np.zeros(n - 1, dtype=bool)
        for m in sr.m_prime[:-1]:
            strong[m - 1] = True
        beta = np.zeros(n - 1)
        for blk, fb in zip(p.blocks(), p.f_block):
            for k in range(blk.start, blk.stop - 1):
                suffix = a.values[k + 1:blk.stop]
                mean_suffix = sum(suffix, Fraction(0)) / len(suffix)
                beta[k] = float(len(suffix) * (fb - mean_suffix))
        f = np.array([float(v) for v in p.f_full])
        return cls(n, t, p, sr, f, beta, interior, strong, gap_gram(n))

    @property
    def rt(self) -> float:
        return math.sqrt(self.t)

    def box(self, spec: QuadratureSpec, x: np.ndarray | None = None):
        L = spec.truncation
        spread = 0.0 if x is None else float(x[-1] - x[0])
        R = math.sqrt(2.0) * L + 2.0 * spread / self.rt + 2.0 * math.sqrt(self.n)
        deg = self.sr.k0
        lows, highs = [], []
        for k in range(self.n - 1):
            lo, hi = 0.0, R
            if self.strong[k]:
                lo = max(-(self.f[k + 1] - self.f[k]) * self.rt, -R)
            if self.interior[k]:
                hi = min(R, (0.5 * L * L + 4 * deg + 8) / (self.rt * self.beta[k]))
            lows.append(lo)
            highs.append(hi)
        return lows, highs

    def log_weight(self, s: np.ndarray) -> np.ndarray:
        """log of ``exp(-s^T G s / 2 - sqrt(t) beta . s) * prod_blocks H(gaps)``.

        All gaps inside a strong block are nonnegative on the domain, so the
        ``H`` factors are too.
        """
        out = -0.5 * np.einsum("pk,kl,pl->p", s, self.G, s) - s @ (self.rt * self.beta)
        with np.errstate(divide="ignore"):
            for blk in self.sr.blocks():
                for i in range(blk.start, blk.stop):
                    acc = np.zeros(len(s))
                    for j in range(i, blk.stop - 1):
                        acc = acc + s[:, j]
                        out = out + np.log(acc)
        return out

    def weight(self, s: np.ndarray) -> np.ndarray:
        return np.exp(self.log_weight(s))

    def log_det_dd(self, s: np.ndarray, x: np.ndarray):
        """Sign and log of the divided-difference determinant: ``det[exp(x_i w_j)]``
        with the within-block Vandermonde products divided out, where
        ``w = f + (z - mean z) / sqrt(t)``."""
        P = len(s)
        zg = np.concatenate([np.zeros((P, 1)), np.cumsum(s, axis=1)], axis=1)
        zg -= zg.mean(axis=1, keepdims=True)
        w = self.f + zg / self.rt
        # per-row shift keeps every entry at most about 1
        shift = np.max(w[:, None, :] * x[None, :, None], axis=2)  # (P, n)
        cols = []
        for blk in self.sr.blocks():
            b0, b1 = blk.start, blk.stop
            local = np.concatenate([np.zeros((P, 1)), np.cumsum(s[:, b0:b1 - 1], axis=1)], axis=1)
            nodes = (local - local.mean(axis=1, keepdims=True)) / self.rt
            center = self.f[b0] + zg[:, b0:b1].mean(axis=1) / self.rt
            cols.append(exp_divided_differences(x, nodes, np.multiply.outer(center, x) - shift))
        mat = np.concatenate(cols, axis=-1)
        sign, logdet = scaled_slogdet(mat, ratio_threshold=0.0)
        return sign, logdet + shift.sum(axis=1)


def _check_n(n: int):
    if n < 2:
        raise ValueError("need at least two particles")
    if n > MAX_N:
        raise CapabilityError(f"quadrature routes support n <= {MAX_N} (got n={n}); use Monte Carlo")


def _exact_integral(model: _GapModel, x: np.ndarray, spec: QuadratureSpec):
    """Integral of weight * det, returned as ``(result, ref)`` with the
    integrand scaled by ``exp(-ref)``.

    ``ref`` bounds the log-integrand from above: the determinant is at most
    ``n! exp(max_sigma sum x_i w_sigma(i))``, and maximizing against the
    Gaussian factor gives ``x.f + |x - mean x|^2 / 2t`` (rearrangement and
    Cauchy-Schwarz), plus ``(k0/2) log t`` from dividing out the Vandermonde
    products.
    """
    lows, highs = model.box(spec, x)
    xc = x - x.mean()
    ref = (float(x @ model.f) + float(xc @ xc) / (2 * model.t) + 0.5 * model.sr.k0 * math.log(model.t)
           + math.lgamma(model.n + 1))

    def f(s):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            sign, ld = model.log_det_dd(s, x)
            return np.where(sign == 0, 0.0, sign * np.exp(model.log_weight(s) + ld - ref))

    return tensor_quadrature(f, lows, highs, spec), ref


def _log_exact_prefactor(model: _GapModel, x: np.ndarray, a: DriftVector, g: float) -> float:
    n, t = model.n, model.t
    return (-0.5 * n * math.log(2 * math.pi) + 0.5 * math.log(2 * math.pi * n) - math.log(n)
            - float(x @ a.array()) - float(x @ x) / (2 * t) - g * t
            + float(x.sum()) ** 2 / (2 * n * t) - 0.5 * model.sr.k0 * math.log(t))


def _finish(logk: float, res: IntegrationResult, method: str, spec: QuadratureSpec) -> TailEstimate:
    if res.value <= 0 or res.error_bound > 0.5 * res.value:
        raise CapabilityError(
            f"{method} quadrature did not resolve the integrand (value {res.value:.3g}, "
            f"error bound {res.error_bound:.3g}); refine the grid or use another method")
    logv = logk + math.log(res.value)
    value = math.exp(logv)
    trunc = abs(value) * math.exp(-0.5 * spec.truncation ** 2)
    err = math.exp(logk + math.log(res.error_bound)) if res.error_bound > 0 else 0.0
    return TailEstimate(value, err + trunc, method, logv)


def tail_exact(x, a, t: float, q: QuadratureSpec | None = None) -> TailEstimate:
    """P_x(tau > t) for arbitrary drifts via the change-of-measure integral

    ``(2 pi)^(-n/2) exp(-<a,x> - |x|^2/2t) int_W exp(-|y - a sqrt t|^2/2) det[exp(x_i y_j / sqrt t)] dy``.
    """
    xs = StartVector.of(x).array()
    a = DriftVector.of(a)
    if len(xs) != a.n:
        raise ValueError("x and a differ in length")
    if t <= 0:
        raise ValueError("t must be positive")
    _check_n(a.n)
    spec = q or default_spec(a.n)
    model = _GapModel.build(a, t)
    res, ref = _exact_integral(model, xs, spec)
    return _finish(_log_exact_prefactor(model, xs, a, gamma(a, model.p)) + ref, res, "exact", spec)


def km_survival(x, t: float, q: QuadratureSpec | None = None) -> TailEstimate:
    """Driftless tail ``int_W det[p_t(x_i, y_j)] dy`` with the heat kernel ``p_t``.

    After ``y = sqrt(t) w`` the kernel determinant is
    ``(2 pi)^(-n/2) exp(-|x|^2/2t - |w|^2/2) det[exp(x_i w_j / sqrt t)]``, the
    zero-drift case of :func:`tail_exact`'s integrand.
    """
    xs = StartVector.of(x).array()
    if t <= 0:
        raise ValueError("t must be positive")
    _check_n(len(xs))
    zero = DriftVector.of([0] * len(xs))
    spec = q or default_spec(len(xs))
    model = _GapModel.build(zero, t)
    res, ref = _exact_integral(model, xs, spec)
    return _finish(_log_exact_prefactor(model, xs, zero, 0.0) + ref, res, "km", spec)


def km_pfaffian(x, t: float) -> float:
    """Driftless tail from de Bruijn's Pfaffian identity.

    ``P = Pf[B]`` with ``B_ij = erf((x_j - x_i) / (2 sqrt t))`` for ``i < j``,
    bordered by a row of ones when ``n`` is odd.  Needs only 1-d Gaussian
    integrals, so it is an independent check of :func:`km_survival`.
    """
    xs = StartVector.of(x).array()
    n = len(xs)
    b = special.erf(np.subtract.outer(xs, xs).T / (2 * math.sqrt(t)))
    if n % 2 == 1:
        m = np.zeros((n + 1, n + 1))
        m[:n, :n] = b
        m[:n, n] = 1.0
        m[n, :n] = -1.0
        b = m
    return _pfaffian(b)


def _pfaffian(a: np.ndarray) -> float:
    n = a.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    rest = list(range(1, n))
    for idx, j in enumerate(rest):
        if a[0, j] == 0:
            continue
        keep = [k for k in rest if k != j]
        sub = a[np.ix_(keep, keep)]
        total += (-1) ** idx * a[0, j] * _pfaffian(sub)
    return total


def tail_n2_closed(x, a, t: float) -> TailEstimate:
    """Two-particle tail from the first-passage density of the gap.

    The gap ``X2 - X1`` has variance 2 per unit time, so ``tau = T'/2`` where
    ``T'`` is the hitting time of 0 for a unit-variance motion with drift
    ``mu = (a2 - a1)/2`` started at ``x2 - x1``.  Returns ``P(T' > 2t)`` by
    adaptive integration of the density on ``[2t, inf)``, plus the escape
    mass ``1 - exp(-2 mu xg)`` when ``mu > 0``.

    The substitution ``s = T / w^2`` turns the ``s^(-3/2)`` tail of the
    density into a smooth integrand on ``w in (0, 1]``.
    """
    xs = StartVector.of(x).array()
    a = DriftVector.of(a)
    if len(xs) != 2 or a.n != 2:
        raise CapabilityError("tail_n2_closed is for n = 2 only")
    if t <= 0:
        raise ValueError("t must be positive")
    xg = float(xs[1] - xs[0])
    mu = float(a.values[1] - a.values[0]) / 2.0
    T = 2.0 * t

    def expo(w):
        return -(xg * w + mu * T / w) ** 2 / (2 * T) if w > 0 else -math.inf

    wstar = math.sqrt(abs(mu) * T / xg)
    hmax = expo(min(wstar, 1.0)) if wstar > 0 else 0.0  # max of the exponent on (0, 1]
    # geometric breakpoints resolve the boundary layer of width ~wstar near 0
    pts = [wstar * 2.0 ** k for k in range(-6, 60)]
    pts = [p for p in pts if 0 < p < 1] or None
    val, err = integrate.quad(lambda w: math.exp(expo(w) - hmax), 0.0, 1.0, points=pts,
                              epsabs=0, epsrel=1e-13, limit=400)
    logk = math.log(2 * xg) - 0.5 * math.log(2 * math.pi * T) + hmax
    log_tail = logk + math.log(val)
    escape = -math.expm1(-2 * mu * xg) if mu > 0 else 0.0
    if escape > 0:
        value = escape + math.exp(log_tail)
        logv = math.log(value)
    else:
        logv = log_tail
        value = math.exp(logv)
    return TailEstimate(value, math.exp(logk) * err, "closed2", logv)


def i_integral_result(a, t: float, q: QuadratureSpec | None = None,
                      p: StablePartition | None = None) -> IntegrationResult:
    a = DriftVector.of(a)
    _check_n(a.n)
    spec = q or default_spec(a.n)
    model = _GapModel.build(a, t)
    if p is not None and p.m != model.p.m:
        raise ValueError("partition does not belong to the drift vector")
    lows, highs = model.box(spec)
    res = tensor_quadrature(model.weight, lows, highs, spec)
    jac = math.sqrt(2 * math.pi * a.n) / a.n
    return IntegrationResult(jac * res.value, jac * res.error_bound, res.evaluations)


def i_integral(a, p: StablePartition | None = None, sr: StrongRepresentation | None = None,
               t: float = 1.0, q: QuadratureSpec | None = None) -> float:
    """``I(a, t) = int_{W - f sqrt t} exp(-|z|^2/2 - sqrt(t) z.(f - a)) prod_j Delta(z_block j) dz``."""
    return i_integral_result(a, t, q, p).value


def proposition_tail(x, a, t: float, q: QuadratureSpec | None = None) -> TailEstimate:
    """Intermediate form ``(2 pi)^(-n/2) prod c_{nu'} exp(-gamma t) t^(-k0/2) h(x) I(a, t)``
    (the determinant replaced by its leading term, nothing else expanded)."""
    xs = StartVector.of(x).array()
    a = DriftVector.of(a)
    p = stable_partition(a)
    sr = strong_representation(p)
    res = i_integral_result(a, t, q)
    hp = h_descriptor(a, p, sr)
    hs, hl = log_h(hp, xs)
    logc = math.log(math.prod(c_const(v) for v in sr.nu_prime))
    logk = -0.5 * a.n * math.log(2 * math.pi) + logc - gamma(a, p) * t - 0.5 * sr.k0 * math.log(t) + hl
    logv = logk + math.log(res.value)
    value = hs * math.exp(logv)
    return TailEstimate(value, math.exp(logk) * res.error_bound, "proposition", logv)


def limit_probability(x, a) -> float:
    """``P(tau = inf) = exp(-<x,a>) det[exp(x_i a_j)]`` for strictly increasing drifts."""
    a = DriftVector.of(a)
    if any(not (v - u > 0) for u, v in zip(a.values, a.values[1:])):
        raise ValueError("limit probability needs strictly increasing drifts")
    hp = HPrefactor(a.array(), a.array(), np.zeros(a.n, dtype=int))
    s, lv = log_h(hp, x)
    return s * math.exp(lv)
