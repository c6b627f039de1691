"""Shared numeric kernel: tensor quadrature, compensated sums, scaled
determinants, stable exponential divided differences and constant fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate

MAX_TENSOR_DIM = 4
SCHEMES = ("gauss_legendre", "gauss_hermite", "tensor_trapezoid", "adaptive")


class CapabilityError(ValueError):
    """The requested computation is outside what the method supports."""


class NonFiniteIntegrand(FloatingPointError):
    """An integrand returned NaN or an infinity."""

    def __init__(self, point, value):
        self.point = np.asarray(point)
        self.value = value
        super().__init__(f"integrand is {value} at {np.array2string(self.point, precision=6)}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings.

    ``truncation`` is the half-width ``L`` of the integration box in
    standardized (unit-variance) units.  ``points_per_dim`` counts nodes per
    panel for the Gauss-Legendre and trapezoid schemes and nodes in total for
    Gauss-Hermite.
    """

    truncation: float = 8.0
    points_per_dim: int = 32
    scheme: str = "gauss_legendre"
    panels: int = 4

    def __post_init__(self):
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.points_per_dim < 8:
            raise ValueError("points_per_dim must be at least 8")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error_bound: float
    evaluations: int

    def __post_init__(self):
        if not self.error_bound >= 0:
            raise ValueError("error bound must be nonnegative")


def compensated_sum(values) -> float:
    """Correctly rounded sum (Shewchuk's algorithm via :func:`math.fsum`).

    The result does not depend on the order of ``values``.
    """
    return math.fsum(np.asarray(values, dtype=float).ravel())


@lru_cache(maxsize=64)
def _legendre(npts: int):
    return leggauss(npts)


def rule_1d(lo: float, hi: float, npts: int, panels: int = 1,
            scheme: str = "gauss_legendre") -> tuple[np.ndarray, np.ndarray]:
    """Composite nodes and weights on ``[lo, hi]``."""
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if scheme == "tensor_trapezoid":
            x = np.linspace(a, b, npts)
            w = np.full(npts, (b - a) / (npts - 1))
            w[[0, -1]] *= 0.5
        else:
            g, gw = _legendre(npts)
            x = 0.5 * (b - a) * g + 0.5 * (a + b)
            w = 0.5 * (b - a) * gw
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def hermite_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights integrating ``g`` over R against the full line measure.

    Probabilists' Gauss-Hermite with the weight folded back in, so
    ``sum(w * g(x)) ~ integral g(x) dx`` for Gaussian-like ``g``.
    """
    x, w = hermegauss(npts)
    return x, w * np.exp(0.5 * x * x)


def _tensor_points(rules):
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, w


def _apply(f, pts, w, chunk=1 << 18):
    total = []
    for s in range(0, len(w), chunk):
        vals = np.asarray(f(pts[s:s + chunk]), dtype=float)
        bad = ~np.isfinite(vals)
        if bad.any():
            i = int(np.argmax(bad))
            raise NonFiniteIntegrand(pts[s + i], vals[i])
        total.append(vals * w[s:s + chunk])
    return compensated_sum(np.concatenate(total)) if total else 0.0


def _level(f, lows, highs, spec: QuadratureSpec, npts: int | None = None):
    npts = npts or spec.points_per_dim
    rules = []
    for lo, hi in zip(lows, highs):
        if spec.scheme == "gauss_hermite":
            if np.isfinite(lo) or np.isfinite(hi):
                raise CapabilityError("gauss_hermite integrates over the whole line only")
            rules.append(hermite_rule(npts))
        else:
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise CapabilityError(f"scheme {spec.scheme} needs a finite box")
            rules.append(rule_1d(lo, hi, npts, spec.panels, spec.scheme))
    pts, w = _tensor_points(rules)
    return _apply(f, pts, w), len(w)


def tensor_quadrature(f: Callable[[np.ndarray], np.ndarray], lows: Sequence[float],
                      highs: Sequence[float], spec: QuadratureSpec = QuadratureSpec()) -> IntegrationResult:
    """Integrate a vectorized ``f`` over the box ``prod [lows, highs]``.

    ``f`` maps a ``(P, d)`` array of points to ``P`` values.  The error bound
    is the difference between the requested rule and one with half the nodes.
    """
    d = len(lows)
    if d != len(highs):
        raise ValueError("lows and highs differ in length")
    if d > MAX_TENSOR_DIM:
        raise CapabilityError(f"tensor quadrature supports dimension <= {MAX_TENSOR_DIM}, got {d}")
    if d == 0:
        v = float(np.asarray(f(np.zeros((1, 0))))[0])
        return IntegrationResult(v, 0.0, 1)
    if spec.scheme == "adaptive":
        if d > 3:
            raise CapabilityError("adaptive scheme supports dimension <= 3")
        g = lambda *args: float(np.asarray(f(np.array([args])))[0])  # noqa: E731
        val, err = integrate.nquad(g, list(zip(lows, highs)), opts={"epsabs": 0, "epsrel": 1e-10, "limit": 200})
        return IntegrationResult(val, abs(err), -1)
    fine, n_fine = _level(f, lows, highs, spec)
    coarse, n_coarse = _level(f, lows, highs, spec, spec.points_per_dim // 2)
    return IntegrationResult(fine, abs(fine - coarse), n_fine + n_coarse)


def weyl_quadrature(f: Callable[[np.ndarray], np.ndarray], n: int,
                    spec: QuadratureSpec = QuadratureSpec(), halfwidth: float | None = None) -> IntegrationResult:
    """Integrate ``f`` over the Weyl chamber intersected with ``[-L, L]^n``.

    Uses the ordered-simplex change of variables ``y_1 = u``,
    ``y_k = u + s_1 + ... + s_{k-1}`` with gaps ``s >= 0`` (unit Jacobian).
    """
    L = spec.truncation if halfwidth is None else halfwidth

    def g(p):
        y = np.cumsum(p, axis=1)
        inside = y[:, -1] <= L
        out = np.zeros(len(p))
        if inside.any():
            out[inside] = f(y[inside])
        return out

    lows = [-L] + [0.0] * (n - 1)
    highs = [L] + [2 * L] * (n - 1)
    return tensor_quadrature(g, lows, highs, spec)


def gauss_laguerre_orthant(g: Callable[[np.ndarray], np.ndarray], rates: Sequence[float],
                           npts: int = 24) -> float:
    """``integral over (0, inf)^d of exp(-rates . xi) g(xi)``; exact for polynomial ``g``
    of degree < 2*npts in each variable."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("all decay rates must be positive")
    d = len(rates)
    if d == 0:
        return float(np.asarray(g(np.zeros((1, 0))))[0])
    u, w = laggauss(npts)
    pts, wt = _tensor_points([(u, w)] * d)
    xi = pts / rates
    return compensated_sum(wt * np.asarray(g(xi))) / float(np.prod(rates))


def scaled_slogdet(m: np.ndarray, ratio_threshold: float = 1e12) -> tuple[np.ndarray, np.ndarray]:
    """Sign and log|det| of (a stack of) square matrices.

    When nonzero entries span more than ``ratio_threshold`` in magnitude the
    rows and columns are equilibrated first, so the LU factorization works on
    O(1) numbers.
    """
    m = np.asarray(m, dtype=float)
    a = np.abs(m)
    nz = a[a > 0]
    if nz.size == 0:
        return np.zeros(m.shape[:-2]), np.full(m.shape[:-2], -np.inf)
    if nz.max() <= ratio_threshold * nz.min():
        return np.linalg.slogdet(m)
    with np.errstate(divide="ignore"):
        r = a.max(axis=-1, keepdims=True)
        r = np.where(r > 0, r, 1.0)
        m1 = m / r
        c = np.abs(m1).max(axis=-2, keepdims=True)
        c = np.where(c > 0, c, 1.0)
        m2 = m1 / c
    sign, logdet = np.linalg.slogdet(m2)
    return sign, logdet + np.log(r).sum(axis=(-1, -2)) + np.log(c).sum(axis=(-1, -2))


def complete_homogeneous(z: np.ndarray, kmax: int) -> np.ndarray:
    """``h_k(z)`` for k = 0..kmax; ``z`` has shape ``(..., m)``."""
    z = np.asarray(z, dtype=float)
    h = np.zeros(z.shape[:-1] + (kmax + 1,))
    h[..., 0] = 1.0
    for j in range(z.shape[-1]):
        zj = z[..., j:j + 1]
        for k in range(1, kmax + 1):
            h[..., k] = h[..., k] + zj[..., 0] * h[..., k - 1]
    return h


_SERIES_TERMS = 48
_SERIES_RADIUS = 3.0


def exp_divided_differences(x: np.ndarray, nodes: np.ndarray, log_scale: np.ndarray | None = None) -> np.ndarray:
    """Newton divided differences of ``w -> exp(x_i w)`` on leading node sets.

    Returns ``D`` with ``D[..., i, r] = exp(x_i .)[nodes_0, ..., nodes_r]``,
    multiplied by ``exp(log_scale[..., i])`` when given (row scaling applied
    inside the exponent, so large ``x * nodes`` need not overflow).
    Clustered nodes are handled with the series
    ``sum_p x^p/p! h_{p-r}(nodes - c)`` about the node centroid, which has no
    cancellation; well-spread nodes use the ordinary Newton table.
    """
    x = np.asarray(x, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    if log_scale is None:
        log_scale = np.zeros(nodes.shape[:-1] + x.shape)
    m = nodes.shape[-1]
    c = nodes.mean(axis=-1, keepdims=True)
    delta = nodes - c
    K = _SERIES_TERMS
    # coef[i, p] = x_i^p / p!
    p = np.arange(K + m)
    logfact = np.array([math.lgamma(k + 1) for k in p])
    coef = np.power.outer(x, p) / np.exp(logfact)
    series = np.empty(nodes.shape[:-1] + (len(x), m))
    h = np.zeros(nodes.shape[:-1] + (K + 1,))
    h[..., 0] = 1.0
    for r in range(m):
        dr = delta[..., r:r + 1]
        for k in range(1, K + 1):
            h[..., k] = h[..., k] + dr[..., 0] * h[..., k - 1]
        series[..., r] = np.einsum("...k,ik->...i", h, coef[:, r:r + K + 1])
    scale = np.exp(np.multiply.outer(c[..., 0], x) + log_scale)  # (..., R)
    series *= scale[..., None]

    spread = np.abs(delta).max(axis=-1)  # (...)
    rho = np.multiply.outer(spread, np.abs(x))  # (..., R)
    if m == 1 or np.all(rho <= _SERIES_RADIUS):
        return series
    # Newton table for well-separated nodes
    vals = np.exp(np.multiply.outer(nodes, x) + log_scale[..., None, :])  # (..., m, R)
    vals = np.moveaxis(vals, -1, -2)  # (..., R, m)
    table = vals.copy()
    newton = np.empty_like(series)
    newton[..., 0] = table[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        for lvl in range(1, m):
            den = nodes[..., lvl:] - nodes[..., :m - lvl]  # (..., m-lvl)
            table = (table[..., 1:] - table[..., :-1]) / den[..., None, :]
            newton[..., lvl] = table[..., 0]
    use_newton = (rho > _SERIES_RADIUS)[..., None] & np.isfinite(newton)
    return np.where(use_newton, newton, series)


def exp_det_factored(x: np.ndarray, centers: Sequence[float], nodes: Sequence[np.ndarray]):
    """Factored ``det[exp(x_i w_j)]`` for columns grouped into clusters.

    Cluster ``b`` has columns ``w = centers[b] + nodes[b][..., r]``.  Returns
    ``(vand, det_dd)`` such that the determinant equals ``prod(vand) * det_dd``,
    where ``vand`` holds the within-cluster Vandermonde products (computed
    from node differences, so small clusters lose no precision) and
    ``det_dd`` the determinant of the divided-difference matrix.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    vand = None
    for cb, nb in zip(centers, nodes):
        nb = np.asarray(nb, dtype=float)
        dd = exp_divided_differences(x, nb)
        dd = dd * np.exp(x * cb)[:, None]
        cols.append(dd)
        v = np.ones(nb.shape[:-1])
        for i in range(nb.shape[-1]):
            for j in range(i + 1, nb.shape[-1]):
                v = v * (nb[..., j] - nb[..., i])
        vand = v if vand is None else vand * v
    mat = np.concatenate(cols, axis=-1)
    sign, logdet = scaled_slogdet(mat, ratio_threshold=0.0)
    return vand, sign * np.exp(logdet)


@dataclass
class FitResult:
    constant: float
    coefficients: np.ndarray
    t: np.ndarray
    y: np.ndarray
    deviations: np.ndarray
    converging: bool
    residual: float = field(default=0.0)


def fit_constant(points: Sequence[tuple[float, float]], powers: Sequence[float] = (0.5,),
                 weights: Sequence[float] | None = None, rtol: float = 1e-12) -> FitResult:
    """Least-squares fit of ``y(t) = c0 + sum_k c_k t^{-p_k}``.

    ``deviations`` are ``|y_i - c0|`` in increasing ``t``; ``converging`` is
    True when they do not increase (up to ``rtol * |c0|`` noise).  Raises
    ``ValueError`` for fewer than four points or a rank-deficient design.
    """
    pts = sorted((float(t), float(y)) for t, y in points)
    if len(pts) < 4:
        raise ValueError("fit_constant needs at least 4 points")
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(t <= 0):
        raise ValueError("t values must be positive")
    X = np.column_stack([np.ones_like(t)] + [t ** (-p) for p in powers])
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    if np.linalg.matrix_rank(Xw) < X.shape[1]:
        raise ValueError("degenerate design matrix in fit_constant")
    coef, *_ = np.linalg.lstsq(Xw, y * sw, rcond=None)
    c0 = float(coef[0])
    dev = np.abs(y - c0)
    noise = rtol * max(abs(c0), 1e-300)
    converging = bool(np.all(np.diff(dev) <= noise))
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return FitResult(c0, coef, t, y, dev, converging, resid)
