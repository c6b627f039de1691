"""Monte Carlo estimate of P_x(tau > t) for any number of particles.

Paths are Gaussian random walks on a uniform grid.  Between grid points each
adjacent gap is a Brownian bridge of variance 2 per unit time, and with
``bridge_correction`` a replica is killed with the probability that this
bridge dips below zero.  Replicas are simulated in fixed-size chunks; chunk
``c`` draws from a Philox stream keyed by ``(seed, c)``, so the result depends
only on ``(seed, replicas, dt)`` and not on thread count or scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .asymptotics import gamma
from .exact_tail import TailEstimate
from .numerics import CapabilityError
from .partition import DriftVector, StartVector

CHUNK = 1 << 16
THREADS_ENV = "WEYLEXIT_THREADS"


@dataclass(frozen=True)
class SimConfig:
    dt: float | None = None
    replicas: int = 100_000
    seed: int = 0
    bridge_correction: bool = True

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def step(self, t: float) -> float:
        return self.dt if self.dt is not None else min(1e-3, t / 1e4)

    def to_dict(self) -> dict:
        return asdict(self)


def bridge_noncross(d0, d1, dt):
    """Probability that a variance-2 Brownian bridge from ``d0`` to ``d1`` over
    time ``dt`` stays positive: ``1 - exp(-d0 d1 / dt)``."""
    d0, d1, dt = (np.asarray(v, dtype=float) for v in (d0, d1, dt))
    if np.any(d0 <= 0) or np.any(d1 <= 0) or np.any(dt <= 0):
        raise ValueError("bridge_noncross needs positive gaps and time step")
    out = -np.expm1(-d0 * d1 / dt)
    return float(out) if out.ndim == 0 else out


def _chunk_survivors(x: np.ndarray, a: np.ndarray, steps: int, h: float, size: int,
                     seed: int, index: int, bridge: bool) -> int:
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))
    pos = np.broadcast_to(x, (size, len(x))).copy()
    sh = math.sqrt(h)
    drift = a * h
    for _ in range(steps):
        if len(pos) == 0:
            return 0
        new = pos + drift + sh * rng.standard_normal(pos.shape)
        d1 = np.diff(new, axis=1)
        ok = np.all(d1 > 0, axis=1)
        if bridge:
            d0 = np.diff(pos, axis=1)
            u = rng.random(d1.shape)
            with np.errstate(over="ignore"):
                keep = u < -np.expm1(-np.clip(d0 * d1, 0, None) / h)
            ok &= np.all(keep, axis=1)
        pos = new[ok]
    return len(pos)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def estimate_tail(x, a, t: float, cfg: SimConfig = SimConfig(), threads: int | None = None) -> TailEstimate:
    xs = StartVector.of(x).array()
    a = DriftVector.of(a)
    if len(xs) != a.n:
        raise ValueError("x and a differ in length")
    if not t > 0:
        raise ValueError("t must be positive")
    predicted = math.exp(-gamma(a) * t)
    if predicted < 100.0 / cfg.replicas:
        raise CapabilityError(
            f"rare event: predicted tail ~{predicted:.3g} is below 100/replicas; use quadrature instead")
    dt = cfg.step(t)
    steps = max(1, math.ceil(t / dt - 1e-9))
    h = t / steps
    sizes = [min(CHUNK, cfg.replicas - s) for s in range(0, cfg.replicas, CHUNK)]
    av = a.array()

    def job(i):
        return _chunk_survivors(xs, av, steps, h, sizes[i], cfg.seed, i, cfg.bridge_correction)

    nthreads = resolve_threads(threads)
    if nthreads == 1:
        counts = [job(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(nthreads) as ex:
            counts = list(ex.map(job, range(len(sizes))))
    survived = sum(counts)
    p = survived / cfg.replicas
    stderr = math.sqrt(p * (1 - p) / cfg.replicas)
    return TailEstimate(p, stderr, "mc")
