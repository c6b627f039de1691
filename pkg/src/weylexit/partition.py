"""Drift-vector combinatorics: irreducibility, the stable partition, its
strong representation, and the coalescing-particle dynamics that reproduce it.

Mean comparisons are carried out on :class:`fractions.Fraction` values.  When
every input is rational (ints, Fractions, decimal or ``p/q`` strings) the
comparison is exact.  If any input arrives as a binary float, the float is
converted exactly and differences smaller than ``tol`` (default ``1e-12``) are
treated as ties.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence, Union

import numpy as np

DEFAULT_TOL = 1e-12

Number = Union[int, float, Fraction, str]


class ParseError(ValueError):
    """Raised when a drift or start vector cannot be parsed."""


def _to_fraction(v: Number) -> tuple[Fraction, bool]:
    """Return ``(value, exact)``; ``exact`` is False for binary floats."""
    if isinstance(v, bool):
        raise ParseError(f"boolean is not a number: {v!r}")
    if isinstance(v, Fraction):
        return v, True
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v)), True
    if isinstance(v, str):
        try:
            return Fraction(v.strip()), True
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse {v!r} as a rational number") from exc
    f = float(v)
    if not np.isfinite(f):
        raise ParseError(f"non-finite value {v!r}")
    return Fraction(f), False


def parse_vector(text: str) -> list[Fraction]:
    """Parse ``"3,1,2,5,1"`` or ``"1/2,-1/3,0.25"`` into exact Fractions."""
    parts = [p for p in text.replace(" ", "").split(",")]
    if not parts or any(p == "" for p in parts):
        raise ParseError(f"malformed vector {text!r}")
    return [_to_fraction(p)[0] for p in parts]


@dataclass(frozen=True)
class DriftVector:
    values: tuple[Fraction, ...]
    tol: Fraction = Fraction(0)

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("drift vector must be non-empty")

    @classmethod
    def of(cls, values: Iterable[Number] | "DriftVector", tol: float | None = None):
        """Build from numbers or strings; ``tol`` overrides the tie tolerance."""
        if isinstance(values, DriftVector):
            return values
        converted = [_to_fraction(v) for v in values]
        vals = tuple(c[0] for c in converted)
        if tol is None:
            tol = 0 if all(c[1] for c in converted) else DEFAULT_TOL
        return cls(vals, Fraction(tol))

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def gt(self, u: Fraction, v: Fraction) -> bool:
        """``u > v`` up to the tie tolerance."""
        return u - v > self.tol

    def shifted(self, c: Number) -> "DriftVector":
        c = _to_fraction(c)[0]
        return DriftVector(tuple(v + c for v in self.values), self.tol)


@dataclass(frozen=True)
class StartVector:
    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if len(v) < 1:
            raise ValueError("start vector must be non-empty")
        if not all(np.isfinite(v)):
            raise ValueError("start vector must be finite")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"start point {list(v)} is not in the Weyl chamber "
                             "(coordinates must be strictly increasing)")

    @classmethod
    def of(cls, values) -> "StartVector":
        if isinstance(values, StartVector):
            return values
        if isinstance(values, str):
            values = parse_vector(values)
        return cls(tuple(float(v) for v in values))

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


def _mean(vals: Sequence[Fraction]) -> Fraction:
    return sum(vals, Fraction(0)) / len(vals)


def is_irreducible(a) -> bool:
    """True iff every prefix mean strictly exceeds the complementary suffix mean.

    A singleton is irreducible.
    """
    a = DriftVector.of(a)
    vals = a.values
    n = len(vals)
    total = sum(vals, Fraction(0))
    prefix = Fraction(0)
    for k in range(1, n):
        prefix += vals[k - 1]
        if not a.gt(prefix / k, (total - prefix) / (n - k)):
            return False
    return True


@dataclass(frozen=True)
class StablePartition:
    """Consecutive irreducible blocks with nondecreasing means.

    ``m`` holds the 1-based right ends of the blocks, so block ``k`` covers
    coordinates ``m[k-1]+1 .. m[k]`` (with ``m[-1] == n``).
    """

    m: tuple[int, ...]
    nu: tuple[int, ...]
    f_block: tuple[Fraction, ...]
    tol: Fraction = Fraction(0)

    @property
    def q(self) -> int:
        return len(self.m)

    @property
    def n(self) -> int:
        return self.m[-1]

    @property
    def f_full(self) -> tuple[Fraction, ...]:
        return tuple(f for f, size in zip(self.f_block, self.nu) for _ in range(size))

    def blocks(self) -> list[range]:
        """0-based index ranges of the blocks."""
        starts = (0,) + self.m[:-1]
        return [range(s, e) for s, e in zip(starts, self.m)]


@dataclass(frozen=True)
class StrongRepresentation:
    m_prime: tuple[int, ...]
    nu_prime: tuple[int, ...]
    source_indices: tuple[int, ...]
    k0: int

    @property
    def q_prime(self) -> int:
        return len(self.m_prime)

    def blocks(self) -> list[range]:
        starts = (0,) + self.m_prime[:-1]
        return [range(s, e) for s, e in zip(starts, self.m_prime)]


def stable_partition(a) -> StablePartition:
    """Unique stable partition, built left to right.

    Each new coordinate opens its own block; while the previous block's mean
    strictly exceeds the last block's mean the two are merged.
    """
    a = DriftVector.of(a)
    sums: list[Fraction] = []
    sizes: list[int] = []
    for v in a.values:
        sums.append(v)
        sizes.append(1)
        while len(sums) > 1 and a.gt(sums[-2] / sizes[-2], sums[-1] / sizes[-1]):
            s, c = sums.pop(), sizes.pop()
            sums[-1] += s
            sizes[-1] += c
    m = tuple(itertools.accumulate(sizes))
    f_block = tuple(s / c for s, c in zip(sums, sizes))
    return StablePartition(m=m, nu=tuple(sizes), f_block=f_block, tol=a.tol)


def strong_representation(p: StablePartition) -> StrongRepresentation:
    """Coarsen ``p`` at the strict increases of its block means."""
    m_prime, src = [], []
    for j in range(p.q - 1):
        if p.f_block[j + 1] - p.f_block[j] > p.tol:
            m_prime.append(p.m[j])
            src.append(j + 1)
    m_prime.append(p.n)
    src.append(p.q)
    starts = [0] + m_prime[:-1]
    nu_prime = tuple(e - s for s, e in zip(starts, m_prime))
    k0 = sum(comb(v, 2) for v in nu_prime)
    return StrongRepresentation(tuple(m_prime), nu_prime, tuple(src), k0)


def is_stable(a, m: Sequence[int]) -> bool:
    """Check the stability conditions for the block right ends ``m`` directly."""
    a = DriftVector.of(a)
    starts = [0] + list(m[:-1])
    blocks = [a.values[s:e] for s, e in zip(starts, m)]
    if any(not is_irreducible(DriftVector(tuple(b), a.tol)) for b in blocks):
        return False
    means = [_mean(b) for b in blocks]
    return all(not a.gt(u, v) for u, v in zip(means, means[1:]))


def stable_partitions_brute_force(a) -> list[tuple[int, ...]]:
    """All block right-end tuples satisfying the stability conditions."""
    a = DriftVector.of(a)
    n = a.n
    found = []
    for r in range(n):
        for cuts in itertools.combinations(range(1, n), r):
            m = tuple(cuts) + (n,)
            if is_stable(a, m):
                found.append(m)
    return found


def coalescing_groups(x, a) -> list[list[int]]:
    """Terminal grouping of the sticky-particle system.

    Particle ``i`` starts at ``x[i]`` with speed ``a[i]``; colliding clusters
    merge and move at their mass-weighted mean speed.  Collisions are resolved
    in time order with exact rational event times; every cluster pair that
    meets at the earliest event time is merged in the same event.  Returns
    1-based index groups.
    """
    a = DriftVector.of(a)
    xs = StartVector.of(x)
    if xs.n != a.n:
        raise ValueError("start and drift vectors differ in length")
    pos = [Fraction(v) for v in xs.values]
    mass = [1] * a.n
    speed_sum = list(a.values)
    members = [[i + 1] for i in range(a.n)]

    while True:
        best = None
        hits = []
        for i in range(len(pos) - 1):
            vi = speed_sum[i] / mass[i]
            vj = speed_sum[i + 1] / mass[i + 1]
            if a.gt(vi, vj):
                dt = (pos[i + 1] - pos[i]) / (vi - vj)
                if best is None or dt < best:
                    best, hits = dt, [i]
                elif dt == best:
                    hits.append(i)
        if best is None:
            return members
        pos = [p + best * s / c for p, s, c in zip(pos, speed_sum, mass)]
        # merge right-to-left so indices stay valid; chains collapse together
        for i in sorted(hits, reverse=True):
            mass[i] += mass.pop(i + 1)
            speed_sum[i] += speed_sum.pop(i + 1)
            members[i] += members.pop(i + 1)
            pos.pop(i + 1)


def groups_to_boundaries(groups: Sequence[Sequence[int]]) -> tuple[int, ...]:
    return tuple(g[-1] for g in groups)


def partition_dict(p: StablePartition, sr: StrongRepresentation | None = None) -> dict:
    """JSON-ready description of a partition and its strong representation."""
    if sr is None:
        sr = strong_representation(p)
    return {
        "m": list(p.m),
        "nu": list(p.nu),
        "f_block": [float(f) for f in p.f_block],
        "m_prime": list(sr.m_prime),
        "q": p.q,
        "q_prime": sr.q_prime,
        "k0": sr.k0,
    }
