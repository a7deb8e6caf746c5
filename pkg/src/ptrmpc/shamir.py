"""(n, t)-threshold Shamir sharing over a prime field.

Party indices are 1..n; a share of party ``i`` is the sharing polynomial
evaluated at ``i``.  The interactive pieces (degree reduction after a
multiplication, opening) need a transport and live in :mod:`ptrmpc.harness`;
this module holds the share math they are built from.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .fieldcore import Field, FieldElement


class SharingError(ValueError):
    pass


@dataclass(frozen=True)
class Share:
    party_index: int
    value: FieldElement


def check_threshold(n: int, t: int) -> None:
    if n < 3:
        raise SharingError(f"need n > 2 parties, got {n}")
    if t < 1 or 2 * t >= n:
        raise SharingError(f"threshold must satisfy 1 <= t < n/2, got t={t}, n={n}")


def eval_poly(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def random_poly(secret: int, t: int, p: int, rng: random.Random) -> list[int]:
    return [secret % p] + [rng.randrange(p) for _ in range(t)]


def share_poly(coeffs: Sequence[int], n: int, field: Field) -> list[Share]:
    return [Share(i, field(eval_poly(coeffs, i, field.p))) for i in range(1, n + 1)]


def share(secret: FieldElement | int, n: int, t: int, rng: random.Random,
          field: Field) -> list[Share]:
    check_threshold(n, t)
    s = secret.value if isinstance(secret, FieldElement) else secret
    return share_poly(random_poly(s, t, field.p, rng), n, field)


@lru_cache(maxsize=256)
def lagrange_at_zero(points: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Coefficients l_i with f(0) = sum l_i f(x_i) for deg f < len(points)."""
    out = []
    for i, xi in enumerate(points):
        num, den = 1, 1
        for j, xj in enumerate(points):
            if i != j:
                num = num * (-xj) % p
                den = den * (xi - xj) % p
        out.append(num * pow(den, -1, p) % p)
    return tuple(out)


def interpolate_at(points: Sequence[tuple[int, int]], x: int, p: int) -> int:
    total = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for j, (xj, _) in enumerate(points):
            if i != j:
                num = num * (x - xj) % p
                den = den * (xi - xj) % p
        total += yi * num * pow(den, -1, p)
    return total % p


def reconstruct(shares: Iterable[Share], t: int, field: Field) -> FieldElement:
    shares = list(shares)
    idx = [s.party_index for s in shares]
    if len(set(idx)) != len(idx):
        raise SharingError("duplicate party indices")
    if len(shares) < t + 1:
        raise SharingError(f"need at least {t + 1} shares, got {len(shares)}")
    coeffs = lagrange_at_zero(tuple(idx), field.p)
    return field(sum(c * s.value.value for c, s in zip(coeffs, shares)))


def consistent_degree(values: Sequence[int], t: int, p: int) -> bool:
    """True when shares at points 1..n all lie on one polynomial of degree <= t."""
    pts = list(enumerate(values, start=1))
    base = pts[: t + 1]
    return all(interpolate_at(base, x, p) == y for x, y in pts[t + 1:])


class SharedValue:
    """One secret-shared field element: ``shares[i]`` belongs to party i+1.

    Linear operations are purely local (each party combines its own share).
    ``depth`` is the communication round after which the value is available;
    it drives round accounting for batched execution.
    """

    __slots__ = ("shares", "p", "depth")

    def __init__(self, shares: list[int], p: int, depth: int = 0):
        self.shares = shares
        self.p = p
        self.depth = depth

    @classmethod
    def constant(cls, value: int, n: int, p: int) -> "SharedValue":
        # degree-0 sharing of a public value; no communication
        v = value % p
        return cls([v] * n, p)

    def share_of(self, party_index: int, field: Field) -> Share:
        return Share(party_index, field(self.shares[party_index - 1]))

    def _lin(self, other, sign: int) -> "SharedValue":
        p = self.p
        if isinstance(other, SharedValue):
            return SharedValue([(a + sign * b) % p for a, b in zip(self.shares, other.shares)],
                               p, max(self.depth, other.depth))
        if isinstance(other, int):
            o = sign * other
            return SharedValue([(a + o) % p for a in self.shares], p, self.depth)
        return NotImplemented

    def __add__(self, other):
        return self._lin(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._lin(other, -1)

    def __rsub__(self, other):
        if isinstance(other, int):
            p = self.p
            return SharedValue([(other - a) % p for a in self.shares], p, self.depth)
        return NotImplemented

    def __neg__(self):
        p = self.p
        return SharedValue([(-a) % p for a in self.shares], p, self.depth)

    def scale(self, k: int) -> "SharedValue":
        p = self.p
        return SharedValue([a * k % p for a in self.shares], p, self.depth)

    def __mul__(self, k):
        # only public scalars; share-by-share products need an interaction
        if isinstance(k, int):
            return self.scale(k)
        return NotImplemented

    __rmul__ = __mul__

    def at_depth(self, depth: int) -> "SharedValue":
        return SharedValue(self.shares, self.p, max(self.depth, depth))

    def __repr__(self) -> str:
        return f"SharedValue({self.shares}, depth={self.depth})"


def lincomb(terms: Iterable[tuple[int, SharedValue]], constant: int, n: int, p: int) -> SharedValue:
    acc = [constant % p] * n
    depth = 0
    for coef, v in terms:
        depth = max(depth, v.depth)
        acc = [(a + coef * s) % p for a, s in zip(acc, v.shares)]
    return SharedValue(acc, p, depth)
