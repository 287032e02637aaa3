"""Exact rational arithmetic for Bernoulli measures on the middle-third Cantor set.

The distribution function F(b) = mu([0, b]) satisfies

    F(b) = p1 F(3b)              for b < 1/3
    F(b) = p1                    for 1/3 <= b <= 2/3
    F(b) = p1 + p2 F(3b - 2)     for b > 2/3.

For rational b the orbit of b under these rescalings is eventually periodic,
so F(b) can be summed exactly: once the orbit returns to a visited state the
remaining tail is a geometric series.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

from .symbolic import Coding, CodingExhausted, cantor13, coded_point

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


def _is_power_of_three(d: int) -> bool:
    while d % 3 == 0:
        d //= 3
    return d == 1


@dataclass(frozen=True, order=True)
class TriadicInterval:
    """Closed interval [lo, hi] in [0, 1] with triadic rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"bad triadic interval [{lo}, {hi}]")
        if not (_is_power_of_three(lo.denominator) and _is_power_of_three(hi.denominator)):
            raise ValueError("endpoints must have power-of-three denominators")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def measure(self, weights=(HALF, HALF)) -> Fraction:
        return cantor_measure(self.lo, self.hi, weights)


def cantor_cdf(b, weights: Sequence = (HALF, HALF)) -> Fraction:
    """Exact mu([0, b]) for the Bernoulli measure with weights (p1, p2)."""
    p1, p2 = Fraction(weights[0]), Fraction(weights[1])
    b = Fraction(b)
    if b <= 0:
        return Fraction(0)
    if b >= 1:
        return Fraction(1)
    # F(b0) = a + m * F(state); remember (a, m) at the first visit of a state.
    # The state N/D keeps the denominator D fixed, so only integers move.
    a, m = Fraction(0), Fraction(1)
    seen = {}
    N, D = b.numerator, b.denominator
    while True:
        if N <= 0:
            return a
        if N >= D:
            return a + m
        if N in seen:
            a0, m0 = seen[N]
            tail = (a0 - a) / (m - m0)
            return a0 + m0 * tail
        seen[N] = (a, m)
        if 3 * N < D:
            m = m * p1
            N = 3 * N
        elif 3 * N <= 2 * D:
            return a + m * p1
        else:
            a = a + m * p1
            m = m * p2
            N = 3 * N - 2 * D


def cantor_measure(lo, hi, weights: Sequence = (HALF, HALF)) -> Fraction:
    """Exact mu([lo, hi]); the measure has no atoms so endpoints do not matter."""
    lo, hi = Fraction(lo), Fraction(hi)
    if hi < lo:
        return Fraction(0)
    return cantor_cdf(hi, weights) - cantor_cdf(lo, weights)


@functools.lru_cache(maxsize=4096)
def cantor_point(coding: Coding) -> Fraction:
    """Exact pi(coding) on the middle-third Cantor set (memoized per coding)."""
    return coded_point(cantor13(), coding)[0]


def cantor_one_sided(coding: Coding, n: int, weights: Sequence = (HALF, HALF)) -> Tuple[Fraction, Fraction]:
    """Exact (mu[x, x + 3^-n], mu[x - 3^-n, x + 3^-n]) for x = pi(coding)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if coding.finite:
        raise CodingExhausted("the point needs an exact coding: give a periodic tail, e.g. '1212(12)'")
    x = cantor_point(coding)
    r = Fraction(1, 3 ** n)
    return cantor_measure(x, x + r, weights), cantor_measure(x - r, x + r, weights)


def cantor_ball(coding: Coding, r, weights: Sequence = (HALF, HALF)) -> Fraction:
    x = cantor_point(coding)
    r = Fraction(r)
    return cantor_measure(x - r, x + r, weights)


def construction_intervals(k: int):
    """The 2^k level-k construction intervals of the Cantor set, left to right."""
    out = [TriadicInterval(0, 1)]
    for _ in range(k):
        nxt = []
        for I in out:
            third = I.length / 3
            nxt.append(TriadicInterval(I.lo, I.lo + third))
            nxt.append(TriadicInterval(I.hi - third, I.hi))
        out = nxt
    return out


def run_length(coding: Coding, n: int, symbol: int = 2):
    """Number of consecutive ``symbol`` entries right after position n (inf if endless)."""
    k = n
    plen = len(coding.prefix)
    while k < plen:
        if coding.prefix[k] != symbol:
            return k - n
        k += 1
    if coding.finite:
        raise CodingExhausted("run continues past the end of the coding")
    if all(s == symbol for s in coding.cycle):
        return math.inf
    j = 0
    while coding.symbol(k + j) == symbol:
        j += 1
    return k + j - n
