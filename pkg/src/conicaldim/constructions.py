"""Explicit constructions: the sharpness interval sets on the Cantor set and the
two-operation grid measure in the unit square.  The word searches for self-similar
systems live in `conicaldim.search` and are re-exported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dimension import Gauge
from .refinable import Cell, RefinableMeasure
from .symbolic import PointEnclosure
from .triadic import HALF, TriadicInterval, cantor_measure, construction_intervals


# Sharpness sets on the Cantor set -------------------------------------------

@dataclass
class SharpnessLevel:
    k: int
    target: float            # f(3^-k)
    b_local: Fraction        # b in the local [0, 1] coordinates of each interval
    removed_fraction: Fraction   # mu(I_+) / mu(I)
    overshoot: float         # removed_fraction - target (>= 0)


@dataclass
class SharpnessConstruction:
    gauge: Gauge
    N: int
    k_max: int
    depth_cap: int
    levels: Dict[int, SharpnessLevel] = field(default_factory=dict)
    F: Dict[int, List[TriadicInterval]] = field(default_factory=dict)

    def removed(self, k: int) -> List[Tuple[TriadicInterval, TriadicInterval]]:
        """Pairs (I, I_+) for every level-k construction interval."""
        lev = self.levels[k]
        out = []
        for I in construction_intervals(k):
            b = I.lo + I.length * lev.b_local
            out.append((I, TriadicInterval(b, I.hi)))
        return out

    def mass(self, k: int) -> Fraction:
        return sum((J.measure() for J in self.F[k]), Fraction(0))


def triadic_tail_point(q: Fraction, depth_cap: int, weights=(HALF, HALF)) -> Fraction:
    """Largest b in [0, 1] on the 3^-depth_cap grid with mu([b, 1]) >= q.

    Greedy descent: the right child carries p2 of the mass; if q fits in it we
    go right, otherwise we keep the whole right child and continue left.
    """
    p1, p2 = Fraction(weights[0]), Fraction(weights[1])
    q = Fraction(q)
    if q <= 0:
        return Fraction(1)
    if q > 1:
        raise ValueError("cannot remove more than the whole interval")
    lo, length = Fraction(0), Fraction(1)
    for _ in range(depth_cap):
        if q == 1:
            return lo
        third = length / 3
        if q <= p2:
            lo, q = lo + 2 * third, q / p2
        else:
            q = (q - p2) / p1
        length = third
    return lo


def _intersect(a: List[TriadicInterval], b: List[TriadicInterval]) -> List[TriadicInterval]:
    out, i, j = [], 0, 0
    while i < len(a) and j < len(b):
        lo, hi = max(a[i].lo, b[j].lo), min(a[i].hi, b[j].hi)
        if lo < hi:
            out.append(TriadicInterval(lo, hi))
        if a[i].hi < b[j].hi:
            i += 1
        else:
            j += 1
    return out


def build_sharpness(f, N: int, k_max: int, depth_cap: int = 40) -> SharpnessConstruction:
    """Removed right pieces I_+ and the nested sets F_k for levels N..k_max."""
    g = f if isinstance(f, Gauge) else Gauge.parse(f) if isinstance(f, str) else Gauge.table(f)
    if k_max < N:
        raise ValueError("k_max must be >= N")
    if k_max > 18:
        raise ValueError("k_max > 18 would need more than 2^18 construction intervals")
    con = SharpnessConstruction(g, N, k_max, depth_cap)
    F: Optional[List[TriadicInterval]] = None
    for k in range(N, k_max + 1):
        target = g(3.0 ** -k)
        if target >= 1:
            raise ValueError(f"f(3^-{k}) = {target} >= 1")
        q = Fraction(target) if target > 0 else Fraction(0)
        b_loc = triadic_tail_point(q, depth_cap)
        frac = 1 - cantor_measure(0, b_loc) if b_loc < 1 else Fraction(0)
        con.levels[k] = SharpnessLevel(k, target, b_loc, frac, float(frac) - target)
        kept = []
        for I in construction_intervals(k):
            b = I.lo + I.length * b_loc
            if b > I.lo:
                kept.append(TriadicInterval(I.lo, b))
        F = kept if F is None else _intersect(F, kept)
        con.F[k] = F
    return con


def sharpness_product_bound(construction, eps: float, L: int, n: int, N: Optional[int] = None) -> float:
    """prod_{k=1}^{n} (1 - eps 2^-L f(3^{-N-kL})).

    ``construction`` may be a SharpnessConstruction (supplying f and N) or a
    gauge, in which case N must be given.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if L < 1:
        raise ValueError("L must be >= 1")
    if isinstance(construction, SharpnessConstruction):
        g, N = construction.gauge, construction.N
    else:
        g = construction if isinstance(construction, Gauge) else Gauge.parse(construction)
        if N is None:
            raise ValueError("N is required when passing a gauge")
    logs = []
    for k in range(1, n + 1):
        # log 3^{-N-kL} computed directly, 3.0**-(huge) would underflow
        term = eps * 2.0 ** -L * g.at_log(-(N + k * L) * math.log(3))
        if term >= 1:
            return 0.0
        logs.append(math.log1p(-term))
    return math.exp(math.fsum(logs))


# Grid measure -----------------------------------------------------------------

def _iroot_floor(num: int, den: int, k: int) -> int:
    """Largest integer N >= 0 with N**k * den <= num."""
    if num < den:
        return 0
    guess = int((num / den) ** (1.0 / k)) if num.bit_length() - den.bit_length() < 1000 else \
        int(math.exp((math.log(num) - math.log(den)) / k))
    N = max(guess - 2, 0)
    while (N + 1) ** k * den <= num:
        N += 1
    while N > 0 and N ** k * den > num:
        N -= 1
    return N


@dataclass(frozen=True)
class GridSquare:
    x0: Fraction
    y0: Fraction
    side: Fraction
    mass: Fraction
    op: int          # operation that will subdivide this square
    gen: int


class GridMeasure(RefinableMeasure):
    """Measure on [0,1)^2 built by alternating the two subdivision operations.

    op (1): n - 1 <= (|Q|^-t mu(Q))^(1/(2-t)) < n, all n^2 subsquares get mu/n^2.
    op (2): n - 1 <= (|Q|^s / mu(Q))^(1/(s-1)) < n, only the bottom row gets mass,
            mu/n each.

    The root applies op (1) and generations alternate.  Squares are half-open.
    Because n grows very fast, the children of a square are produced lazily as
    rectangular blocks of subsquares that are split in halves along each axis.
    """

    backend = "grid"
    dim = 2
    exact = True

    def __init__(self, s, t):
        s, t = Fraction(str(s)) if isinstance(s, float) else Fraction(s), \
            Fraction(str(t)) if isinstance(t, float) else Fraction(t)
        if not 1 < s < t < 2:
            raise ValueError("grid measure needs 1 < s < t < 2")
        self.s, self.t = s, t
        self._n_cache: Dict[Tuple, int] = {}

    def __repr__(self):
        return f"GridMeasure(s={self.s}, t={self.t})"

    # subdivision counts
    def count(self, q: GridSquare) -> int:
        key = (q.side, q.mass, q.op)
        if key in self._n_cache:
            return self._n_cache[key]
        side, mu = q.side, q.mass
        if q.op == 1:
            c, d = self.t.numerator, self.t.denominator
            if not mu ** d >= side ** c:
                raise ArithmeticError("operation (1) precondition mu(Q) >= |Q|^t fails")
            # N^(2d-c) <= |Q|^-c mu^d
            val = mu ** d / side ** c
            k = 2 * d - c
        else:
            a, b = self.s.numerator, self.s.denominator
            if not mu ** b <= side ** a:
                raise ArithmeticError("operation (2) precondition mu(Q) <= |Q|^s fails")
            # N^(a-b) <= |Q|^a mu^-b
            val = side ** a / mu ** b
            k = a - b
        n = _iroot_floor(val.numerator, val.denominator, k) + 1
        self._n_cache[key] = n
        return n

    def root_square(self) -> GridSquare:
        return GridSquare(Fraction(0), Fraction(0), Fraction(1), Fraction(1), 1, 0)

    def child_square(self, q: GridSquare, i: int, j: int) -> GridSquare:
        n = self.count(q)
        side = q.side / n
        mass = q.mass / (n * n) if q.op == 1 else (q.mass / n if j == 0 else Fraction(0))
        return GridSquare(q.x0 + i * side, q.y0 + j * side, side, mass, 3 - q.op, q.gen + 1)

    # cells: ("sq", square) or ("blk", square, n, i0, i1, j0, j1)
    def _rect_bound(self, x0, y0, w, h) -> PointEnclosure:
        return PointEnclosure((x0 + w / 2, y0 + h / 2), math.hypot(float(w), float(h)) / 2 * (1 + 1e-12))

    def _square_cell(self, q: GridSquare, depth: int) -> Cell:
        return Cell((q.gen, q.x0, q.y0), self._rect_bound(q.x0, q.y0, q.side, q.side), q.mass, depth, ("sq", q))

    def _block_cell(self, q: GridSquare, n: int, i0, i1, j0, j1, depth: int) -> Cell:
        side = q.side / n
        if i1 - i0 == 1 and j1 - j0 == 1:
            return self._square_cell(self.child_square(q, i0, j0), depth)
        per = q.mass / (n * n) if q.op == 1 else q.mass / n
        mass = per * (i1 - i0) * (j1 - j0)
        bound = self._rect_bound(q.x0 + i0 * side, q.y0 + j0 * side, (i1 - i0) * side, (j1 - j0) * side)
        return Cell((q.gen, q.x0, q.y0, i0, i1, j0, j1), bound, mass, depth, ("blk", q, n, i0, i1, j0, j1))

    def root(self) -> Cell:
        return self._square_cell(self.root_square(), 0)

    def refine(self, cell: Cell) -> List[Cell]:
        kind = cell.data[0]
        if kind == "sq":
            q = cell.data[1]
            n = self.count(q)
            rows = n if q.op == 1 else 1
            return self._split(q, n, 0, n, 0, rows, cell.depth)
        _, q, n, i0, i1, j0, j1 = cell.data
        return self._split(q, n, i0, i1, j0, j1, cell.depth)

    def _split(self, q, n, i0, i1, j0, j1, depth) -> List[Cell]:
        im = (i0 + i1) // 2 if i1 - i0 > 1 else None
        jm = (j0 + j1) // 2 if j1 - j0 > 1 else None
        ir = [(i0, im), (im, i1)] if im is not None else [(i0, i1)]
        jr = [(j0, jm), (jm, j1)] if jm is not None else [(j0, j1)]
        return [self._block_cell(q, n, a, b, c, d, depth + 1) for a, b in ir for c, d in jr]

    def descend(self, cell: Cell, point) -> Cell:
        x, y = (Fraction(c) for c in point)
        for ch in self.refine(cell):
            if ch.data[0] == "sq":
                q = ch.data[1]
                if q.x0 <= x < q.x0 + q.side and q.y0 <= y < q.y0 + q.side:
                    return ch
            else:
                _, q, n, i0, i1, j0, j1 = ch.data
                side = q.side / n
                if q.x0 + i0 * side <= x < q.x0 + i1 * side and q.y0 + j0 * side <= y < q.y0 + j1 * side:
                    return ch
        raise ValueError("point is not in the support of the grid measure")

    def square_chain(self, point, generations: int) -> List[GridSquare]:
        """Generation squares Q_0, Q_1, ... containing ``point`` (half-open)."""
        x, y = (Fraction(c) for c in point)
        q = self.root_square()
        out = [q]
        for _ in range(generations):
            n = self.count(q)
            side = q.side / n
            i = math.floor((x - q.x0) / side)
            j = math.floor((y - q.y0) / side)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError("point outside the square")
            q = self.child_square(q, i, j)
            if q.mass == 0:
                raise ValueError("point is not in the support of the grid measure")
            out.append(q)
        return out

    def sample(self, rng, generations: int) -> Tuple[Tuple[Fraction, Fraction], List[GridSquare]]:
        """Random mu-distributed descent; returns the center of the last square and the chain."""
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        q = self.root_square()
        chain = [q]
        for _ in range(generations):
            n = self.count(q)
            i = _randbelow(rng, n)
            j = _randbelow(rng, n) if q.op == 1 else 0
            q = self.child_square(q, i, j)
            chain.append(q)
        half = q.side / 2
        return (q.x0 + half, q.y0 + half), chain


def _randbelow(rng: np.random.Generator, n: int) -> int:
    if n < 2 ** 62:
        return int(rng.integers(0, n))
    # very large counts: combine 62-bit chunks, then reduce (bias < 2^-62)
    bits = n.bit_length() + 62
    v = 0
    for _ in range(0, bits, 62):
        v = (v << 62) | int(rng.integers(0, 2 ** 62))
    return v % n


def grid_measure(s, t) -> GridMeasure:
    return GridMeasure(s, t)


def predicted_conical_dimension(s, t) -> float:
    s, t = float(s), float(t)
    return s * (t - 1) / (s - 1)


# the searches live in their own module; re-exported here for convenience
from .search import (ConeSearchResult, NotFound, cone_inclusion_search,  # noqa: E402,F401
                     separation_word_search, theorem41_exponents)
