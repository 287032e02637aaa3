"""Refinable-cell measures and the certified enclosure engine.

A refinable measure hands out a root cell of mass one and splits any cell
into children whose masses add up to the parent's.  Each cell carries a
bounding ball.  `measure_region` walks the cell tree and classifies every
ball against a `ConeRegion`:

* inside cells count towards both bounds,
* outside cells are dropped,
* undecided cells are split, or, once the depth cap is reached, charged to
  the upper bound only.

Query regions are centered at a point x, and cells are handled through a
*localized view* that reports each cell's center as an offset from x.  For
self-similar measures with symbolically coded points the offsets are computed
in the frame of the last cylinder shared with the point, so tiny balls deep
inside the attractor keep full relative precision.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, List, Optional, Tuple

from .geometry import ConeRegion, Disposition, as_vector, classify_offset
from .symbolic import (Coding, CodingExhausted, PointEnclosure, SelfSimilarSystem, Similitude,
                       coded_point, coded_point_float)

INSIDE, OUTSIDE, UNKNOWN = Disposition.INSIDE, Disposition.OUTSIDE, Disposition.UNKNOWN


@dataclass(frozen=True)
class Cell:
    path: Tuple
    bound: PointEnclosure
    weight: Any
    depth: int = 0
    data: Any = field(default=None, compare=False, repr=False)


@dataclass
class Node:
    """A cell seen from a query point: center offset, radius and mass."""

    offset: Tuple
    radius: Any
    weight: Any
    depth: int
    state: Any = None


@dataclass(frozen=True)
class MeasureBound:
    lower: Any
    upper: Any
    unresolved: int = 0
    unresolved_mass: Any = 0
    cells: int = 0

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value) -> bool:
        return self.lower <= value <= self.upper

    def __iter__(self):
        yield self.lower
        yield self.upper


@dataclass(frozen=True)
class RatioInterval:
    lo: float
    hi: float
    unbounded: bool = False
    empty: bool = False


def ratio_bounds(num: MeasureBound, den: MeasureBound, scale: float = 1.0) -> RatioInterval:
    """Interval quotient [lower(A)/upper(B), upper(A)/lower(B)] divided by ``scale``."""
    if den.upper == 0:
        return RatioInterval(math.nan, math.nan, unbounded=True, empty=True)
    lo = float(Fraction(num.lower) / Fraction(den.upper)) if _rat(num.lower, den.upper) else float(num.lower) / float(den.upper)
    if den.lower == 0:
        return RatioInterval(lo / scale, math.inf, unbounded=True)
    hi = float(Fraction(num.upper) / Fraction(den.lower)) if _rat(num.upper, den.lower) else float(num.upper) / float(den.lower)
    return RatioInterval(lo / scale, hi / scale)


def _rat(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


class RefinableMeasure:
    """Interface: ``root``, ``refine``, ``localize`` plus ``dim``/``backend``."""

    backend = "abstract"
    dim = 0
    exact = False

    def root(self) -> Cell:
        raise NotImplementedError

    def refine(self, cell: Cell) -> List[Cell]:
        raise NotImplementedError

    def localize(self, point) -> "LocalView":
        return PointView(self, point)

    def descend(self, cell: Cell, point) -> Cell:
        """Child of ``cell`` that carries the given coded point."""
        raise NotImplementedError

    def one(self):
        return Fraction(1) if self.exact else 1.0


class LocalView:
    def root(self) -> Node:
        raise NotImplementedError

    def children(self, node: Node) -> List[Node]:
        raise NotImplementedError


class PointView(LocalView):
    """Generic view for an explicit coordinate point."""

    def __init__(self, measure: RefinableMeasure, point):
        self.m = measure
        self.x = as_vector(point)
        self.exact = measure.exact and all(isinstance(c, Rational) for c in self.x)
        if len(self.x) != measure.dim:
            raise ValueError("point dimension does not match the measure")

    def _node(self, cell: Cell) -> Node:
        c = cell.bound.center
        if self.exact:
            off = tuple(a - b for a, b in zip(c, self.x))
            rad = cell.bound.radius
        else:
            off = tuple(float(a) - float(b) for a, b in zip(c, self.x))
            rad = float(cell.bound.radius)
        return Node(off, rad, cell.weight, cell.depth, cell)

    def root(self) -> Node:
        return self._node(self.m.root())

    def children(self, node: Node) -> List[Node]:
        return [self._node(c) for c in self.m.refine(node.state)]


# Self-similar measures ------------------------------------------------------

class SelfSimilarMeasure(RefinableMeasure):
    backend = "selfsimilar"

    def __init__(self, system: SelfSimilarSystem):
        self.system = system
        self.dim = system.dim
        self.exact = system.exact and system.dim == 1
        self.bound = system.bound()
        self.kappa = system.kappa
        self.identity_rot = all(f.rotation == tuple(tuple(1 if i == j else 0 for j in range(self.dim))
                                                       for i in range(self.dim)) for f in system.maps)
        if self.exact:
            self.weights = tuple(Fraction(w) for w in system.weights)
        else:
            self.weights = tuple(float(w) for w in system.weights)
        self.fmaps = tuple(f.to_float() for f in system.maps)

    def __repr__(self):
        return f"SelfSimilarMeasure({self.system.name})"

    def _cell(self, path, g: Similitude, weight) -> Cell:
        b = PointEnclosure(g(self.bound.center), g.ratio * self.bound.radius)
        return Cell(tuple(path), b, weight, len(path), g)

    def root(self) -> Cell:
        return self._cell((), Similitude.identity(self.dim), self.one())

    def refine(self, cell: Cell) -> List[Cell]:
        return [self._cell(cell.path + (s,), cell.data.then(self.system.maps[s - 1]), cell.weight * self.weights[s - 1])
                for s in range(1, self.kappa + 1)]

    def descend(self, cell: Cell, point) -> Cell:
        s = point.symbol(cell.depth)
        return self._cell(cell.path + (s,), cell.data.then(self.system.maps[s - 1]), cell.weight * self.weights[s - 1])

    def localize(self, point) -> LocalView:
        if isinstance(point, Coding):
            return CodedView(self, point)
        return PointView(self, point)


class CodedView(LocalView):
    """Cells of a self-similar measure seen from pi(coding).

    Node state ``(k, ratio, rot, t, path)`` describes the cell
    E_{i|k u} through the map g = f_u written as x -> ratio * rot x + t,
    where k is the length of the common prefix with the coding.  Its center
    offset is S_k O_k (g(c0) - x_k), with S_k O_k the linear part of f_{i|k}
    and x_k = pi(sigma^k i).
    """

    def __init__(self, measure: SelfSimilarMeasure, coding: Coding):
        self.m = measure
        self.coding = coding
        self.exact = measure.exact and not coding.finite
        self.c0 = measure.bound.center if self.exact else tuple(float(c) for c in measure.bound.center)
        self.R = measure.bound.radius if self.exact else float(measure.bound.radius)
        self.maps = measure.system.maps if self.exact else measure.fmaps
        self._frames: List[tuple] = []
        self._xs: dict = {}
        self._n = measure.dim

    # frame k: (S_k, O_k or None, P_k, x_k)
    def frame(self, k: int):
        while len(self._frames) <= k:
            j = len(self._frames)
            if j == 0:
                S, O, P = (1 if self.exact else 1.0), None, self.m.one()
            else:
                S0, O0, P0, _ = self._frames[j - 1]
                s = self.coding.symbol(j - 1)
                f = self.maps[s - 1]
                S = S0 * f.ratio
                P = P0 * self.m.weights[s - 1]
                if self.m.identity_rot:
                    O = None
                else:
                    O = _mat(O0, f.rotation, self._n)
            self._frames.append((S, O, P, self._x(j)))
        return self._frames[k]

    def _x(self, k: int):
        if not self.m.system.exact or self.coding.finite:
            return coded_point_float(self.m.system, self.coding, k, fmaps=self.m.fmaps, bound=self.m.bound)
        if not self._xs:
            self._fill_exact()
        P, L = len(self.coding.prefix), len(self.coding.cycle)
        if k >= P:
            k = P + (k - P) % L
        x = self._xs[k]
        return x if self.exact else tuple(float(c) for c in x)

    def _fill_exact(self):
        system = self.m.system
        P, L = len(self.coding.prefix), len(self.coding.cycle)
        # x_P is the fixed point of the cycle map; x_k = f_{i_{k+1}}(x_{k+1})
        # backwards from there, using x_{P+L} = x_P.
        pts = {P: coded_point(system, self.coding, P)}
        nxt = pts[P]
        for k in range(P + L - 1, -1, -1):
            if k == P:
                nxt = pts[P]
                continue
            nxt = system.maps[self.coding.symbol(k) - 1](nxt)
            pts[k] = nxt
        self._xs = pts

    def _node(self, k, ratio, rot, t, path, weight_u) -> Node:
        S, O, P, xk = self.frame(k)
        c0 = self.c0
        if rot is None:
            v = tuple(ratio * a + b - x for a, b, x in zip(c0, t, xk))
        else:
            rc = _matvec(rot, c0)
            v = tuple(ratio * a + b - x for a, b, x in zip(rc, t, xk))
        if O is None:
            off = tuple(S * a for a in v)
        else:
            off = tuple(S * a for a in _matvec(O, v))
        return Node(off, S * ratio * self.R, P * weight_u, len(path), (k, ratio, rot, t, path, weight_u))

    def root(self) -> Node:
        zero = tuple(0 for _ in range(self._n)) if self.exact else (0.0,) * self._n
        return self._node(0, 1, None, zero, (), self.m.one())

    def children(self, node: Node) -> List[Node]:
        k, ratio, rot, t, path, wu = node.state
        out = []
        on_path = len(path) == k
        if on_path:
            nxt = self.coding.symbol(k)
        for s in range(1, self.m.kappa + 1):
            f = self.maps[s - 1]
            w = self.m.weights[s - 1]
            if on_path and s == nxt:
                zero = tuple(0 for _ in range(self._n)) if self.exact else (0.0,) * self._n
                out.append(self._node(k + 1, 1, None, zero, path + (s,), self.m.one()))
                continue
            # g o f_s: ratio*rot*(r_s O_s x + t_s) + t
            if rot is None:
                nt = tuple(ratio * a + b for a, b in zip(f.translation, t))
                nrot = None if self.m.identity_rot else f.rotation
            else:
                nt = tuple(ratio * a + b for a, b in zip(_matvec(rot, f.translation), t))
                nrot = _mat(rot, f.rotation, self._n)
            if nrot is not None and self.m.identity_rot:
                nrot = None
            out.append(self._node(k, ratio * f.ratio, nrot, nt, path + (s,), wu * w))
        return out


def _mat(a, b, n):
    if a is None:
        return b
    return tuple(tuple(sum(a[i][q] * b[q][j] for q in range(n)) for j in range(n)) for i in range(n))


def _matvec(a, v):
    return tuple(sum(a[i][q] * v[q] for q in range(len(v))) for i in range(len(a)))


# Product measures -----------------------------------------------------------

class ProductMeasure(RefinableMeasure):
    """mu_x x mu_y on the plane from two one-dimensional refinable measures.

    Cells are rectangles (a cell of each factor); the bounding ball is the
    circumscribed ball of the rectangle.  Refinement splits the factor whose
    cell is currently larger, and both when they are equal.
    """

    backend = "product"
    dim = 2

    def __init__(self, mx: RefinableMeasure, my: RefinableMeasure):
        if mx.dim != 1 or my.dim != 1:
            raise ValueError("product factors must be one-dimensional")
        self.mx, self.my = mx, my
        self.exact = False

    def __repr__(self):
        return f"ProductMeasure({self.mx!r}, {self.my!r})"

    def _cell(self, a: Cell, b: Cell, depth: int) -> Cell:
        ra, rb = a.bound.radius, b.bound.radius
        bound = PointEnclosure((a.bound.center[0], b.bound.center[0]), math.hypot(float(ra), float(rb)))
        return Cell((a.path, b.path), bound, a.weight * b.weight, depth, (a, b))

    def root(self) -> Cell:
        return self._cell(self.mx.root(), self.my.root(), 0)

    def refine(self, cell: Cell) -> List[Cell]:
        a, b = cell.data
        ka, kb = _split_sides(a.bound.radius, b.bound.radius)
        la = self.mx.refine(a) if ka else [a]
        lb = self.my.refine(b) if kb else [b]
        return [self._cell(u, v, cell.depth + 1) for u in la for v in lb]

    def descend(self, cell: Cell, point) -> Cell:
        a, b = cell.data
        ka, kb = _split_sides(a.bound.radius, b.bound.radius)
        a2 = self.mx.descend(a, point[0]) if ka else a
        b2 = self.my.descend(b, point[1]) if kb else b
        return self._cell(a2, b2, cell.depth + 1)

    def localize(self, point) -> LocalView:
        if len(point) != 2:
            raise ValueError("product points are pairs")
        return ProductView(self, self.mx.localize(_factor_point(point[0])), self.my.localize(_factor_point(point[1])))


def _factor_point(p):
    if isinstance(p, Coding):
        return p
    if isinstance(p, (tuple, list)):
        return tuple(p)
    return (p,)


def _split_sides(ra, rb):
    if ra == rb:
        return True, True
    return (ra > rb), (rb > ra)


class ProductView(LocalView):
    def __init__(self, m: ProductMeasure, vx: LocalView, vy: LocalView):
        self.m, self.vx, self.vy = m, vx, vy

    def _node(self, a: Node, b: Node, depth: int) -> Node:
        off = (float(a.offset[0]), float(b.offset[0]))
        rad = math.hypot(float(a.radius), float(b.radius))
        return Node(off, rad, a.weight * b.weight, depth, (a, b))

    def root(self) -> Node:
        return self._node(self.vx.root(), self.vy.root(), 0)

    def children(self, node: Node) -> List[Node]:
        a, b = node.state
        ka, kb = _split_sides(a.radius, b.radius)
        la = self.vx.children(a) if ka else [a]
        lb = self.vy.children(b) if kb else [b]
        return [self._node(u, v, node.depth + 1) for u in la for v in lb]


def product_measure(mx: RefinableMeasure, my: RefinableMeasure) -> ProductMeasure:
    return ProductMeasure(mx, my)


def as_measure(obj) -> RefinableMeasure:
    if isinstance(obj, RefinableMeasure):
        return obj
    if isinstance(obj, SelfSimilarSystem):
        return SelfSimilarMeasure(obj)
    raise TypeError(f"cannot make a refinable measure from {type(obj).__name__}")


# The engine -----------------------------------------------------------------

def measure_region(m, region: ConeRegion, depth_cap: int, *, atol: float = 0.0, rtol: float = 0.0,
                   max_cells: Optional[int] = None) -> MeasureBound:
    """Certified [lower, upper] for mu(region).

    Cells are processed heaviest first.  With ``atol = rtol = 0`` the descent
    is exhaustive up to ``depth_cap``; otherwise it stops as soon as the
    bound width is at most ``max(atol, rtol * upper)``.  ``max_cells`` caps
    the number of classified cells.  Cells left undecided (at the cap or by
    an early stop) only contribute to the upper bound and are counted in
    ``unresolved``.
    """
    if depth_cap < 0:
        raise ValueError("depth_cap must be >= 0")
    m = as_measure(m)
    view = m.localize(region.center)
    root = view.root()
    zero = root.weight * 0
    lower = zero
    stuck = zero
    n_stuck = 0
    pending = 0.0
    heap: list = []
    seq = 0
    cells = 0

    def push(node: Node):
        nonlocal lower, stuck, n_stuck, pending, seq, cells
        cells += 1
        if node.weight == 0:
            return
        d = classify_offset(node.offset, node.radius, region)
        if d is INSIDE:
            lower = lower + node.weight
        elif d is UNKNOWN:
            if node.depth >= depth_cap:
                stuck = stuck + node.weight
                n_stuck += 1
            else:
                heapq.heappush(heap, (-float(node.weight), seq, node))
                seq += 1
                pending += float(node.weight)

    push(root)
    tol_on = atol > 0 or rtol > 0
    while heap:
        if tol_on:
            width = pending + float(stuck)
            if width <= max(atol, rtol * (float(lower) + width)):
                break
        if max_cells is not None and cells >= max_cells:
            break
        _, _, node = heapq.heappop(heap)
        pending -= float(node.weight)
        for ch in view.children(node):
            push(ch)
    rest = zero
    for _, _, node in heap:
        rest = rest + node.weight
    n_stuck += len(heap)
    unresolved_mass = stuck + rest
    return MeasureBound(lower, lower + unresolved_mass, n_stuck, unresolved_mass, cells)


def refine_to_scale(m, point, r) -> Cell:
    """Deepest cell on the point's coding path whose bound diameter is >= r."""
    m = as_measure(m)
    cell = m.root()
    if 2 * cell.bound.radius < r:
        return cell
    while True:
        try:
            child = m.descend(cell, point)
        except CodingExhausted:
            raise CodingExhausted("coding exhausted before reaching the requested scale") from None
        if 2 * child.bound.radius < r:
            return cell
        cell = child
