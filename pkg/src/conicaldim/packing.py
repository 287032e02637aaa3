"""Disjoint ball selections on finite weighted point sets.

A finite weighted set is treated as a discrete measure.  All geometric
comparisons are exact: coordinates, radii and directions are converted to
Fractions (floats convert exactly), so disjointness and capture sums can be
re-derived by brute force without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .geometry import Direction, direction_net


@dataclass(frozen=True)
class WeightedPoints:
    points: Tuple[Tuple[Fraction, ...], ...]
    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple(tuple(Fraction(c) for c in p) for p in self.points)
        ws = tuple(Fraction(w) for w in self.weights)
        if len(pts) != len(ws):
            raise ValueError("points and weights differ in length")
        if pts and len({len(p) for p in pts}) != 1:
            raise ValueError("points must share one dimension")
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def of(cls, points, weights=None) -> "WeightedPoints":
        points = [tuple(p) if isinstance(p, (tuple, list)) else (p,) for p in points]
        if weights is None:
            weights = [1] * len(points)
        return cls(tuple(points), tuple(weights))

    @property
    def n(self) -> int:
        return len(self.points[0]) if self.points else 0

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def __len__(self):
        return len(self.points)


def _d2(a, b) -> Fraction:
    return sum(((x - y) * (x - y) for x, y in zip(a, b)), Fraction(0))


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _unit(theta) -> Tuple[Fraction, ...]:
    if not isinstance(theta, Direction):
        theta = Direction.from_vector(theta)
    return tuple(Fraction(c) for c in theta.unit)


def outside_halfspace(z, y, theta_u) -> bool:
    """z not in the open half-space H(y, theta)."""
    return _dot([a - b for a, b in zip(z, y)], theta_u) <= 0


def outside_cone(z, y, theta_u, alpha) -> bool:
    """z not in H(y, theta, alpha) = {(z-y).theta > alpha |z-y|}, decided exactly.

    theta_u is the float unit vector converted to Fractions; its norm may differ
    from 1 by rounding, which the comparison uses as given.
    """
    d = [a - b for a, b in zip(z, y)]
    t = _dot(d, theta_u)
    if t <= 0:
        return True
    a = Fraction(alpha)
    return t * t <= a * a * _d2(d, [0] * len(d))


# Packing steps ------------------------------------------------------------------

def maximal_packing(pts: WeightedPoints, rho) -> List[int]:
    """Indices of a maximal family of pairwise disjoint closed balls B(x, rho).

    Greedy in input order: a point joins when it is farther than 2 rho from
    every selected center, so every input point ends within 2 rho of one.
    """
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    lim = 4 * rho * rho
    chosen: List[int] = []
    for i, p in enumerate(pts.points):
        if all(_d2(p, pts.points[j]) > lim for j in chosen):
            chosen.append(i)
    return chosen


def color_decompose(points: Sequence, separation) -> Tuple[List[List[int]], int]:
    """Greedy coloring of the conflict graph; returns (classes, max degree).

    Two points conflict when their distance is at most ``separation``, so
    every class is strictly ``separation``-separated.  The class count is at
    most 1 + max degree.
    """
    sep = Fraction(separation)
    if sep <= 0:
        raise ValueError("separation must be positive")
    pts = [tuple(Fraction(c) for c in p) for p in points]
    lim = sep * sep
    nbrs = [[j for j in range(len(pts)) if j != i and _d2(pts[i], pts[j]) <= lim] for i in range(len(pts))]
    color = [-1] * len(pts)
    for i in range(len(pts)):
        used = {color[j] for j in nbrs[i] if color[j] >= 0}
        c = 0
        while c in used:
            c += 1
        color[i] = c
    k = max(color) + 1 if pts else 0
    classes = [[i for i in range(len(pts)) if color[i] == c] for c in range(k)]
    return classes, max((len(v) for v in nbrs), default=0)


# Selections ---------------------------------------------------------------

@dataclass(frozen=True)
class Selection:
    index: int
    center: Tuple[Fraction, ...]
    radius: Fraction
    captured: Fraction
    cls: int = 0
    bin: int = -1


@dataclass
class PackingResult:
    selected: List[Selection]
    total: Fraction
    ratio: Optional[Fraction]
    constant: Fraction
    classes: int = 0
    max_degree: int = 0
    flags: List[str] = field(default_factory=list)

    @property
    def captured(self) -> Fraction:
        return sum((s.captured for s in self.selected), Fraction(0))

    def disjoint(self) -> bool:
        return balls_disjoint([(s.center, s.radius) for s in self.selected])


def balls_disjoint(balls) -> bool:
    """Closed balls pairwise disjoint: |x - y| > r_x + r_y, checked exactly."""
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            (x, rx), (y, ry) = balls[i], balls[j]
            s = Fraction(rx) + Fraction(ry)
            if not _d2(x, y) > s * s:
                return False
    return True


def packing_constant(n: int) -> Fraction:
    """c(n) = 1 / (2 * 41^n) from the volume bound on the class count."""
    return Fraction(1, 2 * 41 ** n)


def cone_packing_constant(n: int, alpha) -> Fraction:
    return packing_constant(n) / len(direction_net(n, float(alpha)))


def _radii(pts: WeightedPoints, radii, R):
    rs = [Fraction(r) for r in (radii if isinstance(radii, (list, tuple)) else [radii] * len(pts))]
    if len(rs) != len(pts):
        raise ValueError("one radius per point is required")
    R = min(rs) if R is None else Fraction(R)
    if R <= 0:
        raise ValueError("R must be positive")
    for r in rs:
        if not R <= r <= 2 * R:
            raise ValueError("radii must lie in [R, 2R]")
    return rs, R


def _capture(pts: WeightedPoints, y, r, keep) -> Fraction:
    r2 = r * r
    return sum((w for z, w in zip(pts.points, pts.weights) if _d2(z, y) <= r2 and keep(z)), Fraction(0))


def halfspace_packing(pts: WeightedPoints, radii, theta, R=None) -> PackingResult:
    """Disjoint balls B(y, r_y) capturing mass outside H(y, theta)."""
    n = pts.n
    if len(pts) == 0:
        return PackingResult([], Fraction(0), None, packing_constant(max(n, 1)), flags=["empty"])
    rs, R = _radii(pts, radii, R)
    th = _unit(theta)
    f0 = maximal_packing(pts, R / 4)
    classes, deg = color_decompose([pts.points[i] for i in f0], 5 * R)
    half2 = R * R / 4

    def near(x):
        return [k for k, z in enumerate(pts.points) if _d2(z, x) <= half2]

    best, best_w = 0, Fraction(-1)
    for c, members in enumerate(classes):
        covered = set()
        for m in members:
            covered.update(near(pts.points[f0[m]]))
        w = sum((pts.weights[k] for k in covered), Fraction(0))
        if w > best_w:
            best, best_w = c, w

    selected = []
    for m in classes[best]:
        cand = near(pts.points[f0[m]])
        # sup of y.theta over a finite set is attained; ties go to input order
        yi = max(cand, key=lambda k: (_dot(pts.points[k], th), -k))
        y = pts.points[yi]
        cap = _capture(pts, y, rs[yi], lambda z: outside_halfspace(z, y, th))
        selected.append(Selection(yi, y, rs[yi], cap, best))
    res = PackingResult(selected, pts.total, None, packing_constant(n), len(classes), deg)
    res.ratio = res.captured / res.total
    return res


def cone_packing(pts: WeightedPoints, radii, thetas, alpha, R=None) -> PackingResult:
    """Disjoint balls capturing mass outside the cones H(y, theta_y, alpha).

    Directions are binned by the nearest element of a direction net with
    angular resolution alpha; the heaviest bin is packed against its net
    direction, whose half-space complement sits inside each cone complement.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    n = pts.n
    if len(pts) == 0:
        return PackingResult([], Fraction(0), None, Fraction(0), flags=["empty"])
    thetas = list(thetas)
    if len(thetas) != len(pts):
        raise ValueError("one direction per point is required")
    rs, R = _radii(pts, radii, R)
    net = direction_net(n, float(alpha))
    units = [_unit(t) for t in thetas]

    def nearest(u):
        return max(range(len(net)), key=lambda j: (sum(float(a) * b for a, b in zip(u, net[j].unit)), -j))

    bins = [nearest(u) for u in units]
    weight = [Fraction(0)] * len(net)
    for b, w in zip(bins, pts.weights):
        weight[b] += w
    j0 = max(range(len(net)), key=lambda j: (weight[j], -j))
    keep = [k for k in range(len(pts)) if bins[k] == j0]
    sub = WeightedPoints(tuple(pts.points[k] for k in keep), tuple(pts.weights[k] for k in keep))
    inner = halfspace_packing(sub, [rs[k] for k in keep], net[j0], R)
    selected = []
    for s in inner.selected:
        k = keep[s.index]
        y = pts.points[k]
        cap = _capture(pts, y, rs[k], lambda z: outside_cone(z, y, units[k], alpha))
        selected.append(Selection(k, y, rs[k], cap, s.cls, j0))
    res = PackingResult(selected, pts.total, None, cone_packing_constant(n, alpha), inner.classes,
                        inner.max_degree)
    res.ratio = res.captured / res.total
    return res


def recompute_captures(pts: WeightedPoints, result: PackingResult, thetas=None, alpha=None, theta=None):
    """Brute-force capture sums for an existing selection (audit helper)."""
    out = []
    for s in result.selected:
        if alpha is None:
            th = _unit(theta)
            keep = lambda z, y=s.center: outside_halfspace(z, y, th)
        else:
            u = _unit(thetas[s.index])
            keep = lambda z, y=s.center, u=u: outside_cone(z, y, u, alpha)
        out.append(_capture(pts, s.center, s.radius, keep))
    return out
