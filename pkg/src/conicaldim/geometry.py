"""Cones, membership predicates and conservative ball tests.

Two cone families live here.  The half-space cone

    H(x, theta, alpha) = {y : (y - x) . theta > alpha |y - x|}

and the (possibly twisted) plane cone

    X(x, V, alpha, beta) = {y : dist(y - x, V) < alpha |y - x|**beta}.

Both are strict, so the vertex never belongs to either of them.  A
`ConeRegion` is a ball around the common vertex, optionally intersected with
a plane cone and with a half-space cone removed.  `ball_disposition` decides
conservatively whether a small ball sits inside or outside such a region.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Optional, Sequence, Tuple

Vector = Tuple[Any, ...]

UNIT_TOL = 1e-12
PAD = 1e-12


class DimensionError(ValueError):
    pass


class UnsupportedDimension(ValueError):
    pass


def as_vector(v) -> Vector:
    if isinstance(v, (int, float, Fraction)):
        return (v,)
    out = tuple(v)
    for c in out:
        if isinstance(c, float) and not math.isfinite(c):
            raise ValueError("vector entries must be finite")
    return out


def _check_dims(a: Sequence, b: Sequence) -> None:
    if len(a) != len(b):
        raise DimensionError(f"dimension mismatch: {len(a)} vs {len(b)}")


def dot(a: Sequence, b: Sequence):
    _check_dims(a, b)
    return sum(x * y for x, y in zip(a, b))


def norm(a: Sequence) -> float:
    if len(a) == 1:
        return abs(a[0])
    return math.hypot(*(float(x) for x in a))


def sub(a: Sequence, b: Sequence) -> Vector:
    _check_dims(a, b)
    return tuple(x - y for x, y in zip(a, b))


@dataclass(frozen=True)
class Direction:
    unit: Vector

    def __post_init__(self):
        u = as_vector(self.unit)
        object.__setattr__(self, "unit", u)
        if abs(norm(u) - 1) > UNIT_TOL:
            raise ValueError(f"direction {u} is not a unit vector")

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = as_vector(v)
        r = norm(v)
        if r == 0:
            raise ValueError("zero vector has no direction")
        if len(v) == 1:
            return cls((1,) if v[0] > 0 else (-1,))
        return cls(tuple(float(x) / r for x in v))

    @classmethod
    def from_angle(cls, phi: float) -> "Direction":
        return cls((math.cos(phi), math.sin(phi)))

    @property
    def dim(self) -> int:
        return len(self.unit)


@dataclass(frozen=True)
class Subspace:
    """Linear subspace V of R^n given by an orthonormal basis.

    ``codim`` is m, so the basis has n - m vectors.  The ambient dimension is
    stored explicitly because it cannot be read off an empty basis.
    """

    basis: Tuple[Vector, ...]
    n: int

    def __post_init__(self):
        basis = tuple(as_vector(b) for b in self.basis)
        object.__setattr__(self, "basis", basis)
        if not 1 <= len(basis) <= self.n:
            raise ValueError("subspace must have dimension between 1 and n")
        for i, b in enumerate(basis):
            if len(b) != self.n:
                raise DimensionError("basis vector has wrong length")
            for j in range(i, len(basis)):
                want = 1.0 if i == j else 0.0
                if abs(float(dot(b, basis[j])) - want) > UNIT_TOL:
                    raise ValueError("basis is not orthonormal")

    @property
    def codim(self) -> int:
        return self.n - len(self.basis)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        basis = tuple(tuple(1 if i == j else 0 for i in range(n)) for j in range(n))
        return cls(basis, n)

    @classmethod
    def line(cls, direction) -> "Subspace":
        d = direction if isinstance(direction, Direction) else Direction.from_vector(direction)
        return cls((d.unit,), d.dim)

    @classmethod
    def line_at_angle(cls, psi: float) -> "Subspace":
        return cls(((math.cos(psi), math.sin(psi)),), 2)

    def project(self, v: Sequence) -> Vector:
        _check_dims(v, self.basis[0])
        out = [0.0] * self.n
        for b in self.basis:
            c = dot(v, b)
            for k in range(self.n):
                out[k] = out[k] + c * b[k]
        return tuple(out)

    def dist(self, v: Sequence):
        """Euclidean distance from v to V."""
        if self.codim == 0:
            return 0
        p = self.project(v)
        return norm(tuple(x - y for x, y in zip(v, p)))


@dataclass(frozen=True)
class HalfCone:
    vertex: Any
    direction: Direction
    aperture: Any

    def __post_init__(self):
        if not 0 <= self.aperture <= 1:
            raise ValueError("half-cone aperture must lie in [0, 1]")


@dataclass(frozen=True)
class PlaneCone:
    vertex: Any
    subspace: Subspace
    aperture: Any
    twist: Any = 1

    def __post_init__(self):
        if not 0 < self.aperture <= 1:
            raise ValueError("plane-cone aperture must lie in (0, 1]")
        if self.twist < 1:
            raise ValueError("twist beta must be >= 1")


class Disposition(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ConeRegion:
    """B(center, radius) intersected with ``include`` and minus ``exclude``.

    ``center`` is usually a coordinate tuple, but any point object that a
    measure knows how to localize at (for instance a symbolic coding) is
    accepted.  The cone vertices must equal the center.  ``radius`` may be
    ``math.inf`` for an unbounded region.
    """

    center: Any
    radius: Any
    include: Optional[PlaneCone] = None
    exclude: Optional[HalfCone] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("region radius must be positive")
        for atom in (self.include, self.exclude):
            if atom is not None and atom.vertex != self.center:
                raise ValueError("cone vertex must equal the ball center")

    @classmethod
    def build(cls, center, radius, *, subspace=None, aperture=None, twist=1,
              theta=None, exclude_aperture=None) -> "ConeRegion":
        """Convenience constructor that fills in the shared vertex."""
        inc = exc = None
        if subspace is not None:
            inc = PlaneCone(center, subspace, aperture, twist)
        if theta is not None:
            if not isinstance(theta, Direction):
                theta = Direction.from_vector(theta)
            a = aperture if exclude_aperture is None else exclude_aperture
            exc = HalfCone(center, theta, a)
        return cls(center, radius, inc, exc)

    def with_radius(self, radius) -> "ConeRegion":
        return ConeRegion(self.center, radius, self.include, self.exclude)


def in_half_cone(y, h: HalfCone) -> bool:
    d = sub(as_vector(y), as_vector(h.vertex))
    _check_dims(d, h.direction.unit)
    return dot(d, h.direction.unit) > h.aperture * norm(d)


def in_plane_cone(y, c: PlaneCone) -> bool:
    d = sub(as_vector(y), as_vector(c.vertex))
    _check_dims(d, c.subspace.basis[0])
    r = norm(d)
    if r == 0:
        return False
    return c.subspace.dist(d) < c.aperture * r ** c.twist


def in_region(y, region: ConeRegion) -> bool:
    """Exact-as-possible pointwise membership (closed ball, strict cones)."""
    d = sub(as_vector(y), as_vector(region.center))
    if norm(d) > region.radius:
        return False
    if region.include is not None and not in_plane_cone(y, region.include):
        return False
    if region.exclude is not None and in_half_cone(y, region.exclude):
        return False
    return True


# Conservative comparisons.  In exact mode the arithmetic is rational and no
# padding is needed; otherwise a relative pad absorbs rounding.

def _lt(a, b, exact: bool) -> bool:
    if exact:
        return a < b
    return a < b - PAD * max(abs(a), abs(b))


def _le(a, b, exact: bool) -> bool:
    if exact:
        return a <= b
    return a <= b - PAD * max(abs(a), abs(b))


def _is_exact(offset, rho, region: ConeRegion) -> bool:
    if len(offset) != 1:
        return False
    vals = [offset[0], rho, region.radius]
    if region.include is not None:
        if region.include.twist != 1:
            return False
        vals.append(region.include.aperture)
    if region.exclude is not None:
        vals.append(region.exclude.aperture)
    return all(isinstance(v, Rational) for v in vals)


def classify_offset(offset: Sequence, rho, region: ConeRegion) -> Disposition:
    """Disposition of B(x + offset, rho) against ``region`` centered at x.

    Works purely with the offset, which lets callers supply offsets computed
    in a local frame with full relative precision.
    """
    exact = _is_exact(offset, rho, region)
    if not exact:
        offset = tuple(float(c) for c in offset)
        rho = float(rho)
    r = abs(offset[0]) if len(offset) == 1 else norm(offset)
    R = region.radius
    if not exact and R != math.inf:
        R = float(R)

    # Outside tests: any single one certifies disjointness up to the boundary
    # sphere, which carries no mass for the non-atomic measures handled here.
    if R != math.inf and _le(R, r - rho, exact):
        return Disposition.OUTSIDE
    inc, exc = region.include, region.exclude
    if inc is not None and inc.subspace.codim > 0:
        a = inc.aperture if exact else float(inc.aperture)
        dv = inc.subspace.dist(offset)
        reach = a * (r + rho) if inc.twist == 1 else a * (r + rho) ** float(inc.twist)
        if _le(reach, dv - rho, exact):
            return Disposition.OUTSIDE
    if exc is not None:
        a = exc.aperture if exact else float(exc.aperture)
        t = dot(offset, exc.direction.unit)
        if _lt(a * (r + rho), t - rho, exact):
            return Disposition.OUTSIDE

    # Inside needs every test to pass.
    if R != math.inf and not _le(r + rho, R, exact):
        return Disposition.UNKNOWN
    if inc is not None and inc.subspace.codim > 0:
        # for V = R^n the cone is R^n minus the vertex, a null set here
        if not _lt(rho, r, exact):
            return Disposition.UNKNOWN
        a = inc.aperture if exact else float(inc.aperture)
        dv = inc.subspace.dist(offset)
        near = a * (r - rho) if inc.twist == 1 else a * (r - rho) ** float(inc.twist)
        if not _lt(dv + rho, near, exact):
            return Disposition.UNKNOWN
    if exc is not None:
        a = exc.aperture if exact else float(exc.aperture)
        t = dot(offset, exc.direction.unit)
        if not _lt(rho, r, exact):
            return Disposition.UNKNOWN
        if not _le(t + rho * (1 + a), a * (r - rho), exact):
            return Disposition.UNKNOWN
    return Disposition.INSIDE


def ball_disposition(ball, region: ConeRegion) -> Disposition:
    """Conservative Inside / Outside / Unknown for ``ball = (center, radius)``."""
    center, rho = ball
    if not rho > 0:
        raise ValueError("ball radius must be positive")
    offset = sub(as_vector(center), as_vector(region.center))
    return classify_offset(offset, rho, region)


# Nets -----------------------------------------------------------------------

def direction_net(n: int, delta: float) -> list:
    """Finite set of directions such that every unit vector is within angle delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n == 1:
        return [Direction((1,)), Direction((-1,))]
    if n == 2:
        k = max(2, math.ceil(math.pi / delta))
        return [Direction.from_angle(2 * math.pi * j / k) for j in range(k)]
    if n == 3:
        # Latitude rings: half a ring spacing plus half an azimuth step along
        # the ring bounds the angular distance to the nearest node.
        rings = max(1, math.ceil(math.pi / delta))
        out = []
        for i in range(rings + 1):
            phi = math.pi * i / rings
            s = math.sin(phi)
            if i in (0, rings):
                out.append(Direction((0.0, 0.0, math.cos(phi))))
                continue
            k = max(1, math.ceil(2 * math.pi * s / delta))
            for j in range(k):
                lam = 2 * math.pi * j / k
                out.append(Direction((s * math.cos(lam), s * math.sin(lam), math.cos(phi))))
        return out
    raise UnsupportedDimension(f"direction nets are only built for n <= 3, got {n}")


def _orthonormal_complement(normal: Vector) -> Tuple[Vector, ...]:
    """Orthonormal basis of the plane orthogonal to a unit vector in R^3."""
    nx, ny, nz = normal
    seed = (1.0, 0.0, 0.0) if abs(nx) < 0.9 else (0.0, 1.0, 0.0)
    c = dot(seed, normal)
    u = tuple(s - c * q for s, q in zip(seed, normal))
    un = norm(u)
    u = tuple(x / un for x in u)
    w = (ny * u[2] - nz * u[1], nz * u[0] - nx * u[2], nx * u[1] - ny * u[0])
    wn = norm(w)
    return (u, tuple(x / wn for x in w))


def subspace_net(n: int, m: int, delta: float) -> list:
    """Net of G(n, n-m) at principal-angle resolution delta."""
    if not 0 <= m <= n - 1:
        raise ValueError("codimension must satisfy 0 <= m <= n-1")
    if m == 0:
        return [Subspace.full(n)]
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n == 2:
        k = max(1, math.ceil(math.pi / (2 * delta)))
        return [Subspace.line_at_angle(math.pi * j / k) for j in range(k)]
    if n == 3:
        dirs = [d.unit for d in direction_net(3, delta)]
        # antipodal vectors span the same line / have the same orthogonal plane
        keep = [u for u in dirs if u[2] > 1e-15 or (abs(u[2]) <= 1e-15 and (u[1] > 1e-15 or (abs(u[1]) <= 1e-15 and u[0] > 0)))]
        if m == 2:
            return [Subspace((u,), 3) for u in keep]
        return [Subspace(_orthonormal_complement(u), 3) for u in keep]
    raise UnsupportedDimension(f"subspace nets are only built for n in (2, 3), got {n}")


def principal_angle(v: Subspace, w: Subspace) -> float:
    """Largest principal angle between two subspaces of equal dimension."""
    import numpy as np

    a = np.array(v.basis, dtype=float).T
    b = np.array(w.basis, dtype=float).T
    s = np.linalg.svd(a.T @ b, compute_uv=False)
    return float(math.acos(min(1.0, max(0.0, s.min()))))
