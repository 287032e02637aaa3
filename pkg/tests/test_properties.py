import itertools
import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conicaldim.dimension import ball_region, longest_block, longest_true_run, one_sided_region, run_stats
from conicaldim.geometry import (ConeRegion, Direction, Disposition, HalfCone, PlaneCone, Subspace,
                                 ball_disposition, in_half_cone, in_plane_cone, in_region)
from conicaldim.packing import (WeightedPoints, cone_packing, cone_packing_constant, halfspace_packing,
                                packing_constant, recompute_captures)
from conicaldim.refinable import SelfSimilarMeasure, measure_region
from conicaldim.symbolic import Coding, cantor13, cylinder_weight, moran_exponent, prop43
from conicaldim.triadic import cantor_measure

C = SelfSimilarMeasure(cantor13())
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coord = st.floats(-3, 3, allow_nan=False)
point2 = st.tuples(coord, coord)
angle = st.floats(0, 2 * math.pi)
aperture = st.floats(0.01, 1)


def rot(phi, v):
    c, s = math.cos(phi), math.sin(phi)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


# geometry ----------------------------------------------------------------------

@FAST
@given(point2, angle, aperture, aperture)
def test_half_cone_aperture_monotone(y, phi, a1, a2):
    a1, a2 = min(a1, a2), max(a1, a2)
    th = Direction.from_angle(phi)
    if in_half_cone(y, HalfCone((0, 0), th, a2)):
        assert in_half_cone(y, HalfCone((0, 0), th, a1))


@FAST
@given(point2, angle, aperture, aperture)
def test_plane_cone_aperture_monotone(y, psi, a1, a2):
    a1, a2 = min(a1, a2), max(a1, a2)
    V = Subspace.line_at_angle(psi)
    if in_plane_cone(y, PlaneCone((0, 0), V, a1)):
        assert in_plane_cone(y, PlaneCone((0, 0), V, a2))


@FAST
@given(point2, point2, angle, aperture, st.floats(1, 2))
def test_plane_cone_central_symmetry(x, y, psi, a, beta):
    c = PlaneCone(x, Subspace.line_at_angle(psi), a, beta)
    mirror = (2 * x[0] - y[0], 2 * x[1] - y[1])
    d = math.dist(x, y)
    dv = abs(-(y[0] - x[0]) * math.sin(psi) + (y[1] - x[1]) * math.cos(psi))
    if d > 0 and abs(dv - a * d ** beta) > 1e-9 * (1 + d ** beta):
        assert in_plane_cone(y, c) == in_plane_cone(mirror, c)


@FAST
@given(point2, point2, angle, angle, st.floats(0.1, 10), aperture)
def test_cone_similarity_invariance(x, y, phi, rho, lam, a):
    th = Direction.from_angle(phi)
    h = HalfCone(x, th, a)
    d = (y[0] - x[0], y[1] - x[1])
    t = d[0] * th.unit[0] + d[1] * th.unit[1]
    if abs(t - a * math.hypot(*d)) < 1e-9 * (1 + math.hypot(*d)):
        return
    rd = rot(rho, d)
    y2 = (x[0] + lam * rd[0], x[1] + lam * rd[1])
    h2 = HalfCone(x, Direction.from_angle(phi + rho), a)
    assert in_half_cone(y, h) == in_half_cone(y2, h2)


@settings(max_examples=40, deadline=None)
@given(point2, st.floats(0.01, 0.5), angle, aperture, angle, st.floats(0, 1), st.integers(0, 2 ** 32 - 1))
def test_disposition_soundness(c, rho, psi, a, phi, b, seed):
    region = ConeRegion.build((0.0, 0.0), 2.0, subspace=Subspace.line_at_angle(psi), aperture=a,
                              theta=Direction.from_angle(phi), exclude_aperture=b)
    d = ball_disposition((c, rho), region)
    if d is Disposition.UNKNOWN:
        return
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * math.pi, 1000)
    rad = rho * np.sqrt(rng.uniform(0, 1, 1000))
    for t, r in zip(ang, rad):
        y = (c[0] + r * math.cos(t), c[1] + r * math.sin(t))
        assert in_region(y, region) == (d is Disposition.INSIDE)


# symbolic ----------------------------------------------------------------------

word = st.lists(st.integers(1, 3), max_size=6).map(tuple)


@FAST
@given(word, word)
def test_cylinder_weight_multiplicative(w1, w2):
    s = prop43()
    assert cylinder_weight(s, w1 + w2) == cylinder_weight(s, w1) * cylinder_weight(s, w2)


@FAST
@given(st.lists(st.floats(0.01, 0.9), min_size=2, max_size=5), st.integers(0, 4), st.floats(0.001, 0.05))
def test_moran_residual_and_monotone(ratios, i, bump):
    t = moran_exponent(ratios)
    assert abs(sum(r ** t for r in ratios) - 1) <= 1e-12
    i %= len(ratios)
    bigger = list(ratios)
    bigger[i] = min(bigger[i] + bump, 0.95)
    assert moran_exponent(bigger) >= t - 1e-12


# refinable ---------------------------------------------------------------------

triadic = st.builds(lambda k, j: Fraction(k, 3 ** j), st.integers(0, 3 ** 6), st.just(6))
radius = st.builds(lambda k: Fraction(k, 3 ** 6), st.integers(1, 3 ** 5))


@settings(max_examples=40, deadline=None)
@given(triadic, radius)
def test_enclosure_sandwich_and_monotone(c, r):
    exact = cantor_measure(c - r, c + r)
    region = ConeRegion.build((c,), r)
    prev = None
    for depth in (2, 5, 8, 11):
        b = measure_region(C, region, depth)
        assert b.lower <= exact <= b.upper
        if prev is not None:
            assert prev.lower <= b.lower and b.upper <= prev.upper
        prev = b


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 2), min_size=1, max_size=6), st.integers(1, 6))
def test_region_inclusion_monotone(prefix, n):
    x = Coding(tuple(prefix), (1, 2))
    r = Fraction(1, 3 ** n)
    half = measure_region(C, one_sided_region(x, r), 14)
    full = measure_region(C, ball_region(x, r), 14)
    assert half.lower <= full.lower and half.upper <= full.upper


# dimension ---------------------------------------------------------------------

@FAST
@given(st.lists(st.integers(1, 3), min_size=1, max_size=60), st.integers(0, 59))
def test_run_stats_brute_force(syms, n):
    n = min(n, len(syms) - 1)
    rs = run_stats(tuple(syms), n)
    g = next((k for k, s in enumerate(syms[n:]) if s != 2), len(syms) - n)
    assert rs.gamma == g
    z = max((len(list(run)) for key, run in itertools.groupby(syms[:n], lambda s: s in (1, 2)) if key),
            default=0)
    assert rs.z == z
    assert all(longest_block(syms[:k]) <= longest_block(syms[:k + 1]) for k in range(len(syms)))


@FAST
@given(st.lists(st.booleans(), max_size=200))
def test_longest_true_run(mask):
    want = max((len(list(g)) for k, g in itertools.groupby(mask) if k), default=0)
    assert longest_true_run(np.array(mask, dtype=bool)) == want


# packing -----------------------------------------------------------------------

def instance(draw_pts, n):
    pts = [tuple(Fraction(v, 64) for v in p[:n]) for p, _ in draw_pts]
    ws = [Fraction(w, 16) for _, w in draw_pts]
    return WeightedPoints.of(pts, ws)


pts_strategy = st.lists(st.tuples(st.tuples(st.integers(-64, 64), st.integers(-64, 64)),
                                  st.integers(1, 32)), min_size=1, max_size=40)


@settings(max_examples=40, deadline=None)
@given(pts_strategy, st.integers(1, 2), st.integers(1, 16), angle)
def test_halfspace_packing_certified(raw, n, rk, phi):
    pts = instance(raw, n)
    R = Fraction(rk, 32)
    theta = (1,) if n == 1 else Direction.from_angle(phi)
    res = halfspace_packing(pts, R, theta)
    assert res.disjoint()
    assert res.ratio >= packing_constant(n)
    assert [s.captured for s in res.selected] == recompute_captures(pts, res, theta=theta)


@settings(max_examples=30, deadline=None)
@given(pts_strategy, st.integers(1, 16), st.integers(1, 4), st.data())
def test_cone_packing_certified(raw, rk, ak, data):
    pts = instance(raw, 2)
    R = Fraction(rk, 32)
    alpha = Fraction(ak, 4)
    thetas = [Direction.from_angle(data.draw(angle)) for _ in range(len(pts))]
    res = cone_packing(pts, R, thetas, alpha)
    assert res.disjoint()
    assert res.ratio >= cone_packing_constant(2, alpha)
    assert [s.captured for s in res.selected] == recompute_captures(pts, res, thetas=thetas, alpha=alpha)
