import math
from fractions import Fraction

import numpy as np
import pytest

from conicaldim.geometry import Direction, direction_net
from conicaldim.packing import (WeightedPoints, balls_disjoint, color_decompose, cone_packing,
                                cone_packing_constant, halfspace_packing, maximal_packing,
                                outside_cone, outside_halfspace, packing_constant,
                                recompute_captures)


def _d(a, b):
    return math.dist([float(x) for x in a], [float(x) for x in b])


def random_instance(rng, n, count):
    pts = [tuple(Fraction(int(v), 64) for v in rng.integers(-64, 65, n)) for _ in range(count)]
    ws = [Fraction(int(v), 16) for v in rng.integers(1, 33, count)]
    return WeightedPoints.of(pts, ws)


def test_maximal_packing_examples():
    one = WeightedPoints.of([(0, 0)])
    assert maximal_packing(one, 1) == [0]
    two = WeightedPoints.of([(0,), (3,)])
    assert maximal_packing(two, 1) == [0, 1]
    grid = WeightedPoints.of([(i, j) for i in range(5) for j in range(5)])
    chosen = maximal_packing(grid, 1)
    centers = [grid.points[i] for i in chosen]
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            assert _d(centers[a], centers[b]) > 2
    for p in grid.points:
        assert min(_d(p, c) for c in centers) <= 2
    with pytest.raises(ValueError):
        maximal_packing(grid, 0)


def test_color_decompose_examples():
    classes, deg = color_decompose([(0,), (10,), (20,)], 1)
    assert len(classes) == 1 and deg == 0
    classes, deg = color_decompose([(0,), (Fraction(1, 2),), (1,)], 1)
    assert len(classes) <= 3 and deg == 2


def test_color_decompose_random_classes_separated():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pts = [tuple(rng.integers(0, 20, 2)) for _ in range(40)]
        classes, deg = color_decompose(pts, 3)
        assert len(classes) <= 1 + deg
        for cl in classes:
            for a in range(len(cl)):
                for b in range(a + 1, len(cl)):
                    assert _d(pts[cl[a]], pts[cl[b]]) > 3


def test_halfspace_single_point():
    pts = WeightedPoints.of([(1, 2)], [3])
    res = halfspace_packing(pts, 1, (0.6, 0.8))
    assert res.captured == res.total and res.ratio == 1


def test_halfspace_two_far_points():
    pts = WeightedPoints.of([(0,), (6,)])
    res = halfspace_packing(pts, 1, (1,))
    assert len(res.selected) == 2 and res.ratio == 1 and res.disjoint()


def test_halfspace_empty():
    res = halfspace_packing(WeightedPoints.of([]), 1, (1,))
    assert res.ratio is None and "empty" in res.flags


def test_radii_range_enforced():
    pts = WeightedPoints.of([(0,), (1,)])
    with pytest.raises(ValueError):
        halfspace_packing(pts, [1, 3], (1,))


def test_halfspace_random_audit():
    rng = np.random.default_rng(2)
    for _ in range(30):
        pts = random_instance(rng, 2, 30)
        R = Fraction(1, 8)
        res = halfspace_packing(pts, R, (1, 0))
        assert res.disjoint()
        assert res.ratio >= packing_constant(2)
        assert [s.captured for s in res.selected] == recompute_captures(pts, res, theta=(1, 0))


def test_cone_equal_directions_dominate_halfspace():
    rng = np.random.default_rng(4)
    alpha = Fraction(1, 2)
    net = direction_net(2, float(alpha))
    for _ in range(10):
        pts = random_instance(rng, 2, 25)
        R = Fraction(1, 8)
        th = (0.0, 1.0)
        cone = cone_packing(pts, R, [th] * len(pts), alpha)
        zeta = net[cone.selected[0].bin]
        half = recompute_captures(pts, cone, theta=zeta)
        assert all(s.captured >= h for s, h in zip(cone.selected, half))
        assert cone.ratio >= halfspace_packing(pts, R, zeta).ratio


def test_cone_single_point_and_alpha_range():
    pts = WeightedPoints.of([(0, 0)])
    assert cone_packing(pts, 1, [(1, 0)], Fraction(1, 2)).ratio == 1
    with pytest.raises(ValueError):
        cone_packing(pts, 1, [(1, 0)], 0)


def test_cone_random_audit():
    rng = np.random.default_rng(8)
    alpha = Fraction(1, 2)
    for _ in range(20):
        pts = random_instance(rng, 2, 30)
        thetas = [tuple(rng.normal(size=2)) for _ in range(len(pts))]
        R = Fraction(1, 8)
        radii = [R * (1 + Fraction(int(rng.integers(0, 9)), 8)) for _ in range(len(pts))]
        res = cone_packing(pts, radii, thetas, alpha, R)
        assert res.disjoint()
        assert res.ratio >= cone_packing_constant(2, alpha)
        assert [s.captured for s in res.selected] == recompute_captures(pts, res, thetas=thetas, alpha=alpha)


def test_net_inclusion_audit():
    rng = np.random.default_rng(9)
    alpha = 0.5
    net = direction_net(2, alpha)
    for _ in range(50):
        th = Direction.from_vector(tuple(rng.normal(size=2)))
        zeta = max(net, key=lambda z: float(np.dot(z.unit, th.unit)))
        assert math.acos(min(1.0, float(np.dot(zeta.unit, th.unit)))) <= alpha + 1e-12
        u = tuple(Fraction(c) for c in th.unit)
        zu = tuple(Fraction(c) for c in zeta.unit)
        for z in rng.normal(size=(20, 2)):
            z = tuple(Fraction(float(c)) for c in z)
            if not outside_cone(z, (0, 0), u, Fraction(alpha)):
                assert not outside_halfspace(z, (0, 0), zu)


def test_balls_disjoint_exact_touching():
    assert not balls_disjoint([((0,), 1), ((2,), 1)])
    assert balls_disjoint([((0,), 1), ((Fraction(201, 100),), 1)])


def test_constants():
    assert packing_constant(1) == Fraction(1, 82)
    assert cone_packing_constant(2, 0.5) < packing_constant(2)
