import math

import numpy as np
import pytest

from conicaldim.geometry import (ConeRegion, DimensionError, Direction, Disposition, HalfCone,
                                 PlaneCone, Subspace, UnsupportedDimension, ball_disposition,
                                 direction_net, in_half_cone, in_plane_cone, in_region,
                                 principal_angle, subspace_net)

E1 = Direction((1, 0))
X_AXIS = Subspace.line((1, 0))


def test_half_cone_examples():
    assert in_half_cone((1, 0), HalfCone((0, 0), E1, 0))
    assert not in_half_cone((-1, 0), HalfCone((0, 0), E1, 0))
    s = 1 / math.sqrt(2)
    assert not in_half_cone((s, s), HalfCone((0, 0), E1, 1))


def test_half_cone_vertex_excluded():
    assert not in_half_cone((0, 0), HalfCone((0, 0), E1, 0))


def test_plane_cone_examples():
    c = PlaneCone((0, 0), X_AXIS, 0.5)
    assert in_plane_cone((1, 0.4), c)
    assert not in_plane_cone((0, 1), c)
    full = PlaneCone((0, 0), Subspace.full(2), 0.1)
    assert in_plane_cone((0.3, -2), full)
    assert not in_plane_cone((0, 0), full)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        in_half_cone((1, 0, 0), HalfCone((0, 0), E1, 0))


def test_invalid_apertures():
    with pytest.raises(ValueError):
        HalfCone((0, 0), E1, 1.5)
    with pytest.raises(ValueError):
        PlaneCone((0, 0), X_AXIS, 0)
    with pytest.raises(ValueError):
        PlaneCone((0, 0), X_AXIS, 0.5, 0.9)
    with pytest.raises(ValueError):
        Direction((1, 1))


def test_disposition_examples():
    region = ConeRegion.build((0, 0), 10, theta=(1, 0), aperture=0.5)
    assert ball_disposition(((2, 0), 0.5), region) is Disposition.OUTSIDE
    assert ball_disposition(((0, 0), 0.1), region) is Disposition.UNKNOWN
    assert ball_disposition(((5, 0), 1), ConeRegion((0, 0), 2)) is Disposition.OUTSIDE
    assert ball_disposition(((-5, 0), 1), region) is Disposition.INSIDE


def test_disposition_vertex_of_plane_cone_unknown():
    region = ConeRegion.build((0, 0), 1, subspace=X_AXIS, aperture=0.3)
    assert ball_disposition(((0, 0), 0.01), region) is Disposition.UNKNOWN


def test_disposition_soundness_random():
    rng = np.random.default_rng(3)
    region = ConeRegion.build((0.1, -0.2), 1.5, subspace=Subspace.line((1, 1)), aperture=0.4,
                              theta=(0, 1), exclude_aperture=0.2)
    checked = 0
    for _ in range(300):
        c = tuple(rng.uniform(-2, 2, 2))
        rho = float(rng.uniform(0.01, 0.3))
        d = ball_disposition((c, rho), region)
        if d is Disposition.UNKNOWN:
            continue
        checked += 1
        ang = rng.uniform(0, 2 * math.pi, 200)
        rad = rho * np.sqrt(rng.uniform(0, 1, 200))
        for a, r in zip(ang, rad):
            y = (c[0] + r * math.cos(a), c[1] + r * math.sin(a))
            assert in_region(y, region) == (d is Disposition.INSIDE)
    assert checked > 50


def test_direction_net_small_cases():
    assert [d.unit for d in direction_net(1, 0.3)] == [(1,), (-1,)]
    net = direction_net(2, math.pi / 4)
    assert len(net) <= 8


@pytest.mark.parametrize("n,delta", [(2, math.pi / 4), (2, 0.05), (3, math.pi / 8)])
def test_direction_net_covering_monte_carlo(n, delta):
    net = np.array([d.unit for d in direction_net(n, delta)])
    rng = np.random.default_rng(11)
    v = rng.normal(size=(100_000, n))
    v /= np.linalg.norm(v, axis=1)[:, None]
    best = (v @ net.T).max(axis=1)
    assert np.arccos(np.clip(best, -1, 1)).max() <= delta + 1e-12


def test_direction_net_unsupported():
    with pytest.raises(UnsupportedDimension):
        direction_net(4, 0.5)


def test_subspace_net_cases():
    lines = subspace_net(2, 1, math.pi / 8)
    assert len(lines) <= 8
    assert len(subspace_net(3, 0, 0.1)) == 1
    rng = np.random.default_rng(5)
    for _ in range(500):
        w = Subspace.line_at_angle(float(rng.uniform(0, math.pi)))
        assert min(principal_angle(w, v) for v in lines) <= math.pi / 8 + 1e-12


def test_subspace_net_planes_in_r3():
    planes = subspace_net(3, 1, math.pi / 8)
    rng = np.random.default_rng(6)
    for _ in range(200):
        nrm = rng.normal(size=3)
        nrm /= np.linalg.norm(nrm)
        u = np.cross(nrm, [1, 0, 0] if abs(nrm[0]) < 0.9 else [0, 1, 0])
        u /= np.linalg.norm(u)
        w = Subspace((tuple(u), tuple(np.cross(nrm, u))), 3)
        assert min(principal_angle(w, v) for v in planes) <= math.pi / 8 + 1e-9


def test_twist_one_equals_plain_cone_within_unit_ball():
    rng = np.random.default_rng(2)
    plain = PlaneCone((0, 0), X_AXIS, 0.5)
    twisted = PlaneCone((0, 0), X_AXIS, 0.5, 1.0)
    for _ in range(500):
        y = tuple(rng.uniform(-1, 1, 2) / math.sqrt(2))
        assert in_plane_cone(y, plain) == in_plane_cone(y, twisted)
    # beta > 1 differs outside the unit ball
    assert in_plane_cone((2, 1.2), PlaneCone((0, 0), X_AXIS, 0.5, 1.5))
    assert not in_plane_cone((2, 1.2), plain)
