import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conicaldim.symbolic import (Coding, CodingExhausted, SelfSimilarSystem, Similitude,
                                 attractor_bound, cantor13, compose, cylinder_weight, dump_system,
                                 load_system, moran_exponent, point_enclosure, preset, prop43,
                                 sample_coding, sample_word, task_rng)


def test_compose_examples():
    c = cantor13()
    ident = compose(c, ())
    assert ident.ratio == 1 and ident((Fraction(2, 7),)) == (Fraction(2, 7),)
    f1 = compose(c, "1")
    assert f1((Fraction(1),)) == (Fraction(1, 3),)
    f12 = compose(c, "12")
    assert f12.ratio == Fraction(1, 9)
    assert f12((0,)) == (Fraction(2, 9),)
    assert f12((1,)) == (Fraction(1, 3),)


def test_compose_invalid_symbol():
    with pytest.raises(ValueError):
        compose(cantor13(), "13")


def test_cylinder_weight_examples():
    assert cylinder_weight(cantor13(), ()) == 1
    assert cylinder_weight(cantor13(), "121") == Fraction(1, 8)
    s = prop43(Fraction(7, 25), Fraction(1, 5))
    assert s.weights == (Fraction(2, 5), Fraction(2, 5), Fraction(1, 10), Fraction(1, 10))
    assert cylinder_weight(s, "13") == Fraction(1, 25)


@pytest.mark.parametrize("k", range(1, 7))
def test_cylinder_weights_sum_to_one(k):
    s = prop43()
    total = sum(cylinder_weight(s, w) for w in itertools.product(range(1, 5), repeat=k))
    assert total == 1


def test_moran_examples():
    assert moran_exponent([0.5, 0.5]) == pytest.approx(1, abs=1e-12)
    assert moran_exponent([1 / 3, 1 / 3]) == pytest.approx(math.log(2) / math.log(3), abs=1e-12)
    assert moran_exponent([0.28] * 4) == pytest.approx(math.log(4) / math.log(1 / 0.28), abs=1e-12)
    assert moran_exponent([0.28] * 4) == pytest.approx(1.0891, abs=1e-4)


def test_moran_rejects_bad_ratio():
    with pytest.raises(ValueError):
        moran_exponent([0.5, 1.0])


def test_point_enclosure_examples():
    c = cantor13()
    b = point_enclosure(c, ())
    assert b.center == (Fraction(1, 2),) and b.radius == Fraction(1, 2)
    for k in range(1, 8):
        e = point_enclosure(c, "1" * k)
        assert e.center == (Fraction(1, 2 * 3 ** k),) and e.radius == Fraction(1, 2 * 3 ** k)
    e = point_enclosure(c, "2")
    assert e.center == (Fraction(5, 6),) and e.radius == Fraction(1, 6)


def test_prop43_bound_is_invariant():
    s = prop43()
    b = attractor_bound(s)
    for f in s.maps:
        img_c = f(b.center)
        d = math.dist([float(x) for x in img_c], [float(x) for x in b.center])
        assert d + float(f.ratio * b.radius) <= float(b.radius) * (1 + 1e-12)


def test_sample_word_examples():
    c = cantor13()
    assert sample_word(c, 0, 1) == ()
    deg = SelfSimilarSystem(c.maps, (1, 0), degenerate=True)
    assert set(sample_word(deg, 50, 2)) == {1}
    w = sample_word(c, 100_000, 3)
    assert abs(w.count(1) / len(w) - 0.5) < 0.01
    assert sample_word(c, 20, 9) == sample_word(c, 20, 9)


def test_presets():
    c = preset("cantor13")
    assert c.kappa == 2 and c.ratios == (Fraction(1, 3), Fraction(1, 3))
    p = preset("prop43:0.28,0.1")
    assert p.kappa == 4 and p.maps[1].translation == (Fraction(18, 25), 0)
    with pytest.raises(ValueError):
        prop43(0.5, 0.1)
    with pytest.raises(ValueError):
        prop43(0.28, 0.6)
    with pytest.raises(ValueError):
        preset("nope")


def test_prop43_first_level_separated():
    # E lies in [0,1]^2, so E_i lies in the square a_i + lam [0,1]^2; check the
    # squares are pairwise at positive distance, exactly
    lam = Fraction(7, 25)
    s = prop43(lam)
    boxes = [(m.translation[0], m.translation[1]) for m in s.maps]
    for (x1, y1), (x2, y2) in itertools.combinations(boxes, 2):
        gap_x = max(x1, x2) - min(x1, x2) - lam
        gap_y = max(y1, y2) - min(y1, y2) - lam
        assert max(gap_x, gap_y) > 0
    assert min(b[0] for b in boxes[:3]) == 0


def test_similitude_isometry_scaling():
    rng = np.random.default_rng(0)
    rot = ((0.6, -0.8), (0.8, 0.6))
    f = Similitude(0.4, rot, (1, 2))
    for _ in range(50):
        x, y = rng.normal(size=2), rng.normal(size=2)
        fx, fy = np.array(f(tuple(x))), np.array(f(tuple(y)))
        assert abs(np.linalg.norm(fx - fy) - 0.4 * np.linalg.norm(x - y)) < 1e-10
    with pytest.raises(ValueError):
        Similitude(0.4, ((1, 1), (0, 1)), (0, 0))


def test_system_weight_validation():
    c = cantor13()
    with pytest.raises(ValueError):
        SelfSimilarSystem(c.maps, (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ValueError):
        SelfSimilarSystem(c.maps[:1], (1,))


def test_system_file_roundtrip():
    s = prop43()
    t = load_system(dump_system(s))
    assert t.maps == s.maps and t.weights == s.weights


def test_coding_basics():
    c = Coding.parse("12(21)")
    assert [c.symbol(k) for k in range(6)] == [1, 2, 2, 1, 2, 1]
    assert str(c) == "12(21)"
    f = Coding.parse("121")
    assert f.finite and len(f) == 3
    with pytest.raises(CodingExhausted):
        f.symbol(3)
    assert c.shift(3).symbol(0) == c.symbol(3)


def test_task_rng_is_counter_based():
    a = task_rng(5, 3).integers(0, 1 << 30, 4)
    b = task_rng(5, 3).integers(0, 1 << 30, 4)
    c = task_rng(5, 4).integers(0, 1 << 30, 4)
    assert list(a) == list(b) and list(a) != list(c)
    assert sample_coding(cantor13(), task_rng(1, 0)) == sample_coding(cantor13(), task_rng(1, 0))
