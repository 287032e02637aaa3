import math
from fractions import Fraction

import pytest

from conicaldim.symbolic import Coding, CodingExhausted, cantor13, coded_point, sample_coding, task_rng
from conicaldim.triadic import (TriadicInterval, cantor_cdf, cantor_measure, cantor_one_sided,
                                cantor_point, construction_intervals, run_length)


def brute_cdf(b: Fraction, depth: int = 18) -> tuple:
    """Bracket of mu[0, b] from the level-depth construction intervals."""
    lo = hi = Fraction(0)
    w = Fraction(1, 2 ** depth)
    for I in construction_intervals(depth) if depth <= 12 else []:
        if I.hi <= b:
            lo += w
            hi += w
        elif I.lo <= b:
            hi += w
    return lo, hi


@pytest.mark.parametrize("b", [Fraction(1, 4), Fraction(3, 4), Fraction(1, 10), Fraction(5, 7),
                               Fraction(2, 9), Fraction(20, 27)])
def test_cdf_against_construction_intervals(b):
    lo, hi = brute_cdf(b, 12)
    assert lo <= cantor_cdf(b) <= hi


def test_cdf_known_values():
    assert cantor_cdf(Fraction(1, 4)) == Fraction(1, 3)
    assert cantor_cdf(Fraction(3, 4)) == Fraction(2, 3)
    assert cantor_cdf(Fraction(1, 3)) == Fraction(1, 2)
    assert cantor_cdf(Fraction(1, 2)) == Fraction(1, 2)


def test_one_sided_examples():
    zero = Coding.parse("(1)")
    for n in range(0, 10):
        assert cantor_one_sided(zero, n) == (Fraction(1, 2 ** n), Fraction(1, 2 ** n))
    third = Coding.parse("1(2)")
    assert cantor_point(third) == Fraction(1, 3)
    assert cantor_one_sided(third, 1) == (0, Fraction(1, 2))


def test_one_sided_needs_infinite_coding():
    with pytest.raises(CodingExhausted):
        cantor_one_sided(Coding.parse("1212"), 2)


def test_cantor_point_matches_generic_projection():
    c = sample_coding(cantor13(), task_rng(4, 0), 20, 7)
    assert cantor_point(c) == coded_point(cantor13(), c)[0]


def test_run_length_examples():
    c = Coding.parse("12221(1)")
    assert run_length(c, 1) == 3
    assert run_length(c, 0) == 0
    assert run_length(Coding.parse("1(2)"), 1) == math.inf
    with pytest.raises(CodingExhausted):
        run_length(Coding.parse("122"), 1)


def test_construction_intervals():
    ivs = construction_intervals(3)
    assert len(ivs) == 8
    assert ivs[0] == TriadicInterval(0, Fraction(1, 27))
    assert sum(I.length for I in ivs) == Fraction(8, 27)


def test_triadic_interval_validation():
    with pytest.raises(ValueError):
        TriadicInterval(Fraction(1, 5), Fraction(1, 3))


def test_measure_additivity():
    a, b, c = Fraction(1, 10), Fraction(4, 9), Fraction(7, 8)
    assert cantor_measure(a, b) + cantor_measure(b, c) == cantor_measure(a, c)
    assert cantor_measure(b, a) == 0
