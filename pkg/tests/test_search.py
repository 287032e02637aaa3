import math

import numpy as np
import pytest

from conicaldim.search import (NotFound, audit_witness, cone_inclusion_search, search_nets,
                               separation_word_search, theorem41_exponents)
from conicaldim.symbolic import cantor13, cylinder_weight, line_cantor_in_plane, unit_interval


@pytest.fixture(scope="module")
def cantor_search():
    return cone_inclusion_search(cantor13(), 0, 0.5, 3)


def test_cantor_m0_search(cantor_search):
    r = cantor_search
    assert r.level == 2 and r.h == (1, 2)
    assert r.margin > 0
    assert r.pairs == 2


def test_cantor_witness_audit(cantor_search):
    rng = np.random.default_rng(0)
    for k in range(len(cantor_search.directions)):
        assert audit_witness(cantor13(), cantor_search, 0, k, rng, samples=1000) == 0


def test_line_supported_system_not_found():
    with pytest.raises(NotFound) as err:
        cone_inclusion_search(line_cantor_in_plane(), 1, 0.5, 3)
    rep = err.value.report
    assert rep["best_coverage"] < 1 and rep["budget_exhausted"] is False


def test_search_budget():
    with pytest.raises(NotFound) as err:
        cone_inclusion_search(line_cantor_in_plane(), 1, 0.5, 6, max_seconds=0.0)
    assert err.value.report["budget_exhausted"] is True


def test_search_rejects_bad_codimension():
    with pytest.raises(ValueError):
        cone_inclusion_search(cantor13(), 1, 0.5, 2)


def test_nets_cover_both_directions():
    lines, dirs = search_nets(2, 1, 0.1)
    assert len(dirs) >= 2 and len(lines) >= 2


def test_separation_cantor():
    sep = separation_word_search(cantor13(), 2)
    assert sep.k == ()
    assert 0.9 <= sep.delta < 1


def test_separation_touching_needs_word():
    sep = separation_word_search(unit_interval(), 3)
    assert len(sep.k) >= 1 and sep.delta > 0


def test_exponents(cantor_search):
    s1, s2, s = theorem41_exponents(cantor13(), cantor_search, ((), 0.9))
    p, l = 0.5, cantor_search.level
    mu_h = float(cylinder_weight(cantor13(), cantor_search.h))
    assert s1 == pytest.approx(2 * l * math.log(p) / math.log(1 - mu_h))
    assert s2 == 0 and s == s1
    s1b, s2b, _ = theorem41_exponents(cantor13(), cantor_search, ((1,), 0.5))
    assert s2b == pytest.approx(math.log(0.5) / math.log(0.5)) and s1b > 0
