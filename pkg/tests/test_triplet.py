import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodallab import ConfigError
from nodallab.fractal import (RenormTriplet, energy_bound, energy_bound_series, min_gamma_for_sparsity_bound,
                              scales, validate_triplet)


def chain_holds(m, g, s):
    return s > 1 and 1 <= m < g < g ** s < math.sqrt(m * (m + 1))


def test_desk_triplet_accepted():
    assert validate_triplet(1, 1.2, 1.05)
    assert 1.2 ** 1.05 == pytest.approx(1.21099, abs=1e-5)
    assert 1.2 ** 1.05 < math.sqrt(2)


def test_rejections_name_the_inequality():
    check = validate_triplet(1, 1.5, 1.2)
    assert not check
    assert any("sqrt(m(m+1))" in v for v in check.violations)
    check = validate_triplet(1, 1.0, 1.05)
    assert not check and any("m < gamma" in v for v in check.violations)
    assert not validate_triplet(1, 1.2, 1.0)
    with pytest.raises(ConfigError):
        RenormTriplet(1, 1.5, 1.2)


@given(m=st.integers(1, 6), g=st.floats(0.5, 8), s=st.floats(0.9, 1.6))
def test_validation_matches_chain(m, g, s):
    assert bool(validate_triplet(m, g, s)) == chain_holds(m, g, s)


def test_derived_constants():
    t = RenormTriplet(1, 1.2, 1.05)
    assert t.eps == pytest.approx(0.2)
    assert t.beta == pytest.approx(math.sqrt(2))


def k_max_by_iteration(t, lam):
    k = 0
    for j in range(1, 1000):
        if t.eps * lam / t.gamma ** j >= 1:
            k = j
        else:
            break
    return k


def test_scales_examples():
    t = RenormTriplet(1, 1.2, 1.05)
    L, k = scales(t, 100)
    assert k == 16 and len(L) == 17 and L[0] == 100
    assert 1.2 ** 16 <= 20 < 1.2 ** 17
    assert scales(t, 5)[1] == 0


@given(lam=st.floats(1.01, 1e5), g=st.floats(1.05, 1.4))
def test_scales_against_iteration(lam, g):
    t = RenormTriplet(1, g, 1 + 0.5 * (math.log(math.sqrt(2)) / math.log(g) - 1))
    L, k = scales(t, lam)
    assert k == k_max_by_iteration(t, lam)
    assert all(a == pytest.approx(lam / t.gamma ** j) for j, a in enumerate(L))


def test_energy_bound_values():
    t = RenormTriplet(1, 1.2, 1.05)
    expected = (1.2 ** (1.05 * 3) + math.sqrt(2) / (1 - 1.2 ** 1.05 / math.sqrt(2))) / 0.2 ** 1.05
    assert energy_bound(t, 2) == pytest.approx(expected, rel=1e-12)
    for k_max in (0, 5, 16, 40):
        assert energy_bound_series(t, 2, k_max) <= energy_bound(t, 2)


def test_min_gamma():
    def g(x):
        return math.log(2) + 4 * math.log(x) + 1 - math.sqrt(x) / 160
    assert g(1e8) > 0 > g(2e8)
    root, M = min_gamma_for_sparsity_bound()
    assert abs(g(root)) < 1e-6
    assert 1e8 < root < 2e8
    assert root == pytest.approx(1.5198035080e8, rel=1e-8)
    assert M == pytest.approx(math.sqrt(root) / 80 - 2)
