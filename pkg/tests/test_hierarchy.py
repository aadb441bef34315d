import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodallab import CrossingQuery, Direction, Rect, SetKind, UsageError, nodal_graph, sample_field, shortest_crossing
from nodallab.fractal import (Curve, RenormTriplet, build_measure, claim1_check, decompose, energy, koch_curve,
                              length_lower_bound, run_free_branching_fraction, scales, verify_hierarchy)
from nodallab.fractal.hierarchy import CurveHierarchy, Level

DESK = RenormTriplet(1, 1.2, 1.05)
WIDE = RenormTriplet(2, 2.1, 1.05)


def synthetic(counts, triplet=DESK):
    """Hierarchy with the given child counts; counts[k] lists one count per node of level k."""
    parents = [np.array([-1])]
    for k, row in enumerate(counts):
        assert len(row) == len(parents[-1])
        parents.append(np.repeat(np.arange(len(row)), row))
    n_leaf = len(parents[-1])
    start, end = [np.arange(n_leaf) * 2], [np.arange(n_leaf) * 2 + 1]
    for k in range(len(counts) - 1, -1, -1):
        p = parents[k + 1]
        n = len(parents[k])
        s = np.full(n, np.iinfo(np.int64).max)
        e = np.full(n, -1)
        np.minimum.at(s, p, start[0])
        np.maximum.at(e, p, end[0])
        start.insert(0, s)
        end.insert(0, e)
    levels = []
    for k in range(len(parents)):
        nc = np.asarray(counts[k], dtype=np.int64) if k < len(counts) else np.zeros(len(parents[k]), np.int64)
        levels.append(Level(start[k], end[k], parents[k], np.ones(len(parents[k])),
                            nc == triplet.m, nc))
    pts = np.stack([np.arange(2 * n_leaf, dtype=float), np.zeros(2 * n_leaf)], axis=1)
    L = [10.0 / triplet.gamma ** k for k in range(len(counts) + 1)]
    return CurveHierarchy(Curve(pts), triplet, 10.0, L, len(counts), levels, 0.1)


def uniform_counts(per_level):
    counts, width = [], 1
    for c in per_level:
        counts.append([c] * width)
        width *= c
    return counts


@st.composite
def random_counts(draw, m=1):
    depth = draw(st.integers(1, 7))
    counts, width = [], 1
    for _ in range(depth):
        row = draw(st.lists(st.sampled_from([m, m + 1]), min_size=width, max_size=width))
        counts.append(row)
        width = sum(row)
    return counts


def test_claim1_uniform_cases():
    for k0 in range(0, 8):
        assert claim1_check(synthetic(uniform_counts([2] * 6)), k0)
        assert claim1_check(synthetic(uniform_counts([2, 1] * 3)), k0)
    assert not claim1_check(synthetic(uniform_counts([1] * 6)), 2)


@given(random_counts(), st.integers(0, 8))
def test_claim1_equals_path_majority_rule(counts, k0):
    h = synthetic(counts)
    paths = h.leaf_paths()
    low = np.cumsum(paths == 1, axis=1)
    ks = np.arange(1, h.k_max + 1)
    sel = ks >= max(k0, 1)
    expected = bool(np.all(low[:, sel] <= ks[sel] / 2))
    assert claim1_check(h, k0) == expected


@given(random_counts(m=2))
def test_measure_product_formula(counts):
    h = synthetic(counts, WIDE)
    mu = build_measure(h)
    assert mu.total == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(mu.masses, 1 / np.prod(h.leaf_paths(), axis=1), rtol=0, atol=1e-15)
    assert mu.masses.max() <= 2.0 ** -h.k_max + 1e-15


def test_measure_examples():
    mu = build_measure(synthetic(uniform_counts([1] * 5)))
    assert len(mu) == 1 and mu.masses[0] == 1.0
    mu = build_measure(synthetic(uniform_counts([2] * 5), WIDE))
    assert len(mu) == 32 and np.allclose(mu.masses, 2.0 ** -5)
    with pytest.raises(UsageError):
        build_measure(None)


def test_segment_hierarchy():
    lam = 100.0
    seg = Curve(np.array([[0.0, 0.0], [lam, 0.0]]))
    h = decompose(seg, DESK, lam)
    assert verify_hierarchy(h) == []
    assert h.k_max == 16
    assert all(np.all(lv.n_children >= 1) for lv in h.levels[:-1])
    assert h.leaf_run_flags().all()
    mu = build_measure(h)
    E = energy(mu, DESK.s, lam)
    assert seg.length >= length_lower_bound(E, DESK.s, lam)


@pytest.mark.parametrize("depth", range(0, 9))
def test_koch_hierarchies_verify(depth):
    lam = 243.0
    c = koch_curve(depth, base_length=lam)
    h = decompose(c, DESK, lam)
    assert verify_hierarchy(h) == []
    mu = build_measure(h)
    assert mu.total == pytest.approx(1.0, abs=1e-12)
    assert c.length >= length_lower_bound(energy(mu, DESK.s, lam), DESK.s, lam)
    frac = run_free_branching_fraction(h)
    assert frac is None or frac >= 0.5


def test_koch_full_depth():
    lam = 3.0 ** 8
    c = koch_curve(8, base_length=lam)
    h = decompose(c, DESK, lam)
    assert verify_hierarchy(h) == []
    assert h.k_max == scales(DESK, lam)[1]
    frac = run_free_branching_fraction(h)
    assert frac is None or frac >= 0.5


def test_wide_triplet_branches():
    lam = 200.0
    c = koch_curve(5, base_length=lam)
    h = decompose(c, WIDE, lam)
    assert verify_hierarchy(h) == []
    assert all(np.all(lv.n_children >= 2) for lv in h.levels[:-1])
    mu = build_measure(h)
    assert len(mu) >= 2 ** h.k_max
    assert c.length >= length_lower_bound(energy(mu, WIDE.s, lam), WIDE.s, lam)


@pytest.mark.parametrize("seed", range(4))
def test_nodal_curve_hierarchies(bf, seed):
    lam = 64.0
    rect = Rect(0, 0, lam, lam)
    for s in range(seed * 50, seed * 50 + 50):
        g = nodal_graph(sample_field(bf, rect, 0.25, s))
        found = shortest_crossing(g, CrossingQuery(rect, SetKind.NODAL, Direction.HORIZONTAL), return_path=True)
        if found is not None:
            break
    curve = Curve(found[1])
    h = decompose(curve, DESK, lam)
    assert verify_hierarchy(h) == []
    E = energy(build_measure(h), DESK.s, lam)
    assert curve.length >= length_lower_bound(E, DESK.s, lam)


def test_verification_catches_tampering():
    lam = 100.0
    h = decompose(Curve(np.array([[0.0, 0.0], [lam, 0.0]])), DESK, lam)
    lv = h.levels[3]
    lv.end[0] = lv.start[0] + 1
    assert any("diameter" in p for p in verify_hierarchy(h))


def test_short_curve_refused():
    with pytest.raises(UsageError):
        decompose(Curve(np.array([[0.0, 0.0], [5.0, 0.0]])), DESK, 10.0)


def test_exports():
    h = synthetic(uniform_counts([2, 1]), DESK)
    rows = list(h.to_csv_rows())
    assert rows[0][:3] == (0, -1, 0) and len(rows) == 1 + 2 + 2
    text = h.to_text()
    assert text.count("\n") == 5 and text.startswith("L0 node 0")
