import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import sparse

from nodallab import (ArmQuery, CrossingQuery, Direction, FieldGrid, NodalGraph, Rect, SetKind, UsageError,
                      chemical_quantities, crosses, excursion_mask, joint_crossings, nodal_graph, one_arm,
                      one_arm_profile, sample_field, shortest_crossing)
from nodallab.kernels import kappa_tilde
from nodallab.levelset import ExcursionMask
from nodallab.percolation import (_double_sweep, calibrate_quasi_constant, crossing_box_count, joint_layout,
                                  quasi_independence_bound, quasi_independence_sum, well_separated)

H, V, L = Direction.HORIZONTAL, Direction.VERTICAL, Direction.LENGTH
EXC, NOD = SetKind.EXCURSION, SetKind.NODAL

small_fields = hnp.arrays(np.float64, st.tuples(st.integers(3, 14), st.integers(3, 14)),
                          elements=st.one_of(st.floats(-1, -1e-3), st.floats(1e-3, 1)))


def full_mask(w, h=0.25):
    nx, ny = round(w.width / h) + 1, round(w.height / h) + 1
    return ExcursionMask(np.ones((nx, ny), bool), (w.x0, w.y0), h)


def linear(w=Rect(0, -2, 8, 2)):
    return FieldGrid.from_function(lambda x, y: y + 0 * x, w, 0.25)


def test_query_validation():
    with pytest.raises(UsageError):
        CrossingQuery(Rect(0, 0, 4, 4), EXC, L)
    assert CrossingQuery(Rect(0, 0, 2, 4), EXC, L).axis == 1
    with pytest.raises(UsageError):
        ArmQuery((0, 0), 4, 4)
    with pytest.raises(UsageError):
        ArmQuery((0, 0), 0.5, 4)


def test_full_mask_crosses_everything():
    m = full_mask(Rect(0, 0, 10, 6))
    for r in (Rect(0, 0, 10, 6), Rect(1, 1, 3, 2), Rect(2, 0, 4, 5)):
        for d in (H, V, L):
            if d is L and math.isclose(r.width, r.height):
                continue
            assert crosses(m, CrossingQuery(r, EXC, d))


def test_linear_field_nodal_crossings():
    g = nodal_graph(linear())
    w = Rect(0, -1, 8, 1)
    assert crosses(g, CrossingQuery(w, NOD, H))
    assert not crosses(g, CrossingQuery(w, NOD, V))
    assert shortest_crossing(g, CrossingQuery(w, NOD, H)) == pytest.approx(8.0, abs=1e-6)
    assert shortest_crossing(g, CrossingQuery(w, NOD, V)) is None


def test_rect_outside_window_refused():
    m = full_mask(Rect(0, 0, 4, 4))
    with pytest.raises(UsageError):
        crosses(m, CrossingQuery(Rect(1, 1, 5, 3), EXC, H))
    with pytest.raises(UsageError):
        crosses(nodal_graph(linear()), CrossingQuery(Rect(0, -3, 8, 0), NOD, H))


def test_full_mask_shortest_crossing():
    m = full_mask(Rect(0, 0, 10, 6))
    w = 7.0
    s = shortest_crossing(m, CrossingQuery(Rect(1, 1, 1 + w, 4), EXC, H))
    assert w <= s <= w * 1.028


def test_metrication_bound_on_oblique_paths():
    # straight oblique corridor: the 16-neighbour path overshoots the chord by at most 2.8%
    w = Rect(0, 0, 12, 12)
    for slope in (0.2, 0.45, 0.7, 1.0):
        f = FieldGrid.from_function(lambda x, y: 0.6 - np.abs(y - 1 - slope * x) / math.hypot(1, slope), w, 0.125)
        m = excursion_mask(f)
        rect = Rect(0, 0, 10, 12)
        s = shortest_crossing(m, CrossingQuery(rect, EXC, H))
        chord = 10 * math.hypot(1, slope)
        assert s is not None and s <= chord * 1.028 + 2 * 0.125


@given(small_fields)
def test_shortest_crossing_present_iff_crossing(values):
    f = FieldGrid((0, 0), 0.25, values)
    m, g = excursion_mask(f), nodal_graph(f)
    for obj, kind in ((m, EXC), (g, NOD)):
        for d in (H, V):
            q = CrossingQuery(f.window, kind, d)
            s = shortest_crossing(obj, q)
            assert (s is not None) == crosses(obj, q)
            if s is not None:
                assert s >= q.length - 1e-9


@given(small_fields)
def test_arm_profile_monotone(values):
    f = FieldGrid((0, 0), 0.5, values)
    n = min(values.shape) - 1
    if n * 0.5 < 2:
        return
    c = (0.5 * (n // 2), 0.5 * (n // 2))
    half = min(c[0], c[1], 0.5 * n - c[0], 0.5 * n - c[1])
    ts = np.linspace(1.1, 2 * half, 5)
    for obj in (excursion_mask(f), nodal_graph(f)):
        prof = one_arm_profile(obj, c, 1.0, ts)
        assert np.all(np.diff(prof.astype(int)) <= 0)
        assert prof.tolist() == [one_arm(obj, ArmQuery(c, 1.0, float(t))) for t in ts]


def test_arm_trivial_cases():
    m = full_mask(Rect(-5, -5, 5, 5))
    assert one_arm(m, ArmQuery((0, 0), 2.0, 2.001))
    empty = ExcursionMask(np.zeros((41, 41), bool), (-5, -5), 0.25)
    assert not one_arm(empty, ArmQuery((0, 0), 2.0, 8.0))
    with pytest.raises(UsageError):
        one_arm(m, ArmQuery((0, 0), 2.0, 12.0))


def test_chemical_segment():
    xs = np.linspace(0.1, 0.8, 8)
    g = NodalGraph(np.stack([xs, np.full(8, 0.5)], axis=1), np.stack([np.arange(7), np.arange(1, 8)], axis=1),
                   Rect(0, 0, 2, 2), 0.1)
    diams, S = chemical_quantities(g, Rect(0, 0, 1, 1))
    assert S == pytest.approx(0.7, abs=0.1)
    assert len(diams) == 1
    assert chemical_quantities(g, Rect(1, 1, 2, 2))[1] == 0.0


def test_chemical_full_mask_diagonal():
    m = full_mask(Rect(0, 0, 2, 2))
    _, S = chemical_quantities(m, Rect(0.5, 0.5, 1.5, 1.5))
    assert S == pytest.approx(math.sqrt(2), abs=1e-9)
    with pytest.raises(UsageError):
        chemical_quantities(m, Rect(0, 0, 2, 2))


def test_double_sweep_exact_on_trees(rng):
    for _ in range(20):
        n = int(rng.integers(2, 40))
        parents = [int(rng.integers(0, i)) for i in range(1, n)]
        w = rng.uniform(0.1, 1, n - 1)
        adj = sparse.coo_matrix((w, (np.arange(1, n), parents)), shape=(n, n)).tocsr()
        from scipy.sparse import csgraph
        exact = csgraph.dijkstra(adj, directed=False).max()
        assert _double_sweep(adj, np.zeros(n, dtype=int), 1)[0] == pytest.approx(exact)


def test_box_count_full_mask():
    m = full_mask(Rect(0, 0, 6, 6))
    assert crossing_box_count(m, CrossingQuery(Rect(1, 1, 5, 5), EXC, H)) == 16
    empty = ExcursionMask(np.zeros((25, 25), bool), (0, 0), 0.25)
    assert crossing_box_count(empty, CrossingQuery(Rect(1, 1, 5, 5), EXC, H)) == 0


def test_joint_layout_separation():
    rects = joint_layout([8, 12, 16])
    assert well_separated(rects)
    assert [r.width for r in rects] == [8, 12, 16]
    assert not well_separated([Rect(0, 0, 2, 1), Rect(2.5, 0, 4.5, 1)])
    with pytest.raises(UsageError):
        joint_crossings([full_mask(Rect(0, 0, 5, 2))], [Rect(0, 0, 2, 1), Rect(2.5, 0, 4.5, 1)])


def test_joint_empty_family():
    assert joint_crossings([], []) == (1.0, 0.0)


def test_single_rectangle_crossing_at_most_half(bf):
    rect = Rect(0, 0, 8, 4)
    fields = [sample_field(bf, rect, 0.25, s) for s in range(300)]
    p, se = joint_crossings(fields, [rect])
    assert p <= 0.5 + 3 * se


def test_quasi_independence_arithmetic(bf):
    heights = [4.0, 6.0]
    total = quasi_independence_sum(bf, heights)
    expected = 4 ** 4 * kappa_tilde(bf, 4) * 1 * 2 + 6 ** 4 * kappa_tilde(bf, 6) * 2 * 4
    assert total == pytest.approx(expected)
    C = calibrate_quasi_constant(0.3, bf, heights)
    assert quasi_independence_bound(C, bf, heights) == pytest.approx(0.3)
    assert calibrate_quasi_constant(0.2, bf, heights) == 0.0


def test_nodal_implies_excursion_on_samples(bf):
    for s in range(40):
        f = sample_field(bf, Rect(0, 0, 16, 16), 0.25, s)
        q = lambda kind: CrossingQuery(f.window, kind, H)
        if crosses(nodal_graph(f), q(NOD)):
            assert crosses(excursion_mask(f), q(EXC))


def test_crossing_symmetries(bf):
    w = Rect(0, 0, 12, 12)
    hits = np.zeros((3, 400), bool)
    for s in range(400):
        f = sample_field(bf, w, 0.25, s)
        m = excursion_mask(f)
        hits[0, s] = crosses(m, CrossingQuery(w, EXC, H))
        hits[1, s] = crosses(m, CrossingQuery(w, EXC, V))
        hits[2, s] = crosses(excursion_mask(f.negated()), CrossingQuery(w, EXC, H))
    p = hits.mean(axis=1)
    se = np.sqrt(p * (1 - p) / hits.shape[1])
    for k in (1, 2):
        assert abs(p[k] - p[0]) <= 2 * math.hypot(se[0], se[k])
