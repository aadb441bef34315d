import math

import numpy as np
import pytest

from nodallab import CrossingQuery, Direction, Rect, SetKind, excursion_mask, nodal_graph, sample_field, shortest_crossing
from nodallab.fractal import (Curve, RenormTriplet, StraightRunCertificate, detect_straight_runs, is_sparse,
                              koch_curve, longest_nested_chain, scales, sparsity)
from nodallab.fractal.runs import certificates_csv_rows
from nodallab.levelset import NodalGraph

DESK = RenormTriplet(1, 1.2, 1.05)


def segment_setup(lam):
    return Curve(np.array([[0.0, 0.0], [lam, 0.0]])), Rect(0, -lam / 2, lam, lam / 2)


def test_segment_has_runs_at_every_scale():
    lam = 100.0
    seg, window = segment_setup(lam)
    runs = detect_straight_runs(seg, DESK, lam, window)
    L, k_max = scales(DESK, lam)
    assert sorted(runs) == list(range(k_max + 1))
    for k in runs:
        assert any(c.angle == 0.0 and c.scale == pytest.approx(L[k]) for c in runs[k])


def test_segment_not_sparse():
    lam = 100.0
    seg, window = segment_setup(lam)
    runs = detect_straight_runs(seg, DESK, lam, window, ks=range(1, 17))
    n, chain = longest_nested_chain(runs)
    assert n == 16
    ok, witness = is_sparse(runs, DESK, 2)
    assert not ok and len(witness) >= 1
    assert all(a.contains(b) for a, b in zip(witness, witness[1:]))
    sparse, wit, _ = sparsity(seg, DESK, lam, window, 2)
    assert not sparse and wit


def test_empty_set_has_no_runs():
    g = NodalGraph(np.zeros((0, 2)), np.zeros((0, 2), dtype=np.int64), Rect(0, 0, 50, 50), 0.25)
    runs = detect_straight_runs(g, DESK, 50.0, Rect(0, 0, 50, 50))
    assert all(len(v) == 0 for v in runs.values())
    for k0 in range(10):
        assert is_sparse(runs, DESK, k0)[0]


def test_sparse_count_arithmetic():
    outer = StraightRunCertificate(1, 10.0, (0.0, 0.0), 0.0, 20.0)
    inner = StraightRunCertificate(5, 4.0, (0.0, 0.0), 0.0, 8.0)
    assert outer.contains(inner) and not inner.contains(outer)
    runs = {1: [outer], 5: [inner]}
    assert longest_nested_chain(runs)[0] == 2
    assert is_sparse(runs, DESK, 12)[0]
    assert not is_sparse(runs, DESK, 2)[0]


def test_koch_top_scale_run_depends_on_tube():
    lam = 81.0
    c = koch_curve(4, base_length=lam)
    window = Rect(0, -lam / 2, lam, lam / 2)
    wide = detect_straight_runs(c, DESK, lam, window, ks=[0])
    assert len(wide[0]) > 0
    assert 9 / math.sqrt(DESK.gamma) > 1
    thin = detect_straight_runs(c, DESK, lam, window, ks=[0], tube_factor=0.1 * math.sqrt(DESK.gamma))
    assert len(thin[0]) == 0


def test_side_rule_detects_runs_on_nodal_curves(bf):
    lam = 32.0
    rect = Rect(0, 0, lam, lam)
    for s in range(100):
        g = nodal_graph(sample_field(bf, rect, 0.25, s))
        found = shortest_crossing(g, CrossingQuery(rect, SetKind.NODAL, Direction.HORIZONTAL), return_path=True)
        if found is not None:
            break
    curve = Curve(found[1])
    runs = detect_straight_runs(curve, DESK, lam, rect, ks=[1], rule="sides")
    assert len(runs[1]) > 0
    sparse, witness, _ = sparsity(curve, DESK, lam, rect, 2)
    assert not sparse and witness[0].rule == "sides"


def test_mask_and_graph_geometries(bf):
    f = sample_field(bf, Rect(0, 0, 12, 12), 0.25, 0)
    full = excursion_mask(f, 100.0)
    runs = detect_straight_runs(full, DESK, 12.0, f.window, ks=[1])
    assert len(runs[1]) > 0
    with pytest.raises(ValueError):
        detect_straight_runs(full, DESK, 12.0, f.window, ks=[1], rule="other")


def test_certificate_export():
    runs = {2: [StraightRunCertificate(2, 3.0, (1.0, 2.0), 0.5, 4.0)]}
    assert list(certificates_csv_rows(runs)) == [(3.0, 1.0, 2.0, 0.5)]
