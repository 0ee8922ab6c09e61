import random

import numpy as np
import pytest

from helpers import SQUARE, blobs
from kmfamily.core import InfeasibleKError, total_distortion
from kmfamily.ikm import run_ikm
from kmfamily.twophase import (
    ArraySource,
    IntermediateResult,
    SegmentError,
    phase1_map,
    phase2_reduce,
    plan_segments,
    run_2pk_sequential,
    run_par2pk,
    stream_segments,
)


def canonical(clusters):
    order = np.lexsort(clusters.centers.T[::-1])
    return clusters.centers[order], clusters.weights[order]


@pytest.mark.parametrize("n, length, kt, segments, last", [
    (1000, 100, 10, 10, 100),
    (1005, 100, 10, 10, 105),
    (1010, 100, 10, 11, 10),
    (100, 100, 10, 1, 100),
    (50, 100, 10, 1, 50),
])
def test_plan_segments(n, length, kt, segments, last):
    plan = plan_segments(n, length, kt)
    assert plan.total_segments == segments
    lo, hi = plan.bounds[-1]
    assert hi - lo == last and hi == n
    assert all(b[1] == c[0] for b, c in zip(plan.bounds, plan.bounds[1:]))


def test_plan_segments_rejects_short_length():
    with pytest.raises(ValueError):
        plan_segments(1000, 5, 10)


@pytest.mark.parametrize("n", [1, 9, 10, 99, 100, 104, 105, 110, 111, 250])
def test_stream_segments_matches_plan(n):
    rows = np.arange(n, dtype=float).reshape(-1, 1)
    pos = 0

    def read(m):
        nonlocal pos
        block = rows[pos:pos + m]
        pos += block.shape[0]
        return block

    if n < 5:
        got = list(stream_segments(read, 10, 5))
        assert [b.shape[0] for _, b in got] == [n]
        return
    got = list(stream_segments(read, 10, 5))
    plan = plan_segments(n, 10, 5)
    assert [(b[0, 0], b[-1, 0] + 1) for _, b in got] == [tuple(map(float, bd)) for bd in plan.bounds]
    assert [i for i, _ in got] == list(range(len(got)))
    held = max(b.shape[0] for _, b in got)
    assert held < 10 + 5


def test_phase1_square_corners():
    r = phase1_map(SQUARE, 2, segment_index=3)
    assert r.segment_index == 3
    pairs = sorted(zip(map(tuple, r.centers.tolist()), r.weights.tolist()))
    assert pairs == [((0.0, 0.5), 2.0), ((10.0, 0.5), 2.0)]
    assert [wp.weight for wp in r.weighted_centers] == r.weights.tolist()


def test_phase1_identical_points_single_center():
    r = phase1_map(np.full((7, 3), 2.5), 1)
    assert r.centers.tolist() == [[2.5, 2.5, 2.5]] and r.weights.tolist() == [7.0]


def test_phase1_is_a_thin_wrapper_over_ikm():
    x = np.random.default_rng(0).normal(size=(50, 2))
    r = phase1_map(x, 5)
    clusters, _ = run_ikm(x, 5)
    assert np.array_equal(r.centers, clusters.centers) and r.n_objects == 50.0
    one = phase1_map(x, 1)
    assert total_distortion(x, r.centers) <= total_distortion(x, one.centers)


def test_phase1_infeasible_carries_segment_index():
    with pytest.raises(SegmentError) as info:
        phase1_map(np.zeros((10, 2)), 3, segment_index=4)
    assert info.value.segment_index == 4
    assert isinstance(info.value, InfeasibleKError)


def test_phase2_examples():
    a = IntermediateResult(0, np.array([[0.0]]), np.array([3.0]))
    b = IntermediateResult(1, np.array([[4.0]]), np.array([1.0]))
    clusters, _ = phase2_reduce([b, a], 1)
    assert clusters.centers.tolist() == [[1.0]] and clusters.weights.tolist() == [4.0]
    with pytest.raises(InfeasibleKError):
        phase2_reduce([a, b], 3)


def test_phase2_single_segment_is_idempotent():
    x = np.random.default_rng(1).normal(size=(40, 2))
    r = phase1_map(x, 4)
    clusters, _ = phase2_reduce([r], 4)
    got = sorted(zip(map(tuple, clusters.centers.tolist()), clusters.weights.tolist()))
    assert got == sorted(zip(map(tuple, r.centers.tolist()), r.weights.tolist()))


def test_two_blobs_across_segments_match_full_ikm():
    rng = np.random.default_rng(7)
    x = np.vstack([rng.normal(0, 0.3, size=(200, 2)), rng.normal(10, 0.3, size=(200, 2))])
    x = x[rng.permutation(400)]
    seg, _ = run_2pk_sequential(x, 2, 2, 100)
    full, _ = run_ikm(x, 2)
    np.testing.assert_allclose(canonical(seg)[0], canonical(full)[0], atol=1e-6)


def test_degenerate_single_segment_equals_ikm():
    x = blobs(2000, d=3, centers=5, seed=2)
    seg, _ = run_2pk_sequential(x, 5, 5, len(x))
    full, _ = run_ikm(x, 5)
    assert np.array_equal(seg.centers, full.centers)
    assert np.array_equal(seg.weights, full.weights)


def test_weight_conservation_and_single_scan():
    x = blobs(3017, seed=5)
    src = ArraySource(x)
    clusters, report = run_2pk_sequential(src, 6, 4, 200)
    assert clusters.total_weight == 3017.0
    assert src.rows_read == 3017 == report.extras["rows_read"]
    assert sum(r.n_objects for r in report.extras["intermediates"]) == 3017.0


def test_phase1_km_learner_is_seeded():
    x = blobs(1000, seed=3)
    a, _ = run_2pk_sequential(x, 5, 5, 250, learner="km", seed=4)
    b, _ = run_2pk_sequential(x, 5, 5, 250, learner="km", seed=4)
    assert np.array_equal(a.centers, b.centers)


def test_compression_monotone_in_kt():
    x = blobs(600, seed=6)
    for lo, hi in plan_segments(600, 200, 1).bounds:
        seg = x[lo:hi]
        dist = [total_distortion(seg, phase1_map(seg, kt).centers) for kt in range(1, 8)]
        assert all(b <= a for a, b in zip(dist, dist[1:]))


@pytest.mark.parametrize("workers", [1, 2, 3])
def test_parallel_matches_sequential(workers):
    x = blobs(5000, seed=8)
    seq, rs = run_2pk_sequential(x, 7, 7, 400)
    par, rp = run_par2pk(x, 7, 7, 400, workers, max_pending=2)
    assert np.array_equal(seq.centers, par.centers) and np.array_equal(seq.weights, par.weights)
    assert rs.learn_calls == rp.learn_calls
    for a, b in zip(rs.extras["intermediates"], rp.extras["intermediates"]):
        assert a.segment_index == b.segment_index
        assert np.array_equal(a.centers, b.centers) and np.array_equal(a.weights, b.weights)


def test_reduce_ignores_completion_order():
    x = blobs(3000, seed=9)
    _, report = run_2pk_sequential(x, 5, 5, 300)
    inter = list(report.extras["intermediates"])
    base, _ = phase2_reduce(inter, 5)
    for s in range(3):
        random.Random(s).shuffle(inter)
        again, _ = phase2_reduce(inter, 5)
        assert np.array_equal(again.centers, base.centers)


def test_parallel_mapper_failure_reports_segment():
    x = blobs(300, seed=1)
    x[100:200] = 1.0
    with pytest.raises(SegmentError) as info:
        run_par2pk(x, 3, 3, 100, workers=2)
    assert info.value.segment_index == 1
    # pool is usable again afterwards: nothing leaked
    ok, _ = run_par2pk(blobs(300, seed=1), 3, 3, 100, workers=2)
    assert ok.total_weight == 300.0


def test_parallel_rejects_zero_workers():
    with pytest.raises(ValueError):
        run_par2pk(SQUARE, 1, 1, 4, workers=0)
