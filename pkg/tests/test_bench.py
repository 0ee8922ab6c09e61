import numpy as np
import pytest

from helpers import SQUARE
from kmfamily.bench import (
    RATIOS_HEADER,
    SPEEDUP_HEADER,
    TIMES_HEADER,
    TrialStats,
    benchmark,
    ratio_table,
    run_trials,
    speedup_csv_rows,
    speedup_experiment,
    write_benchmark,
)
from kmfamily.lloyd import kmeans_learn

THREE_PAIRS = np.array([[0.0], [0.1], [5.0], [5.1], [10.0], [10.1]])


def test_deterministic_trials_have_no_spread():
    s = run_trials("ikm", SQUARE, 2, trials=100, timing_repeats=2)
    assert s.trials == 100 and len(s.distortions) == 100
    assert s.i_avg == s.i_min_local == 1.0
    assert len(s.times) == 2


def test_km_reaches_square_optimum():
    s = run_trials("km", SQUARE, 2, trials=20)
    assert s.i_min_local == 1.0 and s.learn_calls == 1


def test_km_has_local_optima_on_three_pairs():
    # oracle: learn from every 3-subset of data points; several distinct fixed points exist
    from itertools import combinations
    finals = {round(kmeans_learn(THREE_PAIRS, THREE_PAIRS[list(c)]).clusters.total_distortion, 9)
              for c in combinations(range(6), 3)}
    assert len(finals) > 1
    s = run_trials("km", THREE_PAIRS, 3, trials=100)
    rows = ratio_table([s, run_trials("ikm", THREE_PAIRS, 3, trials=100)])
    assert s.i_avg > rows[0].i_min_global
    assert rows[0].i_min_global == pytest.approx(min(finals))


def _stat(alg, k, avg, lo):
    return TrialStats(alg, k, 1, avg, lo, [0.0], [avg])


def test_ratio_table_arithmetic():
    rows = ratio_table([_stat("km", 2, 2.0, 1.5), _stat("ikm", 2, 1.0, 1.0)])
    assert rows[0].ratios == {"km": 2.0, "ikm": 1.0}
    rows = ratio_table([_stat("ikm", k, 3.0, 3.0) for k in (2, 3)])
    assert [r.ratios["ikm"] for r in rows] == [1.0, 1.0]


def test_ratio_table_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        ratio_table([_stat("km", 2, 1, 1), _stat("ikm", 3, 1, 1)])


def test_benchmark_csv_shapes(tmp_path):
    x = np.random.default_rng(0).normal(size=(60, 2))
    stats, rows = benchmark(x, range(2, 6), trials=3, timing_repeats=1)
    write_benchmark(tmp_path, "toy", stats, rows)
    ratios = (tmp_path / "ratios.csv").read_text().splitlines()
    times = (tmp_path / "times.csv").read_text().splitlines()
    assert ratios[0] == RATIOS_HEADER and times[0] == TIMES_HEADER
    assert len(ratios) == 1 + 4 * 3 and len(times) == 1 + 4 * 3
    for line in ratios[1:]:
        assert float(line.split(",")[-1]) >= 1 - 1e-12


def test_speedup_experiment_single_worker():
    x = np.random.default_rng(0).normal(size=(400, 2))
    rows = speedup_experiment(x, 3, 3, 100, [1], repeats=1)
    assert len(rows) == 1 and rows[0]["speedup"] == 1.0 and rows[0]["identical_to_1"]
    lines = speedup_csv_rows("toy", rows)
    assert lines[0].startswith("toy,1,")
    assert "published:87.6MB,2,,1.95" in lines and "published:87.6MB,4,,3.75" in lines and "published:87.6MB,8,,6.98" in lines
    assert SPEEDUP_HEADER == "dataset,workers,median_ms,speedup"
    with pytest.raises(ValueError):
        speedup_experiment(x, 3, 3, 100, [2])
