import math

import pytest
from hypothesis import given, strategies as st

from adtrca.errors import ConfigurationError, InvalidDatasetError, InvalidInputError
from adtrca.evaluation import (BenchConfig, BenchReport, accuracy, itr, leave_one_block_out, parse_grid,
                               run_benchmark)
from adtrca.synth import SynthConfig, generate


def _itr_closed(k, p, t):
    return (math.log2(k) + p * math.log2(p) + (1 - p) * math.log2((1 - p) / (k - 1))) * 60 / t


def test_itr_values():
    assert itr(40, 1.0, 1.0) == pytest.approx(60 * math.log2(40), abs=1e-12)
    assert itr(40, 1.0, 1.0) == pytest.approx(319.316, abs=1e-3)
    # 60 * (log2 40 + 0.9 log2 0.9 + 0.1 log2(0.1/39)) = 259.464
    assert itr(40, 0.9, 1.0) == pytest.approx(259.464, abs=1e-3)
    assert itr(40, 1 / 40, 2.0) == 0.0
    assert itr(5, 0.1, 1.0) == 0.0


@given(st.integers(2, 64), st.floats(0.0, 1.0), st.floats(0.1, 10.0))
def test_itr_properties(k, p, t):
    v = itr(k, p, t)
    assert v >= 0
    assert itr(k, p, t / 2) == pytest.approx(2 * v, rel=1e-10, abs=1e-12)
    if 1 / k < p < 1:
        assert v == pytest.approx(_itr_closed(k, p, t), rel=1e-12)


def test_itr_invalid():
    for args in ((1, 0.5, 1.0), (4, 1.5, 1.0), (4, 0.5, 0.0)):
        with pytest.raises(InvalidInputError):
            itr(*args)


def test_accuracy():
    assert accuracy([0, 1, 2, 2], [0, 1, 1, 2]) == 0.75
    with pytest.raises(InvalidInputError):
        accuracy([], [])


def test_parse_grid():
    assert parse_grid("0.5:2.0:0.5") == [0.5, 1.0, 1.5, 2.0]
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_grid("1,2.5") == [1.0, 2.5]
    with pytest.raises(ConfigurationError):
        parse_grid("1:0:0.5")


def test_lobo_splits():
    ds = generate(SynthConfig(n_blocks=3))
    splits = leave_one_block_out(ds)
    assert [s.test_block for s in splits] == [0, 1, 2]
    assert splits[1].train_blocks == (0, 2)
    incomplete = ds.with_trials([t for t in ds.trials if not (t.block_index == 1 and t.stimulus_index == 3)])
    with pytest.raises(InvalidDatasetError, match="block 1 / stimulus 3"):
        leave_one_block_out(incomplete)


def test_benchmark_grid_and_ordering():
    ds = generate(SynthConfig(n_channels=3, n_blocks=4, tw=1.0, snr_db=-5))
    rep = run_benchmark(ds, ["trca", "cca"], [0.5, 1.0], channel_sets=[None, ["Ch1", "Ch2"]],
                        n_train_grid=[2, None], config=BenchConfig(n_harmonics=3))
    assert len(rep.records) == 2 * 2 * 2 * 2 * 4
    assert rep.records[0].method == "cca"  # method order follows METHODS
    for r in rep.records:
        assert len(r.train_blocks) == r.n_train and r.test_block not in r.train_blocks
    two = [r for r in rep.records if r.n_train == 2 and r.method == "cca" and r.tw == 0.5 and r.channels == "all"]
    same = [r for r in rep.records if r.n_train == 2 and r.method == "trca" and r.tw == 0.5 and r.channels == "all"]
    assert [r.train_blocks for r in two] == [r.train_blocks for r in same]
    agg = rep.aggregates()
    assert len(agg) == 16 and all(a["n"] == 4 for a in agg)
    assert rep.to_csv().splitlines()[0].startswith("subject,method,tw")


def test_benchmark_multi_subject_sd_over_subject_means():
    subs = {f"S{i}": generate(SynthConfig(n_blocks=3, noise_seed=i, snr_db=-8)) for i in range(3)}
    rep = run_benchmark(subs, ["cca"], [1.0], config=BenchConfig(n_harmonics=3))
    (row,) = rep.aggregates()
    assert row["n_subjects"] == 3 and row["n"] == 3
    assert isinstance(BenchReport.concat([rep, rep]).records, list)


def test_benchmark_rejects_bad_grids():
    ds = generate(SynthConfig(n_blocks=3))
    with pytest.raises(ConfigurationError):
        run_benchmark(ds, ["svm"], [1.0])
    with pytest.raises(ConfigurationError):
        run_benchmark(ds, ["cca"], [2.0])  # longer than the trials
    with pytest.raises(ConfigurationError):
        run_benchmark(ds, ["trca"], [1.0], n_train_grid=[5])


def test_benchmark_gaze_shift_enters_itr():
    ds = generate(SynthConfig(n_blocks=3, snr_db=10))
    a = run_benchmark(ds, ["cca"], [1.0], config=BenchConfig(n_harmonics=3))
    b = run_benchmark(ds, ["cca"], [1.0], config=BenchConfig(n_harmonics=3, gaze_shift_s=1.0))
    for ra, rb in zip(a.records, b.records):
        assert rb.itr == pytest.approx(ra.itr / 2)
