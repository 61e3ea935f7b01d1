import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from railover.classical import ThresholdModel
from railover.dataset import LabeledSegment
from railover.dsp import FeatureFrame
from railover.evaluation import (EvalResult, MethodResult, SplitSpec,
                                 evaluate, largest_remainder, read_report_csv,
                                 report, split, summarize)
from railover.synth import KMH, Material


def uniform_frame(v, speed=1.0):
    return FeatureFrame(vel_pp=v, vel_rms=v, acc_pp=v, acc_rms=v,
                        octave=np.full(10, v), speed_mps=speed, frame_index=0)


def make_segment(i, label, speed, value=None):
    if value is None:
        value = 1.0 if label is not Material.NONE else 0.0
    return LabeledSegment(frames=[uniform_frame(value, speed)], label=label,
                          speed_mps=speed, sensor_id="wheelset_bearing",
                          recording_index=i)


def standard_population(n_events=60, n_regular=96):
    speeds = [5 * KMH, 10 * KMH, 15 * KMH]
    segs = []
    for i in range(n_events):
        segs.append(make_segment(i, Material.STEEL, speeds[i % 3]))
    for i in range(n_regular):
        segs.append(make_segment(n_events + i, Material.NONE, speeds[i % 3]))
    return segs


class TestLargestRemainder:
    def test_156_splits_62_47_47(self):
        assert largest_remainder(156, (0.4, 0.3, 0.3)) == [62, 47, 47]

    def test_10(self):
        assert largest_remainder(10, (0.4, 0.3, 0.3)) == [4, 3, 3]

    def test_tie_goes_to_lowest_index(self):
        # both remainders are 0.5: the first fraction wins the spare item
        assert largest_remainder(1, (0.5, 0.5)) == [1, 0]

    @given(st.integers(0, 500))
    def test_allocation_sums_to_n(self, n):
        assert sum(largest_remainder(n, (0.4, 0.3, 0.3))) == n


class TestSplit:
    def test_partition_is_disjoint_and_complete(self):
        segs = standard_population()
        train, val, test = split(segs, SplitSpec(seed=1))
        ids = sorted(s.recording_index for part in (train, val, test)
                     for s in part)
        assert ids == list(range(len(segs)))

    def test_sizes_match_targets(self):
        train, val, test = split(standard_population(), SplitSpec(seed=2))
        assert (len(train), len(val), len(test)) == (62, 47, 47)

    def test_stratified_by_event_and_speed(self):
        segs = standard_population()
        train, val, test = split(segs, SplitSpec(seed=3))
        for part, frac in ((train, 0.4), (val, 0.3), (test, 0.3)):
            n_events = sum(s.is_event for s in part)
            assert abs(n_events - 60 * frac) <= 3
            for speed in (5 * KMH, 10 * KMH, 15 * KMH):
                n = sum(1 for s in part
                        if abs(s.speed_mps - speed) < 1e-9)
                assert abs(n - 52 * frac) <= 3

    def test_seeded_determinism(self):
        segs = standard_population()
        a = split(segs, SplitSpec(seed=4))
        b = split(segs, SplitSpec(seed=4))
        for pa, pb in zip(a, b):
            assert [s.recording_index for s in pa] == \
                [s.recording_index for s in pb]

    def test_different_seed_differs(self):
        segs = standard_population()
        a, _, _ = split(segs, SplitSpec(seed=5))
        b, _, _ = split(segs, SplitSpec(seed=6))
        assert [s.recording_index for s in a] != \
            [s.recording_index for s in b]

    def test_too_small_rejected(self):
        with pytest.raises(ValueError, match="too small"):
            split(standard_population(2, 2), SplitSpec(seed=0))

    def test_bad_fractions_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            SplitSpec(train=0.5, val=0.5, test=0.5)


class TestEvaluate:
    def test_all_non_event_predictor(self):
        # thresholds above every quantity: accuracy is the regular share
        segs = standard_population(60, 96)
        model = ThresholdModel(np.full(5, 1e9))
        res = evaluate(model, segs)
        assert res.accuracy == pytest.approx(96 / 156)
        assert res.confusion[1, 0] == 60  # all events missed
        assert res.confusion[0, 1] == 0

    def test_perfect_separable_predictor(self):
        segs = standard_population(10, 10)
        res = evaluate(ThresholdModel(np.full(5, 0.5)), segs)
        assert res.accuracy == 1.0
        assert np.array_equal(res.confusion, np.diag([10, 10]))

    def test_confusion_rows_sum_to_class_counts(self):
        segs = standard_population(20, 30)
        res = evaluate(ThresholdModel(np.full(5, 0.5)), segs)
        assert res.confusion.sum(axis=1).tolist() == [30, 20]
        assert res.confusion.sum() == 50

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            evaluate(ThresholdModel(np.ones(5)), [])

    def test_multiclass_needs_cnn(self):
        with pytest.raises(ValueError, match="CNN"):
            evaluate(ThresholdModel(np.ones(5)),
                     standard_population(5, 5), mode="multiclass")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            evaluate(ThresholdModel(np.ones(5)),
                     standard_population(5, 5), mode="bogus")

    def test_unknown_model_rejected(self):
        with pytest.raises(TypeError):
            evaluate(object(), standard_population(5, 5))


class TestSummarize:
    def test_three_sensors(self):
        mx, mn, mean = summarize({"a": 1.0, "b": 0.987, "c": 0.996})
        assert mx == 1.0
        assert mn == 0.987
        assert mean == pytest.approx(0.9943, abs=1e-4)

    def test_spread_sensors(self):
        mx, mn, mean = summarize({"a": 0.923, "b": 0.775, "c": 0.853})
        assert (mx, mn) == (0.923, 0.775)
        assert mean == pytest.approx(0.8503, abs=1e-4)

    def test_single_sensor(self):
        assert summarize({"only": 0.8}) == (0.8, 0.8, 0.8)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize({})

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=8))
    def test_mean_within_bounds(self, vals):
        per_sensor = {str(i): v for i, v in enumerate(vals)}
        mx, mn, mean = summarize(per_sensor)
        assert mn - 1e-12 <= mean <= mx + 1e-12


class TestReport:
    def results(self):
        conf = np.array([[10, 1], [2, 12]])
        return [
            MethodResult("dl-1", {"wheelset_bearing": 1.0,
                                  "bogie_frame": 0.98,
                                  "car_body": 0.96},
                         {"wheelset_bearing": conf}),
            MethodResult("classical-1", {"wheelset_bearing": 0.9,
                                         "bogie_frame": 0.85,
                                         "car_body": 0.8},
                         {"wheelset_bearing": conf}),
        ]

    def test_csv_round_trip(self, tmp_path):
        report(self.results(), tmp_path, figures=False)
        parsed = read_report_csv(tmp_path / "report.csv")
        assert parsed["dl-1"]["car_body"] == 0.96
        assert parsed["classical-1"]["mean"] == pytest.approx(0.85)
        assert parsed["dl-1"]["max"] == 1.0
        assert parsed["dl-1"]["min"] == 0.96

    def test_text_table_percentages(self, tmp_path):
        text = report(self.results(), tmp_path, figures=False)
        assert "Mean accuracy" in text
        assert "98.0%" in text  # dl-1 mean
        assert "85.0%" in text  # classical-1 mean

    def test_figures_written(self, tmp_path):
        report(self.results(), tmp_path, figures=True)
        assert (tmp_path / "accuracy_per_sensor.png").stat().st_size > 0
        pngs = list(tmp_path.glob("*.png"))
        assert len(pngs) >= 2

    def test_malformed_csv_rejected(self, tmp_path):
        p = tmp_path / "report.csv"
        p.write_text("wrong,header,here\n")
        with pytest.raises(ValueError, match="malformed"):
            read_report_csv(p)
