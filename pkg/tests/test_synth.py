import json

import numpy as np
import pytest

from railover.dsp import frame_windows, peak_to_peak, rms
from railover.synth import (DEFAULT_SENSORS, KMH, Confounder, Material,
                            ScenarioConfig, generate_dataset, generate_event,
                            generate_regular, load_manifest,
                            read_waveform_csv, write_waveform_csv)


def event_window_index(cfg):
    return int(round(cfg.event_time_s * 10))


class TestGenerateEvent:
    def test_steel_event_dominates(self):
        cfg = ScenarioConfig(seed=1, speed_mps=15 * KMH, event_time_s=1.51)
        rec = generate_event(Material.STEEL, cfg)
        pps = np.array([peak_to_peak(w) for w in frame_windows(rec.waveform)])
        ev = event_window_index(cfg)
        others = np.delete(pps, ev)
        assert pps[ev] >= 5 * others.max()

    def test_seed_determinism(self):
        cfg = ScenarioConfig(seed=9, speed_mps=10 * KMH)
        a = generate_event(Material.WOOD, cfg)
        b = generate_event(Material.WOOD, cfg)
        assert np.array_equal(a.waveform.samples, b.waveform.samples)

    def test_bone_speed_scaling(self):
        lo = ScenarioConfig(seed=3, speed_mps=5 * KMH, event_time_s=1.51)
        hi = ScenarioConfig(seed=3, speed_mps=15 * KMH, event_time_s=1.51)
        ev = event_window_index(lo)
        w_lo = frame_windows(generate_event(Material.BONE, lo).waveform)[ev]
        w_hi = frame_windows(generate_event(Material.BONE, hi).waveform)[ev]
        assert rms(w_hi) / rms(w_lo) == pytest.approx(3.0, rel=0.10)

    def test_none_rejected(self):
        with pytest.raises(ValueError, match="generate_regular"):
            generate_event(Material.NONE, ScenarioConfig(seed=0))


class TestGenerateRegular:
    def test_plain_background_bounded(self):
        cfg = ScenarioConfig(seed=4)
        rec = generate_regular(cfg)
        for w in frame_windows(rec.waveform):
            assert peak_to_peak(w) <= 4 * cfg.noise_rms + 1e-12

    def test_switch_elevates_one_window_label_stays_none(self):
        cfg = ScenarioConfig(seed=5, speed_mps=10 * KMH, event_time_s=1.51,
                            confounder=Confounder.SWITCH)
        rec = generate_regular(cfg)
        assert rec.label is Material.NONE
        pps = np.array([peak_to_peak(w) for w in frame_windows(rec.waveform)])
        ev = event_window_index(cfg)
        assert pps[ev] >= 3 * np.delete(pps, ev).max()

    def test_switch_energy_below_300hz(self):
        from railover.dsp import octave_spectrum
        cfg = ScenarioConfig(seed=6, speed_mps=15 * KMH, event_time_s=1.51,
                            confounder=Confounder.SWITCH)
        rec = generate_regular(cfg)
        win = frame_windows(rec.waveform)[event_window_index(cfg)]
        bands = octave_spectrum(win, rec.waveform.sample_rate_hz)
        # bands 0..4 cover 100..346 Hz
        assert np.sum(bands[:5] ** 2) > 0.8 * np.sum(bands ** 2)

    def test_seed_determinism(self):
        cfg = ScenarioConfig(seed=8, confounder=Confounder.RAIL_JOINT)
        a = generate_regular(cfg)
        b = generate_regular(cfg)
        assert np.array_equal(a.waveform.samples, b.waveform.samples)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    manifest = generate_dataset(out, seed=21, n_events=20, n_regular=12)
    return out, manifest


class TestGenerateDataset:
    def test_counts_per_sensor(self, dataset):
        _, manifest = dataset
        for sensor in ("wheelset_bearing", "bogie_frame", "car_body"):
            recs = [r for r in manifest["records"]
                    if r["sensor_profile"] == sensor]
            assert len(recs) == 32
            assert sum(r["label"] != "none" for r in recs) == 20

    def test_even_material_split(self, dataset):
        _, manifest = dataset
        recs = [r for r in manifest["records"]
                if r["sensor_profile"] == "wheelset_bearing"]
        counts = {m.value: 0 for m in Material}
        for r in recs:
            counts[r["label"]] += 1
        assert counts["steel"] == counts["wood"] == counts["stone"] == counts["bone"] == 5

    def test_damping_ratio_car_body(self, dataset):
        out, manifest = dataset
        steel = [r for r in manifest["records"]
                 if r["label"] == "steel" and r["speed_mps"] > 4.0]
        by_idx = {}
        for r in steel:
            by_idx.setdefault(r["recording_index"], {})[r["sensor_profile"]] = r
        idx = sorted(by_idx)[0]
        group = by_idx[idx]
        vals = {}
        for prof, r in group.items():
            wf = read_waveform_csv(out / r["path"],
                                   sample_rate_hz=r["sample_rate_hz"])
            win = frame_windows(wf)[int(round(r["event_time_s"] * 10))]
            vals[prof] = rms(win)
        assert vals["car_body"] / vals["wheelset_bearing"] == pytest.approx(
            0.15, rel=0.05)

    def test_dataset_determinism(self, tmp_path):
        a = generate_dataset(tmp_path / "a", seed=33, n_events=4, n_regular=4)
        b = generate_dataset(tmp_path / "b", seed=33, n_events=4, n_regular=4)
        ra, rb = a["records"][0], b["records"][0]
        wa = read_waveform_csv(tmp_path / "a" / ra["path"])
        wb = read_waveform_csv(tmp_path / "b" / rb["path"])
        assert np.array_equal(wa.samples, wb.samples)

    def test_manifest_round_trip(self, dataset):
        out, manifest = dataset
        loaded = load_manifest(out / "manifest.json")
        assert loaded == json.loads(json.dumps(manifest))

    def test_unknown_manifest_version_rejected(self, tmp_path):
        bad = {"version": 99, "records": [], "sensors": [], "seed": 0}
        p = tmp_path / "manifest.json"
        p.write_text(json.dumps(bad))
        with pytest.raises(ValueError, match="version"):
            load_manifest(p)


class TestWaveformCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(100)
        path = tmp_path / "w.csv"
        write_waveform_csv(path, x, 5000.0)
        wf = read_waveform_csv(path, "ch", 5000.0)
        assert np.allclose(wf.samples, x, rtol=1e-15)
        assert path.read_text().splitlines()[0] == "time_s,acc_mps2"

    def test_malformed_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time_s,acc_mps2\n0.0,1.0,extra,junk\nnot,a number\n")
        with pytest.raises(ValueError, match="malformed"):
            read_waveform_csv(p)


class TestScenarioConfig:
    def test_event_time_bounds(self):
        with pytest.raises(ValueError):
            ScenarioConfig(seed=0, event_time_s=5.0, duration_s=3.0)

    def test_noise_positive(self):
        with pytest.raises(ValueError):
            ScenarioConfig(seed=0, noise_rms=0.0)
