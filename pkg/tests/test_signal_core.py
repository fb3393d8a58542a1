import numpy as np
import pytest

from vibrogan.errors import (AliasingRiskError, InsufficientDataError,
                             MissingSyntheticError, RecordParseError)
from vibrogan.signal_core import (AccelRecord, ScenarioSpec, SurrogateParams,
                                  Window, assemble_scenario, default_scenarios,
                                  generate_surrogate_record, load_record,
                                  load_windows, normalize_windows,
                                  save_record, save_windows, segment_record,
                                  shuffle_partition)


def record(n, condition="undamaged", rate=1024.0):
    rng = np.random.default_rng(0)
    return AccelRecord(samples=rng.normal(size=n), rate=rate, condition=condition)


def make_pool(n, condition, provenance="real"):
    rng = np.random.default_rng(hash((n, condition)) % 2**32)
    return [Window(samples=rng.uniform(-1, 1, size=8), condition=condition,
                   provenance=provenance, normalized=True, source_index=i)
            for i in range(n)]


class TestRecordValidation:
    def test_rejects_bad_condition(self):
        with pytest.raises(ValueError):
            AccelRecord(samples=np.zeros(4), rate=1024.0, condition="broken")

    def test_rejects_matrix_samples(self):
        with pytest.raises(ValueError):
            AccelRecord(samples=np.zeros((2, 2)), rate=1024.0, condition="damaged")

    def test_duration(self):
        assert record(2048).duration_s == pytest.approx(2.0)


class TestSegmentation:
    def test_full_scale_window_count(self):
        # 256 * 1024 = 262144 samples -> exactly 256 windows of 1024
        windows = segment_record(record(262144), window_len=1024)
        assert len(windows) == 256
        assert all(len(w.samples) == 1024 for w in windows)

    def test_remainder_dropped(self):
        windows = segment_record(record(1024 + 500), window_len=1024)
        assert len(windows) == 1

    def test_windows_are_contiguous_copies(self):
        rec = record(32)
        windows = segment_record(rec, window_len=16)
        np.testing.assert_array_equal(windows[1].samples, rec.samples[16:32])
        windows[1].samples[0] = 99.0
        assert rec.samples[16] != 99.0

    def test_condition_and_index_carried(self):
        windows = segment_record(record(64, condition="damaged"), window_len=16)
        assert all(w.condition == "damaged" for w in windows)
        assert [w.source_index for w in windows] == [0, 1, 2, 3]


class TestNormalization:
    def test_range_maps_to_unit_interval(self):
        w = Window(samples=np.array([2.0, 4.0, 6.0]), condition="damaged")
        (out,) = normalize_windows([w])
        np.testing.assert_allclose(out.samples, [-1.0, 0.0, 1.0])
        assert out.normalized

    def test_extremes_always_hit_rails(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            w = Window(samples=rng.normal(5.0, 3.0, size=50), condition="undamaged")
            (out,) = normalize_windows([w])
            assert out.samples.min() == -1.0
            assert out.samples.max() == 1.0

    def test_synthetic_passthrough(self):
        w = Window(samples=np.array([0.1, 0.2]), condition="damaged",
                   provenance="synthetic", normalized=True)
        (out,) = normalize_windows([w])
        assert out is w

    def test_constant_window_flagged_degenerate(self):
        w = Window(samples=np.full(8, 3.0), condition="damaged")
        (out,) = normalize_windows([w])
        np.testing.assert_array_equal(out.samples, 0.0)
        assert out.degenerate

    def test_label_follows_condition(self):
        assert Window(samples=np.zeros(2), condition="damaged").label == 1
        assert Window(samples=np.zeros(2), condition="undamaged").label == 0


class TestScenarios:
    def test_default_schedule(self):
        specs = default_scenarios()
        assert [s.train_damaged_synth for s in specs] == [0, 50, 40, 30, 20, 10]
        assert [s.train_damaged_real for s in specs] == [60, 10, 20, 30, 40, 50]
        assert all(s.train_undamaged_real == 60 for s in specs)
        assert all(s.test_undamaged_real == s.test_damaged_real == 15 for s in specs)

    def test_balance_invariant_enforced(self):
        with pytest.raises(ValueError):
            ScenarioSpec(id=1, train_damaged_real=30, train_damaged_synth=10)

    def test_scenario_zero_is_all_real(self):
        with pytest.raises(ValueError):
            ScenarioSpec(id=0, train_damaged_real=50, train_damaged_synth=10)

    def test_shuffle_partition_sizes_and_determinism(self):
        pool = make_pool(20, "damaged")
        a, b = shuffle_partition(pool, seed=3, counts=[5, 15])
        a2, b2 = shuffle_partition(pool, seed=3, counts=[5, 15])
        assert len(a) == 5 and len(b) == 15
        assert [w.source_index for w in a] == [w.source_index for w in a2]
        ids = sorted(w.source_index for w in a + b)
        assert ids == list(range(20))

    def test_shuffle_partition_over_request(self):
        with pytest.raises(InsufficientDataError):
            shuffle_partition(make_pool(4, "damaged"), seed=0, counts=[3, 3])

    def test_assemble_counts(self):
        undamaged = make_pool(80, "undamaged")
        damaged = make_pool(80, "damaged")
        synth = make_pool(60, "damaged", provenance="synthetic")
        spec = default_scenarios()[2]
        train, test = assemble_scenario(undamaged, damaged, synth, spec, seed=5)
        assert len(train) == 120 and len(test) == 30
        assert sum(w.provenance == "synthetic" for w in train) == 40
        assert sum(w.label for w in test) == 15

    def test_test_set_identical_across_scenarios(self):
        undamaged = make_pool(80, "undamaged")
        damaged = make_pool(80, "damaged")
        synth = make_pool(60, "damaged", provenance="synthetic")
        tests = []
        for spec in default_scenarios():
            _, test = assemble_scenario(undamaged, damaged, synth, spec, seed=5)
            tests.append([(w.condition, w.source_index) for w in test])
        assert all(t == tests[0] for t in tests[1:])

    def test_missing_synthetic_pool_raises(self):
        undamaged = make_pool(80, "undamaged")
        damaged = make_pool(80, "damaged")
        with pytest.raises(MissingSyntheticError):
            assemble_scenario(undamaged, damaged, [], default_scenarios()[1], seed=5)


class TestSurrogate:
    def test_deterministic(self):
        p = SurrogateParams(duration_s=0.5, seed=42)
        a = generate_surrogate_record(p)
        b = generate_surrogate_record(p)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_sample_count_and_metadata(self):
        rec = generate_surrogate_record(SurrogateParams(duration_s=2.0),
                                        condition="undamaged")
        assert len(rec.samples) == 2048
        assert rec.condition == "undamaged"
        assert rec.provenance == "surrogate"

    def test_spectral_peak_near_natural_frequency(self):
        # periodogram oracle: the resonance dominates the spectrum
        p = SurrogateParams(natural_freq_hz=120.0, duration_s=8.0, seed=3)
        rec = generate_surrogate_record(p, condition="undamaged")
        spec = np.abs(np.fft.rfft(rec.samples)) ** 2
        freqs = np.fft.rfftfreq(len(rec.samples), 1.0 / p.rate)
        peak = freqs[np.argmax(spec[1:]) + 1]
        assert abs(peak - 120.0) < 3.0

    def test_damage_shifts_peak_down(self):
        p = SurrogateParams(natural_freq_hz=120.0, damage_freq_factor=0.7,
                            duration_s=8.0, seed=3)
        rec = generate_surrogate_record(p, condition="damaged")
        spec = np.abs(np.fft.rfft(rec.samples)) ** 2
        freqs = np.fft.rfftfreq(len(rec.samples), 1.0 / p.rate)
        peak = freqs[np.argmax(spec[1:]) + 1]
        assert abs(peak - 84.0) < 3.0

    def test_response_stays_finite(self):
        for nf in (30.0, 120.0, 400.0, 500.0):
            p = SurrogateParams(natural_freq_hz=nf, duration_s=1.0)
            rec = generate_surrogate_record(p)
            assert np.all(np.isfinite(rec.samples))

    def test_nyquist_guard(self):
        with pytest.raises(AliasingRiskError):
            SurrogateParams(natural_freq_hz=512.0, rate=1024.0)

    def test_damping_ratio_bounds(self):
        with pytest.raises(ValueError):
            SurrogateParams(damping_ratio=0.0)


class TestCsvRoundTrips:
    def test_record_roundtrip_bitwise(self, tmp_path):
        rec = generate_surrogate_record(SurrogateParams(duration_s=0.25, seed=7))
        path = tmp_path / "rec.csv"
        save_record(path, rec)
        back = load_record(path, rate=rec.rate, condition=rec.condition,
                           provenance="surrogate")
        np.testing.assert_array_equal(back.samples, rec.samples)

    def test_record_parse_error_cites_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,accel\n0.0,1.5\n0.001,oops\n")
        with pytest.raises(RecordParseError) as exc:
            load_record(path, rate=1024.0, condition="damaged")
        assert exc.value.line_no == 3

    def test_record_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,value\n0.0,1.5\n")
        with pytest.raises(RecordParseError):
            load_record(path, rate=1024.0, condition="damaged")

    def test_window_roundtrip_bitwise(self, tmp_path):
        pool = make_pool(5, "damaged", provenance="synthetic")
        path = tmp_path / "wins.csv"
        save_windows(path, pool)
        back = load_windows(path)
        assert len(back) == 5
        for a, b in zip(pool, back):
            np.testing.assert_array_equal(a.samples, b.samples)
            assert b.condition == "damaged"
            assert b.provenance == "synthetic"

    def test_empty_window_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("condition,provenance,s0\n")
        with pytest.raises(RecordParseError):
            load_windows(path)
