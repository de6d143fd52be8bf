"""
Test script for the rolling-shutter model
Exact ON-time integration against a numeric oracle, and the band model baseline.
"""

import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from harness.config import load_sweep_config
from occ.coding import build_frame
from occ.models import CameraModel, Environment, Payload, TransmitterModel
from occ.photometry import pixel_value_off, pixel_value_on
from occ.shutter_sim import (ShutterError, SignalTimeline, on_time_in_window, simulate_column_trace,
                             sota_band_pattern, sota_column_trace)

US = 1e-6
PAYLOAD = Payload.from_string("1011010010")


def _camera(exposure_us=68.0, readout_us=8.0, columns=1080):
    return CameraModel(exposure_time=exposure_us * US, readout_time=readout_us * US, columns=columns)


def _oracle_levels(timeline, times):
    """Level at each sample time, computed without the cumulative ON-time table."""
    frame = np.asarray(timeline.frame)
    offsets = np.mod(timeline.phase + times, timeline.frame_duration)
    index = np.minimum((offsets // timeline.half_slot_duration).astype(int), len(frame) - 1)
    return frame[index]


def test_window_examples():
    timeline = SignalTimeline(frame=(1, 0, 1), half_slot_duration=50 * US)
    assert math.isclose(on_time_in_window(timeline, 25 * US, 100 * US), 50 * US, rel_tol=1e-9)
    assert math.isclose(on_time_in_window(timeline, 10 * US, 30 * US), 30 * US, rel_tol=1e-9)
    assert math.isclose(on_time_in_window(timeline, 0.0, 100 * US), 50 * US, rel_tol=1e-9)


def test_window_must_be_positive():
    timeline = SignalTimeline(frame=(1, 0), half_slot_duration=50 * US)
    with pytest.raises(ShutterError):
        on_time_in_window(timeline, 0.0, 0.0)
    with pytest.raises(ShutterError):
        on_time_in_window(timeline, 0.0, -1 * US)


def test_timeline_validation():
    with pytest.raises(ValueError):
        SignalTimeline(frame=(1, 2), half_slot_duration=50 * US)
    with pytest.raises(ValueError):
        SignalTimeline(frame=(1, 0), half_slot_duration=50 * US, phase=100 * US)
    timeline = SignalTimeline.from_frequency(build_frame(PAYLOAD), 10e3)
    assert math.isclose(timeline.half_slot_duration, 50 * US)
    assert math.isclose(timeline.switching_period, 100 * US)
    assert timeline.level(0.0) == 1
    assert timeline.level(160 * US) == 0


def test_state_change_axis():
    timeline = SignalTimeline.from_frequency(build_frame(PAYLOAD), 10e3, slots_per_period=1)
    assert math.isclose(timeline.half_slot_duration, 100 * US)
    assert math.isclose(timeline.switching_period, 100 * US)


def test_constant_on_is_flat_max():
    cam = _camera()
    timeline = SignalTimeline(frame=(1,), half_slot_duration=50 * US)
    trace = simulate_column_trace(cam, timeline, 85.9, 10.9)
    assert len(trace) == cam.columns
    assert np.allclose(trace.values, 85.9, rtol=0, atol=1e-9)


def test_half_on_gives_midpoint():
    cam = _camera(exposure_us=100.0)
    timeline = SignalTimeline(frame=(1, 0), half_slot_duration=50 * US)
    trace = simulate_column_trace(cam, timeline, 80.0, 20.0)
    # every window spans exactly one full period
    assert np.allclose(trace.values, 50.0, rtol=0, atol=1e-9)


def test_square_wave_matches_fine_oracle():
    cam = _camera()
    pv_max, pv_min = 85.9, 10.9
    timeline = SignalTimeline.from_frequency((1, 0), 10e3)
    trace = simulate_column_trace(cam, timeline, pv_max, pv_min)

    step = 0.1 * US
    offsets = (np.arange(680) + 0.5) * step
    starts = np.arange(cam.columns) * cam.readout_time
    samples = _oracle_levels(timeline, starts[:, np.newaxis] + offsets[np.newaxis, :])
    t_on = samples.sum(axis=1) * step
    expected = (pv_max * t_on + pv_min * (cam.exposure_time - t_on)) / cam.exposure_time
    assert np.max(np.abs(trace.values - expected)) < 0.01


def test_random_draws_match_fine_oracle():
    """1000 seeded draws of frequency, exposure, payload and phase."""
    rng = np.random.default_rng(7)
    env = Environment()
    worst = 0.0
    columns = 8
    for _ in range(1000):
        readout = 8 * US
        frequency = rng.uniform(1e3, 30e3)
        exposure = rng.uniform(readout, 300 * US)
        payload = Payload(bits=tuple(int(b) for b in rng.integers(0, 2, 10)))
        timeline = SignalTimeline.from_frequency(build_frame(payload), frequency)
        duration = timeline.frame_duration
        phase = min(rng.uniform(0, duration), float(np.nextafter(duration, 0)))
        timeline = timeline.model_copy(update={"phase": phase})

        cam = CameraModel(exposure_time=exposure, readout_time=readout, columns=columns)
        panel = TransmitterModel.rectangular(0.3, 0.3, frequency, payload)
        pv_max, pv_min = pixel_value_on(cam, panel, env), pixel_value_off(cam, env)
        trace = simulate_column_trace(cam, timeline, pv_max, pv_min)

        # midpoint samples on a global grid, cumulative sum, linear interpolation at window ends
        step = readout / 10000
        end = (columns - 1) * readout + exposure
        count = int(np.ceil(end / step)) + 1
        levels = _oracle_levels(timeline, (np.arange(count) + 0.5) * step)
        grid = np.arange(count + 1) * step
        cumulative = np.concatenate(([0.0], np.cumsum(levels) * step))
        starts = np.arange(columns) * readout
        t_on = np.interp(starts + exposure, grid, cumulative) - np.interp(starts, grid, cumulative)
        expected = (pv_max * t_on + pv_min * (exposure - t_on)) / exposure

        worst = max(worst, float(np.max(np.abs(trace.values - expected))))
    assert worst < 0.01, worst


def test_values_within_levels_on_default_grid():
    config = load_sweep_config()
    env = config.environment
    frame = build_frame(config.payload)
    for frequency, exposure in itertools.product(config.frequencies, config.exposures):
        cam = config.device.with_exposure(exposure)
        panel = config.transmitter.with_frequency(frequency)
        pv_max, pv_min = pixel_value_on(cam, panel, env), pixel_value_off(cam, env)
        for phase_fraction in (0.0, 0.37, 0.81):
            timeline = SignalTimeline.from_frequency(frame, frequency)
            timeline = timeline.model_copy(update={"phase": phase_fraction * timeline.frame_duration})
            values = simulate_column_trace(cam, timeline, pv_max, pv_min).values
            assert values.min() >= pv_min - 1e-9
            assert values.max() <= pv_max + 1e-9


def test_shift_by_one_readout_moves_trace_by_one_column():
    cam = _camera()
    frame = build_frame(PAYLOAD)
    timeline = SignalTimeline.from_frequency(frame, 10e3)
    shifted = timeline.model_copy(update={"phase": cam.readout_time})
    a = simulate_column_trace(cam, timeline, 85.9, 10.9).values
    b = simulate_column_trace(cam, shifted, 85.9, 10.9).values
    assert np.allclose(a[1:], b[:-1], rtol=0, atol=1e-9)


def test_band_pattern_examples():
    cam = _camera()
    h_c, h_t = sota_band_pattern(cam, 100 * US)
    assert math.isclose(h_c, 4.0, rel_tol=1e-12)
    assert math.isclose(h_t, 8.5, rel_tol=1e-12)

    h_c, h_t = sota_band_pattern(cam, cam.exposure_time)
    assert h_c == 0.0

    h_c, h_t = sota_band_pattern(cam, 2 * cam.exposure_time)
    assert math.isclose(h_c, h_t, rel_tol=1e-12)
    assert math.isclose(h_t, cam.exposure_time / cam.readout_time, rel_tol=1e-12)


def test_band_pattern_identity():
    rng = np.random.default_rng(11)
    for _ in range(500):
        readout = rng.uniform(5, 15) * US
        exposure = rng.uniform(readout, 300 * US)
        t_led = exposure * rng.uniform(1.0, 5.0)
        cam = CameraModel(exposure_time=exposure, readout_time=readout)
        h_c, h_t = sota_band_pattern(cam, t_led)
        assert math.isclose(h_c + h_t, t_led / readout, rel_tol=1e-12)
        assert h_c >= 0


def test_band_pattern_undefined_beyond_exposure():
    with pytest.raises(ShutterError, match="SOTA undefined beyond exposure limit"):
        sota_band_pattern(_camera(exposure_us=136.0), 100 * US)


def test_band_trace_constant_on():
    cam = _camera()
    timeline = SignalTimeline(frame=(1, 1, 1), half_slot_duration=500 * US)
    trace = sota_column_trace(cam, timeline, 85.9, 10.9)
    assert np.allclose(trace.values, 85.9)


def test_band_trace_plateau_and_ramp():
    # 10 kHz state changes at t = 68 us: 8.5 ramp columns then 4 flat columns per symbol
    cam = _camera()
    timeline = SignalTimeline.from_frequency((1, 0), 10e3, slots_per_period=1)
    values = sota_column_trace(cam, timeline, 100.0, 0.0).values
    symbol = 12.5
    for k in range(1, 40):
        start = k * symbol - 8.5
        flat = range(int(np.ceil(start + 8.5 + 1e-9)), int(np.ceil(start + symbol - 1e-9)))
        level = 100.0 if k % 2 == 0 else 0.0
        assert all(math.isclose(values[c], level, abs_tol=1e-9) for c in flat)
        ramp = range(int(np.ceil(start + 1e-9)), int(np.floor(start + 8.5 - 1e-9)) + 1)
        assert all(0.0 < values[c] < 100.0 for c in ramp)


def test_band_trace_follows_half_slots():
    cam = _camera()
    frame = build_frame(PAYLOAD)
    for frequency, slots_per_period in ((10e3, 1), (5e3, 2), (4e3, 2)):
        timeline = SignalTimeline.from_frequency(frame, frequency, phase=37 * US, slots_per_period=slots_per_period)
        sota = sota_column_trace(cam, timeline, 85.9, 10.9).values
        exact = simulate_column_trace(cam, timeline, 85.9, 10.9).values
        # a window never spans more than two symbols here, so both models agree
        assert np.allclose(sota, exact, atol=1e-6), (frequency, slots_per_period)

    timeline = SignalTimeline.from_frequency((1, 0), 5e3, slots_per_period=2)
    sota = sota_column_trace(cam, timeline, 100.0, 0.0).values
    exact = simulate_column_trace(cam, timeline, 100.0, 0.0).values
    period = 25
    assert np.allclose(sota[period:], sota[:-period], atol=1e-9)
    assert np.allclose(exact[period:], exact[:-period], atol=1e-9)
    assert not np.allclose(sota[period // 2:], sota[:-(period // 2)], atol=1.0)


def test_band_trace_undefined_for_short_half_slots():
    # 10 kHz full periods leave 50 us half-slots, shorter than the exposure
    timeline = SignalTimeline.from_frequency((1, 0), 10e3, slots_per_period=2)
    with pytest.raises(ShutterError, match="SOTA undefined beyond exposure limit"):
        sota_column_trace(_camera(), timeline, 100.0, 0.0)


def main():
    print("Testing rolling-shutter model")
    print("=" * 50)
    tests = [
        test_window_examples,
        test_window_must_be_positive,
        test_timeline_validation,
        test_state_change_axis,
        test_constant_on_is_flat_max,
        test_half_on_gives_midpoint,
        test_square_wave_matches_fine_oracle,
        test_random_draws_match_fine_oracle,
        test_values_within_levels_on_default_grid,
        test_shift_by_one_readout_moves_trace_by_one_column,
        test_band_pattern_examples,
        test_band_pattern_identity,
        test_band_pattern_undefined_beyond_exposure,
        test_band_trace_constant_on,
        test_band_trace_plateau_and_ramp,
        test_band_trace_follows_half_slots,
        test_band_trace_undefined_for_short_half_slots,
    ]
    for test in tests:
        test()
        print(f"  [OK] {test.__name__}")
    print("\n" + "=" * 50)
    print("[OK] Rolling-shutter tests completed!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
