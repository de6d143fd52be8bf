"""
Test script for the thresholding decoder
Bright region, contour growing, ROI, Otsu, run lengths and success rate.
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from harness.config import load_sweep_config
from harness.pipeline import TrialPipeline
from occ.coding import build_frame, runs_of
from occ.decoder import (DecodeError, RollingShutterDecoder, RunLength, _grow, binarize_and_runs,
                         bright_region_mask, classify_slots, column_signal, extract_code, extract_roi,
                         grow_to_single_contour, otsu_threshold, success_rate)
from occ.imaging import round_half_up
from occ.models import DecodeReport, Payload

PAYLOAD = Payload.from_string("1011010010")


def _render(distance, frequency=10e3, exposure=68e-6, phase=0.0):
    state = TrialPipeline().run(load_sweep_config(), frequency, distance, exposure, phase=phase, decode=False)
    assert state.get("error") is None
    return state


def _otsu_oracle(levels, counts):
    """Exhaustive w0 * w1 * (mu0 - mu1)^2 over every cut; lowest cut on ties, returned as the midpoint."""
    pairs = sorted((int(level), int(count)) for level, count in zip(levels, counts) if count > 0)
    n = sum(count for _, count in pairs)
    best, best_cut = None, None
    for k in range(1, len(pairs)):
        low, high = pairs[:k], pairs[k:]
        n0 = sum(count for _, count in low)
        n1 = n - n0
        mu0 = Fraction(sum(level * count for level, count in low), n0)
        mu1 = Fraction(sum(level * count for level, count in high), n1)
        score = Fraction(n0, n) * Fraction(n1, n) * (mu0 - mu1) ** 2
        if best is None or score > best:
            best, best_cut = score, (pairs[k - 1][0] + pairs[k][0]) / 2
    return best_cut


def _interior(slots):
    """Slot stream with its first and last runs removed, as the decoder sees it."""
    return tuple(level for level, _, length in runs_of(slots)[1:-1] for _ in range(length))


def _drawn_runs(slots, scale, bias, rng):
    """Interior runs at `scale` columns per slot; ON runs lose `bias` columns, OFF runs gain them."""
    runs = []
    for level, _, length in runs_of(slots)[1:-1]:
        shift = -bias if level == 1 else bias
        runs.append(RunLength(level, length * scale + shift + int(rng.integers(-1, 2))))
    return runs


def test_bright_mask_constant_image():
    img = np.full((10, 10), 40, dtype=np.uint8)
    assert bright_region_mask(img).all()


def test_bright_mask_exact_share():
    img = np.zeros((100, 100), dtype=np.uint8)
    img[:5, :] = 255
    mask = bright_region_mask(img)
    assert int(mask.sum()) == 500
    assert mask[:5, :].all()

    ramp = np.repeat(np.arange(100, dtype=np.uint8), 100).reshape(100, 100)
    assert int(bright_region_mask(ramp).sum()) == 500


def test_bright_mask_excludes_floor():
    img = np.zeros((100, 100), dtype=np.uint8)
    img[40:50, 40:50] = 200
    mask = bright_region_mask(img)
    assert int(mask.sum()) == 100


def test_bright_mask_rejects_fraction():
    with pytest.raises(DecodeError):
        bright_region_mask(np.zeros((4, 4), dtype=np.uint8), fraction=0.0)


def test_bright_region_inside_panel():
    state = _render(1.2)
    bright = bright_region_mask(state["image"])
    assert bright.any()
    assert np.all(state["mask"][bright])


def test_grow_two_blobs():
    mask = np.zeros((20, 20), dtype=bool)
    mask[5:10, 0:5] = True
    mask[5:10, 7:11] = True
    component, iterations = _grow(mask)
    assert iterations <= 1
    grown = grow_to_single_contour(mask)
    assert grown[5:10, 0:11].all()
    assert not grown[0, 19]


def test_grow_full_and_empty():
    full = np.ones((6, 9), dtype=bool)
    assert grow_to_single_contour(full).all()
    with pytest.raises(DecodeError, match="no bright region"):
        grow_to_single_contour(np.zeros((6, 9), dtype=bool))


def test_grow_far_apart_blobs():
    mask = np.zeros((40, 200), dtype=bool)
    mask[20, 2] = True
    mask[20, 190] = True
    grown = grow_to_single_contour(mask)
    assert grown[20, 2] and grown[20, 190]


def test_roi_extent():
    img = np.arange(48, dtype=np.uint8).reshape(6, 8)
    single = np.zeros((6, 8), dtype=bool)
    single[2, 3] = True
    roi, sub = extract_roi(img, single)
    assert (roi.left, roi.top, roi.width, roi.height, roi.area) == (3, 2, 1, 1, 1)
    assert sub.tolist() == [[19]]

    blob = np.zeros((6, 8), dtype=bool)
    blob[1:4, 2:7] = True
    roi, sub = extract_roi(img, blob)
    assert (roi.left, roi.top, roi.width, roi.height) == (2, 1, 5, 3)
    assert sub.shape == (3, 5)


def test_roi_matches_panel_at_120cm():
    state = _render(1.2)
    decoder = RollingShutterDecoder()
    _, _, trace = decoder.decode_detailed(state["image"])
    assert abs(trace.roi.area - 62500) <= 6250


def test_column_signal():
    assert column_signal(np.array([[1, 3], [3, 5]], dtype=np.uint8)).tolist() == [2.0, 4.0]
    with pytest.raises(DecodeError):
        column_signal(np.zeros((0, 3)))


def test_otsu_examples():
    assert otsu_threshold([0, 0, 255, 255]) == 127.5
    assert otsu_threshold([0, 255]) == 127.5
    assert otsu_threshold([0.5, 0.5, 2.5, 2.5]) == 1.5
    assert otsu_threshold([0, 255], counts=[3, 1]) == 127.5
    # both cuts score equally; the lower one wins
    assert otsu_threshold([0, 1, 2]) == 0.5
    with pytest.raises(DecodeError, match="degenerate histogram"):
        otsu_threshold([7, 7, 7])


def test_otsu_gaussian_mixture():
    rng = np.random.default_rng(12)
    for dark, bright in ((50, 200), (60, 190)):
        samples = np.concatenate([rng.normal(dark, 10, 1000), rng.normal(bright, 10, 1000)])
        samples = np.clip(np.round(samples), 0, 255)
        threshold = otsu_threshold(samples)
        assert 100 <= threshold <= 150, threshold
        assert not np.any(samples == threshold)


def test_otsu_matches_exact_oracle():
    rng = np.random.default_rng(21)
    for _ in range(500):
        levels = np.sort(rng.choice(256, size=int(rng.integers(2, 40)), replace=False))
        counts = rng.integers(1, 50, size=levels.size)
        expected = _otsu_oracle(levels, counts)
        assert otsu_threshold(levels, counts=counts) == expected
        assert otsu_threshold(np.repeat(levels, counts)) == expected


def test_runs_example():
    assert binarize_and_runs([0, 0, 255, 255, 0]) == [RunLength(0, 2), RunLength(1, 2), RunLength(0, 1)]
    runs = binarize_and_runs([10, 10, 200, 200, 200, 10])
    assert runs == [RunLength(0, 2), RunLength(1, 3), RunLength(0, 1)]
    inverted = binarize_and_runs([10, 10, 200, 200, 200, 10], invert=True)
    assert inverted == [RunLength(1, 2), RunLength(0, 3), RunLength(1, 1)]
    with pytest.raises(DecodeError):
        binarize_and_runs([200.0] * 8)

    rng = np.random.default_rng(9)
    signal = rng.uniform(0, 255, 400)
    runs = binarize_and_runs(signal)
    assert sum(r.length for r in runs) == signal.size
    assert all(a.level != b.level for a, b in zip(runs, runs[1:]))


def test_classify_example():
    runs = [RunLength(1, 6), RunLength(0, 6), RunLength(1, 12), RunLength(0, 6), RunLength(1, 18), RunLength(0, 6)]
    assert classify_slots(runs) == (1, 0, 1, 1, 0, 1, 1, 1, 0)
    runs = [RunLength(1, 6), RunLength(0, 6), RunLength(1, 13), RunLength(0, 6)]
    assert classify_slots(runs) == (1, 0, 1, 1, 0)
    with pytest.raises(DecodeError, match="cannot calibrate slot width"):
        classify_slots([RunLength(1, 5)])
    with pytest.raises(DecodeError, match="cannot calibrate slot width"):
        classify_slots([])


def test_classify_noisy_runs():
    rng = np.random.default_rng(4)
    for text in ("1011010010", "1100000000", "0000000000"):
        slots = build_frame(Payload.from_string(text)) * 3
        for bias in (0, 5, -5):
            runs = _drawn_runs(slots, 16, bias, rng)
            assert classify_slots(runs) == _interior(slots), (text, bias)
            assert classify_slots(runs, payload_bits=10) == _interior(slots), (text, bias)


def test_classify_threshold_bias():
    # ON single 7, OFF single 24, ON double 23, OFF double 39 at 15.625 columns per slot
    rng = np.random.default_rng(5)
    slots = build_frame(PAYLOAD) * 3
    runs = [RunLength(r.level, int(round_half_up(r.length / 16 * 15.625))) for r in _drawn_runs(slots, 16, 8, rng)]
    assert classify_slots(runs, payload_bits=10) == _interior(slots)
    code, _ = extract_code(classify_slots(runs, payload_bits=10))
    assert str(code) == "1011010010"


def test_classify_without_single_slot_runs():
    rng = np.random.default_rng(6)
    for bias in (0, 5, -5):
        slots = build_frame(Payload.from_string("1111111111")) * 3
        runs = _drawn_runs(slots, 16, bias, rng)
        assert classify_slots(runs, payload_bits=10) == _interior(slots), bias

        # ON has only doubles and headers, OFF still has singles
        slots = build_frame(Payload.from_string("110")) * 3
        runs = _drawn_runs(slots, 16, bias, rng)
        assert classify_slots(runs, payload_bits=3) == _interior(slots), bias


def test_decoder_on_clean_signal_image():
    # ideal capture: 6 columns per half-slot, three frames, padded by dark floor
    slots = build_frame(PAYLOAD) * 3
    line = np.repeat(np.where(np.array(slots) == 1, 220, 60), 6).astype(np.uint8)
    img = np.zeros((200, line.size + 40), dtype=np.uint8)
    img[50:150, 20:20 + line.size] = line
    report = RollingShutterDecoder(bright_fraction=0.05).decode(img, expected=PAYLOAD, file="ideal")
    assert report.received_code == "1011010010"
    assert report.correct_bits == 10
    assert report.headers_found >= 2

    flipped = RollingShutterDecoder(invert=True).decode(img, expected=PAYLOAD)
    assert flipped.received_code != "1011010010"


def test_decoder_reports_failure():
    report = RollingShutterDecoder().decode(np.zeros((20, 20), dtype=np.uint8), expected=PAYLOAD)
    assert report.received_code is None
    assert report.correct_bits == 0
    assert report.error


def test_success_rate():
    good = DecodeReport(received_code="1011010010", correct_bits=10)
    absent = DecodeReport(error="no bright region")
    half = DecodeReport(received_code="1011001101", correct_bits=5)
    assert success_rate([good] * 5, PAYLOAD) == 100.0
    assert success_rate([absent] * 3, PAYLOAD) == 0.0
    assert success_rate([good] * 4 + [absent], PAYLOAD) == 80.0
    assert success_rate([good, half], PAYLOAD) == 75.0
    with pytest.raises(DecodeError):
        success_rate([], PAYLOAD)


def main():
    print("Testing decoder")
    print("=" * 50)
    tests = [
        test_bright_mask_constant_image,
        test_bright_mask_exact_share,
        test_bright_mask_excludes_floor,
        test_bright_mask_rejects_fraction,
        test_bright_region_inside_panel,
        test_grow_two_blobs,
        test_grow_full_and_empty,
        test_grow_far_apart_blobs,
        test_roi_extent,
        test_roi_matches_panel_at_120cm,
        test_column_signal,
        test_otsu_examples,
        test_otsu_gaussian_mixture,
        test_otsu_matches_exact_oracle,
        test_runs_example,
        test_classify_example,
        test_classify_noisy_runs,
        test_classify_threshold_bias,
        test_classify_without_single_slot_runs,
        test_decoder_on_clean_signal_image,
        test_decoder_reports_failure,
        test_success_rate,
    ]
    for test in tests:
        test()
        print(f"  [OK] {test.__name__}")
    print("\n" + "=" * 50)
    print("[OK] Decoder tests completed!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
