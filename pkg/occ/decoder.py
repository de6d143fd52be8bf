"""
Thresholding decoder for rolling-shutter captures.

Pipeline: brightest 5% of the frame -> grow until one contour remains ->
bounding rectangle -> per-column mean -> Otsu binarization -> run lengths ->
per-level slot calibration -> half-slots -> header sync -> differential
Manchester decode. Nothing here depends on how the image was produced.
"""

from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import ndimage

from .coding import HEADER, ON, HalfSlots, decode_diff_manchester, find_headers
from .imaging import round_half_up
from .models import DecodeReport, Payload

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class DecodeError(ValueError):
    """Raised when an image cannot be taken through a decoding stage."""


class RegionOfInterest(BaseModel):
    """Axis-aligned rectangle in pixels."""

    model_config = ConfigDict(frozen=True)

    left: int = Field(ge=0)
    top: int = Field(ge=0)
    width: int = Field(ge=1)
    height: int = Field(ge=1)

    @property
    def area(self) -> int:
        return self.width * self.height


class RunLength(NamedTuple):
    level: int
    length: int


def bright_region_mask(img: np.ndarray, fraction: float = 0.05) -> np.ndarray:
    """
    Mark the brightest pixels covering at least `fraction` of the frame.

    The threshold is the highest intensity whose at-or-above count still
    reaches the target. It is never the darkest intensity of a non-constant
    image, so a small transmitter does not pull in the whole dark floor.
    """
    if not 0.0 < fraction < 1.0:
        raise DecodeError(f"bright fraction must be in (0, 1), got {fraction}")
    img = np.asarray(img, dtype=np.uint8)
    hist = np.bincount(img.ravel(), minlength=256)
    at_or_above = hist[::-1].cumsum()[::-1]
    need = np.ceil(fraction * img.size - 1e-9)
    threshold = int(np.nonzero(at_or_above >= need)[0].max())

    present = np.nonzero(hist)[0]
    if threshold <= present[0] and len(present) > 1:
        threshold = int(present[1])
    return img >= threshold


def _grow(mask: np.ndarray) -> Tuple[np.ndarray, int]:
    iterations = 0
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    while count > 1:
        mask = ndimage.binary_dilation(mask, structure=_EIGHT_CONNECTED)
        iterations += 1
        labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    return labels == 1, iterations


def grow_to_single_contour(mask: np.ndarray) -> np.ndarray:
    """
    Dilate by one pixel (3x3) until the mask is a single 8-connected component.

    Works inside a padded bounding box: k dilations cannot reach further than
    k pixels, so the result equals growing on the full frame whenever the
    iteration count stays within the padding.
    """
    mask = np.asarray(mask, dtype=bool)
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    if rows.size == 0:
        raise DecodeError("no bright region")
    height, width = mask.shape

    pad = 16
    while True:
        top, bottom = max(rows[0] - pad, 0), min(rows[-1] + pad + 1, height)
        left, right = max(cols[0] - pad, 0), min(cols[-1] + pad + 1, width)
        component, iterations = _grow(mask[top:bottom, left:right])
        whole = top == 0 and left == 0 and bottom == height and right == width
        if iterations <= pad or whole:
            out = np.zeros_like(mask)
            out[top:bottom, left:right] = component
            return out
        pad *= 2


def extract_roi(img: np.ndarray, component: np.ndarray) -> Tuple[RegionOfInterest, np.ndarray]:
    """Tight bounding rectangle of the component and the original pixels inside it."""
    rows = np.nonzero(component.any(axis=1))[0]
    cols = np.nonzero(component.any(axis=0))[0]
    if rows.size == 0:
        raise DecodeError("no bright region")
    roi = RegionOfInterest(left=int(cols[0]), top=int(rows[0]),
                           width=int(cols[-1] - cols[0] + 1), height=int(rows[-1] - rows[0] + 1))
    sub = np.asarray(img)[roi.top:roi.top + roi.height, roi.left:roi.left + roi.width].copy()
    return roi, sub


def column_signal(sub: np.ndarray) -> np.ndarray:
    """Mean intensity of each readout line (image column) in the ROI."""
    sub = np.asarray(sub, dtype=float)
    if sub.size == 0:
        raise DecodeError("empty region of interest")
    return sub.mean(axis=0)


def _is_integral(arr: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)) and np.abs(arr).max() < 2 ** 52)


def otsu_threshold(values: Sequence[float], counts: Optional[Sequence[float]] = None) -> float:
    """
    Otsu's threshold: the cut maximizing between-class variance.

    Args:
        values: Samples, or histogram levels when `counts` is given
        counts: Optional weight per value

    Returns:
        The midpoint between the highest level of the lower class and the
        lowest level of the upper class; samples >= threshold are class 1.
        Ties go to the lowest threshold.
    """
    values = np.asarray(values, dtype=float).ravel()
    weights = np.ones_like(values) if counts is None else np.asarray(counts, dtype=float).ravel()
    if weights.shape != values.shape:
        raise DecodeError("histogram levels and counts differ in length")
    keep = weights > 0
    levels, inverse = np.unique(values[keep], return_inverse=True)
    if levels.size < 2:
        raise DecodeError("degenerate histogram")
    w = np.bincount(inverse, weights=weights[keep])

    if _is_integral(levels) and _is_integral(w):
        # exact arithmetic so equal scores tie exactly
        lv = [int(x) for x in levels]
        wt = [int(x) for x in w]
        n_total = sum(wt)
        s_total = sum(a * b for a, b in zip(lv, wt))
        n0 = s0 = 0
        best, best_j = None, 1
        for j in range(1, len(lv)):
            n0 += wt[j - 1]
            s0 += wt[j - 1] * lv[j - 1]
            score = Fraction((n_total * s0 - n0 * s_total) ** 2, n0 * (n_total - n0))
            if best is None or score > best:
                best, best_j = score, j
        return float((levels[best_j - 1] + levels[best_j]) / 2)

    n0 = np.cumsum(w)[:-1]
    s0 = np.cumsum(w * levels)[:-1]
    n_total, s_total = w.sum(), (w * levels).sum()
    score = (n_total * s0 - n0 * s_total) ** 2 / (n0 * (n_total - n0))
    j = int(np.argmax(score)) + 1
    return float((levels[j - 1] + levels[j]) / 2)


def binarize_and_runs(signal: Sequence[float], invert: bool = False) -> List[RunLength]:
    """Otsu-binarize the signal and collapse it into alternating runs."""
    signal = np.asarray(signal, dtype=float)
    if signal.size < 2:
        raise DecodeError("signal too short to binarize")
    bits = (signal >= otsu_threshold(signal)).astype(int)
    if invert:
        bits = 1 - bits
    edges = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [bits.size])))
    return [RunLength(int(bits[s]), int(n)) for s, n in zip(starts, lengths)]


def _shortest_cluster(lengths: np.ndarray) -> float:
    """Mean of the tightest group of run lengths at the short end."""
    cluster = np.asarray(lengths, dtype=float)
    # each run end is quantized to a column, so one group spans up to two columns
    while cluster.max() >= 1.5 * cluster.min() and cluster.max() - cluster.min() > 2:
        cluster = cluster[cluster < otsu_threshold(cluster)]
    return float(cluster.mean())


def _header_span_width(runs: Sequence[RunLength], payload_bits: int) -> Optional[float]:
    """
    Slot width from the columns between the ends of consecutive header runs.

    Header runs are the longest ON runs; every header in one capture has the
    same slot count, and any payload ON run is at least a slot shorter.
    Returns None when fewer than two header runs are visible.
    """
    ends = np.cumsum([r.length for r in runs])
    on = [i for i, r in enumerate(runs) if r.level == ON]
    longest = max(runs[i].length for i in on)
    headers = [i for i in on if runs[i].length > 0.875 * longest]
    if len(headers) < 2:
        return None
    frame_slots = 2 * payload_bits + len(HEADER)
    return float(ends[headers[-1]] - ends[headers[0]]) / ((len(headers) - 1) * frame_slots)


def classify_slots(runs: Sequence[RunLength], payload_bits: Optional[int] = None) -> HalfSlots:
    """
    Convert run lengths to half-slots.

    The binarization threshold moves every edge the same way, so ON runs come
    out short by a bias and OFF runs long by the same bias. Otsu re-splits the
    lengths of each level down to its shortest group (means m_on, m_off). When
    those are single slots, the slot width is (m_on + m_off) / 2 and the bias
    (m_off - m_on) / 2.

    With `payload_bits`, the width comes from the span between header runs
    instead, which holds even when a payload has no single-slot runs; the
    shortest groups then only set the bias. Each run takes the nearest whole
    number of slots after removing the bias.

    Args:
        runs: Alternating runs, clipped boundary runs already removed
        payload_bits: Code length B_t, enables header-span calibration
    """
    on = np.array([r.length for r in runs if r.level == ON], dtype=float)
    off = np.array([r.length for r in runs if r.level != ON], dtype=float)
    if on.size == 0 or off.size == 0:
        raise DecodeError("cannot calibrate slot width")
    m_on, m_off = _shortest_cluster(on), _shortest_cluster(off)
    slot_width = (m_on + m_off) / 2
    bias = (m_off - m_on) / 2

    span_width = _header_span_width(runs, payload_bits) if payload_bits else None
    if span_width:
        # m_on + m_off spans 2 slots (two singles), 4 (two doubles) or 3
        multiple = int(round_half_up((m_on + m_off) / span_width))
        if multiple in (2, 3, 4):
            slot_width = span_width
            # any 0 bit leaves an OFF single, so an odd total means ON doubles
            bias = (m_off - m_on + (multiple % 2) * span_width) / 2

    slots: List[int] = []
    for run in runs:
        shift = bias if run.level == ON else -bias
        count = max(1, int(round_half_up((run.length + shift) / slot_width)))
        slots.extend([run.level] * count)
    return tuple(slots)


def extract_code(slots: Sequence[int], payload_bits: int = 10) -> Tuple[Optional[Payload], int]:
    """
    Decode the slots between the first two headers.

    Returns:
        (payload, headers found); payload is None when fewer than two headers
        are present, the gap is not exactly 2 * payload_bits slots, or a bit
        boundary lacks its transition.
    """
    headers = find_headers(slots)
    if len(headers) < 2:
        return None, len(headers)
    body = tuple(slots[headers[0] + len(HEADER):headers[1]])
    if len(body) != 2 * payload_bits:
        return None, len(headers)
    # the first bit leaves the ON header
    if any(start == before for start, before in zip(body[0::2], (ON,) + body[1:-1:2])):
        return None, len(headers)
    return decode_diff_manchester(body), len(headers)


def correct_bits(received: Optional[Payload], transmitted: Payload) -> int:
    """Positionwise agreement; an absent code scores zero."""
    if received is None:
        return 0
    return sum(int(a == b) for a, b in zip(received.bits, transmitted.bits))


def success_rate(reports: Sequence[DecodeReport], transmitted: Payload) -> float:
    """SR = correct bits / (images * code length) * 100."""
    if not reports:
        raise DecodeError("success rate needs at least one report")
    total = 0
    for report in reports:
        received = Payload.from_string(report.received_code) if report.received_code else None
        total += correct_bits(received, transmitted)
    return total / (len(reports) * len(transmitted)) * 100.0


class DecodeTrace(BaseModel):
    """Intermediate products of one decode, for plots and diagnostics."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    roi: Optional[RegionOfInterest] = None
    signal: Optional[np.ndarray] = None
    runs: List[RunLength] = []
    slots: Tuple[int, ...] = ()


class RollingShutterDecoder:
    """Decodes single images with fixed settings."""

    def __init__(self, payload_bits: int = 10, bright_fraction: float = 0.05, invert: bool = False):
        """
        Initialize the decoder.

        Args:
            payload_bits: Code length B_t
            bright_fraction: Share of the frame taken as the brightest region
            invert: Flip binarized polarity (for captures of inverted polarity)
        """
        self.payload_bits = payload_bits
        self.bright_fraction = bright_fraction
        self.invert = invert

    def decode_detailed(self, img: np.ndarray) -> Tuple[Optional[Payload], int, DecodeTrace]:
        trace = DecodeTrace()
        mask = bright_region_mask(img, self.bright_fraction)
        component = grow_to_single_contour(mask)
        trace.roi, sub = extract_roi(img, component)
        trace.signal = column_signal(sub)
        trace.runs = binarize_and_runs(trace.signal, invert=self.invert)

        # the outermost runs are clipped by the ROI
        interior = trace.runs[1:-1]
        if len(interior) < 2:
            return None, 0, trace
        trace.slots = classify_slots(interior, self.payload_bits)
        code, headers = extract_code(trace.slots, self.payload_bits)
        return code, headers, trace

    def decode(self, img: np.ndarray, expected: Optional[Payload] = None,
               file: Optional[str] = None) -> DecodeReport:
        """Decode one image into a report; failures yield an absent code."""
        try:
            code, headers, _ = self.decode_detailed(img)
        except DecodeError as e:
            return DecodeReport(file=file, error=str(e))
        return DecodeReport(
            file=file,
            received_code=str(code) if code is not None else None,
            headers_found=headers,
            correct_bits=correct_bits(code, expected) if expected is not None else 0,
        )
