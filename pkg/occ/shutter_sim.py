"""
Rolling-shutter column traces.

Column i integrates light over [i * t_r, i * t_r + t). Its value is the
exposure-weighted average of PV_max and PV_min using the exact ON time in that
window, so the model holds for any ratio of exposure to switching period.
The band model baseline (complete / transition bands) is only defined while
the exposure does not exceed the switching period.
"""

from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .coding import HalfSlots
from .models import CameraModel

ArrayLike = Union[float, np.ndarray]


class ShutterError(ValueError):
    """Raised for invalid exposure windows or baseline inputs."""


class SignalTimeline(BaseModel):
    """Cyclic piecewise-constant LED waveform as seen from camera time zero."""

    model_config = ConfigDict(frozen=True)

    frame: Tuple[int, ...] = Field(min_length=1)
    half_slot_duration: float = Field(gt=0)
    phase: float = 0.0
    slots_per_period: int = Field(default=2, ge=1, le=2)

    @field_validator("frame")
    @classmethod
    def _levels(cls, frame):
        if any(level not in (0, 1) for level in frame):
            raise ValueError("timeline levels must be 0 or 1")
        return frame

    @model_validator(mode="after")
    def _phase_in_frame(self) -> "SignalTimeline":
        if not 0.0 <= self.phase < self.frame_duration:
            raise ValueError("phase must lie within one frame duration")
        return self

    @classmethod
    def from_frequency(cls, frame: HalfSlots, frequency: float, phase: float = 0.0,
                       slots_per_period: int = 2) -> "SignalTimeline":
        return cls(frame=tuple(frame), half_slot_duration=1.0 / (slots_per_period * frequency),
                   phase=phase, slots_per_period=slots_per_period)

    @property
    def frame_duration(self) -> float:
        return len(self.frame) * self.half_slot_duration

    @property
    def switching_period(self) -> float:
        """t_LED."""
        return self.slots_per_period * self.half_slot_duration

    def level(self, time: float) -> int:
        """Level at camera time `time` (>= 0)."""
        offset = (self.phase + time) % self.frame_duration
        index = min(int(offset // self.half_slot_duration), len(self.frame) - 1)
        return self.frame[index]

    def cumulative_on_time(self, time: ArrayLike) -> ArrayLike:
        """Total ON time in [-phase, time) measured from the start of the frame cycle."""
        levels = np.asarray(self.frame, dtype=float)
        hs = self.half_slot_duration
        prefix = np.concatenate(([0.0], np.cumsum(levels) * hs))
        tau = np.asarray(time, dtype=float) + self.phase
        cycles = np.floor(tau / self.frame_duration)
        rest = tau - cycles * self.frame_duration
        index = np.clip(np.floor(rest / hs).astype(int), 0, len(levels) - 1)
        partial = np.clip(rest - index * hs, 0.0, hs)
        return cycles * prefix[-1] + prefix[index] + levels[index] * partial


class ColumnTrace(BaseModel):
    """Per-column pixel values along the readout axis."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])


def on_time_in_window(timeline: SignalTimeline, start: ArrayLike, duration: float) -> ArrayLike:
    """ON time within [start, start + duration), integrated exactly per half-slot."""
    if not duration > 0:
        raise ShutterError(f"exposure window must be positive, got {duration}")
    start = np.asarray(start, dtype=float)
    on = timeline.cumulative_on_time(start + duration) - timeline.cumulative_on_time(start)
    on = np.clip(on, 0.0, duration)
    return float(on) if on.ndim == 0 else on


def simulate_column_trace(cam: CameraModel, timeline: SignalTimeline,
                          pv_max: float, pv_min: float) -> ColumnTrace:
    """Weighted average of PV_max and PV_min by ON / OFF time in each column's exposure."""
    t = cam.exposure_time
    starts = np.arange(cam.columns, dtype=float) * cam.readout_time
    t_on = np.asarray(on_time_in_window(timeline, starts, t), dtype=float).reshape(cam.columns)
    t_off = t - t_on
    values = (pv_max * t_on + pv_min * t_off) / t
    lo, hi = min(pv_min, pv_max), max(pv_min, pv_max)
    return ColumnTrace(values=np.clip(values, lo, hi))


def sota_band_pattern(cam: CameraModel, t_led: float) -> Tuple[float, float]:
    """
    Complete and transition band lengths in columns.

    Returns:
        (h_c, h_t) with h_c = (t_LED - t) / t_r and h_t = t / t_r
    """
    if t_led < cam.exposure_time:
        raise ShutterError("SOTA undefined beyond exposure limit")
    h_t = cam.exposure_time / cam.readout_time
    h_c = t_led / cam.readout_time - h_t
    return h_c, h_t


def sota_column_trace(cam: CameraModel, timeline: SignalTimeline,
                      pv_max: float, pv_min: float) -> ColumnTrace:
    """
    Band model trace: every timeline slot is one LED symbol lasting a
    half-slot, drawn as h_t columns ramping from the previous level followed
    by h_c columns flat at the slot's level. A ramp starts at the first
    column whose exposure window reaches the symbol.

    Raises:
        ShutterError: when the exposure outlasts a half-slot
    """
    t_led = timeline.half_slot_duration
    h_c, h_t = sota_band_pattern(cam, t_led)
    levels = np.where(np.asarray(timeline.frame) == 1, pv_max, pv_min)
    n = len(levels)

    # symbol clock at the end of each exposure window, counted in slots
    tau = (timeline.phase + cam.exposure_time) / t_led \
        + np.arange(cam.columns, dtype=float) * cam.readout_time / t_led
    symbol = np.floor(tau).astype(int)
    into = (tau - symbol) * (h_c + h_t)
    current = levels[symbol % n]
    previous = levels[(symbol - 1) % n]
    ramp = previous + (current - previous) * np.clip(into / h_t, 0.0, 1.0)
    return ColumnTrace(values=np.where(into < h_t, ramp, current))
