"""
Domain models shared by the simulator, decoder and harness.
Receiver, transmitter, ambient and scene parameters, plus decode reports.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Payload(BaseModel):
    """Transmitted code as an ordered sequence of bits."""

    model_config = ConfigDict(frozen=True)

    bits: Tuple[int, ...] = Field(min_length=1)

    @field_validator("bits")
    @classmethod
    def _binary(cls, bits: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(b not in (0, 1) for b in bits):
            raise ValueError("payload bits must be 0 or 1")
        return bits

    @classmethod
    def from_string(cls, text: str) -> "Payload":
        """Parse a binary string such as "1011010010"."""
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"not a binary string: {text!r}")
        return cls(bits=tuple(int(c) for c in text))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def __len__(self) -> int:
        return len(self.bits)


class CameraModel(BaseModel):
    """Rolling-shutter receiver. Times are in seconds."""

    model_config = ConfigDict(frozen=True)

    iso_speed: float = Field(default=100.0, gt=0)
    exposure_time: float = Field(gt=0)
    aperture: float = Field(default=2.0, gt=0)
    readout_time: float = Field(gt=0)
    columns: int = Field(default=1080, ge=1)
    rows: int = Field(default=1920, ge=1)
    focal_length_px: float = Field(default=1000.0, gt=0)
    principal_point: Tuple[float, float] = (540.0, 960.0)

    @model_validator(mode="after")
    def _exposure_spans_readout(self) -> "CameraModel":
        if self.exposure_time < self.readout_time:
            raise ValueError("exposure time must be at least one readout step")
        return self

    def with_exposure(self, exposure_time: float) -> "CameraModel":
        return CameraModel.model_validate({**self.model_dump(), "exposure_time": exposure_time})


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


class TransmitterModel(BaseModel):
    """
    LED panel. Corners are world-space points in meters on the panel plane.

    slots_per_period is how many half-slots one period of `frequency` holds:
    2 when the frequency is a full ON+OFF cycle, 1 when it counts LED state
    changes per second.
    """

    model_config = ConfigDict(frozen=True)

    luminance: float = Field(default=3600.0, gt=0)
    corners: Tuple[Tuple[float, float, float], ...]
    frequency: float = Field(gt=0)
    payload: Payload
    slots_per_period: int = Field(default=2, ge=1, le=2)

    @field_validator("corners")
    @classmethod
    def _planar_simple_quad(cls, corners):
        if len(corners) != 4:
            raise ValueError("transmitter needs exactly 4 corners")
        pts = np.asarray(corners, dtype=float)
        normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        scale = max(float(np.abs(pts).max()), 1.0)
        if np.linalg.norm(normal) == 0 or abs(float(np.dot(normal, pts[3] - pts[0]))) > 1e-9 * scale ** 3:
            raise ValueError("transmitter corners must be coplanar")
        flat = pts[:, :2]
        if _segments_cross(flat[0], flat[1], flat[2], flat[3]) or \
                _segments_cross(flat[1], flat[2], flat[3], flat[0]):
            raise ValueError("transmitter corners must form a simple quadrilateral")
        return corners

    @classmethod
    def rectangular(cls, width_m: float, height_m: float, frequency: float, payload: Payload,
                    luminance: float = 3600.0, slots_per_period: int = 2) -> "TransmitterModel":
        """Axis-aligned panel centered on the origin."""
        hw, hh = width_m / 2.0, height_m / 2.0
        corners = ((-hw, -hh, 0.0), (hw, -hh, 0.0), (hw, hh, 0.0), (-hw, hh, 0.0))
        return cls(luminance=luminance, corners=corners, frequency=frequency, payload=payload,
                   slots_per_period=slots_per_period)

    @property
    def switching_period(self) -> float:
        return 1.0 / self.frequency

    @property
    def half_slot_duration(self) -> float:
        return 1.0 / (self.slots_per_period * self.frequency)

    def with_frequency(self, frequency: float) -> "TransmitterModel":
        return TransmitterModel.model_validate({**self.model_dump(), "frequency": frequency})


class Environment(BaseModel):
    """Ambient light and the pixel-value model constants."""

    model_config = ConfigDict(frozen=True)

    illuminance: float = Field(default=290.0, ge=0)
    reflectance: float = Field(default=0.4, ge=0, le=1)
    calibration_constant: float = Field(default=12.5, gt=0)
    gamma: float = Field(default=2.22, gt=0)


class ScenePose(BaseModel):
    """Camera above a floor-mounted panel, optical axis perpendicular to it."""

    model_config = ConfigDict(frozen=True)

    distance: float = Field(gt=0)
    lateral_offset: Tuple[float, float] = (0.01, 0.01)


class DecodeReport(BaseModel):
    """Outcome of decoding one image."""

    file: Optional[str] = None
    received_code: Optional[str] = None
    headers_found: int = 0
    correct_bits: int = 0
    error: Optional[str] = None

    @model_validator(mode="after")
    def _absent_means_zero(self) -> "DecodeReport":
        if self.received_code is None and self.correct_bits != 0:
            raise ValueError("an absent code cannot have correct bits")
        if self.correct_bits < 0:
            raise ValueError("correct_bits must be non-negative")
        return self
