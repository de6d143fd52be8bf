"""
Steady-state pixel values for a fully ON or fully OFF exposure.

PV = 118 * ((S * t) / (K * N^2) * (L_v + E_v * R / pi)) ** (1 / gamma), clamped to [0, 255].
Distance does not enter; it only changes the projected panel area.
"""

import math

from .models import CameraModel, Environment, TransmitterModel

PV_SCALE = 118.0
PV_CEILING = 255.0


class PhotometryError(ValueError):
    """Raised for non-physical photometric inputs."""


def _pixel_value(cam: CameraModel, env: Environment, source_luminance: float) -> float:
    for value in (cam.iso_speed, cam.exposure_time, cam.aperture, env.calibration_constant, env.gamma):
        if not value > 0:
            raise PhotometryError("invalid photometric parameter")
    if env.illuminance < 0 or not 0 <= env.reflectance <= 1 or source_luminance < 0:
        raise PhotometryError("invalid photometric parameter")

    exposure = (cam.iso_speed * cam.exposure_time) / (env.calibration_constant * cam.aperture ** 2)
    luminance = source_luminance + env.illuminance * env.reflectance / math.pi
    value = PV_SCALE * (exposure * luminance) ** (1.0 / env.gamma)
    return min(max(value, 0.0), PV_CEILING)


def pixel_value_on(cam: CameraModel, tx: TransmitterModel, env: Environment) -> float:
    """PV_max: the panel is lit for the whole exposure."""
    if not tx.luminance > 0:
        raise PhotometryError("invalid photometric parameter")
    return _pixel_value(cam, env, tx.luminance)


def pixel_value_off(cam: CameraModel, env: Environment) -> float:
    """PV_min: only reflected ambient light reaches the pixel."""
    return _pixel_value(cam, env, 0.0)
