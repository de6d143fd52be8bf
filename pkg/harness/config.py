"""
Run configuration.

Flat dotted key=value files (parsed with python-dotenv), layered as
device profile < config file < command-line overrides. Units are carried in
the key names (..._us, ..._cm, ..._khz).
"""

from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator

from occ.models import CameraModel, Environment, Payload, ScenePose, TransmitterModel
from utils.logger import get_logger

US = 1e-6
CM = 1e-2
KHZ = 1e3


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent configuration."""


class DeviceProfile(BaseModel):
    """Receiver presets. min_exposure is the lowest exposure the camera allows."""

    model_config = ConfigDict(frozen=True)

    name: str
    readout_time: float
    min_exposure: float


# phone: 8 us readout, 68 us shortest exposure.
# tablet: 13 us readout; 60 us puts the detection cutoff of 2 * t_min near 16 kHz.
PROFILES: Dict[str, DeviceProfile] = {
    "phone": DeviceProfile(name="phone", readout_time=8 * US, min_exposure=68 * US),
    "tablet": DeviceProfile(name="tablet", readout_time=13 * US, min_exposure=60 * US),
}

DEFAULTS: Dict[str, str] = {
    "device": "phone",
    "camera.iso_speed": "100",
    "camera.aperture": "2.0",
    "camera.columns": "1080",
    "camera.rows": "1920",
    "camera.focal_length_px": "1000",
    "camera.principal_point_x": "540",
    "camera.principal_point_y": "960",
    "transmitter.luminance_cd_m2": "3600",
    "transmitter.panel_width_cm": "30",
    "transmitter.panel_height_cm": "30",
    "transmitter.payload": "1011010010",
    "transmitter.slots_per_period": "2",
    "environment.illuminance_lux": "290",
    "environment.reflectance": "0.4",
    "environment.calibration_constant": "12.5",
    "environment.gamma": "2.22",
    "scene.lateral_offset_x_cm": "1",
    "scene.lateral_offset_y_cm": "1",
    "sweep.frequencies_khz": "2,4,6,8,10,12,14,16,18,20",
    "sweep.distances_cm": "60,80,100,120,140,160,180,200",
    "sweep.trials": "5",
    "sweep.seed": "2024",
    "decoder.bright_fraction": "0.05",
}


def _floats(text: str) -> List[float]:
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ConfigError(f"empty list: {text!r}")
    return [float(item) for item in items]


class SweepConfig(BaseModel):
    """Grid and link parameters for a sweep. Times in seconds, distances in meters."""

    model_config = ConfigDict(frozen=True)

    frequencies: Tuple[float, ...] = Field(min_length=1)
    distances: Tuple[float, ...] = Field(min_length=1)
    exposures: Tuple[float, ...] = Field(min_length=1)
    trials_per_point: int = Field(default=5, ge=1)
    seed: int = 2024
    device: CameraModel
    transmitter: TransmitterModel
    environment: Environment = Environment()
    lateral_offset: Tuple[float, float] = (0.01, 0.01)
    bright_fraction: float = Field(default=0.05, gt=0, lt=1)

    @field_validator("frequencies", "distances", "exposures")
    @classmethod
    def _positive(cls, values):
        if any(v <= 0 for v in values):
            raise ValueError("grid values must be positive")
        return values

    @property
    def payload(self) -> Payload:
        return self.transmitter.payload

    def pose(self, distance: float) -> ScenePose:
        return ScenePose(distance=distance, lateral_offset=self.lateral_offset)

    def grid(self) -> List[Tuple[float, float, float]]:
        """Grid points in output order: exposure, then distance, then frequency."""
        return [(f, d, e) for e in self.exposures for d in self.distances for f in self.frequencies]


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read a flat key=value file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {k: v for k, v in values.items() if v is not None}


def resolve_settings(file_values: Optional[Mapping[str, str]] = None,
                     overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, str]:
    """Merge defaults, profile-derived keys, file values and overrides."""
    merged: Dict[str, str] = dict(DEFAULTS)
    merged.update(file_values or {})
    merged.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})

    device = merged["device"]
    if device not in PROFILES:
        raise ConfigError(f"unknown device profile: {device}")
    profile = PROFILES[device]
    if "camera.readout_time_us" in merged:
        try:
            readout = float(merged["camera.readout_time_us"]) * US
        except ValueError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        if abs(readout - profile.readout_time) > 1e-12:
            get_logger().log_warning("readout time differs from the device profile", device=device,
                                     readout_time_us=readout / US,
                                     profile_readout_time_us=profile.readout_time / US)
    merged.setdefault("camera.readout_time_us", f"{profile.readout_time / US:g}")
    merged.setdefault("camera.min_exposure_us", f"{profile.min_exposure / US:g}")
    t_min = float(merged["camera.min_exposure_us"])
    merged.setdefault("sweep.exposures_us", f"{t_min:g},{2 * t_min:g}")
    merged.setdefault("camera.exposure_time_us", f"{t_min:g}")
    return merged


def build_camera(settings: Mapping[str, str], exposure_time: Optional[float] = None) -> CameraModel:
    return CameraModel(
        iso_speed=float(settings["camera.iso_speed"]),
        exposure_time=exposure_time if exposure_time is not None
        else float(settings["camera.exposure_time_us"]) * US,
        aperture=float(settings["camera.aperture"]),
        readout_time=float(settings["camera.readout_time_us"]) * US,
        columns=int(settings["camera.columns"]),
        rows=int(settings["camera.rows"]),
        focal_length_px=float(settings["camera.focal_length_px"]),
        principal_point=(float(settings["camera.principal_point_x"]),
                         float(settings["camera.principal_point_y"])),
    )


def build_transmitter(settings: Mapping[str, str], frequency: float) -> TransmitterModel:
    return TransmitterModel.rectangular(
        width_m=float(settings["transmitter.panel_width_cm"]) * CM,
        height_m=float(settings["transmitter.panel_height_cm"]) * CM,
        frequency=frequency,
        payload=Payload.from_string(settings["transmitter.payload"]),
        luminance=float(settings["transmitter.luminance_cd_m2"]),
        slots_per_period=int(settings["transmitter.slots_per_period"]),
    )


def build_environment(settings: Mapping[str, str]) -> Environment:
    return Environment(
        illuminance=float(settings["environment.illuminance_lux"]),
        reflectance=float(settings["environment.reflectance"]),
        calibration_constant=float(settings["environment.calibration_constant"]),
        gamma=float(settings["environment.gamma"]),
    )


def build_sweep_config(settings: Mapping[str, str]) -> SweepConfig:
    """Turn resolved settings into a validated SweepConfig."""
    try:
        frequencies = tuple(f * KHZ for f in _floats(settings["sweep.frequencies_khz"]))
        return SweepConfig(
            frequencies=frequencies,
            distances=tuple(d * CM for d in _floats(settings["sweep.distances_cm"])),
            exposures=tuple(e * US for e in _floats(settings["sweep.exposures_us"])),
            trials_per_point=int(settings["sweep.trials"]),
            seed=int(settings["sweep.seed"]),
            device=build_camera(settings),
            transmitter=build_transmitter(settings, frequencies[0]),
            environment=build_environment(settings),
            lateral_offset=(float(settings["scene.lateral_offset_x_cm"]) * CM,
                            float(settings["scene.lateral_offset_y_cm"]) * CM),
            bright_fraction=float(settings["decoder.bright_fraction"]),
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_sweep_config(path: Optional[Union[str, Path]] = None,
                      overrides: Optional[Mapping[str, Any]] = None) -> SweepConfig:
    """Profile defaults, then the optional file, then overrides."""
    file_values = load_config_file(path) if path else {}
    return build_sweep_config(resolve_settings(file_values, overrides))
