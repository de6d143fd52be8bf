"""
Rolling-shutter optical camera communication: link simulation and decoding.
"""

from .models import CameraModel, DecodeReport, Environment, Payload, ScenePose, TransmitterModel
from .coding import build_frame, decode_diff_manchester, encode_diff_manchester, find_headers
from .photometry import pixel_value_off, pixel_value_on
from .shutter_sim import ColumnTrace, SignalTimeline, simulate_column_trace, sota_column_trace
from .imaging import compose_image, project_corners, rasterize_mask
from .image_io import read_image, write_image
from .decoder import RollingShutterDecoder, extract_code, otsu_threshold, success_rate

__all__ = [
    "CameraModel", "DecodeReport", "Environment", "Payload", "ScenePose", "TransmitterModel",
    "build_frame", "decode_diff_manchester", "encode_diff_manchester", "find_headers",
    "pixel_value_off", "pixel_value_on",
    "ColumnTrace", "SignalTimeline", "simulate_column_trace", "sota_column_trace",
    "compose_image", "project_corners", "rasterize_mask",
    "read_image", "write_image",
    "RollingShutterDecoder", "extract_code", "otsu_threshold", "success_rate",
]
