"""
Simulated photographs of the LED panel.

The panel corners are projected through a pinhole camera looking straight
down at the floor, the quadrilateral is filled into a mask, and every readout
line inside the mask takes the value of its column trace. The full frame is
histogram-equalized last.

Raster convention: images are (rows, columns) uint8 arrays; the readout axis is
the column index, so the trace runs along the image width. Pixel (r, c) covers
[c, c + 1) x [r, r + 1) and its center is (c + 0.5, r + 0.5).
"""

from typing import Tuple

import numpy as np

from utils.logger import get_logger

from .models import CameraModel, ScenePose, TransmitterModel
from .shutter_sim import ColumnTrace

GrayImage = np.ndarray
Mask = np.ndarray
Corners = np.ndarray


class ImagingError(ValueError):
    """Raised for invalid scene geometry or composition inputs."""


def round_half_up(values) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=float) + 0.5)


def project_corners(cam: CameraModel, tx: TransmitterModel, pose: ScenePose) -> Corners:
    """
    Project the panel corners onto the image plane.

    Returns:
        (4, 2) array of (u, v) pixel coordinates
    """
    if not pose.distance > 0:
        raise ImagingError(f"distance must be positive, got {pose.distance}")
    f = cam.focal_length_px
    cx, cy = cam.principal_point
    ox, oy = pose.lateral_offset
    pts = np.asarray(tx.corners, dtype=float)
    u = f * (pts[:, 0] + ox) / pose.distance + cx
    v = f * (pts[:, 1] + oy) / pose.distance + cy
    return np.stack([u, v], axis=1)


def polygon_area(corners: Corners) -> float:
    """Shoelace area in pixels squared."""
    x, y = corners[:, 0], corners[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def rasterize_mask(corners: Corners, width: int, height: int) -> Mask:
    """Scanline fill: pixels whose centers lie strictly inside the quadrilateral."""
    corners = np.asarray(corners, dtype=float)
    mask = np.zeros((height, width), dtype=bool)
    if polygon_area(corners) == 0.0:
        get_logger().log_warning("degenerate transmitter quadrilateral, mask is empty",
                                 corners=corners.tolist())
        return mask

    x0, y0 = corners[:, 0], corners[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    top = max(int(np.floor(y0.min() - 0.5)), 0)
    bottom = min(int(np.ceil(y0.max() - 0.5)), height - 1)

    for row in range(top, bottom + 1):
        yc = row + 0.5
        # half-open edge rule so shared vertices are counted once
        crosses = (y0 <= yc) != (y1 <= yc)
        if not crosses.any():
            continue
        xs = np.sort(x0[crosses] + (yc - y0[crosses]) * (x1[crosses] - x0[crosses])
                     / (y1[crosses] - y0[crosses]))
        for left, right in zip(xs[0::2], xs[1::2]):
            first = max(int(np.floor(left - 0.5)) + 1, 0)
            last = min(int(np.ceil(right - 0.5)) - 1, width - 1)
            if first <= last:
                mask[row, first:last + 1] = True
    return mask


def histogram_equalize(img: GrayImage) -> GrayImage:
    """256-bin cumulative-distribution remap; a constant image stays constant."""
    img = np.asarray(img, dtype=np.uint8)
    if img.size == 0:
        raise ImagingError("cannot equalize an empty image")
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = hist.cumsum()
    cdf_min = cdf[hist > 0][0]
    if cdf[-1] == cdf_min:
        return img.copy()
    lut = round_half_up((cdf - cdf_min) * 255.0 / (cdf[-1] - cdf_min))
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


def compose_image(trace: ColumnTrace, mask: Mask, width: int, height: int,
                  background: float, equalize: bool = True) -> GrayImage:
    """Paint the trace into the mask over a flat background, then equalize."""
    values = np.asarray(trace.values, dtype=float)
    if values.shape != (width,):
        raise ImagingError(f"trace length {values.shape[0]} does not match {width} readout lines")
    if mask.shape != (height, width):
        raise ImagingError(f"mask shape {mask.shape} does not match image {(height, width)}")

    line = np.clip(round_half_up(values), 0, 255).astype(np.uint8)
    fill = np.uint8(np.clip(round_half_up(background), 0, 255))
    img = np.where(mask.astype(bool), line[np.newaxis, :], fill).astype(np.uint8)
    return histogram_equalize(img) if equalize else img


def raster_size(cam: CameraModel) -> Tuple[int, int]:
    """(width, height) of the simulated photograph."""
    return cam.columns, cam.rows
