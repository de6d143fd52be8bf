"""
Simulated versus experimental success rates.

Experimental captures are read from <freq>khz/<distance>cm/<exposure>us/
directories holding .pgm or .png files, with a manifest.conf at the root
naming the transmitted code.
"""

import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel

from occ.decoder import RollingShutterDecoder, success_rate
from occ.image_io import ImageFormatError, read_image
from occ.models import DecodeReport, Payload
from utils.logger import get_logger

from .config import CM, KHZ, US, ConfigError, SweepConfig, load_config_file
from .sweep import MANIFEST_NAME, point_labels, run_point

IMAGE_SUFFIXES = (".pgm", ".png")

_LEVELS = (
    (re.compile(r"^(\d+(?:\.\d+)?)khz$", re.IGNORECASE), KHZ),
    (re.compile(r"^(\d+(?:\.\d+)?)cm$", re.IGNORECASE), CM),
    (re.compile(r"^(\d+(?:\.\d+)?)us$", re.IGNORECASE), US),
)


class ComparisonRow(BaseModel):
    frequency_hz: float
    distance_m: float
    exposure_s: float
    simulated_pct: Optional[float] = None
    experimental_pct: Optional[float] = None
    abs_diff_pct: Optional[float] = None
    images: int = 0
    images_decoded: int = 0
    note: str = ""


class ComparisonTable(BaseModel):
    payload: str
    rows: List[ComparisonRow] = []


def read_manifest(data_dir: Union[str, Path]) -> Dict[str, str]:
    """Manifest values; a missing manifest or one without a code is fatal."""
    path = Path(data_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ConfigError(f"missing manifest: {path}")
    values = load_config_file(path)
    if "transmitter.payload" not in values:
        raise ConfigError(f"manifest {path} does not name transmitter.payload")
    return values


def _numbered_dirs(parent: Path, level: int) -> List[Tuple[float, Path]]:
    pattern, unit = _LEVELS[level]
    found = []
    for child in parent.iterdir():
        match = pattern.match(child.name)
        if child.is_dir() and match:
            found.append((float(match.group(1)) * unit, child))
    return sorted(found, key=lambda item: item[0])


def discover_points(data_dir: Union[str, Path]) -> Dict[Tuple[float, float, float], List[Path]]:
    """Map (frequency, distance, exposure) to the image files of each point directory."""
    points: Dict[Tuple[float, float, float], List[Path]] = {}
    for frequency, fdir in _numbered_dirs(Path(data_dir), 0):
        for distance, ddir in _numbered_dirs(fdir, 1):
            for exposure, edir in _numbered_dirs(ddir, 2):
                images = sorted(p for p in edir.iterdir()
                                if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
                points[(frequency, distance, exposure)] = images
    return points


def decode_files(files: List[Path], decoder: RollingShutterDecoder,
                 expected: Payload) -> List[DecodeReport]:
    """Decode image files; unreadable ones count as absent codes."""
    logger = get_logger()
    reports = []
    for path in files:
        try:
            img = read_image(path)
        except (ImageFormatError, OSError) as e:
            logger.log_error(f"decode {path}", str(e))
            reports.append(DecodeReport(file=str(path), error=str(e)))
            continue
        report = decoder.decode(img, expected=expected, file=str(path))
        logger.log_decode(str(path), report.model_dump())
        reports.append(report)
    return reports


def compare_with_experimental(data_dir: Union[str, Path], config: SweepConfig) -> ComparisonTable:
    """
    Decode experimental captures and set them beside simulation.

    Simulated success rates use the configured grid values for points whose
    directory names match the grid, so exported simulator images reproduce
    the sweep exactly.
    """
    data_dir = Path(data_dir)
    manifest = read_manifest(data_dir)
    payload = Payload.from_string(manifest["transmitter.payload"])
    transmitter = {"payload": payload}
    if "transmitter.slots_per_period" in manifest:
        transmitter["slots_per_period"] = int(manifest["transmitter.slots_per_period"])
    config = config.model_copy(update={"transmitter": config.transmitter.model_copy(update=transmitter)})
    decoder = RollingShutterDecoder(payload_bits=len(payload), bright_fraction=config.bright_fraction)
    by_label = {point_labels(*p): p for p in config.grid()}

    rows = []
    points = discover_points(data_dir)
    for parsed, files in sorted(points.items(), key=lambda item: (item[0][2], item[0][1], item[0][0])):
        frequency, distance, exposure = by_label.get(point_labels(*parsed), parsed)
        simulated = run_point(config, frequency, distance, exposure)
        row = ComparisonRow(
            frequency_hz=frequency,
            distance_m=distance,
            exposure_s=exposure,
            simulated_pct=None if simulated.error else simulated.success_rate_pct,
            images=len(files),
        )
        if simulated.error:
            row.note = f"simulation failed: {simulated.error}"

        if not files:
            row.note = "no data"
        else:
            reports = decode_files(files, decoder, payload)
            row.experimental_pct = success_rate(reports, payload)
            row.images_decoded = sum(1 for r in reports if r.received_code is not None)
            if row.simulated_pct is not None:
                row.abs_diff_pct = abs(row.simulated_pct - row.experimental_pct)
        rows.append(row)

    return ComparisonTable(payload=str(payload), rows=rows)
