"""
Parameter sweeps over frequency, distance and exposure.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from occ.coding import build_frame
from occ.decoder import success_rate
from occ.image_io import write_image
from occ.models import DecodeReport
from occ.shutter_sim import SignalTimeline
from utils.logger import get_logger

from .config import CM, KHZ, US, SweepConfig
from .pipeline import TrialPipeline

MANIFEST_NAME = "manifest.conf"


class SweepRow(BaseModel):
    """Aggregated result for one grid point."""

    frequency_hz: float
    distance_m: float
    exposure_s: float
    success_rate_pct: float = Field(ge=0, le=100)
    trials: int
    images_decoded: int
    error: Optional[str] = None


class SweepResult(BaseModel):
    rows: List[SweepRow] = []
    execution_time_ms: float = 0.0


def point_dict(frequency: float, distance: float, exposure: float) -> Dict[str, float]:
    return {"frequency_hz": frequency, "distance_m": distance, "exposure_s": exposure}


def point_labels(frequency: float, distance: float, exposure: float) -> Tuple[str, str, str]:
    """Directory names for a grid point, e.g. ("4khz", "60cm", "68us")."""
    return f"{frequency / KHZ:g}khz", f"{distance / CM:g}cm", f"{exposure / US:g}us"


def trial_phases(config: SweepConfig, frequency: float, distance: float, exposure: float) -> np.ndarray:
    """
    Transmitter phases for the trials of one grid point.

    The generator is keyed by the seed and the point itself, so a point gets
    the same phases whether it is run alone or as part of a larger grid.
    """
    key = [config.seed, round(frequency), round(distance * 1e3), round(exposure * 1e9)]
    rng = np.random.default_rng(key)
    frame_duration = SignalTimeline.from_frequency(
        build_frame(config.payload), frequency, slots_per_period=config.transmitter.slots_per_period
    ).frame_duration
    phases = rng.uniform(0.0, frame_duration, config.trials_per_point)
    return np.minimum(phases, np.nextafter(frame_duration, 0.0))


def run_point(config: SweepConfig, frequency: float, distance: float, exposure: float) -> SweepRow:
    """Simulate and decode every trial of one grid point."""
    logger = get_logger()
    point = point_dict(frequency, distance, exposure)
    start_time = time.time()
    try:
        pipeline = TrialPipeline(bright_fraction=config.bright_fraction)
        reports: List[DecodeReport] = []
        errors: List[str] = []
        for phase in trial_phases(config, frequency, distance, exposure):
            state = pipeline.run(config, frequency, distance, exposure, phase=float(phase))
            report = state["report"]
            reports.append(report)
            if state.get("error"):
                errors.append(state["error"])
            logger.log_trial(point, float(phase), report.headers_found,
                             report.correct_bits, report.received_code)

        rate = success_rate(reports, config.payload)
        decoded = sum(1 for r in reports if r.received_code is not None)
        execution_time = (time.time() - start_time) * 1000
        logger.log_grid_point(point, rate, decoded, execution_time)
        if errors:
            logger.log_error(f"point {point}", errors[0])
        return SweepRow(**point, success_rate_pct=rate, trials=len(reports),
                        images_decoded=decoded, error=errors[0] if errors else None)
    except Exception as e:
        logger.log_error(f"point {point}", str(e))
        return SweepRow(**point, success_rate_pct=0.0, trials=config.trials_per_point,
                        images_decoded=0, error=str(e))


def run_sweep(config: SweepConfig, workers: Optional[int] = None,
              on_row: Optional[Callable[[SweepRow], None]] = None) -> SweepResult:
    """
    Run the whole grid.

    Args:
        config: Sweep configuration
        workers: Thread count; None or 1 runs sequentially
        on_row: Called with each row, in grid order

    Returns:
        SweepResult with one row per grid point, in grid order
    """
    logger = get_logger()
    start_time = time.time()
    grid = config.grid()

    rows: List[SweepRow] = []
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order
            for row in pool.map(lambda p: run_point(config, *p), grid):
                rows.append(row)
                if on_row:
                    on_row(row)
    else:
        for frequency, distance, exposure in grid:
            row = run_point(config, frequency, distance, exposure)
            rows.append(row)
            if on_row:
                on_row(row)

    execution_time = (time.time() - start_time) * 1000
    logger.log_sweep_summary(len(rows), execution_time)
    return SweepResult(rows=rows, execution_time_ms=execution_time)


def write_manifest(config: SweepConfig, out_dir: Union[str, Path]) -> Path:
    """Flat key=value manifest naming the transmitted code."""
    path = Path(out_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"transmitter.payload={config.payload}",
        f"transmitter.slots_per_period={config.transmitter.slots_per_period}",
        f"sweep.trials={config.trials_per_point}",
        f"sweep.seed={config.seed}",
        f"camera.readout_time_us={config.device.readout_time / US:g}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def export_images(config: SweepConfig, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write the images a sweep would decode, one directory per grid point.

    Layout: <freq>khz/<distance>cm/<exposure>us/trial_<k>.pgm plus manifest.conf.
    Points that cannot be simulated are logged and left without images.
    """
    logger = get_logger()
    out_dir = Path(out_dir)
    write_manifest(config, out_dir)
    pipeline = TrialPipeline(bright_fraction=config.bright_fraction)

    written: List[Path] = []
    for frequency, distance, exposure in config.grid():
        point_dir = out_dir.joinpath(*point_labels(frequency, distance, exposure))
        point_dir.mkdir(parents=True, exist_ok=True)
        for k, phase in enumerate(trial_phases(config, frequency, distance, exposure)):
            state = pipeline.run(config, frequency, distance, exposure, phase=float(phase), decode=False)
            if state.get("error"):
                logger.log_error(f"export {point_dir}", state["error"])
                break
            written.append(write_image(point_dir / f"trial_{k}.pgm", state["image"]))
    return written
