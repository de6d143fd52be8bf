"""
CSV and SVG artifacts for sweeps, comparisons and traces.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from occ.imaging import histogram_equalize, round_half_up
from occ.shutter_sim import ColumnTrace

from .compare import ComparisonTable
from .config import CM, KHZ, US
from .sweep import SweepResult

PathLike = Union[str, Path]

SWEEP_COLUMNS = ["frequency_hz", "distance_m", "exposure_s", "success_rate_pct", "trials", "images_decoded"]
COMPARISON_COLUMNS = ["frequency_hz", "distance_m", "exposure_s", "simulated_pct", "experimental_pct",
                      "abs_diff_pct", "images", "images_decoded", "note"]
TRACE_COLUMNS = ["column_index", "value"]

FLOAT_FORMAT = "%.9g"

# fixed ids and no timestamp, so the same data gives the same file
plt.rcParams["svg.hashsalt"] = "occsim"


class OutputError(OSError):
    """Raised when an artifact cannot be written."""


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def _write_frame(df: pd.DataFrame, path: PathLike) -> Path:
    path = _prepare(path)
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def write_sweep_csv(result: SweepResult, path: PathLike) -> Path:
    """One line per grid point, in grid order."""
    records = [row.model_dump(include=set(SWEEP_COLUMNS)) for row in result.rows]
    return _write_frame(pd.DataFrame(records, columns=SWEEP_COLUMNS), path)


def write_comparison_csv(table: ComparisonTable, path: PathLike) -> Path:
    records = [row.model_dump() for row in table.rows]
    return _write_frame(pd.DataFrame(records, columns=COMPARISON_COLUMNS), path)


def write_trace_csv(trace: Union[ColumnTrace, np.ndarray], path: PathLike) -> Path:
    values = np.asarray(trace.values if isinstance(trace, ColumnTrace) else trace, dtype=float)
    df = pd.DataFrame({"column_index": np.arange(values.size), "value": values}, columns=TRACE_COLUMNS)
    return _write_frame(df, path)


def _save_svg(fig, path: PathLike) -> Path:
    path = _prepare(path)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def plot_success_rate(result: SweepResult, path: PathLike) -> Path:
    """SR versus frequency, one panel per exposure, one line per distance."""
    df = pd.DataFrame([row.model_dump() for row in result.rows], columns=SWEEP_COLUMNS)
    exposures = sorted(df["exposure_s"].unique()) if not df.empty else []
    fig, axes = plt.subplots(1, max(len(exposures), 1), figsize=(6 * max(len(exposures), 1), 4.5),
                             squeeze=False)
    for ax, exposure in zip(axes[0], exposures):
        subset = df[df["exposure_s"] == exposure]
        for distance, group in subset.groupby("distance_m", sort=True):
            group = group.sort_values("frequency_hz")
            ax.plot(group["frequency_hz"] / KHZ, group["success_rate_pct"], marker="o",
                    label=f"{distance / CM:g} cm")
        ax.set_title(f"exposure {exposure / US:g} us")
        ax.set_xlabel("switching frequency (kHz)")
        ax.set_ylabel("success rate (%)")
        ax.set_ylim(-5, 105)
        ax.grid(True)
        ax.legend(fontsize="small")
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_traces(simulated: ColumnTrace, path: PathLike, sota: Optional[ColumnTrace] = None,
                decoded: Optional[Sequence[float]] = None, decoded_offset: int = 0,
                equalize_sota: bool = False, title: str = "") -> Path:
    """
    Column traces on one axis.

    Args:
        simulated: Exact-integration trace
        sota: Band model trace, if defined for these settings
        decoded: Column means recovered by the decoder from the ROI
        decoded_offset: First readout line of the ROI
        equalize_sota: Contrast-stretch the band model trace before plotting
    """
    fig, ax = plt.subplots(figsize=(10, 4))
    columns = np.arange(len(simulated))
    ax.plot(columns, simulated.values, label="simulated", linewidth=1.0)
    if sota is not None:
        values = np.asarray(sota.values, dtype=float)
        if equalize_sota:
            line = np.clip(round_half_up(values), 0, 255).astype(np.uint8)
            values = histogram_equalize(line[np.newaxis, :])[0].astype(float)
        ax.plot(columns, values, label="band model", linewidth=1.0, linestyle="--")
    if decoded is not None:
        decoded = np.asarray(decoded, dtype=float)
        ax.plot(decoded_offset + np.arange(decoded.size), decoded, label="decoder signal", linewidth=1.0)
    ax.set_xlabel("readout line")
    ax.set_ylabel("pixel value")
    if title:
        ax.set_title(title)
    ax.grid(True)
    ax.legend(fontsize="small")
    fig.tight_layout()
    return _save_svg(fig, path)


def emit_outputs(result: SweepResult, out_dir: PathLike, formats: Iterable[str] = ("csv",)) -> List[Path]:
    """
    Write sweep artifacts.

    Args:
        result: Sweep result
        out_dir: Target directory
        formats: "csv" is always written; "svg" adds the SR plot

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    written = [write_sweep_csv(result, out_dir / "sweep.csv")]
    if "svg" in set(formats):
        written.append(plot_success_rate(result, out_dir / "success_rate.svg"))
    return written
