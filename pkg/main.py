"""
Rolling-Shutter OCC Simulator
Command-line entry point: simulate, sweep, decode, compare.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from harness.compare import compare_with_experimental
from harness.config import CM, KHZ, US, ConfigError, load_sweep_config
from harness.outputs import OutputError, emit_outputs, plot_traces, write_comparison_csv, write_trace_csv
from harness.pipeline import TrialPipeline
from harness.sweep import export_images, run_sweep
from occ.decoder import DecodeError, RollingShutterDecoder
from occ.image_io import ImageFormatError, read_image, write_image
from occ.models import DecodeReport, Payload
from occ.shutter_sim import ShutterError, sota_column_trace
from utils.logger import get_logger

REPORT_FIELDS = ("file", "headers_found", "received_code", "correct_bits")


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--device", choices=["phone", "tablet"], help="receiver profile")
    parser.add_argument("--readout-us", type=float, help="readout time per line")
    parser.add_argument("--min-exposure-us", type=float, help="shortest exposure of the device")
    parser.add_argument("--panel-cm", type=float, help="square panel side")
    parser.add_argument("--payload", help="transmitted code, e.g. 1011010010")
    parser.add_argument("--slots-per-period", type=int, choices=[1, 2],
                        help="half-slots per frequency period (1: frequency counts LED state changes)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int, help="images per grid point")
    parser.add_argument("--frequencies-khz", help="comma separated")
    parser.add_argument("--distances-cm", help="comma separated")
    parser.add_argument("--exposures-us", help="comma separated")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Map CLI flags onto config keys; unset flags leave file values alone."""
    mapping = {
        "device": "device",
        "readout_us": "camera.readout_time_us",
        "min_exposure_us": "camera.min_exposure_us",
        "payload": "transmitter.payload",
        "slots_per_period": "transmitter.slots_per_period",
        "seed": "sweep.seed",
        "trials": "sweep.trials",
        "frequencies_khz": "sweep.frequencies_khz",
        "distances_cm": "sweep.distances_cm",
        "exposures_us": "sweep.exposures_us",
    }
    overrides = {key: getattr(args, flag, None) for flag, key in mapping.items()}
    panel = getattr(args, "panel_cm", None)
    if panel is not None:
        overrides["transmitter.panel_width_cm"] = panel
        overrides["transmitter.panel_height_cm"] = panel
    return {k: v for k, v in overrides.items() if v is not None}


def cmd_simulate(args: argparse.Namespace) -> int:
    """Render one capture to an image file."""
    config = load_sweep_config(args.config, _overrides(args))
    exposure = args.exposure_us * US if args.exposure_us else config.exposures[0]
    frequency, distance = args.frequency_khz * KHZ, args.distance_cm * CM

    state = TrialPipeline(config.bright_fraction).run(
        config, frequency, distance, exposure, phase=args.phase_us * US, decode=False
    )
    if state.get("error"):
        print(f"[Error] {state['error']}")
        return 1

    path = write_image(args.out, state["image"])
    print(f"[Simulate] Wrote {path} ({state['image'].shape[1]}x{state['image'].shape[0]}, "
          f"PV_max={state['pv_max']:.2f}, PV_min={state['pv_min']:.2f})")

    if args.trace_csv:
        print(f"[Simulate] Wrote {write_trace_csv(state['trace'], args.trace_csv)}")
    if args.trace_svg:
        sota = None
        try:
            sota = sota_column_trace(state["camera"], state["timeline"], state["pv_max"], state["pv_min"])
        except ShutterError as e:
            get_logger().log_warning(f"band model skipped: {e}")
        decoder = RollingShutterDecoder(len(config.payload), config.bright_fraction)
        signal, offset = None, 0
        try:
            _, _, trace = decoder.decode_detailed(state["image"])
            signal, offset = trace.signal, trace.roi.left
        except DecodeError as e:
            get_logger().log_warning(f"decoder signal unavailable: {e}")
        path = plot_traces(state["trace"], args.trace_svg, sota=sota, decoded=signal,
                           decoded_offset=offset, equalize_sota=args.equalize_sota,
                           title=f"{args.frequency_khz:g} kHz, {exposure / US:g} us")
        print(f"[Simulate] Wrote {path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run the grid and write CSV (and optionally SVG)."""
    config = load_sweep_config(args.config, _overrides(args))
    grid_size = len(config.grid())
    print(f"[Sweep] {grid_size} grid points x {config.trials_per_point} trials")

    result = run_sweep(config, workers=args.workers)
    formats = ["csv", "svg"] if args.svg else ["csv"]
    for path in emit_outputs(result, args.out_dir, formats):
        print(f"[Sweep] Wrote {path}")
    if args.export_dir:
        written = export_images(config, args.export_dir)
        print(f"[Sweep] Exported {len(written)} images to {args.export_dir}")

    failed = sum(1 for row in result.rows if row.error)
    if failed:
        print(f"[Sweep] {failed} grid points reported errors (see log)")
    print(f"[System] Execution time: {result.execution_time_ms:.2f}ms")
    return 0


def _report_line(report: DecodeReport) -> str:
    return json.dumps({field: getattr(report, field) for field in REPORT_FIELDS})


def cmd_decode(args: argparse.Namespace) -> int:
    """Decode image files into JSON-lines reports."""
    logger = get_logger()
    expected = Payload.from_string(args.expected) if args.expected else None
    decoder = RollingShutterDecoder(
        payload_bits=len(expected) if expected else args.payload_bits,
        bright_fraction=args.bright_fraction,
        invert=args.invert,
    )

    lines: List[str] = []
    for file in args.files:
        try:
            img = read_image(file)
        except (ImageFormatError, OSError) as e:
            logger.log_error(f"decode {file}", str(e))
            report = DecodeReport(file=file, error=str(e))
        else:
            report = decoder.decode(img, expected=expected, file=file)
            logger.log_decode(file, report.model_dump())
        lines.append(_report_line(report))

    text = "\n".join(lines) + "\n"
    if args.output:
        out = Path(args.output)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
        except OSError as e:
            raise OutputError(f"cannot write {out}: {e}") from e
    else:
        sys.stdout.write(text)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    """Compare an experimental capture directory against simulation."""
    config = load_sweep_config(args.config, _overrides(args))
    table = compare_with_experimental(args.data_dir, config)
    path = write_comparison_csv(table, args.out)
    print(f"[Compare] {len(table.rows)} grid points, payload {table.payload}")
    print(f"[Compare] Wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="occsim", description="Rolling-shutter OCC simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render one image")
    _add_config_flags(sim)
    sim.add_argument("--frequency-khz", type=float, required=True)
    sim.add_argument("--distance-cm", type=float, required=True)
    sim.add_argument("--exposure-us", type=float, help="defaults to the first sweep exposure")
    sim.add_argument("--phase-us", type=float, default=0.0)
    sim.add_argument("--out", required=True, help=".pgm or .png")
    sim.add_argument("--trace-csv")
    sim.add_argument("--trace-svg")
    sim.add_argument("--equalize-sota", action="store_true", help="contrast-stretch the band model trace")
    sim.set_defaults(func=cmd_simulate)

    sweep = sub.add_parser("sweep", help="run the parameter grid")
    _add_config_flags(sweep)
    sweep.add_argument("--out-dir", default="results")
    sweep.add_argument("--svg", action="store_true")
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--export-dir", help="also write the simulated images here")
    sweep.set_defaults(func=cmd_sweep)

    dec = sub.add_parser("decode", help="decode image files")
    dec.add_argument("files", nargs="+")
    dec.add_argument("--expected", help="transmitted code, for correct_bits")
    dec.add_argument("--payload-bits", type=int, default=10)
    dec.add_argument("--bright-fraction", type=float, default=0.05)
    dec.add_argument("--invert", action="store_true")
    dec.add_argument("--output", help="JSON-lines file; stdout if omitted")
    dec.set_defaults(func=cmd_decode)

    cmp_ = sub.add_parser("compare", help="experimental images vs simulation")
    _add_config_flags(cmp_)
    cmp_.add_argument("data_dir")
    cmp_.add_argument("--out", default="results/comparison.csv")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OutputError, ValueError) as e:
        print(f"[Error] {str(e)}")
        return 1
    except KeyboardInterrupt:
        print("\n\nInterrupted.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
