"""
LangGraph trial pipeline.
One capture per invocation: encode -> expose -> render -> decode, with
failures routed to a terminal node so a bad grid point never raises.
"""

from typing import Any, Dict, Optional, TypedDict

import numpy as np
from langgraph.graph import StateGraph, END

from occ.coding import build_frame
from occ.decoder import RollingShutterDecoder
from occ.imaging import compose_image, project_corners, rasterize_mask, raster_size
from occ.models import CameraModel, DecodeReport, TransmitterModel
from occ.photometry import pixel_value_off, pixel_value_on
from occ.shutter_sim import ColumnTrace, SignalTimeline, simulate_column_trace

from .config import SweepConfig


class TrialState(TypedDict, total=False):
    """State schema for one simulated capture."""
    config: SweepConfig
    frequency: float
    distance: float
    exposure: float
    phase: float
    decode: bool
    camera: Optional[CameraModel]
    transmitter: Optional[TransmitterModel]
    timeline: Optional[SignalTimeline]
    pv_max: Optional[float]
    pv_min: Optional[float]
    trace: Optional[ColumnTrace]
    mask: Optional[np.ndarray]
    image: Optional[np.ndarray]
    report: Optional[DecodeReport]
    error: Optional[str]


class TrialPipeline:
    """LangGraph-based simulate-and-decode workflow."""

    def __init__(self, bright_fraction: float = 0.05):
        """
        Initialize the pipeline.

        Args:
            bright_fraction: Bright-region share handed to the decoder
        """
        self.bright_fraction = bright_fraction
        self.graph = self._build_graph()

    def _build_graph(self):
        """Build the LangGraph workflow."""
        workflow = StateGraph(TrialState)

        workflow.add_node("encode", self._encode_node)
        workflow.add_node("expose", self._expose_node)
        workflow.add_node("render", self._render_node)
        workflow.add_node("decode", self._decode_node)
        workflow.add_node("fail", self._fail_node)

        workflow.set_entry_point("encode")

        workflow.add_conditional_edges("encode", self._ok_or_fail, {"ok": "expose", "fail": "fail"})
        workflow.add_conditional_edges("expose", self._ok_or_fail, {"ok": "render", "fail": "fail"})
        workflow.add_conditional_edges(
            "render",
            self._should_decode,
            {"decode": "decode", "done": END, "fail": "fail"}
        )
        workflow.add_edge("decode", END)
        workflow.add_edge("fail", END)

        return workflow.compile()

    def _ok_or_fail(self, state: TrialState) -> str:
        return "fail" if state.get("error") else "ok"

    def _should_decode(self, state: TrialState) -> str:
        if state.get("error"):
            return "fail"
        return "decode" if state.get("decode", True) else "done"

    def _encode_node(self, state: TrialState) -> Dict[str, Any]:
        """Frame the payload and fix the receiver for this grid point."""
        config = state["config"]
        try:
            transmitter = config.transmitter.with_frequency(state["frequency"])
            camera = config.device.with_exposure(state["exposure"])
            timeline = SignalTimeline.from_frequency(
                build_frame(transmitter.payload), transmitter.frequency, state.get("phase", 0.0),
                transmitter.slots_per_period
            )
        except ValueError as e:
            return {"error": f"encode: {e}"}
        return {"transmitter": transmitter, "camera": camera, "timeline": timeline}

    def _expose_node(self, state: TrialState) -> Dict[str, Any]:
        """Pixel levels and the rolling-shutter column trace."""
        camera, env = state["camera"], state["config"].environment
        try:
            pv_max = pixel_value_on(camera, state["transmitter"], env)
            pv_min = pixel_value_off(camera, env)
            trace = simulate_column_trace(camera, state["timeline"], pv_max, pv_min)
        except ValueError as e:
            return {"error": f"expose: {e}"}
        return {"pv_max": pv_max, "pv_min": pv_min, "trace": trace}

    def _render_node(self, state: TrialState) -> Dict[str, Any]:
        """Project, mask and compose the photograph."""
        camera = state["camera"]
        try:
            corners = project_corners(camera, state["transmitter"], state["config"].pose(state["distance"]))
            width, height = raster_size(camera)
            mask = rasterize_mask(corners, width, height)
            image = compose_image(state["trace"], mask, width, height, background=state["pv_min"])
        except ValueError as e:
            return {"error": f"render: {e}"}
        return {"mask": mask, "image": image}

    def _decode_node(self, state: TrialState) -> Dict[str, Any]:
        """Run the thresholding decoder on the rendered image."""
        payload = state["transmitter"].payload
        decoder = RollingShutterDecoder(payload_bits=len(payload), bright_fraction=self.bright_fraction)
        return {"report": decoder.decode(state["image"], expected=payload)}

    def _fail_node(self, state: TrialState) -> Dict[str, Any]:
        return {"report": DecodeReport(error=state.get("error"))}

    def run(self, config: SweepConfig, frequency: float, distance: float, exposure: float,
            phase: float = 0.0, decode: bool = True) -> TrialState:
        """Run one capture through the graph and return the final state."""
        initial: TrialState = {
            "config": config,
            "frequency": frequency,
            "distance": distance,
            "exposure": exposure,
            "phase": phase,
            "decode": decode,
            "error": None,
        }
        return self.graph.invoke(initial)
