"""
HTTP and WebSocket server for the rolling-shutter OCC simulator.
Simulate single captures, decode uploaded images and stream sweeps.
"""

import asyncio
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field
import uvicorn

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from harness.config import CM, KHZ, US, ConfigError, load_sweep_config
from harness.pipeline import TrialPipeline
from harness.sweep import run_sweep
from occ.decoder import RollingShutterDecoder
from occ.image_io import ImageFormatError, decode_image_bytes, encode_pgm
from occ.models import Payload
from utils.logger import get_logger

app = FastAPI(title="Rolling-Shutter OCC Simulator API")
logger = get_logger()

PGM_MEDIA_TYPE = "image/x-portable-graymap"


class SimulateRequest(BaseModel):
    """One capture. Units are in the field names."""
    frequency_khz: float = Field(gt=0)
    distance_cm: float = Field(gt=0)
    exposure_us: Optional[float] = Field(default=None, gt=0)
    phase_us: float = Field(default=0.0, ge=0)
    device: str = "phone"
    settings: Dict[str, Any] = {}


def _config(device: str, settings: Dict[str, Any], extra: Optional[Dict[str, Any]] = None):
    overrides = {"device": device, **settings, **(extra or {})}
    return load_sweep_config(overrides=overrides)


@app.get("/api/health")
async def health_check():
    """Health check endpoint for monitoring."""
    return JSONResponse(content={"status": "ok", "service": "occsim"})


@app.post("/api/simulate")
async def simulate(request: SimulateRequest):
    """Render one capture and return it as a binary PGM."""
    try:
        config = _config(request.device, request.settings)
    except ConfigError as e:
        return JSONResponse(status_code=422, content={"error": str(e)})

    exposure = request.exposure_us * US if request.exposure_us else config.device.exposure_time
    state = TrialPipeline(config.bright_fraction).run(
        config, request.frequency_khz * KHZ, request.distance_cm * CM, exposure,
        phase=request.phase_us * US, decode=False
    )
    if state.get("error"):
        logger.log_error("api/simulate", state["error"])
        return JSONResponse(status_code=422, content={"error": state["error"]})
    return Response(content=encode_pgm(state["image"]), media_type=PGM_MEDIA_TYPE)


@app.post("/api/decode")
async def decode(request: Request, payload_bits: int = 10, expected: Optional[str] = None,
                 bright_fraction: float = 0.05, invert: bool = False):
    """Decode an uploaded PGM or PNG body into a report."""
    try:
        expected_code = Payload.from_string(expected) if expected else None
        decoder = RollingShutterDecoder(payload_bits=len(expected_code) if expected_code else payload_bits,
                                        bright_fraction=bright_fraction, invert=invert)
        img = decode_image_bytes(await request.body(), source="upload")
    except (ImageFormatError, ValueError) as e:
        return JSONResponse(status_code=422, content={"error": str(e)})

    report = decoder.decode(img, expected=expected_code, file="upload")
    logger.log_decode("upload", report.model_dump())
    return JSONResponse(content=report.model_dump())


@app.websocket("/ws/sweep")
async def sweep_endpoint(websocket: WebSocket):
    """
    Stream a sweep: send {"type": "sweep", "device": ..., "settings": {...}}
    and receive one "row" message per grid point, then a "summary".
    """
    await websocket.accept()
    loop = asyncio.get_running_loop()
    try:
        while True:
            data = await websocket.receive_json()
            message_type = data.get("type")

            if message_type == "sweep":
                try:
                    config = _config(data.get("device", "phone"), data.get("settings", {}))
                except ConfigError as e:
                    await websocket.send_json({"type": "error", "message": str(e)})
                    continue

                def send_row(row):
                    asyncio.run_coroutine_threadsafe(
                        websocket.send_json({"type": "row", "data": row.model_dump()}), loop
                    ).result()

                result = await asyncio.to_thread(run_sweep, config, None, send_row)
                await websocket.send_json({
                    "type": "summary",
                    "rows": len(result.rows),
                    "total_time_ms": result.execution_time_ms
                })

            elif message_type == "ping":
                await websocket.send_json({"type": "pong"})

    except WebSocketDisconnect:
        print("[Server] Client disconnected")
    except Exception as e:
        logger.log_error("ws/sweep", str(e))


@app.on_event("startup")
async def startup_event():
    """Initialize on startup."""
    print("=" * 70)
    print("Rolling-Shutter OCC Simulator - HTTP/WebSocket Server")
    print("=" * 70)


if __name__ == "__main__":
    port = int(os.getenv("PORT", 8000))
    print(f"Starting server on port {port}...")
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="info")
