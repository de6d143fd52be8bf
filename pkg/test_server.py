"""
Test script for the HTTP/WebSocket server
"""

import sys
from pathlib import Path

from fastapi.testclient import TestClient

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from server import PGM_MEDIA_TYPE, app

client = TestClient(app)

SMALL_SWEEP = {
    "sweep.frequencies_khz": "4",
    "sweep.distances_cm": "60",
    "sweep.exposures_us": "68",
    "sweep.trials": "1",
}


def test_health():
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "service": "occsim"}


def test_simulate_then_decode():
    response = client.post("/api/simulate", json={"frequency_khz": 4, "distance_cm": 60,
                                                  "settings": {"transmitter.panel_width_cm": 60,
                                                               "transmitter.panel_height_cm": 60}})
    assert response.status_code == 200
    assert response.headers["content-type"].startswith(PGM_MEDIA_TYPE)
    assert response.content.startswith(b"P5\n1080 1920\n255\n")

    decoded = client.post("/api/decode?expected=1011010010", content=response.content)
    assert decoded.status_code == 200
    report = decoded.json()
    assert report["file"] == "upload"
    assert set(report) >= {"received_code", "headers_found", "correct_bits"}


def test_simulate_rejects_bad_settings():
    response = client.post("/api/simulate", json={"frequency_khz": 4, "distance_cm": 60, "device": "pager"})
    assert response.status_code == 422
    response = client.post("/api/simulate", json={"frequency_khz": 4, "distance_cm": 60, "exposure_us": 2})
    assert response.status_code == 422
    assert response.json()["error"].startswith("encode:")


def test_decode_rejects_garbage():
    response = client.post("/api/decode", content=b"not an image")
    assert response.status_code == 422
    assert "error" in response.json()


def test_sweep_websocket():
    with client.websocket_connect("/ws/sweep") as websocket:
        websocket.send_json({"type": "ping"})
        assert websocket.receive_json() == {"type": "pong"}

        websocket.send_json({"type": "sweep", "device": "phone", "settings": SMALL_SWEEP})
        row = websocket.receive_json()
        assert row["type"] == "row"
        assert row["data"]["frequency_hz"] == 4000.0
        assert row["data"]["trials"] == 1
        summary = websocket.receive_json()
        assert summary["type"] == "summary"
        assert summary["rows"] == 1

        websocket.send_json({"type": "sweep", "device": "pager"})
        assert websocket.receive_json()["type"] == "error"


def main():
    print("Testing server")
    print("=" * 50)
    tests = [
        test_health,
        test_simulate_then_decode,
        test_simulate_rejects_bad_settings,
        test_decode_rejects_garbage,
        test_sweep_websocket,
    ]
    for test in tests:
        test()
        print(f"  [OK] {test.__name__}")
    print("\n" + "=" * 50)
    print("[OK] Server tests completed!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
