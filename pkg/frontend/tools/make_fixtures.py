"""Record the console's test fixtures from a live in-process gateway.

Builds a session with a planted stress spike, a transcript-only stretch,
and a gaze-only second, then saves the exact response bodies the web
console consumes. Run from the repository root after installing the
package:

    python3 frontend/tools/make_fixtures.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from starlette.testclient import TestClient

from secondsight.config import ServiceConfig
from secondsight.service import build_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SESSION = "berlin-standup"
STARTED = 1_700_000_000_000
NOW = STARTED + 86_400_000


def transcript_lines() -> bytes:
    import json

    segments = [
        {"start_ms": 0, "end_ms": 2500, "speaker": "A", "text": "routine standup notes", "confidence": 0.97},
        {"start_ms": 2500, "end_ms": 4200, "speaker": "B", "text": "sprint board review", "confidence": 0.94},
        {"start_ms": 30_000, "end_ms": 31_000, "speaker": "A", "text": "vendor outage escalated", "confidence": 0.95},
        {"start_ms": 31_000, "end_ms": 32_000, "speaker": "B", "text": "mitigation owner assigned", "confidence": 0.9},
        {"start_ms": 32_000, "end_ms": 34_000, "speaker": "A", "text": "rollback decision captured", "confidence": 0.92},
        {"start_ms": 46_000, "end_ms": 47_500, "speaker": "B", "text": "follow-up scheduled", "confidence": 0.9},
    ]
    return "\n".join(json.dumps(seg) for seg in segments).encode() + b"\n"


def physio_lines() -> bytes:
    rows = ["t_ms,channel,value"]
    for s in range(45):
        hot = 30 <= s <= 33
        rows.append(f"{s * 1000},HR,{100.0 if hot else 70.0}")
        rows.append(f"{s * 1000},GSR,{5.0 if hot else 1.0}")
    return ("\n".join(rows) + "\n").encode()


def gaze_lines() -> bytes:
    import json

    events = [
        {"kind": "saccade", "start_ms": 2500, "duration_ms": 40, "amplitude_deg": 5.5},
        {"kind": "fixation", "start_ms": 30_200, "duration_ms": 600, "x": 0.5, "y": 0.5},
        {"kind": "blink", "start_ms": 31_500, "duration_ms": 140},
        {"kind": "fixation", "start_ms": 32_100, "duration_ms": 800, "x": 0.4, "y": 0.6},
        {"kind": "fixation", "start_ms": 50_200, "duration_ms": 600, "x": 0.6, "y": 0.3},
    ]
    return "\n".join(json.dumps(ev) for ev in events).encode() + b"\n"


def save(name: str, response) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    path = FIXTURES / name
    path.write_text(response.text if response.text.endswith("\n") else response.text + "\n")
    print(f"wrote {path.relative_to(Path.cwd())} ({response.status_code})")


def main() -> int:
    with tempfile.TemporaryDirectory() as root:
        app = build_app(ServiceConfig(archive_root=root))
        client = TestClient(app)

        created = client.post(
            "/sessions",
            json={
                "session_id": SESSION,
                "started_at": STARTED,
                "capture_enabled": True,
                "timezone": "Europe/Berlin",
            },
        )
        assert created.status_code == 201, created.text
        for modality, body in (
            ("transcript", transcript_lines()),
            ("physio", physio_lines()),
            ("gaze", gaze_lines()),
        ):
            ingested = client.post(f"/sessions/{SESSION}/ingest/{modality}", content=body)
            assert ingested.status_code == 200, ingested.text
        finalized = client.post(f"/sessions/{SESSION}/finalize")
        assert finalized.status_code == 200, finalized.text

        save("manifest.json", client.patch(f"/sessions/{SESSION}/consent", json={}))
        save(
            "query.json",
            client.get(
                "/query",
                params={
                    "q": "What was discussed during moments of elevated stress?",
                    "tz": "UTC",
                    "now": NOW,
                },
            ),
        )
        save(
            "query_empty.json",
            client.get(
                "/query",
                params={
                    "q": "elevated stress yesterday",
                    "tz": "UTC",
                    "now": STARTED + 40 * 86_400_000,
                },
            ),
        )
        save("timeline.json", client.get(f"/sessions/{SESSION}/timeline", params={"from": 28, "to": 52}))
        save(
            "timeline_empty.json",
            client.get(f"/sessions/{SESSION}/timeline", params={"from": 200, "to": 210}),
        )
        save("stats.json", client.get(f"/sessions/{SESSION}/stats"))
        save(
            "stats_empty.json",
            client.get(f"/sessions/{SESSION}/stats", params={"from": 200, "to": 210}),
        )
        error = client.get(f"/sessions/{SESSION}/timeline", params={"from": 5, "to": 2})
        assert error.status_code == 400, error.text
        save("error.json", error)
    return 0


if __name__ == "__main__":
    sys.exit(main())
