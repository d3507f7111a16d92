"""Stream parsers for the three modality inputs, plus bystander redaction.

Each parser is a pure function over one stream and validates lines
independently: a malformed line is counted as rejected, never fatal, so a
noisy sensor degrades the session instead of killing it. Only an I/O
failure on the stream itself raises.

Wire formats: transcript and gaze arrive as line-delimited JSON records
(`transcript.jsonl`, `gaze.jsonl`), physio as CSV `t_ms,channel,value`
(`physio.csv`) with an optional header line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Any, Callable, Iterable, Mapping, Union

from .errors import StreamUnreadable, ValidationError
from .model import (
    GazeEvent,
    PhysioSample,
    SessionManifest,
    TranscriptSegment,
    _float_field,
    _int_field,
    _str_field,
    dumps,
)

Stream = Union[bytes, bytearray, str, IO[bytes]]


@dataclass(frozen=True)
class IngestReport:
    """Per-stream parse outcome.

    accepted + rejected equals the number of nonblank input lines (an
    optional physio header line is format scaffolding, not input, and is
    excluded). first_error is (1-based line number, reason) for the first
    rejected line.
    """

    accepted: int
    rejected: int
    first_error: tuple[int, str] | None = None


def _read_stream(stream: Stream) -> bytes:
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream)
    if isinstance(stream, str):
        return stream.encode("utf-8")
    try:
        data = stream.read()
    except OSError as exc:
        raise StreamUnreadable(f"cannot read stream: {exc}") from exc
    if isinstance(data, str):
        return data.encode("utf-8")
    return data


def _is_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_lines(
    stream: Stream,
    parse_line: Callable[[str], Any],
    skip_header: bool = False,
) -> tuple[list[Any], IngestReport]:
    data = _read_stream(stream)
    items: list[Any] = []
    rejected = 0
    first_error: tuple[int, str] | None = None
    saw_content = False
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        if not raw.strip():
            continue
        try:
            line = raw.decode("utf-8").strip()
        except UnicodeDecodeError:
            rejected += 1
            first_error = first_error or (lineno, "invalid UTF-8")
            saw_content = True
            continue
        if skip_header and not saw_content:
            saw_content = True
            if not _is_numeric(line.split(",", 1)[0].strip()):
                continue
        saw_content = True
        try:
            items.append(parse_line(line))
        except (ValidationError, ValueError) as exc:
            rejected += 1
            if first_error is None:
                first_error = (lineno, str(exc))
    return items, IngestReport(accepted=len(items), rejected=rejected, first_error=first_error)


def _json_object(line: str) -> Mapping[str, Any]:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValidationError("line is not a JSON object")
    return obj


def _parse_transcript_line(line: str) -> TranscriptSegment:
    obj = _json_object(line)
    for req in ("start_ms", "end_ms", "speaker", "text", "confidence"):
        if req not in obj:
            raise ValidationError(f"missing field {req!r}")
    # Unknown extra keys are tolerated: device exports vary.
    return TranscriptSegment(
        start_ms=_int_field(obj["start_ms"], "start_ms"),
        end_ms=_int_field(obj["end_ms"], "end_ms"),
        speaker=_str_field(obj["speaker"], "speaker"),
        text=_str_field(obj["text"], "text"),
        confidence=_float_field(obj["confidence"], "confidence"),
    )


def _parse_gaze_line(line: str) -> GazeEvent:
    obj = _json_object(line)
    for req in ("kind", "start_ms", "duration_ms"):
        if req not in obj:
            raise ValidationError(f"missing field {req!r}")
    # Kind-specific fields are passed through as given; GazeEvent rejects
    # any combination that violates the kind's contract (e.g. blink+coords).
    return GazeEvent(
        kind=_str_field(obj["kind"], "kind"),
        start_ms=_int_field(obj["start_ms"], "start_ms"),
        duration_ms=_int_field(obj["duration_ms"], "duration_ms"),
        x=None if obj.get("x") is None else _float_field(obj["x"], "x"),
        y=None if obj.get("y") is None else _float_field(obj["y"], "y"),
        amplitude_deg=(
            None
            if obj.get("amplitude_deg") is None
            else _float_field(obj["amplitude_deg"], "amplitude_deg")
        ),
    )


def _parse_physio_line(line: str) -> PhysioSample:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != 3:
        raise ValidationError(f"expected 3 CSV fields, got {len(parts)}")
    return PhysioSample(
        t_ms=_int_field(float(parts[0]), "t_ms"),
        channel=parts[1],
        value=float(parts[2]),
    )


def parse_transcript_stream(stream: Stream) -> tuple[list[TranscriptSegment], IngestReport]:
    """Parse line-delimited JSON transcript segments, in input order."""
    return _parse_lines(stream, _parse_transcript_line)


def parse_physio_stream(stream: Stream) -> tuple[list[PhysioSample], IngestReport]:
    """Parse CSV physio samples; a non-numeric first field on the first
    nonblank line is treated as a header and skipped."""
    return _parse_lines(stream, _parse_physio_line, skip_header=True)


def parse_gaze_stream(stream: Stream) -> tuple[list[GazeEvent], IngestReport]:
    """Parse line-delimited JSON gaze events, in input order."""
    return _parse_lines(stream, _parse_gaze_line)


def redact_excluded_speakers(
    segments: Iterable[TranscriptSegment], manifest: SessionManifest
) -> list[TranscriptSegment]:
    """Drop every segment spoken by an excluded (bystander) speaker.

    Order is preserved and the operation is idempotent; it runs before
    alignment so excluded speech never reaches the archive.
    """
    excluded = manifest.excluded_speakers
    return [seg for seg in segments if seg.speaker not in excluded]


# ---------------------------------------------------------------------------
# canonical line serializers, used when staging validated streams to disk

def transcript_segment_line(seg: TranscriptSegment) -> str:
    return dumps(
        {
            "start_ms": seg.start_ms,
            "end_ms": seg.end_ms,
            "speaker": seg.speaker,
            "text": seg.text,
            "confidence": seg.confidence,
        }
    )


def gaze_event_line(event: GazeEvent) -> str:
    out: dict[str, Any] = {
        "kind": event.kind,
        "start_ms": event.start_ms,
        "duration_ms": event.duration_ms,
    }
    if event.kind == "fixation":
        out["x"] = event.x
        out["y"] = event.y
    elif event.kind == "saccade":
        out["amplitude_deg"] = event.amplitude_deg
    return dumps(out)


def physio_sample_line(sample: PhysioSample) -> str:
    return f"{sample.t_ms},{sample.channel},{sample.value!r}"
