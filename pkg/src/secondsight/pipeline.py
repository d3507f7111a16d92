"""Session lifecycle: stage raw streams, then finalize into the archive.

Ingestion validates and stages raw modality lines under the session
directory; excluded-speaker segments are redacted BEFORE anything is
staged, so excluded text never touches disk. Alignment is deferred to
finalize because session-wide normalization needs the whole session.
"""

from __future__ import annotations

import os
from contextlib import suppress
from pathlib import Path
from shutil import rmtree

from .align import align_session
from .archive import Archive
from .errors import ArchiveCorrupt, ConsentDisabled, SessionFinalized, ValidationError
from .ingest import (
    IngestReport,
    Stream,
    gaze_event_line,
    parse_gaze_stream,
    parse_physio_stream,
    parse_transcript_stream,
    physio_sample_line,
    redact_excluded_speakers,
    transcript_segment_line,
)
from .model import SessionManifest

# modality path name -> (manifest flag, staging file, parser, serializer)
_MODALITIES = {
    "transcript": ("speech", "transcript.jsonl", parse_transcript_stream, transcript_segment_line),
    "physio": ("physio", "physio.csv", parse_physio_stream, physio_sample_line),
    "gaze": ("gaze", "gaze.jsonl", parse_gaze_stream, gaze_event_line),
}


def _staging_dir(archive: Archive, session_id: str) -> Path:
    return archive.session_dir(session_id) / "staging"


def _check_writable(archive: Archive, session_id: str, manifest: SessionManifest) -> None:
    if not manifest.capture_enabled:
        raise ConsentDisabled(f"capture disabled for session {session_id!r}")
    if archive.is_finalized(session_id):
        raise SessionFinalized(f"session {session_id!r} is already finalized")


def ingest_stream(
    archive: Archive, session_id: str, modality: str, stream: Stream
) -> IngestReport:
    """Validate a raw stream and stage its accepted items for finalize.

    Requires capture consent and the modality enabled in the manifest (both
    re-read per call). Transcript segments from excluded speakers are
    dropped before staging. Repeated calls append.
    """
    if modality not in _MODALITIES:
        raise ValidationError(f"unknown modality: {modality!r}")
    flag, filename, parse, serialize = _MODALITIES[modality]
    manifest = archive.manifest(session_id)
    _check_writable(archive, session_id, manifest)
    if flag not in manifest.modalities_enabled:
        raise ConsentDisabled(f"modality {flag!r} disabled for session {session_id!r}")

    items, report = parse(stream)
    if modality == "transcript":
        items = redact_excluded_speakers(items, manifest)

    staging = _staging_dir(archive, session_id)
    staging.mkdir(exist_ok=True)
    blob = "".join(serialize(item) + "\n" for item in items).encode("utf-8")
    with open(staging / filename, "ab") as f:
        f.write(blob)
        f.flush()
        os.fsync(f.fileno())
    return report


def _load_staged(archive: Archive, session_id: str, modality: str) -> list:
    _, filename, parse, _ = _MODALITIES[modality]
    path = _staging_dir(archive, session_id) / filename
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        return []
    items, report = parse(data)
    if report.rejected:
        raise ArchiveCorrupt(
            f"staged {modality} data for {session_id!r} no longer parses "
            f"(line {report.first_error[0]}: {report.first_error[1]})"
        )
    return items


def finalize_session(archive: Archive, session_id: str) -> int:
    """Align staged streams into episodic records and archive them.

    Idempotent: re-finalizing returns the recorded count without touching
    the archive. Modalities disabled at finalize time are excluded even if
    staged earlier, and redaction is re-applied under the current manifest.
    """
    manifest = archive.manifest(session_id)
    info = archive.finalized_info(session_id)
    if info is not None:
        return info["record_count"]
    if not manifest.capture_enabled:
        raise ConsentDisabled(f"capture disabled for session {session_id!r}")

    enabled = manifest.modalities_enabled
    segments = _load_staged(archive, session_id, "transcript") if "speech" in enabled else []
    physio = _load_staged(archive, session_id, "physio") if "physio" in enabled else []
    gaze = _load_staged(archive, session_id, "gaze") if "gaze" in enabled else []
    segments = redact_excluded_speakers(segments, manifest)

    records = align_session(manifest, segments, physio, gaze)
    total = archive.append_records(session_id, records)
    archive.mark_finalized(session_id, total)
    with suppress(OSError):  # staged raw data is consumed; records are canon
        rmtree(_staging_dir(archive, session_id))
    return total
