"""Shared domain types for the episodic memory engine.

Raw per-modality inputs (transcript segments, physiological samples, gaze
events) carry session-relative millisecond timestamps; archived records
additionally carry absolute UTC milliseconds. Every type validates its
invariants at construction and is immutable afterwards, so values are safe
to share across concurrent readers.

Canonical on-disk field names are exactly the lowercase attribute names
used here; absent optional parts are omitted keys, never null.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import InvalidTimezone, MissingField, ValidationError

MODALITIES = frozenset({"speech", "physio", "gaze"})

# Physiological channels, in canonical serialization order.
CHANNELS = ("HR", "GSR")

# Physical sanity bounds: HR in beats/min, GSR in microsiemens.
HR_RANGE = (0.0, 300.0)

GAZE_KINDS = frozenset({"fixation", "blink", "saccade"})


# ---------------------------------------------------------------------------
# field coercion helpers

def _int_field(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got bool")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ValidationError(f"{name} must be an integer, got {value!r}")


def _float_field(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return out


def _str_field(value: Any, name: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"{name} must be a string, got {value!r}")
    return value


def dumps(obj: Any) -> str:
    """Serialize to the canonical compact JSON used on disk and on the wire."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# session manifest

@dataclass(frozen=True)
class SessionManifest:
    """Session identity plus the consent/retention flags that gate every
    other operation on it.

    retention_days of None means unlimited retention.
    """

    session_id: str
    started_at: int
    timezone: str = "UTC"
    capture_enabled: bool = True
    modalities_enabled: frozenset[str] = field(default_factory=lambda: frozenset(MODALITIES))
    excluded_speakers: frozenset[str] = field(default_factory=frozenset)
    retention_days: int | None = None

    def __post_init__(self):
        if not self.session_id:
            raise MissingField("session_id must be nonempty")
        if self.started_at < 0:
            raise ValidationError("started_at must be >= 0 (ms UTC)")
        try:
            ZoneInfo(self.timezone)
        except (ZoneInfoNotFoundError, ValueError) as exc:
            raise InvalidTimezone(f"unknown timezone {self.timezone!r}") from exc
        bad = self.modalities_enabled - MODALITIES
        if bad:
            raise ValidationError(f"unknown modalities: {sorted(bad)}")
        if self.retention_days is not None and self.retention_days < 0:
            raise ValidationError("retention_days must be >= 0 or unlimited")


_MANIFEST_FIELDS = (
    "session_id",
    "started_at",
    "timezone",
    "capture_enabled",
    "modalities_enabled",
    "excluded_speakers",
    "retention_days",
)


def validate_manifest(raw: Mapping[str, Any]) -> SessionManifest:
    """Validate a raw manifest mapping and apply defaults.

    Defaults: timezone=UTC, retention unlimited, all modalities enabled,
    no excluded speakers. session_id, started_at and capture_enabled are
    required — consent must be explicit. capture_enabled=false is valid
    data here, not an error.
    """
    if not isinstance(raw, Mapping):
        raise ValidationError("manifest must be a JSON object")
    unknown = set(raw) - set(_MANIFEST_FIELDS)
    if unknown:
        raise ValidationError(f"unknown manifest fields: {sorted(unknown)}")
    for required in ("session_id", "started_at", "capture_enabled"):
        if required not in raw:
            raise MissingField(f"manifest field {required!r} is required")
    session_id = _str_field(raw["session_id"], "session_id")
    started_at = _int_field(raw["started_at"], "started_at")
    if not isinstance(raw["capture_enabled"], bool):
        raise ValidationError("capture_enabled must be a boolean")

    timezone = _str_field(raw.get("timezone", "UTC"), "timezone")

    modalities = raw.get("modalities_enabled")
    if modalities is None:
        modalities_set = frozenset(MODALITIES)
    else:
        if not isinstance(modalities, (list, tuple, set, frozenset)):
            raise ValidationError("modalities_enabled must be a list")
        modalities_set = frozenset(_str_field(m, "modality") for m in modalities)

    excluded = raw.get("excluded_speakers") or []
    if not isinstance(excluded, (list, tuple, set, frozenset)):
        raise ValidationError("excluded_speakers must be a list")
    excluded_set = frozenset(_str_field(s, "speaker") for s in excluded)

    retention = raw.get("retention_days")
    retention_days = None if retention is None else _int_field(retention, "retention_days")

    return SessionManifest(
        session_id=session_id,
        started_at=started_at,
        timezone=timezone,
        capture_enabled=raw["capture_enabled"],
        modalities_enabled=modalities_set,
        excluded_speakers=excluded_set,
        retention_days=retention_days,
    )


def manifest_to_dict(manifest: SessionManifest) -> dict[str, Any]:
    out: dict[str, Any] = {
        "session_id": manifest.session_id,
        "started_at": manifest.started_at,
        "timezone": manifest.timezone,
        "capture_enabled": manifest.capture_enabled,
        "modalities_enabled": sorted(manifest.modalities_enabled),
        "excluded_speakers": sorted(manifest.excluded_speakers),
    }
    if manifest.retention_days is not None:
        out["retention_days"] = manifest.retention_days
    return out


# ---------------------------------------------------------------------------
# raw modality inputs

@dataclass(frozen=True)
class TranscriptSegment:
    """One diarized, transcribed stretch of speech.

    Timestamps are session-relative ms; [start_ms, end_ms) is half-open.
    """

    start_ms: int
    end_ms: int
    speaker: str
    text: str
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "start_ms", _int_field(self.start_ms, "start_ms"))
        object.__setattr__(self, "end_ms", _int_field(self.end_ms, "end_ms"))
        object.__setattr__(self, "confidence", _float_field(self.confidence, "confidence"))
        if self.start_ms < 0:
            raise ValidationError("start_ms must be >= 0")
        if self.start_ms >= self.end_ms:
            raise ValidationError("start_ms must be < end_ms")
        if not _str_field(self.text, "text").strip():
            raise ValidationError("text must be nonempty after trimming")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("confidence must be in [0,1]")


@dataclass(frozen=True)
class PhysioSample:
    """One physiological reading: HR in beats/min or GSR in microsiemens."""

    t_ms: int
    channel: str
    value: float

    def __post_init__(self):
        object.__setattr__(self, "t_ms", _int_field(self.t_ms, "t_ms"))
        object.__setattr__(self, "value", _float_field(self.value, "value"))
        if self.t_ms < 0:
            raise ValidationError("t_ms must be >= 0")
        if self.channel not in CHANNELS:
            raise ValidationError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if not math.isfinite(self.value):
            raise ValidationError("value must be finite")
        if self.channel == "HR" and not (HR_RANGE[0] < self.value < HR_RANGE[1]):
            raise ValidationError(f"HR must be in ({HR_RANGE[0]:g}, {HR_RANGE[1]:g})")
        if self.channel == "GSR" and self.value < 0:
            raise ValidationError("GSR must be >= 0")


@dataclass(frozen=True)
class GazeEvent:
    """A fixation, blink, or saccade.

    Fixations carry normalized screen coordinates, saccades an amplitude in
    degrees, blinks neither.
    """

    kind: str
    start_ms: int
    duration_ms: int
    x: float | None = None
    y: float | None = None
    amplitude_deg: float | None = None

    def __post_init__(self):
        if self.kind not in GAZE_KINDS:
            raise ValidationError(f"kind must be one of {sorted(GAZE_KINDS)}, got {self.kind!r}")
        object.__setattr__(self, "start_ms", _int_field(self.start_ms, "start_ms"))
        object.__setattr__(self, "duration_ms", _int_field(self.duration_ms, "duration_ms"))
        for name in ("x", "y", "amplitude_deg"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _float_field(value, name))
        if self.start_ms < 0:
            raise ValidationError("start_ms must be >= 0")
        if self.duration_ms <= 0:
            raise ValidationError("duration_ms must be > 0")
        has_coords = self.x is not None or self.y is not None
        if self.kind == "fixation":
            if self.x is None or self.y is None:
                raise ValidationError("fixation requires x and y")
            if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
                raise ValidationError("x and y must be in [0,1]")
            if self.amplitude_deg is not None:
                raise ValidationError("fixation carries no amplitude_deg")
        elif self.kind == "saccade":
            if self.amplitude_deg is None:
                raise ValidationError("saccade requires amplitude_deg")
            if self.amplitude_deg < 0:
                raise ValidationError("amplitude_deg must be >= 0")
            if has_coords:
                raise ValidationError("saccade carries no x/y")
        else:  # blink
            if has_coords or self.amplitude_deg is not None:
                raise ValidationError("blink carries no x/y/amplitude_deg")


# ---------------------------------------------------------------------------
# per-second summaries

@dataclass(frozen=True)
class ChannelStats:
    """One channel's aggregate over a single second.

    z_mean is the session-normalized z-score of `mean`; it stays None until
    normalization runs over the whole session.
    """

    mean: float
    min: float
    max: float
    count: int
    z_mean: float | None = None

    def __post_init__(self):
        for name in ("mean", "min", "max"):
            object.__setattr__(self, name, _float_field(getattr(self, name), name))
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if not (self.min <= self.mean <= self.max):
            raise ValidationError("requires min <= mean <= max")
        if self.z_mean is not None:
            object.__setattr__(self, "z_mean", _float_field(self.z_mean, "z_mean"))


# A record's physio summary: channel name -> stats, only for channels with
# data in that second. Never an empty mapping when present.
PhysioSummary = Mapping[str, ChannelStats]


@dataclass(frozen=True)
class GazeSummary:
    """Gaze activity within one second.

    Events are counted by start time; fixation_ms is fixation time
    overlapping this second's window, clipped to [0,1000], so focus is a
    true fraction.
    """

    fixation_count: int
    blink_count: int
    saccade_count: int
    fixation_ms: int
    focus: float

    def __post_init__(self):
        for name in ("fixation_count", "blink_count", "saccade_count", "fixation_ms"):
            object.__setattr__(self, name, _int_field(getattr(self, name), name))
        for name in ("fixation_count", "blink_count", "saccade_count"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if not 0 <= self.fixation_ms <= 1000:
            raise ValidationError("fixation_ms must be in [0,1000]")
        if self.focus != self.fixation_ms / 1000:
            raise ValidationError("requires focus == fixation_ms / 1000")


@dataclass(frozen=True)
class TranscriptRef:
    """A segment's contribution to one second: (segment index, speaker, text)."""

    seg: int
    speaker: str
    text: str

    def __post_init__(self):
        if self.seg < 0:
            raise ValidationError("seg must be >= 0")
        if not self.text:
            raise ValidationError("text must be nonempty")


@dataclass(frozen=True)
class EpisodicRecord:
    """One one-second multimodal snapshot.

    ts_utc must equal manifest.started_at + 1000 * second; the archive
    checks that on append since the record itself never sees the manifest.
    Records with no modality content are never constructed.
    """

    session_id: str
    second: int
    ts_utc: int
    transcript: tuple[TranscriptRef, ...] = ()
    physio: PhysioSummary | None = None
    gaze: GazeSummary | None = None
    stress: float | None = None

    def __post_init__(self):
        if not self.session_id:
            raise ValidationError("session_id must be nonempty")
        object.__setattr__(self, "second", _int_field(self.second, "second"))
        object.__setattr__(self, "ts_utc", _int_field(self.ts_utc, "ts_utc"))
        if self.stress is not None:
            object.__setattr__(self, "stress", _float_field(self.stress, "stress"))
        if self.second < 0:
            raise ValidationError("second must be >= 0")
        if self.ts_utc < 0:
            raise ValidationError("ts_utc must be >= 0")
        object.__setattr__(self, "transcript", tuple(self.transcript))
        if self.physio is not None:
            if not self.physio:
                raise ValidationError("physio summary must cover >= 1 channel")
            bad = set(self.physio) - set(CHANNELS)
            if bad:
                raise ValidationError(f"unknown physio channels: {sorted(bad)}")
        if not self.transcript and self.physio is None and self.gaze is None:
            raise ValidationError("record must carry at least one modality")
        if self.stress is not None and self.physio is None:
            raise ValidationError("stress requires a physio summary")


# ---------------------------------------------------------------------------
# record serialization (canonical key order is normative for the archive)

def _channel_stats_to_dict(stats: ChannelStats) -> dict[str, Any]:
    out: dict[str, Any] = {
        "mean": stats.mean,
        "min": stats.min,
        "max": stats.max,
        "count": stats.count,
    }
    if stats.z_mean is not None:
        out["z_mean"] = stats.z_mean
    return out


def record_to_dict(record: EpisodicRecord) -> dict[str, Any]:
    """Canonical dict form: fixed key order, absent modalities omitted."""
    out: dict[str, Any] = {
        "session_id": record.session_id,
        "second": record.second,
        "ts_utc": record.ts_utc,
    }
    if record.transcript:
        out["transcript"] = [
            {"seg": ref.seg, "speaker": ref.speaker, "text": ref.text}
            for ref in record.transcript
        ]
    if record.physio is not None:
        out["physio"] = {
            ch: _channel_stats_to_dict(record.physio[ch])
            for ch in CHANNELS
            if ch in record.physio
        }
    if record.gaze is not None:
        g = record.gaze
        out["gaze"] = {
            "fixation_count": g.fixation_count,
            "blink_count": g.blink_count,
            "saccade_count": g.saccade_count,
            "fixation_ms": g.fixation_ms,
            "focus": g.focus,
        }
    if record.stress is not None:
        out["stress"] = record.stress
    return out


def _channel_stats_from_dict(raw: Mapping[str, Any], channel: str) -> ChannelStats:
    if not isinstance(raw, Mapping):
        raise ValidationError(f"physio[{channel}] must be an object")
    unknown = set(raw) - {"mean", "min", "max", "count", "z_mean"}
    if unknown:
        raise ValidationError(f"unknown physio fields: {sorted(unknown)}")
    for req in ("mean", "min", "max", "count"):
        if req not in raw:
            raise MissingField(f"physio[{channel}].{req} is required")
    z = raw.get("z_mean")
    return ChannelStats(
        mean=_float_field(raw["mean"], "mean"),
        min=_float_field(raw["min"], "min"),
        max=_float_field(raw["max"], "max"),
        count=_int_field(raw["count"], "count"),
        z_mean=None if z is None else _float_field(z, "z_mean"),
    )


def record_from_dict(raw: Mapping[str, Any]) -> EpisodicRecord:
    """Strict inverse of record_to_dict; unknown keys are rejected."""
    if not isinstance(raw, Mapping):
        raise ValidationError("record must be a JSON object")
    unknown = set(raw) - {"session_id", "second", "ts_utc", "transcript", "physio", "gaze", "stress"}
    if unknown:
        raise ValidationError(f"unknown record fields: {sorted(unknown)}")
    for req in ("session_id", "second", "ts_utc"):
        if req not in raw:
            raise MissingField(f"record field {req!r} is required")

    transcript: list[TranscriptRef] = []
    for entry in raw.get("transcript", ()):
        if not isinstance(entry, Mapping) or set(entry) != {"seg", "speaker", "text"}:
            raise ValidationError("transcript entries must be {seg, speaker, text}")
        transcript.append(
            TranscriptRef(
                seg=_int_field(entry["seg"], "seg"),
                speaker=_str_field(entry["speaker"], "speaker"),
                text=_str_field(entry["text"], "text"),
            )
        )

    physio: dict[str, ChannelStats] | None = None
    if "physio" in raw:
        if not isinstance(raw["physio"], Mapping):
            raise ValidationError("physio must be an object")
        physio = {
            ch: _channel_stats_from_dict(raw["physio"][ch], ch)
            for ch in CHANNELS
            if ch in raw["physio"]
        }
        if set(raw["physio"]) - set(CHANNELS):
            raise ValidationError("unknown physio channels")

    gaze: GazeSummary | None = None
    if "gaze" in raw:
        g = raw["gaze"]
        expected = {"fixation_count", "blink_count", "saccade_count", "fixation_ms", "focus"}
        if not isinstance(g, Mapping) or set(g) != expected:
            raise ValidationError("gaze summary must carry exactly its five fields")
        gaze = GazeSummary(
            fixation_count=_int_field(g["fixation_count"], "fixation_count"),
            blink_count=_int_field(g["blink_count"], "blink_count"),
            saccade_count=_int_field(g["saccade_count"], "saccade_count"),
            fixation_ms=_int_field(g["fixation_ms"], "fixation_ms"),
            focus=_float_field(g["focus"], "focus"),
        )

    stress = raw.get("stress")
    return EpisodicRecord(
        session_id=_str_field(raw["session_id"], "session_id"),
        second=_int_field(raw["second"], "second"),
        ts_utc=_int_field(raw["ts_utc"], "ts_utc"),
        transcript=tuple(transcript),
        physio=physio,
        gaze=gaze,
        stress=None if stress is None else _float_field(stress, "stress"),
    )
