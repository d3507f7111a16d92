"""Append-only archival storage.

Layout under the archive root, one directory per session:

    <root>/<session_id>/manifest.json    canonical manifest document
    <root>/<session_id>/records.jsonl    one canonical record per line
    <root>/<session_id>/index.json       derived cache; never authoritative
    <root>/<session_id>/finalized.json   present iff the session is finalized
    <root>/<session_id>/staging/         raw validated stream lines pre-finalize

Appends are a single buffered write followed by fsync, so a crash leaves at
worst one torn final line; reopening repairs the tail (a parseable
unterminated line is completed, an unparseable one is dropped) and every
complete prior line survives. Deletion rewrites records.jsonl to a temp file
and renames it over the original, so concurrent readers see the old file or
the new file, never a mix.
"""

from __future__ import annotations

import json
import os
import re
import shutil
import tempfile
import time
from contextlib import suppress
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    ArchiveCorrupt,
    ConsentDisabled,
    DuplicateSession,
    InvalidRange,
    OutOfOrderAppend,
    SessionFinalized,
    UnknownSession,
    ValidationError,
)
from .model import (
    CHANNELS,
    EpisodicRecord,
    SessionManifest,
    _int_field,
    dumps,
    manifest_to_dict,
    record_from_dict,
    record_to_dict,
    validate_manifest,
)

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,200}$")

_MS_PER_DAY = 86_400_000


def _check_session_id(session_id: str) -> str:
    if not isinstance(session_id, str) or not _SESSION_ID_RE.fullmatch(session_id):
        raise ValidationError(
            "session_id must match [A-Za-z0-9._-]{1,200} to be archivable"
        )
    if session_id in (".", ".."):
        raise ValidationError("session_id may not be a directory alias")
    return session_id


def _fsync_dir(path: Path) -> None:
    with suppress(OSError):  # not all filesystems support directory fsync
        fd = os.open(path, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)


def _write_atomic(path: Path, data: bytes) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        with suppress(OSError):
            os.unlink(tmp_name)
        raise
    _fsync_dir(path.parent)


def _file_signature(path: Path) -> tuple[int, int, int] | None:
    try:
        st = path.stat()
    except FileNotFoundError:
        return None
    return (st.st_ino, st.st_size, st.st_mtime_ns)


@dataclass(frozen=True)
class SessionStats:
    """Aggregate statistics over a record range.

    Means and rates are None when no underlying data exists in the range;
    counts are always present.
    """

    record_count: int
    speech_seconds: int
    mean_HR: float | None
    mean_GSR: float | None
    fixations_per_minute: float | None
    blink_count: int
    saccade_count: int
    elevated_stress_seconds: int
    elevated_episode_count: int

    def to_dict(self) -> dict:
        out: dict = {
            "record_count": self.record_count,
            "speech_seconds": self.speech_seconds,
        }
        if self.mean_HR is not None:
            out["mean_HR"] = self.mean_HR
        if self.mean_GSR is not None:
            out["mean_GSR"] = self.mean_GSR
        if self.fixations_per_minute is not None:
            out["fixations_per_minute"] = self.fixations_per_minute
        out["blink_count"] = self.blink_count
        out["saccade_count"] = self.saccade_count
        out["elevated_stress_seconds"] = self.elevated_stress_seconds
        out["elevated_episode_count"] = self.elevated_episode_count
        return out


def compute_stats_from_records(
    records: Sequence[EpisodicRecord], theta: float
) -> SessionStats:
    """Aggregate a record list; factored out so callers can cross-check
    stored stats against any record source."""
    speech_seconds = sum(1 for r in records if r.transcript)
    channel_sums = {ch: [0.0, 0] for ch in CHANNELS}
    for r in records:
        if r.physio is None:
            continue
        for ch, stats in r.physio.items():
            acc = channel_sums[ch]
            acc[0] += stats.mean * stats.count
            acc[1] += stats.count
    def weighted(ch: str) -> float | None:
        total, count = channel_sums[ch]
        return total / count if count else None

    gaze_records = [r for r in records if r.gaze is not None]
    fixations = sum(r.gaze.fixation_count for r in gaze_records)
    per_minute = 60.0 * fixations / len(gaze_records) if gaze_records else None

    elevated = [r.second for r in records if r.stress is not None and r.stress > theta]
    episodes = 0
    previous = None
    for second in elevated:
        if previous is None or second != previous + 1:
            episodes += 1
        previous = second

    return SessionStats(
        record_count=len(records),
        speech_seconds=speech_seconds,
        mean_HR=weighted("HR"),
        mean_GSR=weighted("GSR"),
        fixations_per_minute=per_minute,
        blink_count=sum(r.gaze.blink_count for r in gaze_records),
        saccade_count=sum(r.gaze.saccade_count for r in gaze_records),
        elevated_stress_seconds=len(elevated),
        elevated_episode_count=episodes,
    )


class Archive:
    """All persistent state lives under one local root directory.

    Manifests are re-read from disk on every operation that consults
    consent, so an external edit takes effect on the next call. Parsed
    records are cached in-process keyed by the record file's stat signature,
    which any rewrite or append invalidates.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._record_cache: dict[str, tuple[tuple[int, int, int] | None, tuple[EpisodicRecord, ...]]] = {}

    # -- paths -------------------------------------------------------------

    def session_dir(self, session_id: str) -> Path:
        return self.root / _check_session_id(session_id)

    def _existing_dir(self, session_id: str) -> Path:
        try:
            path = self.session_dir(session_id)
        except ValidationError:
            raise UnknownSession(f"unknown session: {session_id!r}") from None
        if not (path / "manifest.json").is_file():
            raise UnknownSession(f"unknown session: {session_id!r}")
        return path

    def _records_path(self, session_id: str) -> Path:
        return self._existing_dir(session_id) / "records.jsonl"

    # -- sessions ----------------------------------------------------------

    def create_session(self, manifest: SessionManifest) -> None:
        path = self.session_dir(manifest.session_id)
        if path.exists():
            raise DuplicateSession(f"session already exists: {manifest.session_id!r}")
        path.mkdir(parents=True)
        _write_atomic(path / "manifest.json", (dumps(manifest_to_dict(manifest)) + "\n").encode("utf-8"))
        (path / "records.jsonl").touch()
        _fsync_dir(path)

    def list_sessions(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / "manifest.json").is_file()
        )

    def manifest(self, session_id: str) -> SessionManifest:
        path = self._existing_dir(session_id) / "manifest.json"
        try:
            raw = json.loads(path.read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise ArchiveCorrupt(f"unreadable manifest for {session_id!r}: {exc}") from exc
        return validate_manifest(raw)

    def update_manifest(self, session_id: str, **changes) -> SessionManifest:
        """Rewrite selected manifest fields (consent toggles and policy)."""
        current = manifest_to_dict(self.manifest(session_id))
        for key, value in changes.items():
            if value is None:
                continue
            if key not in ("capture_enabled", "modalities_enabled", "excluded_speakers", "retention_days", "timezone"):
                raise ValidationError(f"manifest field not updatable: {key}")
            current[key] = value
        if changes.get("retention_days", "absent") is None:
            current.pop("retention_days", None)
        updated = validate_manifest(current)
        path = self._existing_dir(session_id) / "manifest.json"
        _write_atomic(path, (dumps(manifest_to_dict(updated)) + "\n").encode("utf-8"))
        return updated

    def delete_session(self, session_id: str) -> None:
        path = self._existing_dir(session_id)
        shutil.rmtree(path)
        _fsync_dir(self.root)
        self._record_cache.pop(session_id, None)

    # -- finalize marker ---------------------------------------------------

    def mark_finalized(self, session_id: str, record_count: int, now_utc_ms: int | None = None) -> None:
        path = self._existing_dir(session_id) / "finalized.json"
        doc = {
            "finalized_at": int(time.time() * 1000) if now_utc_ms is None else now_utc_ms,
            "record_count": record_count,
        }
        _write_atomic(path, (dumps(doc) + "\n").encode("utf-8"))

    def finalized_info(self, session_id: str) -> dict | None:
        path = self._existing_dir(session_id) / "finalized.json"
        try:
            return json.loads(path.read_text("utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            raise ArchiveCorrupt(f"unreadable finalize marker for {session_id!r}: {exc}") from exc

    def is_finalized(self, session_id: str) -> bool:
        return self.finalized_info(session_id) is not None

    # -- record file parsing -----------------------------------------------

    def _parse_records(self, session_id: str, data: bytes) -> tuple[EpisodicRecord, ...]:
        records: list[EpisodicRecord] = []
        if not data:
            return ()
        lines = data.split(b"\n")
        tail = lines.pop()  # b"" when the file is newline-terminated
        for lineno, line in enumerate(lines, start=1):
            records.append(self._parse_line(session_id, lineno, line))
        if tail:
            try:
                records.append(self._parse_line(session_id, len(lines) + 1, tail))
            except ArchiveCorrupt:
                pass  # torn final line from an interrupted append
        return tuple(records)

    def _parse_line(self, session_id: str, lineno: int, line: bytes) -> EpisodicRecord:
        try:
            return record_from_dict(json.loads(line.decode("utf-8")))
        except (ValueError, ValidationError) as exc:
            raise ArchiveCorrupt(
                f"corrupt record in {session_id!r} at line {lineno}: {exc}"
            ) from exc

    def _load_records(self, session_id: str) -> tuple[EpisodicRecord, ...]:
        path = self._records_path(session_id)
        signature = _file_signature(path)
        cached = self._record_cache.get(session_id)
        if cached is not None and cached[0] == signature and signature is not None:
            return cached[1]
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            data = b""
        records = self._parse_records(session_id, data)
        self._record_cache[session_id] = (signature, records)
        return records

    def _repair_tail(self, path: Path) -> None:
        """Make the record file newline-terminated before appending.

        A parseable unterminated final line is completed with a newline; an
        unparseable one (torn write) is truncated away.
        """
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            return
        if not data or data.endswith(b"\n"):
            return
        cut = data.rfind(b"\n") + 1
        tail = data[cut:]
        with open(path, "r+b") as f:
            try:
                json.loads(tail.decode("utf-8"))
            except ValueError:
                f.truncate(cut)
            else:
                f.seek(0, os.SEEK_END)
                f.write(b"\n")
            f.flush()
            os.fsync(f.fileno())

    # -- index cache ---------------------------------------------------------

    def _write_index(self, session_id: str, records: Sequence[EpisodicRecord], path: Path) -> None:
        sums = {ch: [0.0, 0] for ch in CHANNELS}
        for r in records:
            for ch, stats in (r.physio or {}).items():
                sums[ch][0] += stats.mean * stats.count
                sums[ch][1] += stats.count
        signature = _file_signature(path)
        doc = {
            "record_count": len(records),
            "min_second": records[0].second if records else None,
            "max_second": records[-1].second if records else None,
            "channel_sums": {
                ch: {"weighted_sum": total, "count": count}
                for ch, (total, count) in sums.items()
            },
            "records_signature": list(signature) if signature else None,
        }
        _write_atomic(path.parent / "index.json", (dumps(doc) + "\n").encode("utf-8"))

    def _max_second(self, session_id: str, path: Path) -> int | None:
        index_path = path.parent / "index.json"
        try:
            doc = json.loads(index_path.read_text("utf-8"))
            signature = _file_signature(path)
            if (
                signature is not None
                and doc.get("records_signature") == list(signature)
                and (doc.get("max_second") is None or isinstance(doc.get("max_second"), int))
            ):
                return doc["max_second"]
        except (OSError, ValueError, KeyError):
            pass  # stale or missing cache: fall back to a scan
        records = self._load_records(session_id)
        return records[-1].second if records else None

    # -- appends -------------------------------------------------------------

    def append_records(self, session_id: str, records: Sequence[EpisodicRecord]) -> int:
        """Append pre-sorted records; returns total records now stored.

        The whole batch is written with one buffered write + fsync, so a
        crash preserves a clean line-prefix of it.
        """
        manifest = self.manifest(session_id)
        if not manifest.capture_enabled:
            raise ConsentDisabled(f"capture disabled for session {session_id!r}")
        if self.is_finalized(session_id):
            raise SessionFinalized(f"session {session_id!r} is finalized")
        path = self._records_path(session_id)
        for record in records:
            if record.session_id != session_id:
                raise ValidationError(
                    f"record session_id {record.session_id!r} does not match {session_id!r}"
                )
            if record.ts_utc != manifest.started_at + 1000 * record.second:
                raise ValidationError(
                    f"record at second {record.second} has ts_utc {record.ts_utc}, "
                    f"expected started_at + 1000*second = "
                    f"{manifest.started_at + 1000 * record.second}"
                )
            # Archived form is stricter than the working form: physio-bearing
            # records must be normalized (stress present iff physio present).
            if (record.stress is None) != (record.physio is None):
                raise ValidationError(
                    f"record at second {record.second} is not normalized: "
                    "stress must accompany physio"
                )
        for prev, nxt in zip(records, records[1:]):
            if nxt.second <= prev.second:
                raise OutOfOrderAppend(
                    f"batch seconds not strictly increasing: {prev.second} then {nxt.second}"
                )
        self._repair_tail(path)
        max_second = self._max_second(session_id, path)
        if records and max_second is not None and records[0].second <= max_second:
            raise OutOfOrderAppend(
                f"append second {records[0].second} not after stored max {max_second}"
            )
        blob = "".join(dumps(record_to_dict(r)) + "\n" for r in records).encode("utf-8")
        with open(path, "ab") as f:
            f.write(blob)
            f.flush()
            os.fsync(f.fileno())
        stored = self._load_records(session_id)
        self._write_index(session_id, stored, path)
        return len(stored)

    # -- reads ---------------------------------------------------------------

    @staticmethod
    def _check_range(from_second: int | None, to_second: int | None) -> tuple[int | None, int | None]:
        if from_second is not None:
            from_second = _int_field(from_second, "from_second")
        if to_second is not None:
            to_second = _int_field(to_second, "to_second")
        if from_second is not None and to_second is not None and from_second > to_second:
            raise InvalidRange(f"from_second {from_second} > to_second {to_second}")
        return from_second, to_second

    def read_range(
        self,
        session_id: str,
        from_second: int | None = None,
        to_second: int | None = None,
    ) -> list[EpisodicRecord]:
        """Stored records with second in [from_second, to_second], sorted.

        Either bound may be None (open-ended)."""
        lo, hi = self._check_range(from_second, to_second)
        records = self._load_records(session_id)
        return [
            r
            for r in records
            if (lo is None or r.second >= lo) and (hi is None or r.second <= hi)
        ]

    def read_all(self, session_id: str) -> list[EpisodicRecord]:
        return list(self._load_records(session_id))

    def compute_stats(
        self,
        session_id: str,
        from_second: int | None = None,
        to_second: int | None = None,
        theta: float = 1.0,
    ) -> SessionStats:
        records = self.read_range(session_id, from_second, to_second)
        return compute_stats_from_records(records, theta)

    # -- deletion ------------------------------------------------------------

    def _rewrite(self, session_id: str, keep: Callable[[EpisodicRecord], bool]) -> int:
        path = self._records_path(session_id)
        records = self._load_records(session_id)
        kept = [r for r in records if keep(r)]
        removed = len(records) - len(kept)
        if removed:
            blob = "".join(dumps(record_to_dict(r)) + "\n" for r in kept).encode("utf-8")
            _write_atomic(path, blob)
            self._record_cache[session_id] = (_file_signature(path), tuple(kept))
            self._write_index(session_id, kept, path)
        return removed

    def delete_time_range(
        self, session_id: str, from_second: int | None, to_second: int | None
    ) -> int:
        """Permanently remove records with second in [from, to] via an
        atomic rewrite; returns how many were removed."""
        lo, hi = self._check_range(from_second, to_second)
        return self._rewrite(
            session_id,
            lambda r: not ((lo is None or r.second >= lo) and (hi is None or r.second <= hi)),
        )

    def apply_retention(self, now_utc_ms: int) -> dict[str, int]:
        """Delete records older than each session's retention window.

        Removes records with ts_utc < now - retention_days for sessions with
        finite retention; unlimited sessions report 0. Idempotent for a
        fixed now."""
        now_utc_ms = _int_field(now_utc_ms, "now_utc_ms")
        removed: dict[str, int] = {}
        for session_id in self.list_sessions():
            manifest = self.manifest(session_id)
            if manifest.retention_days is None:
                removed[session_id] = 0
                continue
            cutoff = now_utc_ms - manifest.retention_days * _MS_PER_DAY
            removed[session_id] = self._rewrite(session_id, lambda r: r.ts_utc >= cutoff)
        return removed
