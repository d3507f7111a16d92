"""Alignment of the three validated streams onto the shared one-second grid.

Second windows are half-open: second s covers [1000*s, 1000*s + 1000) ms of
session time. Events bucket by start time, except fixation duration, which
is clipped across windows so per-second focus stays a true fraction and
event counts stay conservation-testable.

Normalization is per-session: z-scores over per-second channel means using
the population standard deviation, so "elevated" predicates are
session-relative and unit-free. The stress indicator is the unweighted mean
of the available channel z-scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import AllStreamsEmpty, NoPhysioData
from .model import (
    CHANNELS,
    ChannelStats,
    EpisodicRecord,
    GazeEvent,
    GazeSummary,
    PhysioSample,
    PhysioSummary,
    SessionManifest,
    TranscriptRef,
    TranscriptSegment,
)


@dataclass(frozen=True)
class ChannelBaseline:
    """Session normalization constants for one channel: the mean and
    population std of that channel's per-second means."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be >= 0")


@dataclass(frozen=True)
class SessionBaseline:
    channels: Mapping[str, ChannelBaseline]


def build_grid(
    segments: Sequence[TranscriptSegment],
    physio: Sequence[PhysioSample],
    gaze: Sequence[GazeEvent],
) -> tuple[int, int]:
    """Compute the inclusive [first_second, last_second] grid bounds.

    The grid spans from the floor-second of the earliest timestamp to the
    floor-second of the last covered millisecond (a point sample at t
    covers [t, t+1); segments and gaze events cover their half-open spans).
    """
    if not segments and not physio and not gaze:
        raise AllStreamsEmpty("no data in any modality stream")
    min_ts = min(
        [seg.start_ms for seg in segments]
        + [s.t_ms for s in physio]
        + [ev.start_ms for ev in gaze]
    )
    max_covered = max(
        [seg.end_ms for seg in segments]
        + [s.t_ms + 1 for s in physio]
        + [ev.start_ms + ev.duration_ms for ev in gaze]
    )
    return min_ts // 1000, (max_covered - 1) // 1000


def assign_transcript(
    segments: Sequence[TranscriptSegment], second: int
) -> tuple[TranscriptRef, ...]:
    """Transcript contributions to one second.

    A segment contributes iff [start_ms, end_ms) overlaps the second's
    window; the contribution is the full segment text (no word-level
    splitting). Refs index into `segments`; order is start_ms then speaker.
    """
    window_start = 1000 * second
    window_end = window_start + 1000
    hits = [
        (seg.start_ms, seg.speaker, i, seg.text)
        for i, seg in enumerate(segments)
        if seg.start_ms < window_end and seg.end_ms > window_start
    ]
    hits.sort(key=lambda h: (h[0], h[1]))
    return tuple(TranscriptRef(seg=i, speaker=spk, text=text) for _, spk, i, text in hits)


def _channel_stats(values: Sequence[float]) -> ChannelStats:
    mean = sum(values) / len(values)
    lo, hi = min(values), max(values)
    # The true mean lies in [lo, hi]; clamp away float summation dust.
    mean = min(max(mean, lo), hi)
    return ChannelStats(mean=mean, min=lo, max=hi, count=len(values))


def resample_physio(
    samples: Sequence[PhysioSample], second: int
) -> dict[str, ChannelStats] | None:
    """Per-channel mean/min/max/count over samples inside one second.

    Channels with no samples are omitted; returns None when no channel
    qualifies. z_mean stays unset until normalization.
    """
    window_start = 1000 * second
    window_end = window_start + 1000
    by_channel: dict[str, list[float]] = {}
    for s in samples:
        if window_start <= s.t_ms < window_end:
            by_channel.setdefault(s.channel, []).append(s.value)
    if not by_channel:
        return None
    return {ch: _channel_stats(by_channel[ch]) for ch in CHANNELS if ch in by_channel}


def _gaze_summary(counts: Mapping[str, int], fixation_total: int) -> GazeSummary | None:
    if not any(counts.values()) and fixation_total == 0:
        return None
    fixation_ms = min(1000, fixation_total)
    return GazeSummary(
        fixation_count=counts.get("fixation", 0),
        blink_count=counts.get("blink", 0),
        saccade_count=counts.get("saccade", 0),
        fixation_ms=fixation_ms,
        focus=fixation_ms / 1000,
    )


def summarize_gaze(events: Sequence[GazeEvent], second: int) -> GazeSummary | None:
    """Gaze summary for one second: counts bucket by event start; fixation
    time is the overlap with this window, summed then clipped to [0,1000].

    Absent when no event starts here and no fixation overlaps.
    """
    window_start = 1000 * second
    window_end = window_start + 1000
    counts = {"fixation": 0, "blink": 0, "saccade": 0}
    fixation_total = 0
    for ev in events:
        if window_start <= ev.start_ms < window_end:
            counts[ev.kind] += 1
        if ev.kind == "fixation":
            overlap = min(ev.start_ms + ev.duration_ms, window_end) - max(ev.start_ms, window_start)
            if overlap > 0:
                fixation_total += overlap
    return _gaze_summary(counts, fixation_total)


def compute_baseline(summaries: Iterable[PhysioSummary]) -> SessionBaseline:
    """Normalization constants per channel over the per-second means."""
    means: dict[str, list[float]] = {}
    for summary in summaries:
        for ch, stats in summary.items():
            means.setdefault(ch, []).append(stats.mean)
    if not means:
        raise NoPhysioData("no physiological summaries to baseline")
    channels = {}
    for ch in CHANNELS:
        if ch not in means:
            continue
        xs = means[ch]
        mu = math.fsum(xs) / len(xs)
        var = math.fsum((x - mu) ** 2 for x in xs) / len(xs)
        channels[ch] = ChannelBaseline(mean=mu, std=math.sqrt(var))
    return SessionBaseline(channels=channels)


def normalize_and_score(
    records: Sequence[EpisodicRecord], baseline: SessionBaseline
) -> list[EpisodicRecord]:
    """Fill z_mean per channel and the stress indicator per record.

    z = (mean - baseline.mean) / baseline.std, defined as 0 when the
    baseline std is 0; stress is the unweighted mean of the record's
    channel z-scores. Records without physio pass through untouched.
    """
    out: list[EpisodicRecord] = []
    for record in records:
        if record.physio is None:
            out.append(record)
            continue
        z_scores: list[float] = []
        normalized: dict[str, ChannelStats] = {}
        for ch in CHANNELS:
            if ch not in record.physio:
                continue
            stats = record.physio[ch]
            base = baseline.channels[ch]
            z = 0.0 if base.std == 0 else (stats.mean - base.mean) / base.std
            normalized[ch] = replace(stats, z_mean=z)
            z_scores.append(z)
        stress = sum(z_scores) / len(z_scores)
        out.append(replace(record, physio=normalized, stress=stress))
    return out


def align_session(
    manifest: SessionManifest,
    segments: Sequence[TranscriptSegment],
    physio: Sequence[PhysioSample],
    gaze: Sequence[GazeEvent],
) -> list[EpisodicRecord]:
    """Produce the session's episodic records, one per grid second that has
    any modality content, sorted by second.

    Inputs must be validated and redacted; modalities disabled in the
    manifest arrive as empty lists. Output is identical to composing
    build_grid / assign_transcript / resample_physio / summarize_gaze /
    compute_baseline / normalize_and_score second by second, but buckets
    each stream in one pass.
    """
    first, last = build_grid(segments, physio, gaze)

    transcript_buckets: dict[int, list[tuple[int, str, int, str]]] = {}
    for i, seg in enumerate(segments):
        for s in range(seg.start_ms // 1000, (seg.end_ms - 1) // 1000 + 1):
            transcript_buckets.setdefault(s, []).append((seg.start_ms, seg.speaker, i, seg.text))

    physio_buckets: dict[int, dict[str, list[float]]] = {}
    for sample in physio:
        bucket = physio_buckets.setdefault(sample.t_ms // 1000, {})
        bucket.setdefault(sample.channel, []).append(sample.value)

    gaze_counts: dict[int, dict[str, int]] = {}
    fixation_totals: dict[int, int] = {}
    for ev in gaze:
        counts = gaze_counts.setdefault(ev.start_ms // 1000, {"fixation": 0, "blink": 0, "saccade": 0})
        counts[ev.kind] += 1
        if ev.kind == "fixation":
            end = ev.start_ms + ev.duration_ms
            for s in range(ev.start_ms // 1000, (end - 1) // 1000 + 1):
                overlap = min(end, 1000 * s + 1000) - max(ev.start_ms, 1000 * s)
                fixation_totals[s] = fixation_totals.get(s, 0) + overlap

    populated = sorted(
        set(transcript_buckets) | set(physio_buckets) | set(gaze_counts) | set(fixation_totals)
    )
    records: list[EpisodicRecord] = []
    for s in populated:
        if not first <= s <= last:  # unreachable: grid spans all data
            continue
        hits = sorted(transcript_buckets.get(s, []), key=lambda h: (h[0], h[1]))
        transcript = tuple(TranscriptRef(seg=i, speaker=spk, text=text) for _, spk, i, text in hits)
        by_channel = physio_buckets.get(s)
        summary = (
            {ch: _channel_stats(by_channel[ch]) for ch in CHANNELS if ch in by_channel}
            if by_channel
            else None
        )
        gaze_summary = _gaze_summary(
            gaze_counts.get(s, {"fixation": 0, "blink": 0, "saccade": 0}),
            fixation_totals.get(s, 0),
        )
        if not transcript and summary is None and gaze_summary is None:
            continue
        records.append(
            EpisodicRecord(
                session_id=manifest.session_id,
                second=s,
                ts_utc=manifest.started_at + 1000 * s,
                transcript=transcript,
                physio=summary,
                gaze=gaze_summary,
            )
        )

    physio_summaries = [r.physio for r in records if r.physio is not None]
    if physio_summaries:
        records = normalize_and_score(records, compute_baseline(physio_summaries))
    return records
