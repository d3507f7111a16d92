"""Shared builders and randomized generators for the test suite."""

from __future__ import annotations

import json
import random
from typing import Sequence

from secondsight import (
    Archive,
    ChannelStats,
    EpisodicRecord,
    GazeEvent,
    GazeSummary,
    PhysioSample,
    Predicate,
    SessionManifest,
    StructuredQuery,
    TranscriptRef,
    TranscriptSegment,
    validate_manifest,
)

WORDS = (
    "budget review meeting deadline report planning sync design launch "
    "quarter revenue roadmap hiring standup retro demo incident postmortem "
    "draft outline metrics alignment sprint backlog onboarding travel"
).split()

SPEAKERS = ("A", "B", "C", "D")


def manifest(session_id="s1", started_at=1_700_000_000_000, **overrides) -> SessionManifest:
    raw = {"session_id": session_id, "started_at": started_at, "capture_enabled": True}
    raw.update(overrides)
    return validate_manifest(raw)


def transcript_jsonl(segments: Sequence[dict]) -> bytes:
    return "\n".join(json.dumps(seg) for seg in segments).encode("utf-8")


def gaze_jsonl(events: Sequence[dict]) -> bytes:
    return "\n".join(json.dumps(ev) for ev in events).encode("utf-8")


def physio_csv(rows: Sequence[tuple]) -> bytes:
    return "\n".join(f"{t},{ch},{v}" for t, ch, v in rows).encode("utf-8")


# ---------------------------------------------------------------------------
# raw stream generators (valid inputs)


def random_segments(rng: random.Random, span_s: int, count: int) -> list[TranscriptSegment]:
    out = []
    for _ in range(count):
        start = rng.randrange(0, span_s * 1000)
        duration = rng.randrange(200, 8000)
        text = " ".join(rng.choices(WORDS, k=rng.randint(1, 6)))
        out.append(
            TranscriptSegment(
                start_ms=start,
                end_ms=start + duration,
                speaker=rng.choice(SPEAKERS),
                text=text,
                confidence=round(rng.uniform(0.5, 1.0), 3),
            )
        )
    out.sort(key=lambda s: s.start_ms)
    return out


def random_physio(rng: random.Random, span_s: int) -> list[PhysioSample]:
    """Each channel sampled at its own rate in 1..32 Hz over the span."""
    out = []
    for channel, base, spread in (("HR", 75.0, 18.0), ("GSR", 3.0, 1.5)):
        rate = rng.randint(1, 32)
        step = 1000 / rate
        t = rng.uniform(0, step)
        while t < span_s * 1000:
            value = max(0.5, rng.gauss(base, spread))
            if channel == "HR":
                value = min(max(value, 30.0), 240.0)
            out.append(PhysioSample(t_ms=int(t), channel=channel, value=round(value, 3)))
            t += step
    out.sort(key=lambda s: s.t_ms)
    return out


def random_gaze(rng: random.Random, span_s: int, count: int) -> list[GazeEvent]:
    out = []
    for _ in range(count):
        kind = rng.choice(("fixation", "blink", "saccade"))
        start = rng.randrange(0, span_s * 1000)
        if kind == "fixation":
            out.append(
                GazeEvent(
                    kind=kind,
                    start_ms=start,
                    duration_ms=rng.randrange(50, 2500),
                    x=round(rng.random(), 3),
                    y=round(rng.random(), 3),
                )
            )
        elif kind == "saccade":
            out.append(
                GazeEvent(
                    kind=kind,
                    start_ms=start,
                    duration_ms=rng.randrange(10, 120),
                    amplitude_deg=round(rng.uniform(0.1, 20.0), 2),
                )
            )
        else:
            out.append(GazeEvent(kind=kind, start_ms=start, duration_ms=rng.randrange(60, 400)))
    out.sort(key=lambda e: e.start_ms)
    return out


# ---------------------------------------------------------------------------
# archived-record generators (already normalized form)


def random_record(
    rng: random.Random, session_id: str, second: int, started_at: int
) -> EpisodicRecord:
    transcript = ()
    if rng.random() < 0.7:
        transcript = tuple(
            TranscriptRef(
                seg=second * 4 + i,
                speaker=rng.choice(SPEAKERS),
                text=" ".join(rng.choices(WORDS, k=rng.randint(1, 5))),
            )
            for i in range(rng.randint(1, 2))
        )
    physio = None
    stress = None
    if rng.random() < 0.7:
        physio = {}
        zs = []
        for channel, base in (("HR", 75.0), ("GSR", 3.0)):
            if rng.random() < 0.8:
                mean = round(rng.uniform(base * 0.7, base * 1.4), 3)
                z = round(rng.uniform(-2.5, 2.5), 6)
                physio[channel] = ChannelStats(
                    mean=mean,
                    min=round(mean - rng.uniform(0, 2), 3),
                    max=round(mean + rng.uniform(0, 2), 3),
                    count=rng.randint(1, 32),
                    z_mean=z,
                )
                zs.append(z)
        if physio:
            stress = sum(zs) / len(zs)
        else:
            physio = None
    gaze = None
    if rng.random() < 0.6:
        fixation_ms = rng.choice((0, rng.randrange(0, 1001)))
        gaze = GazeSummary(
            fixation_count=rng.randint(0, 3),
            blink_count=rng.randint(0, 2),
            saccade_count=rng.randint(0, 4),
            fixation_ms=fixation_ms,
            focus=fixation_ms / 1000,
        )
    if not transcript and physio is None and gaze is None:
        return random_record(rng, session_id, second, started_at)
    return EpisodicRecord(
        session_id=session_id,
        second=second,
        ts_utc=started_at + 1000 * second,
        transcript=transcript,
        physio=physio,
        gaze=gaze,
        stress=stress,
    )


def random_records(
    rng: random.Random, session_id: str, count: int, started_at: int = 1_700_000_000_000
) -> list[EpisodicRecord]:
    seconds = sorted(rng.sample(range(count * 3), count))
    return [random_record(rng, session_id, s, started_at) for s in seconds]


def populate_archive(
    rng: random.Random, root, session_count: int = 2, max_records: int = 250
) -> tuple[Archive, dict[str, list[EpisodicRecord]]]:
    archive = Archive(root)
    sessions: dict[str, list[EpisodicRecord]] = {}
    for i in range(session_count):
        sid = f"s{i + 1}"
        started = 1_700_000_000_000 + i * 7_200_000
        archive.create_session(manifest(sid, started))
        records = random_records(rng, sid, rng.randint(1, max_records), started)
        archive.append_records(sid, records)
        sessions[sid] = records
    return archive, sessions


def random_query(
    rng: random.Random,
    session_ids: Sequence[str],
    window_bases: Sequence[int] = (1_700_000_000_000,),
) -> StructuredQuery:
    """A randomized structured query; always carries at least one
    constraint beyond session scope, as the model requires."""
    kwargs: dict = {}
    if rng.random() < 0.3:
        kwargs["sessions"] = tuple(
            rng.sample(list(session_ids), rng.randint(1, len(session_ids)))
        )
    if rng.random() < 0.4:
        base = rng.choice(list(window_bases)) + rng.randint(-50, 500) * 1000
        kwargs["time_window"] = (base, base + rng.randint(1, 400) * 1000)
    for field, lo, hi in (
        ("stress_pred", -2.0, 2.0),
        ("focus_pred", 0.0, 1.0),
        ("hr_pred", -2.0, 2.0),
        ("gsr_pred", -2.0, 2.0),
    ):
        if rng.random() < 0.35:
            kwargs[field] = Predicate(
                op=rng.choice((">", "<")), value=round(rng.uniform(lo, hi), 3)
            )
    constrained = set(kwargs) - {"sessions"}
    if rng.random() < 0.6 or not constrained:
        kwargs["content_terms"] = tuple(rng.choices(WORDS, k=rng.randint(1, 3)))
    kwargs["limit"] = rng.choice((1, 3, 10, 25))
    return StructuredQuery(**kwargs)


def assert_episodes_match(got: Sequence[dict], expected: Sequence[dict], tol: float = 1e-9):
    """Episode dicts must agree exactly except float scores and context
    means, which carry the stated tolerance."""
    assert len(got) == len(expected)
    for g, e in zip(got, expected):
        g, e = dict(g), dict(e)
        assert abs(g.pop("score") - e.pop("score")) <= tol
        cg, ce = dict(g.pop("context")), dict(e.pop("context"))
        assert g == e
        assert set(cg) == set(ce)
        assert cg.pop("record_count") == ce.pop("record_count")
        for key in cg:
            assert abs(cg[key] - ce[key]) <= tol
