"""Session lifecycle: staging ingestion, redaction, finalize semantics."""

import json

import pytest

from secondsight import (
    AllStreamsEmpty,
    Archive,
    ConsentDisabled,
    SessionFinalized,
    ValidationError,
    align_session,
    finalize_session,
    ingest_stream,
    parse_physio_stream,
    parse_transcript_stream,
)

import support

STARTED = 1_700_000_000_000

TRANSCRIPT = support.transcript_jsonl(
    [
        {"start_ms": 0, "end_ms": 1800, "speaker": "A", "text": "project kickoff", "confidence": 0.95},
        {"start_ms": 2000, "end_ms": 2900, "speaker": "B", "text": "secret aside", "confidence": 0.9},
        {"start_ms": 3000, "end_ms": 4500, "speaker": "A", "text": "budget review", "confidence": 0.92},
    ]
)
PHYSIO = b"t_ms,channel,value\n" + b"".join(
    f"{t},HR,{70 + (t % 3000) / 1000}\n{t},GSR,{1.0 + t / 10000}\n".encode()
    for t in range(0, 5000, 500)
)
GAZE = support.gaze_jsonl(
    [
        {"kind": "fixation", "start_ms": 100, "duration_ms": 700, "x": 0.3, "y": 0.4},
        {"kind": "blink", "start_ms": 1200, "duration_ms": 150},
        {"kind": "saccade", "start_ms": 2500, "duration_ms": 40, "amplitude_deg": 6.0},
    ]
)


def new_session(tmp_path, **overrides):
    archive = Archive(tmp_path / "archive")
    archive.create_session(support.manifest("s1", STARTED, **overrides))
    return archive


def ingest_all(archive):
    ingest_stream(archive, "s1", "transcript", TRANSCRIPT)
    ingest_stream(archive, "s1", "physio", PHYSIO)
    ingest_stream(archive, "s1", "gaze", GAZE)


# ---------------------------------------------------------------------------
# ingest_stream


def test_ingest_reports_and_stages(tmp_path):
    archive = new_session(tmp_path)
    report = ingest_stream(archive, "s1", "transcript", TRANSCRIPT)
    assert (report.accepted, report.rejected) == (3, 0)
    staged = archive.session_dir("s1") / "staging" / "transcript.jsonl"
    assert len(staged.read_bytes().splitlines()) == 3


def test_repeated_ingest_appends(tmp_path):
    archive = new_session(tmp_path)
    ingest_stream(archive, "s1", "physio", b"0,HR,70\n")
    ingest_stream(archive, "s1", "physio", b"500,HR,71\n")
    staged = archive.session_dir("s1") / "staging" / "physio.csv"
    samples, report = parse_physio_stream(staged.read_bytes())
    assert report.rejected == 0
    assert [s.t_ms for s in samples] == [0, 500]


def test_ingest_rejects_unknown_modality(tmp_path):
    archive = new_session(tmp_path)
    with pytest.raises(ValidationError):
        ingest_stream(archive, "s1", "eeg", b"")


def test_ingest_requires_capture_consent(tmp_path):
    archive = new_session(tmp_path, capture_enabled=False)
    with pytest.raises(ConsentDisabled):
        ingest_stream(archive, "s1", "transcript", TRANSCRIPT)


def test_ingest_respects_modality_flags(tmp_path):
    archive = new_session(tmp_path, modalities_enabled=frozenset({"speech"}))
    ingest_stream(archive, "s1", "transcript", TRANSCRIPT)
    with pytest.raises(ConsentDisabled):
        ingest_stream(archive, "s1", "gaze", GAZE)


def test_consent_flip_takes_effect_next_call(tmp_path):
    archive = new_session(tmp_path)
    ingest_stream(archive, "s1", "physio", b"0,HR,70\n")
    archive.update_manifest("s1", capture_enabled=False)
    with pytest.raises(ConsentDisabled):
        ingest_stream(archive, "s1", "physio", b"500,HR,71\n")


def test_excluded_speaker_never_reaches_disk(tmp_path):
    archive = new_session(tmp_path, excluded_speakers=frozenset({"B"}))
    ingest_stream(archive, "s1", "transcript", TRANSCRIPT)
    staged = archive.session_dir("s1") / "staging" / "transcript.jsonl"
    blob = staged.read_bytes()
    assert b"secret aside" not in blob
    assert b"project kickoff" in blob


# ---------------------------------------------------------------------------
# finalize_session


def test_finalize_matches_direct_alignment(tmp_path):
    archive = new_session(tmp_path)
    ingest_all(archive)
    count = finalize_session(archive, "s1")

    segments, _ = parse_transcript_stream(TRANSCRIPT)
    physio, _ = parse_physio_stream(PHYSIO)
    from secondsight import parse_gaze_stream

    gaze, _ = parse_gaze_stream(GAZE)
    expected = align_session(archive.manifest("s1"), segments, physio, gaze)
    assert archive.read_all("s1") == expected
    assert count == len(expected)


def test_finalize_is_idempotent_and_seals_the_session(tmp_path):
    archive = new_session(tmp_path)
    ingest_all(archive)
    count = finalize_session(archive, "s1")
    assert finalize_session(archive, "s1") == count  # no error, same count
    assert archive.is_finalized("s1")
    assert not (archive.session_dir("s1") / "staging").exists()
    with pytest.raises(SessionFinalized):
        ingest_stream(archive, "s1", "physio", b"9000,HR,70\n")


def test_finalize_without_data_fails(tmp_path):
    archive = new_session(tmp_path)
    with pytest.raises(AllStreamsEmpty):
        finalize_session(archive, "s1")
    assert not archive.is_finalized("s1")


def test_finalize_skips_modalities_disabled_after_staging(tmp_path):
    archive = new_session(tmp_path)
    ingest_all(archive)
    archive.update_manifest("s1", modalities_enabled=frozenset({"speech", "physio"}))
    finalize_session(archive, "s1")
    assert all(r.gaze is None for r in archive.read_all("s1"))


def test_finalize_reapplies_redaction_under_current_manifest(tmp_path):
    archive = new_session(tmp_path)
    ingest_stream(archive, "s1", "transcript", TRANSCRIPT)
    archive.update_manifest("s1", excluded_speakers=frozenset({"B"}))
    finalize_session(archive, "s1")
    for record in archive.read_all("s1"):
        assert all(ref.speaker != "B" for ref in record.transcript)
    blob = (archive.session_dir("s1") / "records.jsonl").read_bytes()
    assert b"secret aside" not in blob


def test_finalize_requires_consent(tmp_path):
    archive = new_session(tmp_path)
    ingest_all(archive)
    archive.update_manifest("s1", capture_enabled=False)
    with pytest.raises(ConsentDisabled):
        finalize_session(archive, "s1")


def test_records_normalized_at_rest(tmp_path):
    archive = new_session(tmp_path)
    ingest_all(archive)
    finalize_session(archive, "s1")
    for record in archive.read_all("s1"):
        assert (record.stress is None) == (record.physio is None)
        if record.physio is not None:
            assert all(cs.z_mean is not None for cs in record.physio.values())
