"""Command-line interface: exit codes, output formats, error reporting."""

import io
import json
import shutil
import subprocess
import sys
import types

import pytest

from secondsight import (
    Archive,
    dumps,
    execute_query,
    query_result_to_dict,
    record_to_dict,
)
from secondsight.cli import main
from secondsight.retrieval import episode_to_dict

import support

STARTED = 1_700_000_000_000
NOW = STARTED + 86_400_000

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


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_streams(tmp_path):
    paths = {}
    for name, data in [("transcript", TRANSCRIPT), ("physio", PHYSIO), ("gaze", GAZE)]:
        path = tmp_path / f"{name}.raw"
        path.write_bytes(data)
        paths[name] = str(path)
    return paths


@pytest.fixture
def flow(tmp_path, capsys):
    """A finalized session named cli1 built entirely through the CLI."""
    root = str(tmp_path / "archive")
    paths = write_streams(tmp_path)
    assert main(["init", "--root", root, "--session", "cli1", "--started-at", str(STARTED)]) == 0
    for modality, path in paths.items():
        assert main(["ingest", "--root", root, "--session", "cli1", "--modality", modality, "--file", path]) == 0
    assert main(["finalize", "--root", root, "--session", "cli1"]) == 0
    capsys.readouterr()
    return root


# ---------------------------------------------------------------------------
# init


def test_init_prints_manifest_and_creates_session(tmp_path, capsys):
    root = str(tmp_path / "archive")
    code, out, err = run(
        capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED)
    )
    assert (code, err) == (0, "")
    printed = json.loads(out)
    assert printed["session_id"] == "cli1"
    assert printed["started_at"] == STARTED
    assert Archive(root).list_sessions() == ["cli1"]


def test_init_flags_reach_the_manifest(tmp_path, capsys):
    root = str(tmp_path / "archive")
    code, out, _ = run(
        capsys,
        "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED),
        "--timezone", "Europe/Paris", "--retention-days", "7",
        "--exclude-speaker", "B", "--exclude-speaker", "C",
        "--disable-modality", "gaze", "--capture-disabled",
    )
    assert code == 0
    printed = json.loads(out)
    assert printed["timezone"] == "Europe/Paris"
    assert printed["retention_days"] == 7
    assert printed["excluded_speakers"] == ["B", "C"]
    assert printed["modalities_enabled"] == ["physio", "speech"]
    assert printed["capture_enabled"] is False


def test_init_duplicate_session_exits_1(tmp_path, capsys):
    root = str(tmp_path / "archive")
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    code, out, err = run(
        capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED)
    )
    assert (code, out) == (1, "")
    assert err.startswith("DUPLICATE_SESSION:")


def test_init_invalid_timezone_exits_1(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "init", "--root", str(tmp_path / "archive"), "--session", "cli1",
        "--started-at", str(STARTED), "--timezone", "Mars/Olympus",
    )
    assert code == 1
    assert err.startswith("INVALID_TIMEZONE:")


# ---------------------------------------------------------------------------
# ingest


def test_ingest_reports_accepted_and_rejected(tmp_path, capsys):
    root = str(tmp_path / "archive")
    paths = write_streams(tmp_path)
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    code, out, err = run(
        capsys,
        "ingest", "--root", root, "--session", "cli1",
        "--modality", "transcript", "--file", paths["transcript"],
    )
    assert (code, out, err) == (0, "accepted 3, rejected 0\n", "")


def test_ingest_reads_stdin_with_dash(tmp_path, capsys, monkeypatch):
    root = str(tmp_path / "archive")
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    monkeypatch.setattr(sys, "stdin", types.SimpleNamespace(buffer=io.BytesIO(PHYSIO)))
    code, out, _ = run(
        capsys,
        "ingest", "--root", root, "--session", "cli1", "--modality", "physio", "--file", "-",
    )
    assert code == 0
    assert out == "accepted 20, rejected 0\n"


def test_ingest_reports_first_rejected_line_on_stderr(tmp_path, capsys):
    root = str(tmp_path / "archive")
    bad = tmp_path / "bad.jsonl"
    bad.write_bytes(
        support.transcript_jsonl(
            [{"start_ms": 0, "end_ms": 500, "speaker": "A", "text": "ok", "confidence": 0.9}]
        )
        + b"\n{not json}\n"
    )
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    code, out, err = run(
        capsys,
        "ingest", "--root", root, "--session", "cli1",
        "--modality", "transcript", "--file", str(bad),
    )
    assert code == 0
    assert out == "accepted 1, rejected 1\n"
    assert err.startswith("first rejected line 2:")


def test_ingest_missing_file_exits_1(tmp_path, capsys):
    root = str(tmp_path / "archive")
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    code, _, err = run(
        capsys,
        "ingest", "--root", root, "--session", "cli1",
        "--modality", "gaze", "--file", str(tmp_path / "nope.jsonl"),
    )
    assert code == 1
    assert err.startswith("VALIDATION_ERROR:")


# ---------------------------------------------------------------------------
# finalize


def test_finalize_reports_record_count(tmp_path, capsys):
    root = str(tmp_path / "archive")
    paths = write_streams(tmp_path)
    run(capsys, "init", "--root", root, "--session", "cli1", "--started-at", str(STARTED))
    for modality, path in paths.items():
        run(capsys, "ingest", "--root", root, "--session", "cli1", "--modality", modality, "--file", path)
    code, out, _ = run(capsys, "finalize", "--root", root, "--session", "cli1")
    assert code == 0
    assert out == "finalized cli1: 5 records\n"


def test_finalize_unknown_session_exits_1(tmp_path, capsys):
    code, out, err = run(
        capsys, "finalize", "--root", str(tmp_path / "archive"), "--session", "missing"
    )
    assert (code, out) == (1, "")
    assert err.startswith("UNKNOWN_SESSION:")


def test_excluded_speaker_never_reaches_disk_via_cli(tmp_path, capsys):
    root = tmp_path / "archive"
    paths = write_streams(tmp_path)
    run(
        capsys,
        "init", "--root", str(root), "--session", "cli1",
        "--started-at", str(STARTED), "--exclude-speaker", "B",
    )
    for modality, path in paths.items():
        run(capsys, "ingest", "--root", str(root), "--session", "cli1", "--modality", modality, "--file", path)
    run(capsys, "finalize", "--root", str(root), "--session", "cli1")
    for path in root.rglob("*"):
        if path.is_file():
            assert b"secret aside" not in path.read_bytes()


# ---------------------------------------------------------------------------
# query output formats


def test_query_json_matches_library_output(flow, capsys):
    code, out, _ = run(
        capsys,
        "query", "budget", "--root", flow, "--format", "json", "--now", str(NOW),
    )
    result = execute_query(Archive(flow), "budget", now_utc_ms=NOW, timezone="UTC")
    assert code == 0
    assert out == dumps(query_result_to_dict(result)) + "\n"


def test_query_jsonl_prints_one_episode_per_line(flow, capsys):
    code, out, _ = run(
        capsys,
        "query", "kickoff", "--root", flow, "--format", "jsonl", "--now", str(NOW),
    )
    result = execute_query(Archive(flow), "kickoff", now_utc_ms=NOW, timezone="UTC")
    assert code == 0
    assert result.episodes, "fixture query should match at least one episode"
    assert out.splitlines() == [dumps(episode_to_dict(ep)) for ep in result.episodes]


def test_query_human_format_lists_episodes(flow, capsys):
    # All five contiguous seconds survive a terms-only filter and merge into
    # one window; the excerpt concatenates the distinct texts in time order.
    code, out, _ = run(capsys, "query", "budget review", "--root", flow, "--now", str(NOW))
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith("1. [cli1] seconds 0-4 (")
    assert "score=" in first
    assert "project kickoff secret aside budget review" in out
    assert "records=5" in out
    assert "stress=" in out


def test_query_human_format_empty_state(tmp_path, capsys):
    root = str(tmp_path / "archive")
    run(capsys, "init", "--root", root, "--session", "bare", "--started-at", str(STARTED))
    code, out, _ = run(capsys, "query", "zeppelin", "--root", root, "--now", str(NOW))
    assert (code, out) == (0, "no matching episodes\n")


def test_query_limit_caps_jsonl_lines(flow, tmp_path, capsys):
    paths = write_streams(tmp_path)
    run(capsys, "init", "--root", flow, "--session", "cli2", "--started-at", str(STARTED + 7_200_000))
    for modality, path in paths.items():
        run(capsys, "ingest", "--root", flow, "--session", "cli2", "--modality", modality, "--file", path)
    run(capsys, "finalize", "--root", flow, "--session", "cli2")

    unlimited = execute_query(Archive(flow), "budget review", now_utc_ms=NOW, timezone="UTC")
    assert len(unlimited.episodes) == 2
    code, out, _ = run(
        capsys,
        "query", "budget review", "--root", flow,
        "--format", "jsonl", "--limit", "1", "--now", str(NOW),
    )
    assert code == 0
    assert out.splitlines() == [dumps(episode_to_dict(unlimited.episodes[0]))]


def test_query_sessions_flag_restricts_scope(flow, capsys):
    code, out, _ = run(
        capsys,
        "query", "budget", "--root", flow, "--format", "json",
        "--sessions", "cli1", "--now", str(NOW),
    )
    assert code == 0
    assert json.loads(out)["parsed"]["sessions"] == ["cli1"]


def test_query_unparsable_text_exits_1(flow, capsys):
    code, _, err = run(capsys, "query", "?!.,;", "--root", flow, "--now", str(NOW))
    assert code == 1
    assert err.startswith("UNPARSABLE_QUERY:")


def test_query_invalid_timezone_exits_1(flow, capsys):
    code, _, err = run(
        capsys, "query", "budget", "--root", flow, "--tz", "Nowhere/City", "--now", str(NOW)
    )
    assert code == 1
    assert err.startswith("INVALID_TIMEZONE:")


# ---------------------------------------------------------------------------
# timeline and stats


def test_timeline_prints_canonical_records(flow, capsys):
    code, out, _ = run(capsys, "timeline", "--session", "cli1", "--root", flow)
    records = Archive(flow).read_range("cli1", None, None)
    assert code == 0
    assert out.splitlines() == [dumps(record_to_dict(r)) for r in records]
    assert len(records) == 5


def test_timeline_window_is_inclusive(flow, capsys):
    code, out, _ = run(
        capsys, "timeline", "--session", "cli1", "--root", flow, "--from", "1", "--to", "3"
    )
    assert code == 0
    assert [json.loads(line)["second"] for line in out.splitlines()] == [1, 2, 3]


def test_stats_matches_library_and_honours_theta(flow, capsys):
    code, out, _ = run(capsys, "stats", "--session", "cli1", "--root", flow)
    expected = Archive(flow).compute_stats("cli1", None, None, theta=1.0)
    assert code == 0
    assert out == dumps(expected.to_dict()) + "\n"

    _, high, _ = run(capsys, "stats", "--session", "cli1", "--root", flow, "--theta", "1e9")
    assert json.loads(high)["elevated_stress_seconds"] == 0


# ---------------------------------------------------------------------------
# delete and retention


def test_delete_range_then_whole_session(flow, capsys):
    code, out, _ = run(
        capsys, "delete", "--session", "cli1", "--root", flow, "--from", "1", "--to", "2"
    )
    assert (code, out) == (0, "removed 2 records\n")

    code, out, _ = run(capsys, "delete", "--session", "cli1", "--root", flow)
    assert (code, out) == (0, "deleted session cli1\n")

    code, _, err = run(capsys, "timeline", "--session", "cli1", "--root", flow)
    assert code == 1
    assert err.startswith("UNKNOWN_SESSION:")


def test_retention_prints_removal_map(tmp_path, capsys):
    root = str(tmp_path / "archive")
    paths = write_streams(tmp_path)
    run(
        capsys,
        "init", "--root", root, "--session", "cli1",
        "--started-at", str(STARTED), "--retention-days", "1",
    )
    for modality, path in paths.items():
        run(capsys, "ingest", "--root", root, "--session", "cli1", "--modality", modality, "--file", path)
    run(capsys, "finalize", "--root", root, "--session", "cli1")
    code, out, _ = run(capsys, "retention", "--root", root, "--now", str(STARTED + 40 * 86_400_000))
    assert code == 0
    assert out == dumps({"removed": {"cli1": 5}}) + "\n"


# ---------------------------------------------------------------------------
# usage errors and entry point


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["init", "--session", "x"],  # missing --started-at
        ["ingest", "--session", "x", "--modality", "telepathy", "--file", "f"],
        ["query", "hello", "--format", "yaml"],
        ["timeline", "--session", "x", "--bogus-flag"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_console_script_is_installed():
    exe = shutil.which("secondsight")
    assert exe, "console script should be on PATH after an editable install"
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "query" in proc.stdout
