"""Command-line interface.

Exit codes: 0 success, 1 domain error (code + message on stderr), 2 usage
error (argparse). Structured output modes print one canonical JSON document
(or one per line) so shell pipelines can consume them.
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone as dt_timezone

from .archive import Archive
from .config import load_config
from .errors import SecondSightError, ValidationError
from .model import dumps, manifest_to_dict, record_to_dict, validate_manifest
from .pipeline import finalize_session, ingest_stream
from .retrieval import episode_to_dict, execute_query, query_result_to_dict


def _archive(args: argparse.Namespace) -> Archive:
    return Archive(args.root)


def _now_ms() -> int:
    return int(time.time() * 1000)


def _cmd_init(args: argparse.Namespace) -> int:
    raw: dict = {
        "session_id": args.session,
        "started_at": args.started_at,
        "capture_enabled": not args.capture_disabled,
    }
    if args.timezone:
        raw["timezone"] = args.timezone
    if args.retention_days is not None:
        raw["retention_days"] = args.retention_days
    if args.exclude_speaker:
        raw["excluded_speakers"] = args.exclude_speaker
    if args.disable_modality:
        enabled = {"speech", "physio", "gaze"} - set(args.disable_modality)
        raw["modalities_enabled"] = sorted(enabled)
    manifest = validate_manifest(raw)
    _archive(args).create_session(manifest)
    print(dumps(manifest_to_dict(manifest)))
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    if args.file == "-":
        data = sys.stdin.buffer.read()
    else:
        try:
            with open(args.file, "rb") as f:
                data = f.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {args.file!r}: {exc}") from exc
    report = ingest_stream(_archive(args), args.session, args.modality, data)
    print(f"accepted {report.accepted}, rejected {report.rejected}")
    if report.first_error:
        line, message = report.first_error
        print(f"first rejected line {line}: {message}", file=sys.stderr)
    return 0


def _cmd_finalize(args: argparse.Namespace) -> int:
    count = finalize_session(_archive(args), args.session)
    print(f"finalized {args.session}: {count} records")
    return 0


def _format_ts(ts_utc: int, tz_name: str) -> str:
    from zoneinfo import ZoneInfo

    local = datetime.fromtimestamp(ts_utc / 1000, dt_timezone.utc).astimezone(ZoneInfo(tz_name))
    return local.strftime("%Y-%m-%d %H:%M:%S %Z")


def _cmd_query(args: argparse.Namespace) -> int:
    archive = _archive(args)
    sessions = args.sessions.split(",") if args.sessions else None
    result = execute_query(
        archive,
        args.text,
        now_utc_ms=args.now if args.now is not None else _now_ms(),
        timezone=args.tz,
        sessions=sessions,
        limit=args.limit,
    )
    if args.format == "jsonl":
        for episode in result.episodes:
            print(dumps(episode_to_dict(episode)))
    elif args.format == "json":
        print(dumps(query_result_to_dict(result)))
    else:
        if not result.episodes:
            print("no matching episodes")
        for i, ep in enumerate(result.episodes, start=1):
            tz_name = archive.manifest(ep.session_id).timezone
            span = f"{_format_ts(ep.from_ts_utc, tz_name)} .. {_format_ts(ep.to_ts_utc, tz_name)}"
            print(f"{i}. [{ep.session_id}] seconds {ep.from_second}-{ep.to_second} ({span}) score={ep.score:.4f}")
            if ep.excerpt:
                print(f"   {ep.excerpt}")
            ctx = ep.context
            bits = [f"records={ctx.record_count}"]
            if ctx.mean_stress is not None:
                bits.append(f"stress={ctx.mean_stress:.2f}")
            if ctx.mean_focus is not None:
                bits.append(f"focus={ctx.mean_focus:.2f}")
            print("   " + " ".join(bits))
    return 0


def _cmd_timeline(args: argparse.Namespace) -> int:
    records = _archive(args).read_range(args.session, args.from_second, args.to_second)
    for record in records:
        print(dumps(record_to_dict(record)))
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    stats = _archive(args).compute_stats(
        args.session, args.from_second, args.to_second, theta=args.theta
    )
    print(dumps(stats.to_dict()))
    return 0


def _cmd_delete(args: argparse.Namespace) -> int:
    archive = _archive(args)
    if args.from_second is None and args.to_second is None:
        archive.delete_session(args.session)
        print(f"deleted session {args.session}")
    else:
        removed = archive.delete_time_range(args.session, args.from_second, args.to_second)
        print(f"removed {removed} records")
    return 0


def _cmd_retention(args: argparse.Namespace) -> int:
    removed = _archive(args).apply_retention(args.now if args.now is not None else _now_ms())
    print(dumps({"removed": removed}))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from dataclasses import replace

    from .service import serve

    config = load_config(args.config)
    if args.root is not None:
        config = replace(config, archive_root=args.root)
    if args.bind is not None:
        config = replace(config, bind_address=args.bind)
    serve(config)
    return 0


def _add_root(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--root", default="./archive", help="archive root directory")


def _add_range(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--from", dest="from_second", type=int, default=None, metavar="SECOND")
    parser.add_argument("--to", dest="to_second", type=int, default=None, metavar="SECOND")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secondsight", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a session with its manifest")
    _add_root(p)
    p.add_argument("--session", required=True)
    p.add_argument("--started-at", dest="started_at", type=int, required=True, metavar="MS_UTC")
    p.add_argument("--timezone", default=None)
    p.add_argument("--retention-days", dest="retention_days", type=int, default=None)
    p.add_argument("--exclude-speaker", action="append", default=[], metavar="LABEL")
    p.add_argument(
        "--disable-modality",
        action="append",
        default=[],
        choices=["speech", "physio", "gaze"],
    )
    p.add_argument("--capture-disabled", action="store_true")
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("ingest", help="validate and stage a raw modality stream")
    _add_root(p)
    p.add_argument("--session", required=True)
    p.add_argument("--modality", required=True, choices=["transcript", "physio", "gaze"])
    p.add_argument("--file", required=True, help="path to the raw stream, or - for stdin")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("finalize", help="align staged streams and archive the records")
    _add_root(p)
    p.add_argument("--session", required=True)
    p.set_defaults(func=_cmd_finalize)

    p = sub.add_parser("query", help="ask a natural-language question")
    _add_root(p)
    p.add_argument("text")
    p.add_argument("--format", choices=["human", "json", "jsonl"], default="human")
    p.add_argument("--sessions", default=None, help="comma-separated session ids")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--tz", default="UTC")
    p.add_argument("--now", type=int, default=None, metavar="MS_UTC")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("timeline", help="print records in a window, one per line")
    _add_root(p)
    p.add_argument("--session", required=True)
    _add_range(p)
    p.set_defaults(func=_cmd_timeline)

    p = sub.add_parser("stats", help="aggregate statistics for a session or window")
    _add_root(p)
    p.add_argument("--session", required=True)
    _add_range(p)
    p.add_argument("--theta", type=float, default=1.0, help="elevated-stress threshold")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("delete", help="delete a session, or a record range with --from/--to")
    _add_root(p)
    p.add_argument("--session", required=True)
    _add_range(p)
    p.set_defaults(func=_cmd_delete)

    p = sub.add_parser("retention", help="apply per-session retention policies")
    _add_root(p)
    p.add_argument("--now", type=int, default=None, metavar="MS_UTC")
    p.set_defaults(func=_cmd_retention)

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--config", default=None, help="flat JSON config file")
    p.add_argument("--root", default=None)
    p.add_argument("--bind", default=None, metavar="HOST:PORT")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SecondSightError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
