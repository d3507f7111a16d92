"""Hybrid retrieval: metadata filtering, gap-merge into episodes, BM25
ranking over transcript content.

Filtering is a strict conjunction — a record missing a predicated field
fails that predicate, so a stress query never surfaces seconds with no
physiological evidence. Ranking statistics (N, df, avgdl) are computed over
the merged windows of the current query only, which keeps every query
self-contained and directly checkable against a brute-force oracle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from math import log
from typing import Mapping, Sequence

from .archive import Archive
from .config import ServiceConfig
from .errors import UnknownSession, UnparsableQuery
from .model import EpisodicRecord, dumps
from .queries import (
    HttpLLMProvider,
    QueryParserProvider,
    StructuredQuery,
    parse_query_llm,
    parse_query_rules,
    structured_query_to_dict,
)

BM25_K1 = 1.2
BM25_B = 0.75

_WORD = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


@dataclass(frozen=True)
class EpisodeContext:
    """Physiological/attentional context of one result window; means are
    None when no record in the window carries that signal."""

    mean_stress: float | None
    mean_focus: float | None
    record_count: int


@dataclass(frozen=True)
class Episode:
    session_id: str
    from_second: int
    to_second: int
    from_ts_utc: int
    to_ts_utc: int
    score: float
    excerpt: str
    context: EpisodeContext


@dataclass(frozen=True)
class QueryResult:
    episodes: tuple[Episode, ...]
    total_candidates: int
    parsed: StructuredQuery
    diagnostics: Mapping[str, object]


def episode_to_dict(episode: Episode) -> dict:
    context: dict = {}
    if episode.context.mean_stress is not None:
        context["mean_stress"] = episode.context.mean_stress
    if episode.context.mean_focus is not None:
        context["mean_focus"] = episode.context.mean_focus
    context["record_count"] = episode.context.record_count
    return {
        "session_id": episode.session_id,
        "from_second": episode.from_second,
        "to_second": episode.to_second,
        "from_ts_utc": episode.from_ts_utc,
        "to_ts_utc": episode.to_ts_utc,
        "score": episode.score,
        "excerpt": episode.excerpt,
        "context": context,
    }


def query_result_to_dict(result: QueryResult) -> dict:
    return {
        "episodes": [episode_to_dict(e) for e in result.episodes],
        "total_candidates": result.total_candidates,
        "parsed": structured_query_to_dict(result.parsed),
        "diagnostics": dict(result.diagnostics),
    }


def query_result_to_json(result: QueryResult) -> str:
    return dumps(query_result_to_dict(result))


def _record_field(record: EpisodicRecord, name: str) -> float | None:
    if name == "stress_pred":
        return record.stress
    if name == "focus_pred":
        return record.gaze.focus if record.gaze is not None else None
    channel = "HR" if name == "hr_pred" else "GSR"
    if record.physio is None or channel not in record.physio:
        return None
    return record.physio[channel].z_mean


def filter_records(archive: Archive, query: StructuredQuery) -> list[tuple[str, EpisodicRecord]]:
    """All records in scope passing the window and every set predicate,
    ordered by session then second. Scope entries that don't exist are
    skipped here; endpoint-level session validation happens in the gateway.
    """
    scope = sorted(query.sessions) if query.sessions is not None else archive.list_sessions()
    predicates = query.predicates()
    out: list[tuple[str, EpisodicRecord]] = []
    for session_id in scope:
        try:
            records = archive.read_all(session_id)
        except UnknownSession:
            continue
        for record in records:
            if query.time_window is not None and not (
                query.time_window[0] <= record.ts_utc < query.time_window[1]
            ):
                continue
            if all(pred.holds(_record_field(record, name)) for name, pred in predicates.items()):
                out.append((session_id, record))
    return out


def _window_excerpt(records: Sequence[EpisodicRecord]) -> str:
    """Concatenated distinct transcript texts in time order; a segment
    spanning several seconds appears once (distinct by segment ref)."""
    seen: set[int] = set()
    parts: list[str] = []
    for record in records:
        for ref in record.transcript:
            if ref.seg not in seen:
                seen.add(ref.seg)
                parts.append(ref.text)
    return " ".join(parts)


def _window_context(records: Sequence[EpisodicRecord]) -> EpisodeContext:
    stresses = [r.stress for r in records if r.stress is not None]
    focuses = [r.gaze.focus for r in records if r.gaze is not None]
    return EpisodeContext(
        mean_stress=sum(stresses) / len(stresses) if stresses else None,
        mean_focus=sum(focuses) / len(focuses) if focuses else None,
        record_count=len(records),
    )


def bm25_scores(documents: Sequence[Sequence[str]], terms: Sequence[str]) -> list[float]:
    """BM25 with k1=1.2, b=0.75, idf = ln(1 + (N-df+0.5)/(df+0.5));
    corpus statistics come from `documents` alone."""
    n = len(documents)
    if n == 0:
        return []
    if not terms:
        return [0.0] * n
    avgdl = sum(len(d) for d in documents) / n
    if avgdl == 0:
        return [0.0] * n
    df = {t: sum(1 for d in documents if t in d) for t in set(terms)}
    scores = []
    for doc in documents:
        dl = len(doc)
        norm = BM25_K1 * (1 - BM25_B + BM25_B * dl / avgdl)
        score = 0.0
        for term in terms:
            if df[term] == 0:
                continue
            tf = doc.count(term)
            if tf == 0:
                continue
            idf = log(1 + (n - df[term] + 0.5) / (df[term] + 0.5))
            score += idf * tf * (BM25_K1 + 1) / (tf + norm)
        scores.append(score)
    return scores


def rank_and_merge(
    candidates: Sequence[tuple[str, EpisodicRecord]],
    content_terms: Sequence[str],
    gap: int = 2,
    limit: int = 10,
) -> list[Episode]:
    """Merge per-session candidate seconds into maximal windows whose
    consecutive seconds differ by <= gap, score each window's excerpt by
    BM25 over this query's windows, and return the top `limit`.

    With content terms, order is score desc, then earlier from_second, then
    session_id; with no terms all scores are 0 and order is recency
    (latest from_second first, then session_id).
    """
    windows: list[tuple[str, list[EpisodicRecord]]] = []
    for session_id, record in candidates:
        if (
            windows
            and windows[-1][0] == session_id
            and record.second - windows[-1][1][-1].second <= gap
            and record.second > windows[-1][1][-1].second
        ):
            windows[-1][1].append(record)
        else:
            windows.append((session_id, [record]))

    documents = [tokenize(_window_excerpt(records)) for _, records in windows]
    scores = bm25_scores(documents, list(content_terms))
    episodes = [
        Episode(
            session_id=session_id,
            from_second=records[0].second,
            to_second=records[-1].second,
            from_ts_utc=records[0].ts_utc,
            to_ts_utc=records[-1].ts_utc,
            score=score,
            excerpt=_window_excerpt(records),
            context=_window_context(records),
        )
        for (session_id, records), score in zip(windows, scores)
    ]
    if content_terms:
        episodes.sort(key=lambda e: (-e.score, e.from_second, e.session_id))
    else:
        episodes.sort(key=lambda e: (-e.from_second, e.session_id))
    return episodes[:limit]


def run_structured_query(
    archive: Archive,
    parsed: StructuredQuery,
    config: ServiceConfig | None = None,
    diagnostics: Mapping[str, object] | None = None,
) -> QueryResult:
    """Filter -> merge -> rank for an already-parsed query."""
    config = config or ServiceConfig()
    candidates = filter_records(archive, parsed)
    episodes = rank_and_merge(candidates, parsed.content_terms, config.merge_gap, parsed.limit)
    return QueryResult(
        episodes=tuple(episodes),
        total_candidates=len(candidates),
        parsed=parsed,
        diagnostics=dict(diagnostics) if diagnostics else {"parser": "structured", "fallback": False},
    )


def execute_query(
    archive: Archive,
    text: str,
    now_utc_ms: int,
    timezone: str,
    config: ServiceConfig | None = None,
    provider: QueryParserProvider | None = None,
    sessions: Sequence[str] | None = None,
    limit: int | None = None,
) -> QueryResult:
    """Parse (LLM when configured, rules otherwise) -> filter -> rank.

    `sessions` and `limit` are caller overrides (HTTP query parameters)
    applied after parsing. Deterministic for a fixed archive whenever the
    rules parser is in play.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparsableQuery("query text is empty")
    config = config or ServiceConfig()
    if provider is None and config.llm_provider is not None and config.llm_provider.enabled:
        provider = HttpLLMProvider(config.llm_provider.endpoint, config.llm_provider.timeout_ms)
    if provider is not None:
        parsed, diagnostics = parse_query_llm(
            text, now_utc_ms, timezone, provider, config.thresholds
        )
    else:
        parsed = parse_query_rules(text, now_utc_ms, timezone, config.thresholds)
        diagnostics = {"parser": "rules", "fallback": False}
    if sessions is not None:
        parsed = replace(parsed, sessions=tuple(sessions))
    if limit is not None:
        parsed = replace(parsed, limit=limit)
    return run_structured_query(archive, parsed, config, diagnostics)
