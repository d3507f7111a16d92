"""Natural-language query parsing.

Two parsers produce the same structured form: a deterministic rules grammar
(always available, fully offline) and an optional external LLM provider.
Any provider failure — network error, timeout, malformed or invalid
response — falls back to the rules parser, so parsing never fails for
nonempty text. The provider receives only the query text, the clock, the
timezone, and the response schema; never archive content.

The rules grammar's vocabulary (state phrases, stopwords, weekday names)
ships as package data (data/query_grammar.json) so deployments can extend
it without code changes.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from functools import lru_cache
from importlib import resources
from typing import Mapping, Protocol
from zoneinfo import ZoneInfo

from .errors import InvalidTimezone, UnparsableQuery, ValidationError
from .model import _int_field, _str_field

DEFAULT_THRESHOLDS = {"theta": 1.0, "theta2": 0.5, "phi": 0.6}

_PRED_FIELDS = ("stress_pred", "focus_pred", "hr_pred", "gsr_pred")
_QUERY_KEYS = ("sessions", "time_window") + _PRED_FIELDS + ("content_terms", "limit")

# Serialized schema sent to the LLM provider so it can shape its response.
QUERY_SCHEMA = {
    "type": "object",
    "properties": {
        "sessions": {"type": ["array", "null"], "items": {"type": "string"}},
        "time_window": {
            "type": ["array", "null"],
            "items": {"type": "integer"},
            "description": "[from_utc_ms, to_utc_ms), half-open",
        },
        "stress_pred": {"$ref": "#/definitions/pred"},
        "focus_pred": {"$ref": "#/definitions/pred"},
        "hr_pred": {"$ref": "#/definitions/pred"},
        "gsr_pred": {"$ref": "#/definitions/pred"},
        "content_terms": {"type": "array", "items": {"type": "string"}},
        "limit": {"type": "integer", "minimum": 1},
        "confidence": {"type": "number"},
    },
    "definitions": {
        "pred": {
            "type": ["object", "null"],
            "properties": {"op": {"enum": [">", "<"]}, "value": {"type": "number"}},
            "required": ["op", "value"],
        }
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Predicate:
    op: str  # ">" or "<"
    value: float

    def __post_init__(self):
        if self.op not in (">", "<"):
            raise ValidationError(f"predicate op must be '>' or '<', got {self.op!r}")
        value = self.value
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError("predicate value must be a finite number")
        object.__setattr__(self, "value", float(value))

    def holds(self, value: float | None) -> bool:
        """Missing fields fail the predicate: no evidence, no match."""
        if value is None:
            return False
        return value > self.value if self.op == ">" else value < self.value


@dataclass(frozen=True)
class StructuredQuery:
    """The filter-then-rank request both parsers compile to.

    At least one of time_window, a predicate, or content_terms must be set.
    sessions=None means all sessions.
    """

    sessions: tuple[str, ...] | None = None
    time_window: tuple[int, int] | None = None
    stress_pred: Predicate | None = None
    focus_pred: Predicate | None = None
    hr_pred: Predicate | None = None
    gsr_pred: Predicate | None = None
    content_terms: tuple[str, ...] = ()
    limit: int = 10

    def __post_init__(self):
        if self.sessions is not None:
            sessions = tuple(_str_field(s, "sessions entry") for s in self.sessions)
            if not sessions:
                raise ValidationError("sessions must be None (all) or a nonempty set")
            object.__setattr__(self, "sessions", sessions)
        if self.time_window is not None:
            window = tuple(self.time_window)
            if len(window) != 2:
                raise ValidationError("time_window must be [from_utc_ms, to_utc_ms)")
            window = (_int_field(window[0], "time_window from"), _int_field(window[1], "time_window to"))
            if window[0] >= window[1]:
                raise ValidationError("time_window must be a nonempty half-open interval")
            object.__setattr__(self, "time_window", window)
        for name in _PRED_FIELDS:
            pred = getattr(self, name)
            if pred is not None and not isinstance(pred, Predicate):
                raise ValidationError(f"{name} must be a Predicate")
        terms = tuple(_str_field(t, "content term").lower() for t in self.content_terms)
        object.__setattr__(self, "content_terms", terms)
        limit = _int_field(self.limit, "limit")
        if limit < 1:
            raise ValidationError("limit must be >= 1")
        object.__setattr__(self, "limit", limit)
        if self.time_window is None and not terms and not any(
            getattr(self, name) for name in _PRED_FIELDS
        ):
            raise ValidationError(
                "query must set a time window, a predicate, or content terms"
            )

    def predicates(self) -> dict[str, Predicate]:
        return {
            name: pred
            for name in _PRED_FIELDS
            if (pred := getattr(self, name)) is not None
        }


def structured_query_to_dict(query: StructuredQuery) -> dict:
    out: dict = {}
    if query.sessions is not None:
        out["sessions"] = list(query.sessions)
    if query.time_window is not None:
        out["time_window"] = list(query.time_window)
    for name in _PRED_FIELDS:
        pred = getattr(query, name)
        if pred is not None:
            out[name] = {"op": pred.op, "value": pred.value}
    out["content_terms"] = list(query.content_terms)
    out["limit"] = query.limit
    return out


def structured_query_from_dict(raw: Mapping, ignore_keys: tuple[str, ...] = ()) -> StructuredQuery:
    if not isinstance(raw, Mapping):
        raise ValidationError("structured query must be an object")
    data = {k: v for k, v in raw.items() if k not in ignore_keys}
    unknown = sorted(set(data) - set(_QUERY_KEYS))
    if unknown:
        raise ValidationError(f"unknown query fields: {', '.join(unknown)}")

    def pred(name: str) -> Predicate | None:
        value = data.get(name)
        if value is None:
            return None
        if not isinstance(value, Mapping) or set(value) != {"op", "value"}:
            raise ValidationError(f"{name} must be {{op, value}}")
        return Predicate(op=value["op"], value=value["value"])

    sessions = data.get("sessions")
    return StructuredQuery(
        sessions=tuple(sessions) if sessions is not None else None,
        time_window=tuple(data["time_window"]) if data.get("time_window") is not None else None,
        stress_pred=pred("stress_pred"),
        focus_pred=pred("focus_pred"),
        hr_pred=pred("hr_pred"),
        gsr_pred=pred("gsr_pred"),
        content_terms=tuple(data.get("content_terms", ())),
        limit=data.get("limit", 10),
    )


@lru_cache(maxsize=1)
def load_grammar() -> dict:
    text = resources.files("secondsight").joinpath("data/query_grammar.json").read_text("utf-8")
    grammar = json.loads(text)
    for key in ("state_phrases", "weekdays", "stopwords"):
        if key not in grammar:
            raise ValidationError(f"query grammar data missing {key!r}")
    return grammar


_ISO_DATE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_TOKEN = re.compile(r"[a-z0-9:]+")
_CLOCK = re.compile(r"^(\d{1,2})(?::(\d{2}))?(am|pm)?$")


def _parse_clock(tokens: list[str], i: int) -> tuple[time, int] | None:
    """Parse a clock time starting at tokens[i]; returns (time, next_index).

    Accepts 2pm, 2:30pm, 14:00, and a detached am/pm token, but not a bare
    integer — "between 2 and 3" must stay free to mean counts, not hours.
    """
    m = _CLOCK.fullmatch(tokens[i])
    if not m:
        return None
    hour, minute, meridiem = int(m.group(1)), int(m.group(2) or 0), m.group(3)
    end = i + 1
    if meridiem is None and end < len(tokens) and tokens[end] in ("am", "pm"):
        meridiem = tokens[end]
        end += 1
    if m.group(2) is None and meridiem is None:
        return None
    if minute > 59:
        return None
    if meridiem is not None:
        if not 1 <= hour <= 12:
            return None
        hour = hour % 12 + (12 if meridiem == "pm" else 0)
    elif hour > 23:
        return None
    return time(hour, minute), end


def _local_zone(timezone: str) -> ZoneInfo:
    try:
        return ZoneInfo(timezone)
    except Exception as exc:
        raise InvalidTimezone(f"unknown timezone: {timezone!r}") from exc


def parse_query_rules(
    text: str,
    now_utc_ms: int,
    timezone: str,
    thresholds: Mapping[str, float] | None = None,
) -> StructuredQuery:
    """Deterministic grammar: state phrases -> predicates, time phrases ->
    a UTC window, remaining non-stopword tokens -> content terms.

    Time phrases resolve against now_utc_ms in the given IANA timezone. An
    explicit ISO date beats relative day words; the first matched day word
    and, per field, the first matched state phrase win. "between <clock>
    and <clock>" binds to the selected day (today when none), spanning
    midnight when the end clock is not after the start.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparsableQuery("query text is empty")
    thresholds = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    grammar = load_grammar()
    tz = _local_zone(timezone)
    now_local = datetime.fromtimestamp(_int_field(now_utc_ms, "now_utc_ms") / 1000, tz)

    iso_date: list[date] = []

    def take_date(m: re.Match) -> str:
        try:
            parsed = date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        except ValueError:
            return m.group(0)  # 2025-13-40 is not a date; leave the tokens
        if not iso_date:
            iso_date.append(parsed)
        return " "

    lowered = _ISO_DATE.sub(take_date, text.lower())
    tokens = _TOKEN.findall(lowered)
    consumed = [False] * len(tokens)

    def free(i: int, n: int) -> bool:
        return i + n <= len(tokens) and not any(consumed[i : i + n])

    # -- time phrases ------------------------------------------------------
    weekdays: dict[str, int] = grammar["weekdays"]
    day_offset: int | None = None
    weekday_target: int | None = None
    clocks: tuple[time, time] | None = None
    for i, tok in enumerate(tokens):
        if weekday_target is None and tok == "last" and free(i, 2) and tokens[i + 1] in weekdays:
            weekday_target = weekdays[tokens[i + 1]]
            consumed[i] = consumed[i + 1] = True
        elif day_offset is None and tok in ("today", "yesterday") and free(i, 1):
            day_offset = 0 if tok == "today" else -1
            consumed[i] = True
        elif clocks is None and tok == "between" and free(i, 1):
            start = _parse_clock(tokens, i + 1) if i + 1 < len(tokens) else None
            if start is None:
                continue
            t1, j = start
            if j < len(tokens) and tokens[j] == "and":
                end = _parse_clock(tokens, j + 1) if j + 1 < len(tokens) else None
                if end is None:
                    continue
                t2, k = end
                if free(i, k - i):
                    clocks = (t1, t2)
                    for idx in range(i, k):
                        consumed[idx] = True

    base_date: date | None = None
    if iso_date:
        base_date = iso_date[0]
    elif weekday_target is not None:
        delta = (now_local.weekday() - weekday_target) % 7 or 7
        base_date = (now_local - timedelta(days=delta)).date()
    elif day_offset is not None:
        base_date = (now_local + timedelta(days=day_offset)).date()
    elif clocks is not None:
        base_date = now_local.date()

    window: tuple[int, int] | None = None
    if base_date is not None:
        if clocks is not None:
            start_dt = datetime.combine(base_date, clocks[0], tzinfo=tz)
            end_dt = datetime.combine(base_date, clocks[1], tzinfo=tz)
            if end_dt <= start_dt:
                end_dt = datetime.combine(base_date + timedelta(days=1), clocks[1], tzinfo=tz)
        else:
            start_dt = datetime.combine(base_date, time(0, 0), tzinfo=tz)
            end_dt = datetime.combine(base_date + timedelta(days=1), time(0, 0), tzinfo=tz)
        window = (int(start_dt.timestamp() * 1000), int(end_dt.timestamp() * 1000))

    # -- state phrases (longest first so "elevated stress" beats "stressed")
    preds: dict[str, Predicate] = {}
    entries = sorted(
        enumerate(grammar["state_phrases"]),
        key=lambda pair: (-len(pair[1]["phrase"].split()), pair[0]),
    )
    for _, entry in entries:
        phrase = entry["phrase"].split()
        for i in range(len(tokens) - len(phrase) + 1):
            if free(i, len(phrase)) and tokens[i : i + len(phrase)] == phrase:
                for idx in range(i, i + len(phrase)):
                    consumed[idx] = True
                field = entry["field"]
                if field not in preds:
                    value = thresholds[entry["threshold"]]
                    if entry.get("negate"):
                        value = -value
                    preds[field] = Predicate(op=entry["op"], value=value)

    # -- content terms -----------------------------------------------------
    stopwords = frozenset(grammar["stopwords"])
    leftover = [t for i, t in enumerate(tokens) if not consumed[i]]
    terms = [t for t in leftover if t not in stopwords]
    if not terms and window is None and not preds:
        terms = leftover  # all-stopword query: search the words as given
    if not terms and window is None and not preds:
        raise UnparsableQuery("query has no usable tokens")

    return StructuredQuery(
        time_window=window,
        stress_pred=preds.get("stress"),
        focus_pred=preds.get("focus"),
        hr_pred=preds.get("hr"),
        gsr_pred=preds.get("gsr"),
        content_terms=tuple(terms),
    )


class QueryParserProvider(Protocol):
    """External parser contract: returns the serialized StructuredQuery
    (plus an ignored "confidence"), or raises on any failure."""

    def parse(self, text: str, now_utc_ms: int, timezone: str) -> Mapping: ...


class HttpLLMProvider:
    """HTTP client for the external parser. The request body carries only
    the query text, clock, timezone, and expected schema."""

    def __init__(self, endpoint: str, timeout_ms: int = 5000):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms

    def parse(self, text: str, now_utc_ms: int, timezone: str) -> Mapping:
        import httpx

        response = httpx.post(
            self.endpoint,
            json={
                "text": text,
                "now_utc_ms": now_utc_ms,
                "timezone": timezone,
                "schema": QUERY_SCHEMA,
            },
            timeout=self.timeout_ms / 1000,
        )
        response.raise_for_status()
        return response.json()


def parse_query_llm(
    text: str,
    now_utc_ms: int,
    timezone: str,
    provider: QueryParserProvider,
    thresholds: Mapping[str, float] | None = None,
) -> tuple[StructuredQuery, dict]:
    """Parse via the external provider, falling back to the rules grammar.

    Returns (query, diagnostics); diagnostics notes which parser produced
    the query and why a fallback happened, and is metadata only — the
    fallback query itself is exactly parse_query_rules' output.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparsableQuery("query text is empty")
    try:
        raw = provider.parse(text=text, now_utc_ms=now_utc_ms, timezone=timezone)
        query = structured_query_from_dict(raw, ignore_keys=("confidence",))
        return query, {"parser": "llm", "fallback": False}
    except Exception as exc:  # any provider failure must yield a query
        reason = f"{type(exc).__name__}: {exc}"
    query = parse_query_rules(text, now_utc_ms, timezone, thresholds)
    return query, {"parser": "rules", "fallback": True, "fallback_reason": reason}
