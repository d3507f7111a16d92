"""secondsight: a local-first episodic memory engine.

Converts asynchronous speech, physiology (HR/GSR), and gaze streams into
one-second multimodal episodic records, archives them in append-only JSONL
under a local root, and answers natural-language questions about past
moments through hybrid metadata-filter-then-rank retrieval — via an HTTP
API, a CLI, and an optional web console.
"""

from .align import (
    ChannelBaseline,
    SessionBaseline,
    align_session,
    assign_transcript,
    build_grid,
    compute_baseline,
    normalize_and_score,
    resample_physio,
    summarize_gaze,
)
from .archive import Archive, SessionStats, compute_stats_from_records
from .config import LLMProviderConfig, ServiceConfig, load_config
from .errors import (
    AllStreamsEmpty,
    ArchiveCorrupt,
    BindFailure,
    ConsentDisabled,
    DuplicateSession,
    InvalidRange,
    InvalidTimezone,
    MissingField,
    NoPhysioData,
    OutOfOrderAppend,
    SecondSightError,
    SessionFinalized,
    StreamUnreadable,
    UnknownSession,
    UnparsableQuery,
    ValidationError,
)
from .ingest import (
    IngestReport,
    parse_gaze_stream,
    parse_physio_stream,
    parse_transcript_stream,
    redact_excluded_speakers,
)
from .model import (
    ChannelStats,
    EpisodicRecord,
    GazeEvent,
    GazeSummary,
    PhysioSample,
    SessionManifest,
    TranscriptRef,
    TranscriptSegment,
    dumps,
    manifest_to_dict,
    record_from_dict,
    record_to_dict,
    validate_manifest,
)
from .pipeline import finalize_session, ingest_stream
from .queries import (
    HttpLLMProvider,
    Predicate,
    StructuredQuery,
    parse_query_llm,
    parse_query_rules,
    structured_query_from_dict,
    structured_query_to_dict,
)
from .retrieval import (
    Episode,
    EpisodeContext,
    QueryResult,
    bm25_scores,
    execute_query,
    filter_records,
    query_result_to_dict,
    query_result_to_json,
    rank_and_merge,
    run_structured_query,
    tokenize,
)
from .service import build_app, serve

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
