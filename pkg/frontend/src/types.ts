/** Payload shapes mirroring the gateway's JSON responses. */

export interface Predicate {
  op: ">" | "<";
  value: number;
}

/** Echo of the structured query a result was executed with. Absent
 * constraints are omitted by the server, never null. */
export interface ParsedQuery {
  sessions?: string[];
  time_window?: [number, number];
  stress_pred?: Predicate;
  focus_pred?: Predicate;
  hr_pred?: Predicate;
  gsr_pred?: Predicate;
  content_terms: string[];
  limit: number;
}

export interface EpisodeContext {
  mean_stress?: number;
  mean_focus?: number;
  record_count: number;
}

export interface Episode {
  session_id: string;
  from_second: number;
  to_second: number;
  from_ts_utc: number;
  to_ts_utc: number;
  score: number;
  excerpt: string;
  context: EpisodeContext;
}

export interface QueryResult {
  episodes: Episode[];
  total_candidates: number;
  parsed: ParsedQuery;
  diagnostics: { parser: string; fallback: boolean; fallback_reason?: string };
}

export interface ChannelStats {
  mean: number;
  min: number;
  max: number;
  count: number;
  z_mean?: number;
}

export interface TranscriptRef {
  seg: number;
  speaker: string;
  text: string;
}

export interface GazeSummary {
  fixation_count: number;
  blink_count: number;
  saccade_count: number;
  fixation_ms: number;
  focus: number;
}

export interface EpisodicRecord {
  session_id: string;
  second: number;
  ts_utc: number;
  transcript?: TranscriptRef[];
  physio?: { [channel: string]: ChannelStats };
  gaze?: GazeSummary;
  stress?: number;
}

export interface TimelinePayload {
  session_id: string;
  timezone: string;
  started_at: number;
  from_second: number | null;
  to_second: number | null;
  records: EpisodicRecord[];
}

export interface SessionStats {
  record_count: number;
  speech_seconds: number;
  mean_HR?: number;
  mean_GSR?: number;
  fixations_per_minute?: number;
  blink_count: number;
  saccade_count: number;
  elevated_stress_seconds: number;
  elevated_episode_count: number;
}

export interface StatsPayload {
  session_id: string;
  from_second: number | null;
  to_second: number | null;
  stats: SessionStats;
}

export interface SessionManifest {
  session_id: string;
  started_at: number;
  timezone: string;
  capture_enabled: boolean;
  modalities_enabled: string[];
  excluded_speakers: string[];
  retention_days?: number | null;
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}
