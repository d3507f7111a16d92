/** View state and the pure transitions the widgets drive. */

import type { Episode } from "./types.js";

export type ViewName = "query" | "timeline" | "stats";

export interface ViewState {
  active_view: ViewName;
  current_query_text: string;
  selected_session: string | null;
  /** Inclusive [from_second, to_second]; only meaningful with a session. */
  timeline_window: [number, number] | null;
}

export function initialState(): ViewState {
  return {
    active_view: "query",
    current_query_text: "",
    selected_session: null,
    timeline_window: null,
  };
}

export function setView(state: ViewState, view: ViewName): ViewState {
  return { ...state, active_view: view };
}

export function setQueryText(state: ViewState, text: string): ViewState {
  return { ...state, current_query_text: text };
}

export function setSession(state: ViewState, sessionId: string | null): ViewState {
  if (sessionId === null) {
    return { ...state, selected_session: null, timeline_window: null };
  }
  return { ...state, selected_session: sessionId };
}

/** Clicking an episode jumps the timeline to exactly its window. */
export function selectEpisode(
  state: ViewState,
  episode: Pick<Episode, "session_id" | "from_second" | "to_second">,
): ViewState {
  return {
    ...state,
    active_view: "timeline",
    selected_session: episode.session_id,
    timeline_window: [episode.from_second, episode.to_second],
  };
}

/** Shift a window into [boundsFrom, boundsTo], keeping its width when the
 * bounds allow it; panning past the data edge clamps instead of escaping. */
export function clampWindow(
  window: [number, number],
  boundsFrom: number,
  boundsTo: number,
): [number, number] {
  const width = Math.max(0, window[1] - window[0]);
  let from = window[0];
  if (from + width > boundsTo) from = boundsTo - width;
  if (from < boundsFrom) from = boundsFrom;
  const to = Math.min(boundsTo, from + width);
  return [from, to];
}

export function panWindow(
  window: [number, number],
  deltaSeconds: number,
  boundsFrom: number,
  boundsTo: number,
): [number, number] {
  return clampWindow([window[0] + deltaSeconds, window[1] + deltaSeconds], boundsFrom, boundsTo);
}

export function zoomWindow(
  window: [number, number],
  factor: number,
  boundsFrom: number,
  boundsTo: number,
): [number, number] {
  const center = (window[0] + window[1]) / 2;
  const width = Math.max(1, Math.round((window[1] - window[0] + 1) * factor));
  const from = Math.round(center - width / 2);
  return clampWindow([from, from + width - 1], boundsFrom, boundsTo);
}

/** Drops responses that were superseded by a newer request for the same
 * view: only the most recently issued sequence number is accepted. */
export class RequestGate {
  private latest = 0;

  begin(): number {
    this.latest += 1;
    return this.latest;
  }

  accept(sequence: number): boolean {
    return sequence === this.latest;
  }
}
