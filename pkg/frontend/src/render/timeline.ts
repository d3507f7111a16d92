/** Timeline view: one tick per grid second across the requested window.
 * Ticks with a record carry lane data (speech presence, stress, focus) and
 * embed the full record for the hover card; seconds without a record stay
 * visibly empty. A record without physio has no stress value at all — the
 * lane shows a gap there, never a zero. */

import type { EpisodicRecord, TimelinePayload } from "../types.js";
import { escapeHtml, num, timeTag } from "../util.js";

function tick(second: number, record: EpisodicRecord | undefined, timezone: string): string {
  if (!record) {
    return `<div class="tick empty" data-second="${num(second)}"></div>`;
  }
  const attrs = [
    `data-second="${num(second)}"`,
    record.transcript ? `data-speech="${num(record.transcript.length)}"` : "",
    record.stress !== undefined ? `data-stress="${num(record.stress)}"` : "",
    record.gaze ? `data-focus="${num(record.gaze.focus)}"` : "",
  ]
    .filter(Boolean)
    .join(" ");
  const hover =
    `<div class="hover-card" hidden>${timeTag(record.ts_utc, timezone)}` +
    `<pre class="record">${escapeHtml(JSON.stringify(record, null, 1))}</pre></div>`;
  return `<div class="tick filled" ${attrs}>${hover}</div>`;
}

/** Window actually drawn: the explicit request bounds when present,
 * otherwise the extent of the returned records. */
export function drawnWindow(payload: TimelinePayload): [number, number] | null {
  if (payload.from_second !== null && payload.to_second !== null) {
    return [payload.from_second, payload.to_second];
  }
  if (!payload.records.length) return null;
  return [payload.records[0].second, payload.records[payload.records.length - 1].second];
}

export function renderTimeline(payload: TimelinePayload): string {
  const window = drawnWindow(payload);
  if (window === null) {
    return (
      `<section class="timeline" data-session="${escapeHtml(payload.session_id)}">` +
      `<p class="empty">no records in this window</p></section>`
    );
  }
  const bySecond = new Map(payload.records.map((r) => [r.second, r]));
  const ticks: string[] = [];
  for (let s = window[0]; s <= window[1]; s += 1) {
    ticks.push(tick(s, bySecond.get(s), payload.timezone));
  }
  const header =
    `<header>session <span class="session">${escapeHtml(payload.session_id)}</span>` +
    ` seconds <span class="from">${num(window[0])}</span>&ndash;` +
    `<span class="to">${num(window[1])}</span> &middot; ` +
    `<span class="count" data-count="${num(payload.records.length)}">` +
    `${num(payload.records.length)}</span> records</header>`;
  const empty = payload.records.length
    ? ""
    : `<p class="empty">no records in this window</p>`;
  return (
    `<section class="timeline" data-session="${escapeHtml(payload.session_id)}"` +
    ` data-from="${num(window[0])}" data-to="${num(window[1])}">` +
    header +
    `<div class="track">${ticks.join("")}</div>` +
    empty +
    `</section>`
  );
}
