/** Stats view: one labeled panel per aggregate field. Values are the API
 * payload's numbers verbatim — no client-side recomputation or rounding.
 * Fields the API omits (no underlying data in the range) render as
 * explicit "no data" panels rather than zeros. */

import type { SessionStats, StatsPayload } from "../types.js";
import { escapeHtml, num } from "../util.js";

const PANELS: Array<{ key: keyof SessionStats; label: string }> = [
  { key: "record_count", label: "records" },
  { key: "speech_seconds", label: "seconds with speech" },
  { key: "mean_HR", label: "mean heart rate" },
  { key: "mean_GSR", label: "mean skin response" },
  { key: "fixations_per_minute", label: "fixations / minute" },
  { key: "blink_count", label: "blinks" },
  { key: "saccade_count", label: "saccades" },
  { key: "elevated_stress_seconds", label: "elevated-stress seconds" },
  { key: "elevated_episode_count", label: "elevated episodes" },
];

function panel(key: keyof SessionStats, label: string, value: number | undefined): string {
  if (value === undefined) {
    return (
      `<div class="panel no-data" data-key="${key}">` +
      `<dt>${escapeHtml(label)}</dt><dd class="caption">no data</dd></div>`
    );
  }
  return (
    `<div class="panel" data-key="${key}" data-value="${num(value)}">` +
    `<dt>${escapeHtml(label)}</dt><dd>${num(value)}</dd></div>`
  );
}

export function renderStats(payload: StatsPayload): string {
  const windowLabel =
    payload.from_second !== null || payload.to_second !== null
      ? ` seconds <span class="from">${payload.from_second === null ? "start" : num(payload.from_second)}</span>` +
        `&ndash;<span class="to">${payload.to_second === null ? "end" : num(payload.to_second)}</span>`
      : " whole session";
  const panels = PANELS.map(({ key, label }) => panel(key, label, payload.stats[key])).join("");
  const emptyNote =
    payload.stats.record_count === 0 ? `<p class="empty">no data in this range</p>` : "";
  return (
    `<section class="stats" data-session="${escapeHtml(payload.session_id)}">` +
    `<header>session <span class="session">${escapeHtml(payload.session_id)}</span>${windowLabel}</header>` +
    emptyNote +
    `<dl class="panels">${panels}</dl>` +
    `</section>`
  );
}
