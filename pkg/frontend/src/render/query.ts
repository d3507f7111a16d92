/** Query view: ranked episodes with excerpts, time ranges, context badges,
 * and the parsed-query echo. Pure payload-to-HTML; numbers pass through
 * verbatim. */

import type { Episode, QueryResult } from "../types.js";
import { escapeHtml, num, timeTag } from "../util.js";

export type TimezoneOf = (sessionId: string) => string;

function badge(kind: string, label: string, value: number): string {
  return `<span class="badge ${kind}" data-value="${num(value)}">${label} ${num(value)}</span>`;
}

function renderEpisode(episode: Episode, index: number, timezone: string): string {
  const ctx = episode.context;
  const badges = [
    ctx.mean_stress !== undefined ? badge("stress", "stress", ctx.mean_stress) : "",
    ctx.mean_focus !== undefined ? badge("focus", "focus", ctx.mean_focus) : "",
    badge("records", "records", ctx.record_count),
    badge("score", "score", episode.score),
  ]
    .filter(Boolean)
    .join(" ");
  const excerpt = episode.excerpt
    ? `<p class="excerpt">${escapeHtml(episode.excerpt)}</p>`
    : `<p class="excerpt empty">(no transcript in this window)</p>`;
  return (
    `<li><article class="episode" data-session="${escapeHtml(episode.session_id)}"` +
    ` data-from="${num(episode.from_second)}" data-to="${num(episode.to_second)}"` +
    ` data-score="${num(episode.score)}" tabindex="0">` +
    `<header>#${index + 1} <span class="session">${escapeHtml(episode.session_id)}</span>` +
    ` seconds <span class="from">${num(episode.from_second)}</span>` +
    `&ndash;<span class="to">${num(episode.to_second)}</span> ` +
    `${timeTag(episode.from_ts_utc, timezone)} &ndash; ${timeTag(episode.to_ts_utc, timezone)}` +
    `</header>${excerpt}<p class="badges">${badges}</p></article></li>`
  );
}

export function renderQueryResult(result: QueryResult, tzOf: TimezoneOf = () => "UTC"): string {
  const episodes = result.episodes.length
    ? `<ol class="episodes">${result.episodes
        .map((e, i) => renderEpisode(e, i, tzOf(e.session_id)))
        .join("")}</ol>`
    : `<p class="empty">no matching episodes</p>`;
  const parsed = escapeHtml(JSON.stringify(result.parsed));
  return (
    `<section class="query-result">` +
    `<p class="total">matched seconds: <span data-total="${num(result.total_candidates)}">` +
    `${num(result.total_candidates)}</span> &middot; parser: ` +
    `${escapeHtml(result.diagnostics.parser)}${result.diagnostics.fallback ? " (fallback)" : ""}</p>` +
    `<details class="parsed"><summary>parsed query</summary><code>${parsed}</code></details>` +
    episodes +
    `</section>`
  );
}
