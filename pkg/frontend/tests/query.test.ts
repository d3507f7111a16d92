import { describe, expect, it } from "vitest";

import { renderQueryResult } from "../src/render/query.js";
import type { QueryResult, SessionManifest } from "../src/types.js";
import { escapeHtml } from "../src/util.js";
import { collectNumbers, fixture } from "./helpers.js";

const result = fixture<QueryResult>("query");
const empty = fixture<QueryResult>("query_empty");
const manifest = fixture<SessionManifest>("manifest");
const tzOf = () => manifest.timezone;

describe("query view", () => {
  it("renders every number in the payload verbatim", () => {
    const html = renderQueryResult(result, tzOf);
    for (const [path, value] of collectNumbers(result)) {
      expect(html, `missing ${path} = ${value}`).toContain(String(value));
    }
  });

  it("tags each episode with its coordinates for navigation", () => {
    const html = renderQueryResult(result, tzOf);
    const episode = result.episodes[0];
    expect(html).toContain(`data-session="${episode.session_id}"`);
    expect(html).toContain(`data-from="${String(episode.from_second)}"`);
    expect(html).toContain(`data-to="${String(episode.to_second)}"`);
    expect(html).toContain(`data-score="${String(episode.score)}"`);
    expect(html).toContain("#1");
  });

  it("shows context badges with untouched payload values", () => {
    const html = renderQueryResult(result, tzOf);
    const ctx = result.episodes[0].context;
    expect(ctx.mean_stress).toBeDefined();
    expect(ctx.mean_focus).toBeDefined();
    expect(html).toContain(`data-value="${String(ctx.mean_stress)}">stress ${String(ctx.mean_stress)}`);
    expect(html).toContain(`data-value="${String(ctx.mean_focus)}">focus ${String(ctx.mean_focus)}`);
    expect(html).toContain(`data-value="${String(ctx.record_count)}">records ${String(ctx.record_count)}`);
    expect(html).toContain(`data-value="${String(result.episodes[0].score)}">score ${String(result.episodes[0].score)}`);
  });

  it("shows the excerpt text", () => {
    const html = renderQueryResult(result, tzOf);
    expect(html).toContain(result.episodes[0].excerpt);
  });

  it("formats timestamps in the session timezone", () => {
    const berlin = renderQueryResult(result, tzOf);
    const utc = renderQueryResult(result, () => "UTC");
    const fromTs = result.episodes[0].from_ts_utc;
    expect(berlin).toContain(`data-ts="${String(fromTs)}"`);
    // 1700000030000 ms is 22:13:50 UTC, 23:13:50 in Europe/Berlin (CET).
    expect(berlin).toContain("23:13:50");
    expect(utc).toContain("22:13:50");
  });

  it("echoes the parsed query as JSON", () => {
    const html = renderQueryResult(result, tzOf);
    expect(html).toContain("parsed query");
    expect(html).toContain(escapeHtml(JSON.stringify(result.parsed)));
  });

  it("reports the parser and marks fallbacks", () => {
    const direct = renderQueryResult(result, tzOf);
    expect(direct).toContain(`parser: ${result.diagnostics.parser}`);
    expect(direct).not.toContain("(fallback)");
    const degraded = renderQueryResult(
      { ...result, diagnostics: { parser: "rules", fallback: true } },
      tzOf,
    );
    expect(degraded).toContain("(fallback)");
  });

  it("shows the matched-seconds total", () => {
    const html = renderQueryResult(result, tzOf);
    expect(html).toContain(`data-total="${String(result.total_candidates)}"`);
  });

  it("renders the empty state when nothing matches", () => {
    const html = renderQueryResult(empty, tzOf);
    expect(html).toContain("no matching episodes");
    expect(html).toContain('data-total="0"');
    expect(html).not.toContain("<article");
  });

  it("escapes markup smuggled into text fields", () => {
    const hostile: QueryResult = {
      ...result,
      episodes: [
        {
          ...result.episodes[0],
          session_id: '<img src=x onerror="x()">',
          excerpt: "<script>alert(1)</script>",
        },
      ],
    };
    const html = renderQueryResult(hostile, tzOf);
    expect(html).not.toContain("<script>");
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;script&gt;");
  });
});
