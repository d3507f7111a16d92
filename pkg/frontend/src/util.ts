/** Rendering helpers shared by the three views. */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Numbers are rendered verbatim — the payload value's canonical string,
 * never rounded or reformatted, so what the user sees is what the API
 * returned. */
export function num(value: number): string {
  return String(value);
}

/** A millisecond UTC timestamp formatted in the session's timezone. */
export function formatTs(tsUtc: number, timezone: string): string {
  const formatter = new Intl.DateTimeFormat("en-GB", {
    timeZone: timezone,
    year: "numeric",
    month: "short",
    day: "2-digit",
    hour: "2-digit",
    minute: "2-digit",
    second: "2-digit",
    hour12: false,
  });
  return formatter.format(new Date(tsUtc));
}

/** `<time>` element carrying the raw timestamp alongside its local text. */
export function timeTag(tsUtc: number, timezone: string): string {
  return `<time data-ts="${num(tsUtc)}">${escapeHtml(formatTs(tsUtc, timezone))}</time>`;
}
