/** Error banners: gateway error envelopes and connection failures. */

import { escapeHtml } from "../util.js";

export function renderErrorBanner(code: string, message: string): string {
  return (
    `<div class="banner error" role="alert" data-code="${escapeHtml(code)}">` +
    `<strong>${escapeHtml(code)}</strong> ${escapeHtml(message)}</div>`
  );
}

export function renderConnectionBanner(detail: string): string {
  return (
    `<div class="banner connection" role="alert">` +
    `<strong>cannot reach the gateway</strong> ${escapeHtml(detail)} ` +
    `<button class="retry" type="button">retry</button></div>`
  );
}
