/** Browser bootstrap: wires the three views to the gateway and keeps the
 * view state in one place. All rendering goes through the pure functions
 * in ./render so the browser layer stays a thin shell. */

import { ConnectionError, Gateway, GatewayError } from "./api.js";
import { renderConnectionBanner, renderErrorBanner } from "./render/banner.js";
import { renderQueryResult } from "./render/query.js";
import { drawnWindow, renderTimeline } from "./render/timeline.js";
import { renderStats } from "./render/stats.js";
import {
  RequestGate,
  ViewState,
  initialState,
  panWindow,
  selectEpisode,
  setQueryText,
  setSession,
  setView,
  zoomWindow,
} from "./state.js";
import type { ViewName } from "./state.js";

const gateway = new Gateway("");
let state: ViewState = initialState();
const timezones = new Map<string, string>();
const gates: Record<ViewName, RequestGate> = {
  query: new RequestGate(),
  timeline: new RequestGate(),
  stats: new RequestGate(),
};
let sessionBounds: [number, number] = [0, 0];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(view: ViewName, html: string, retry?: () => void): void {
  const target = el(`${view}-banner`);
  target.innerHTML = html;
  const button = target.querySelector("button.retry");
  if (button && retry) button.addEventListener("click", retry, { once: true });
}

function showError(view: ViewName, exc: unknown, retry: () => void): void {
  if (exc instanceof GatewayError) {
    banner(view, renderErrorBanner(exc.code, exc.message));
  } else if (exc instanceof ConnectionError) {
    banner(view, renderConnectionBanner(exc.message), retry);
  } else {
    banner(view, renderErrorBanner("CLIENT_ERROR", String(exc)));
  }
}

function switchView(view: ViewName): void {
  state = setView(state, view);
  for (const name of ["query", "timeline", "stats"] as const) {
    el(`${name}-view`).hidden = name !== view;
    el(`tab-${name}`).classList.toggle("active", name === view);
  }
}

async function runQuery(): Promise<void> {
  const text = (el<HTMLInputElement>("query-text")).value;
  state = setQueryText(state, text);
  const sequence = gates.query.begin();
  banner("query", "");
  try {
    const result = await gateway.query(text);
    if (!gates.query.accept(sequence)) return;
    el("query-output").innerHTML = renderQueryResult(
      result,
      (sid) => timezones.get(sid) ?? "UTC",
    );
  } catch (exc) {
    if (!gates.query.accept(sequence)) return;
    showError("query", exc, runQuery);
  }
}

async function loadTimeline(): Promise<void> {
  const session = state.selected_session;
  if (!session) return;
  const window = state.timeline_window;
  const sequence = gates.timeline.begin();
  banner("timeline", "");
  try {
    const payload = await gateway.timeline(session, window?.[0], window?.[1]);
    if (!gates.timeline.accept(sequence)) return;
    timezones.set(payload.session_id, payload.timezone);
    const drawn = drawnWindow(payload);
    if (drawn) sessionBounds = [Math.min(sessionBounds[0], 0), Math.max(sessionBounds[1], drawn[1])];
    el("timeline-output").innerHTML = renderTimeline(payload);
  } catch (exc) {
    if (!gates.timeline.accept(sequence)) return;
    showError("timeline", exc, loadTimeline);
  }
}

async function loadStats(): Promise<void> {
  const session = (el<HTMLInputElement>("stats-session")).value.trim();
  if (!session) return;
  const from = (el<HTMLInputElement>("stats-from")).value;
  const to = (el<HTMLInputElement>("stats-to")).value;
  const sequence = gates.stats.begin();
  banner("stats", "");
  try {
    const payload = await gateway.stats(
      session,
      from === "" ? undefined : Number(from),
      to === "" ? undefined : Number(to),
    );
    if (!gates.stats.accept(sequence)) return;
    el("stats-output").innerHTML = renderStats(payload);
  } catch (exc) {
    if (!gates.stats.accept(sequence)) return;
    showError("stats", exc, loadStats);
  }
}

function moveTimeline(transform: (w: [number, number]) => [number, number]): void {
  if (!state.timeline_window) return;
  state = { ...state, timeline_window: transform(state.timeline_window) };
  void loadTimeline();
}

function wire(): void {
  for (const name of ["query", "timeline", "stats"] as const) {
    el(`tab-${name}`).addEventListener("click", () => switchView(name));
  }
  el<HTMLFormElement>("query-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void runQuery();
  });
  el("query-output").addEventListener("click", (event) => {
    const episode = (event.target as HTMLElement).closest<HTMLElement>("article.episode");
    if (!episode) return;
    state = selectEpisode(state, {
      session_id: episode.dataset.session ?? "",
      from_second: Number(episode.dataset.from),
      to_second: Number(episode.dataset.to),
    });
    (el<HTMLInputElement>("timeline-session")).value = state.selected_session ?? "";
    switchView("timeline");
    void loadTimeline();
  });
  el<HTMLFormElement>("timeline-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const session = (el<HTMLInputElement>("timeline-session")).value.trim();
    const from = (el<HTMLInputElement>("timeline-from")).value;
    const to = (el<HTMLInputElement>("timeline-to")).value;
    state = setSession(state, session || null);
    state = {
      ...state,
      timeline_window:
        from === "" || to === "" ? null : [Number(from), Number(to)],
    };
    void loadTimeline();
  });
  el("timeline-pan-left").addEventListener("click", () =>
    moveTimeline((w) => panWindow(w, -(w[1] - w[0] + 1), sessionBounds[0], sessionBounds[1])),
  );
  el("timeline-pan-right").addEventListener("click", () =>
    moveTimeline((w) => panWindow(w, w[1] - w[0] + 1, sessionBounds[0], sessionBounds[1])),
  );
  el("timeline-zoom-in").addEventListener("click", () =>
    moveTimeline((w) => zoomWindow(w, 0.5, sessionBounds[0], sessionBounds[1])),
  );
  el("timeline-zoom-out").addEventListener("click", () =>
    moveTimeline((w) => zoomWindow(w, 2, sessionBounds[0], sessionBounds[1])),
  );
  el("timeline-output").addEventListener("mouseover", (event) => {
    const tick = (event.target as HTMLElement).closest<HTMLElement>(".tick.filled");
    document
      .querySelectorAll<HTMLElement>(".hover-card:not([hidden])")
      .forEach((card) => (card.hidden = true));
    const card = tick?.querySelector<HTMLElement>(".hover-card");
    if (card) card.hidden = false;
  });
  el<HTMLFormElement>("stats-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void loadStats();
  });
  switchView("query");
}

document.addEventListener("DOMContentLoaded", wire);
