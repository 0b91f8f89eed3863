/** Annotation view: one sample at a time, suggestions alongside. */

import { thumbnailUrl, type UiConfig } from "../config.js";
import type { StoreState } from "../store.js";
import { escapeHtml, percent } from "./html.js";

/**
 * Render the annotation screen. The current sample shows its thumbnail,
 * the served pseudo-label and confidence, one button per class, and a
 * skip control; digits 0-9, Enter and "s" drive the same actions.
 */
export function renderAnnotation(state: StoreState, config: UiConfig): string {
  const session = state.session;
  if (session === null) {
    return `<section class="annotate"><p class="empty">connecting…</p></section>`;
  }
  const sample = state.suggestions[0] ?? null;
  if (sample === null) {
    const note = state.poolExhausted
      ? "every sample is labeled"
      : "loading suggestions…";
    return `<section class="annotate"><p class="empty">${note}</p></section>`;
  }
  const id = escapeHtml(sample.id);
  const classButtons = Array.from({ length: session.c }, (_, cls) => {
    const suggested = cls === sample.pseudo ? " suggested" : "";
    return `<button class="class-btn${suggested}" data-action="label" data-class="${cls}">${cls}</button>`;
  }).join("");
  const upNext = state.suggestions
    .slice(1, 5)
    .map((s) => `<li>${escapeHtml(s.id)} <span class="conf">${percent(s.confidence)}</span></li>`)
    .join("");
  return `
<section class="annotate">
  <figure class="sample">
    <img src="${escapeHtml(thumbnailUrl(config, sample.id))}" alt="sample ${id}">
    <figcaption>
      <span class="sample-id">${id}</span>
      <span class="pseudo">suggested: class ${sample.pseudo}</span>
      <span class="confidence" data-field="confidence">${percent(sample.confidence)}</span>
    </figcaption>
  </figure>
  <div class="controls">
    ${classButtons}
    <button data-action="accept" title="Enter">accept ${sample.pseudo}</button>
    <button data-action="skip" title="s">skip</button>
  </div>
  <aside class="queue">
    <h3>up next</h3>
    <ul>${upNext}</ul>
  </aside>
  ${statusBar(state)}
</section>`;
}

/** Shared footer with sync state. */
export function statusBar(state: StoreState): string {
  const session = state.session;
  const online = state.online ? "online" : "offline, queuing";
  const queued = state.queuedEvents > 0 ? ` · ${state.queuedEvents} unsent` : "";
  const versions = session
    ? `labels v${session.version} · soft v${session.soft_version}`
    : "";
  const error = state.lastError
    ? `<span class="error">${escapeHtml(state.lastError)}</span>`
    : "";
  return `<footer class="status" data-online="${state.online}">
  <span data-field="versions">${versions}</span>
  <span data-field="sync">${online}${queued}</span>
  ${error}
</footer>`;
}
