/** Verification view: suspect labels first, keep / fix / unlabel per item. */

import { thumbnailUrl, type UiConfig } from "../config.js";
import type { StoreState } from "../store.js";
import { statusBar } from "./annotation.js";
import { escapeHtml } from "./html.js";

/**
 * Render the verification screen. Items arrive ranked by disagreement
 * between the given label and the propagated scores, so the most suspect
 * label is always on top. Keys: "k" keep, "f" fix, "u" unlabel.
 */
export function renderVerification(state: StoreState, config: UiConfig): string {
  const head = state.verifyQueue[0] ?? null;
  if (head === null) {
    const note = state.lastError ?? "verification queue is empty";
    return `<section class="verify"><p class="empty">${escapeHtml(note)}</p>${statusBar(state)}</section>`;
  }
  const session = state.session;
  const numClasses = session?.c ?? Math.max(head.given, head.pseudo) + 1;
  const id = escapeHtml(head.id);
  const options = Array.from({ length: numClasses }, (_, cls) => {
    const selected = cls === head.pseudo ? " selected" : "";
    return `<option value="${cls}"${selected}>class ${cls}</option>`;
  }).join("");
  const rest = state.verifyQueue
    .slice(1, 8)
    .map(
      (item) =>
        `<li>${escapeHtml(item.id)} <span class="given">given ${item.given}</span> <span class="pseudo">→ ${item.pseudo}</span> <span class="score">${item.score.toFixed(3)}</span></li>`,
    )
    .join("");
  return `
<section class="verify">
  <figure class="sample">
    <img src="${escapeHtml(thumbnailUrl(config, head.id))}" alt="sample ${id}">
    <figcaption>
      <span class="sample-id">${id}</span>
      <span class="given">given: class ${head.given}</span>
      <span class="pseudo">propagation says: class ${head.pseudo}</span>
      <span class="score">disagreement ${head.score.toFixed(3)}</span>
    </figcaption>
  </figure>
  <div class="controls">
    <button data-action="keep" title="k">keep ${head.given}</button>
    <label>
      fix to
      <select data-field="fix-class">${options}</select>
      <button data-action="fix" title="f">fix</button>
    </label>
    <button data-action="unlabel" title="u">unlabel</button>
  </div>
  <aside class="queue">
    <h3>next suspects</h3>
    <ol>${rest}</ol>
  </aside>
  ${statusBar(state)}
</section>`;
}
