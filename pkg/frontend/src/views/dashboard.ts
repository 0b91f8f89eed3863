/** Dashboard view: session inventory and the label-spend payoff curve. */

import type { SpendPoint, StoreState } from "../store.js";
import type { SessionDescriptor } from "../types.js";
import { escapeHtml, percent } from "./html.js";

/** Serialize the curve; one row per soft label update. */
export function historyToCsv(history: readonly SpendPoint[]): string {
  const rows = history.map(
    (point) => `${point.labeled},${point.meanConfidence.toFixed(6)}`,
  );
  return ["labels_spent,mean_confidence", ...rows].join("\n") + "\n";
}

/** Render the curve as an inline SVG polyline, spend on x, confidence on y. */
export function renderCurve(
  history: readonly SpendPoint[],
  width = 360,
  height = 120,
): string {
  if (history.length === 0) {
    return `<p class="empty">no propagation observed yet</p>`;
  }
  const maxSpend = Math.max(1, ...history.map((p) => p.labeled));
  const points = history
    .map((p) => {
      const x = (p.labeled / maxSpend) * (width - 10) + 5;
      const y = height - 5 - p.meanConfidence * (height - 10);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return `<svg class="spend-curve" viewBox="0 0 ${width} ${height}" role="img" aria-label="labels spent vs mean confidence">
  <polyline fill="none" stroke="currentColor" stroke-width="2" points="${points}"/>
</svg>`;
}

/**
 * Render the dashboard: every known session with its size, label counts
 * and last propagation time, then the active session's payoff curve.
 */
export function renderDashboard(
  sessions: readonly SessionDescriptor[],
  state: StoreState,
  activeSessionId: string,
): string {
  const rows = sessions
    .map((s) => {
      const active = s.session_id === activeSessionId ? ` class="active"` : "";
      const last =
        s.session_id === activeSessionId && state.lastPropagationAt !== null
          ? new Date(state.lastPropagationAt).toISOString()
          : "–";
      return `<tr${active}>
  <td><a href="?session=${escapeHtml(s.session_id)}">${escapeHtml(s.session_id)}</a></td>
  <td>${s.n}</td>
  <td>${s.labeled}</td>
  <td>${s.trusted}</td>
  <td>${s.version}</td>
  <td>${last}</td>
</tr>`;
    })
    .join("\n");
  const latest = state.history[state.history.length - 1];
  const summary = latest
    ? `<p>mean confidence ${percent(latest.meanConfidence)} after ${latest.labeled} labels</p>`
    : "";
  return `
<section class="dashboard">
  <table class="sessions">
    <thead>
      <tr><th>session</th><th>samples</th><th>labeled</th><th>trusted</th><th>events</th><th>last propagation</th></tr>
    </thead>
    <tbody>
${rows}
    </tbody>
  </table>
  <div class="curve">
    <h3>label spend vs confidence</h3>
    ${renderCurve(state.history)}
    ${summary}
  </div>
</section>`;
}
