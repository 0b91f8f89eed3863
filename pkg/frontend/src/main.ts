/** Browser entry point: wires config, store, views and the keyboard. */

import { ApiClient } from "./api.js";
import { configFromQuery } from "./config.js";
import { actionForKey, isTextTarget, type HotkeyAction } from "./hotkeys.js";
import { OutboundQueue } from "./queue.js";
import { AnnotatorStore } from "./store.js";
import { renderAnnotation } from "./views/annotation.js";
import { renderDashboard } from "./views/dashboard.js";
import { renderVerification } from "./views/verification.js";
import type { SessionDescriptor } from "./types.js";

type ViewName = "annotate" | "verify" | "dashboard";

const config = configFromQuery(window.location.search);
const client = new ApiClient(config.serviceUrl);
const queue = new OutboundQueue(window.localStorage, config.sessionId);
const store = new AnnotatorStore(client, queue, config.sessionId);

let view: ViewName = "annotate";
let sessions: SessionDescriptor[] = [];

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}

function render(): void {
  if (root === null) return;
  const nav = `<nav>
  <button data-action="view-annotate" title="n">annotate</button>
  <button data-action="view-verify" title="v">verify</button>
  <button data-action="view-dashboard" title="d">dashboard</button>
</nav>`;
  let body: string;
  if (view === "annotate") {
    body = renderAnnotation(store.state, config);
  } else if (view === "verify") {
    body = renderVerification(store.state, config);
  } else {
    body = renderDashboard(sessions, store.state, config.sessionId);
  }
  root.innerHTML = nav + body;
}

async function switchView(next: ViewName): Promise<void> {
  view = next;
  if (next === "verify") {
    await store.loadVerifyQueue();
  } else if (next === "dashboard") {
    sessions = await client.listSessions().catch(() => sessions);
  }
  render();
}

function fixClassOverride(): number | undefined {
  const select = root?.querySelector<HTMLSelectElement>('[data-field="fix-class"]');
  if (select === null || select === undefined) return undefined;
  const value = Number(select.value);
  return Number.isInteger(value) ? value : undefined;
}

async function dispatch(action: HotkeyAction): Promise<void> {
  if (action.kind === "view") {
    await switchView(action.view);
    return;
  }
  if (view === "annotate") {
    if (action.kind === "label") await store.labelCurrent(action.cls);
    else if (action.kind === "accept") await store.acceptCurrent();
    else if (action.kind === "skip") await store.skipCurrent();
  } else if (view === "verify") {
    const head = store.state.verifyQueue[0];
    if (head === undefined) return;
    if (action.kind === "keep") await store.keep(head);
    else if (action.kind === "fix") await store.fix(head, fixClassOverride());
    else if (action.kind === "unlabel") await store.unlabel(head);
    else if (action.kind === "label") await store.fix(head, action.cls);
  }
  render();
}

document.addEventListener("keydown", (event) => {
  if (isTextTarget(event.target)) return;
  const action = actionForKey(event.key);
  if (action === null) return;
  event.preventDefault();
  void dispatch(action);
});

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (target === null) return;
  const name = target.getAttribute("data-action");
  if (name === "view-annotate") void switchView("annotate");
  else if (name === "view-verify") void switchView("verify");
  else if (name === "view-dashboard") void switchView("dashboard");
  else if (name === "label") {
    const cls = Number(target.getAttribute("data-class"));
    void dispatch({ kind: "label", cls });
  } else if (name === "accept") void dispatch({ kind: "accept" });
  else if (name === "skip") void dispatch({ kind: "skip" });
  else if (name === "keep") void dispatch({ kind: "keep" });
  else if (name === "fix") void dispatch({ kind: "fix" });
  else if (name === "unlabel") void dispatch({ kind: "unlabel" });
});

store.subscribe(() => render());
store.startPolling();
void store.fillSuggestions();
render();
