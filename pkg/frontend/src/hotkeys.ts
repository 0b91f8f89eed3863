/** Keyboard bindings. The whole annotation loop works without a mouse. */

export type HotkeyAction =
  | { kind: "label"; cls: number }
  | { kind: "accept" }
  | { kind: "skip" }
  | { kind: "keep" }
  | { kind: "fix" }
  | { kind: "unlabel" }
  | { kind: "view"; view: "annotate" | "verify" | "dashboard" };

/**
 * Map a key press to an action, or null when the key is unbound or the
 * press happened inside a text field.
 *
 * Digits 0-9 label the current sample with that class, Enter accepts the
 * suggested pseudo-label, and "s" (or Space) skips. In the verification
 * view "k" keeps, "f" fixes to the suggestion, "u" removes the label.
 */
export function actionForKey(key: string, editingText = false): HotkeyAction | null {
  if (editingText) {
    return null;
  }
  if (key.length === 1 && key >= "0" && key <= "9") {
    return { kind: "label", cls: Number(key) };
  }
  switch (key) {
    case "Enter":
    case "a":
      return { kind: "accept" };
    case " ":
    case "s":
      return { kind: "skip" };
    case "k":
      return { kind: "keep" };
    case "f":
      return { kind: "fix" };
    case "u":
      return { kind: "unlabel" };
    case "v":
      return { kind: "view", view: "verify" };
    case "n":
      return { kind: "view", view: "annotate" };
    case "d":
      return { kind: "view", view: "dashboard" };
    default:
      return null;
  }
}

/** True when the event target is a field that consumes key strokes. */
export function isTextTarget(target: EventTarget | null): boolean {
  if (target === null || typeof target !== "object") {
    return false;
  }
  const element = target as { tagName?: string; isContentEditable?: boolean };
  const tag = element.tagName?.toUpperCase();
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT" ||
    element.isContentEditable === true;
}
