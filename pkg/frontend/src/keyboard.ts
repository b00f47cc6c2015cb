// Keyboard-first labeling: digits pick a class, `u` means unsure.

import { EventKind } from "./protocol.js";

export interface KeyAction {
  event: EventKind;
  arg: number | null;
}

export function keyToAction(key: string, nLabels: number): KeyAction | null {
  if (key.length === 1 && key >= "0" && key <= "9") {
    const label = key.charCodeAt(0) - 48;
    return label < nLabels ? { event: "set_label", arg: label } : null;
  }
  if (key === "u" || key === "U") {
    return { event: "set_unsure", arg: null };
  }
  return null;
}

interface KeyEventLike {
  key: string;
  repeat?: boolean;
}

interface KeyTarget {
  addEventListener(type: "keydown", handler: (ev: KeyEventLike) => void): void;
}

// One action per physical press: held-key repeats are ignored.
export function attachKeyboard(
  target: KeyTarget,
  getNLabels: () => number,
  onAction: (action: KeyAction) => void,
): void {
  target.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    const action = keyToAction(ev.key, getNLabels());
    if (action) onAction(action);
  });
}
