// Keyboard shortcuts: digits 1..8 pick a category in codebook order,
// 0 records "not a message". Keystrokes aimed at form fields are left
// alone so span editing and note typing still work.

export type KeyAction =
  | { kind: "category"; digit: number }
  | { kind: "not_a_message" };

const FORM_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

export function actionForKey(event: KeyboardEvent): KeyAction | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  const target = event.target;
  if (target instanceof HTMLElement) {
    if (FORM_TAGS.has(target.tagName) || target.isContentEditable) return null;
  }
  if (event.key.length === 1 && event.key >= "1" && event.key <= "8") {
    return { kind: "category", digit: Number(event.key) };
  }
  if (event.key === "0") return { kind: "not_a_message" };
  return null;
}

/** Listen on a window; returns the detach function. */
export function attachKeyboard(
  win: Window,
  handle: (action: KeyAction) => void,
): () => void {
  const listener = (event: Event) => {
    const action = actionForKey(event as KeyboardEvent);
    if (action) {
      event.preventDefault();
      handle(action);
    }
  };
  win.addEventListener("keydown", listener);
  return () => win.removeEventListener("keydown", listener);
}
