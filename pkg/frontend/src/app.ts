// Wires the controller, the rendered DOM, and the keyboard together.
// main.ts builds one App per login; tests build one per scenario.

import { AgreementReport, CodingApi, ServiceError } from "./api";
import { attachKeyboard, KeyAction } from "./keyboard";
import { CodingSession } from "./session";
import { categoryForDigit } from "./taxonomy";
import { renderCoder, renderSupervisor } from "./view";

export interface AppConfig {
  api: CodingApi;
  sessionId: string;
  coder: string;
  role: "coder" | "supervisor";
  mount: HTMLElement;
  win: Window;
}

export class App {
  readonly controller: CodingSession;
  private detachKeyboard: (() => void) | null = null;
  private unsubscribe: (() => void) | null = null;

  constructor(private readonly config: AppConfig) {
    this.controller = new CodingSession(
      config.api,
      config.sessionId,
      config.coder,
    );
  }

  async start(): Promise<void> {
    if (this.config.role === "supervisor") {
      await this.refreshSupervisor();
      this.config.mount.addEventListener("click", this.onClick);
      return;
    }
    this.unsubscribe = this.controller.subscribe((state) =>
      renderCoder(this.config.mount, state, this.config.coder),
    );
    this.config.mount.addEventListener("click", this.onClick);
    this.config.mount.addEventListener("change", this.onChange);
    this.detachKeyboard = attachKeyboard(this.config.win, (action) =>
      this.onKey(action),
    );
    await this.controller.start();
  }

  dispose(): void {
    this.detachKeyboard?.();
    this.unsubscribe?.();
    this.config.mount.removeEventListener("click", this.onClick);
    this.config.mount.removeEventListener("change", this.onChange);
  }

  private onKey(action: KeyAction): void {
    if (action.kind === "not_a_message") {
      void this.controller.decide({ kind: "not_a_message" });
      return;
    }
    const category = categoryForDigit(action.digit);
    if (category) void this.controller.decide({ kind: "category", category });
  }

  private onClick = (event: Event): void => {
    const target = event.target;
    if (!(target instanceof HTMLElement)) return;
    const button = target.closest<HTMLElement>("[data-action]");
    if (!button) return;
    const action = button.dataset["action"];
    switch (action) {
      case "category": {
        const category = categoryForDigit(Number(button.dataset["digit"]));
        if (category)
          void this.controller.decide({ kind: "category", category });
        return;
      }
      case "not-a-message":
        void this.controller.decide({ kind: "not_a_message" });
        return;
      case "expand":
        void this.controller.expandContext();
        return;
      case "refetch":
        void this.controller.refetch();
        return;
      case "retry":
        void this.controller.retry();
        return;
      case "refresh":
        void this.refreshSupervisor();
        return;
    }
  };

  private onChange = (event: Event): void => {
    const target = event.target;
    if (!(target instanceof HTMLInputElement)) return;
    const role = target.dataset["role"];
    if (role !== "span-start" && role !== "span-end") return;
    const mount = this.config.mount;
    const start = mount.querySelector<HTMLInputElement>(
      '[data-role="span-start"]',
    );
    const end = mount.querySelector<HTMLInputElement>('[data-role="span-end"]');
    if (!start || !end) return;
    this.controller.setSpan(Number(start.value), Number(end.value));
  };

  private async refreshSupervisor(): Promise<void> {
    const { api, sessionId, mount } = this.config;
    try {
      const progress = await api.progress(sessionId);
      let agreement: AgreementReport | null = null;
      let agreementError: string | null = null;
      try {
        agreement = await api.agreement(sessionId);
      } catch (error) {
        if (!(error instanceof ServiceError)) throw error;
        agreementError = `${error.body.code}: ${error.body.message}`;
      }
      renderSupervisor(mount, progress, agreement, agreementError);
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      mount.innerHTML = `<div class="banner fault" data-role="fault"><p></p></div>`;
      const p = mount.querySelector("p");
      if (p) p.textContent = message;
    }
  }
}
