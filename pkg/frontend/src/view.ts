// DOM rendering. Every render replaces the mount's innerHTML; event
// wiring lives in app.ts via delegation, so no listeners are attached
// here. All transcript text passes through escapeHtml before insertion.

import { AgreementReport, Progress } from "./api";
import { CATEGORIES } from "./taxonomy";
import { ViewState } from "./session";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/**
 * Escape text and wrap matched keywords in <mark>. The split keeps
 * matches in the odd slots, so each slice is escaped on its own and
 * keywords can never match across entity boundaries.
 */
export function highlight(text: string, keywords: readonly string[]): string {
  const terms = keywords.filter((k) => k.length > 0);
  if (terms.length === 0) return escapeHtml(text);
  const pattern = new RegExp(`(${terms.map(escapeRegExp).join("|")})`, "gi");
  return text
    .split(pattern)
    .map((part, slot) =>
      slot % 2 === 1 ? `<mark>${escapeHtml(part)}</mark>` : escapeHtml(part),
    )
    .join("");
}

function progressBar(progress: Progress | null, coder: string): string {
  if (!progress) return "";
  const mine = progress.per_coder[coder];
  if (!mine) return "";
  const pct = mine.assigned === 0 ? 0 : (100 * mine.completed) / mine.assigned;
  return `
    <div class="progress" data-role="progress">
      <div class="progress-fill" style="width: ${pct.toFixed(1)}%"></div>
      <span class="progress-text">${mine.completed} / ${mine.assigned} items</span>
    </div>`;
}

function contextRows(
  state: Extract<ViewState, { kind: "item" }>,
): string {
  const matched = state.item.matched;
  return state.context
    .map((row) => {
      const cls = row.is_focus ? "segment focus" : "segment";
      return `
        <div class="${cls}" data-index="${row.index}">
          <span class="segment-index">${row.index}</span>
          <span class="segment-text">${highlight(row.text, matched)}</span>
        </div>`;
    })
    .join("");
}

function categoryButtons(): string {
  const buttons = CATEGORIES.map(
    (category, slot) => `
      <button type="button" data-action="category" data-digit="${slot + 1}">
        <kbd>${slot + 1}</kbd> ${escapeHtml(category.title)}
      </button>`,
  );
  buttons.push(`
      <button type="button" data-action="not-a-message" data-digit="0">
        <kbd>0</kbd> Not a message
      </button>`);
  return buttons.join("");
}

function itemScreen(state: Extract<ViewState, { kind: "item" }>): string {
  const { item, span } = state;
  const blocked = state.spanBlocked
    ? `<p class="blocked" data-role="span-blocked">${escapeHtml(state.spanBlocked)}</p>`
    : "";
  const violations = state.violations
    ? `<ul class="violations" data-role="violations">${state.violations
        .map((v) => `<li>${escapeHtml(v)}</li>`)
        .join("")}</ul>`
    : "";
  const pending = state.pending ? " disabled" : "";
  return `
    <section class="item" data-item-id="${escapeHtml(item.item_id)}">
      <header>
        <h2>${escapeHtml(item.transcript_id)} · segment ${item.focus_index}</h2>
      </header>
      <div class="context" data-role="context">${contextRows(state)}</div>
      <button type="button" data-action="expand">More context</button>
      <fieldset class="span"${pending}>
        <label>start
          <input type="number" data-role="span-start" value="${span.start}"
                 min="0" max="${item.segment_count - 1}">
        </label>
        <label>end
          <input type="number" data-role="span-end" value="${span.end}"
                 min="0" max="${item.segment_count - 1}">
        </label>
      </fieldset>
      ${blocked}
      ${violations}
      <fieldset class="categories"${pending}>${categoryButtons()}</fieldset>
    </section>`;
}

function doneScreen(state: Extract<ViewState, { kind: "done" }>): string {
  return `
    <section class="done">
      <h2>Queue complete</h2>
      <p>Every assigned item has been coded.</p>
      <a data-role="export-link" href="${escapeHtml(state.exportUrl)}">
        Download annotations (CSV)
      </a>
    </section>`;
}

export function renderCoder(
  mount: HTMLElement,
  state: ViewState,
  coder: string,
): void {
  switch (state.kind) {
    case "loading":
      mount.innerHTML = `<p class="loading">Loading…</p>`;
      return;
    case "item": {
      const bar = progressBar(state.progress, coder);
      mount.innerHTML = bar + itemScreen(state);
      return;
    }
    case "done":
      mount.innerHTML = progressBar(state.progress, coder) + doneScreen(state);
      return;
    case "conflict":
      mount.innerHTML = `
        <div class="banner conflict" data-role="conflict">
          <p>${escapeHtml(state.message)}</p>
          <button type="button" data-action="refetch">Refetch</button>
        </div>`;
      return;
    case "fault":
      mount.innerHTML = `
        <div class="banner fault" data-role="fault">
          <p>${escapeHtml(state.message)}</p>
          <button type="button" data-action="retry">Retry</button>
        </div>`;
      return;
  }
}

/**
 * Supervisor panel. Numbers are printed exactly as the service sent
 * them: String() on the raw JSON values, no client-side rounding.
 */
export function renderSupervisor(
  mount: HTMLElement,
  progress: Progress,
  agreement: AgreementReport | null,
  agreementError: string | null,
): void {
  const coders = Object.entries(progress.per_coder)
    .map(
      ([name, p]) => `
        <tr>
          <td>${escapeHtml(name)}</td>
          <td>${p.completed}</td>
          <td>${p.assigned}</td>
          <td>${p.leased}</td>
        </tr>`,
    )
    .join("");
  let agreementHtml: string;
  if (agreement) {
    const rows = Object.entries(agreement.per_category)
      .map(
        ([label, value]) => `
          <tr>
            <td>${escapeHtml(label)}</td>
            <td data-role="per-category" data-category="${escapeHtml(label)}">${
              value === null ? "n/a" : String(value)
            }</td>
          </tr>`,
      )
      .join("");
    const units = agreement.units;
    agreementHtml = `
      <h3>Inter-coder agreement</h3>
      <p>Overall:
        <strong data-role="overall-percent">${String(agreement.overall_percent)}</strong>%
        (${units.agreeing} agreeing, ${units.disagreeing} disagreeing,
         ${units.unmatched_a} + ${units.unmatched_b} unmatched)
      </p>
      <table class="per-category"><tbody>${rows}</tbody></table>`;
  } else {
    agreementHtml = `<p data-role="agreement-unavailable">${escapeHtml(
      agreementError ?? "agreement not available",
    )}</p>`;
  }
  mount.innerHTML = `
    <section class="supervisor">
      <h2>Session ${escapeHtml(progress.session_id)} · ${escapeHtml(progress.status)}</h2>
      <p>${progress.completed_tasks} tasks completed of ${progress.item_count} items</p>
      <table class="coders">
        <thead><tr><th>coder</th><th>done</th><th>assigned</th><th>leased</th></tr></thead>
        <tbody>${coders}</tbody>
      </table>
      ${agreementHtml}
      <button type="button" data-action="refresh">Refresh</button>
    </section>`;
}
