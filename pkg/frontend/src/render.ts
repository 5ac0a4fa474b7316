// DOM rendering. Math is typeset client-side through whatever KaTeX build
// the page loaded; when typesetting is unavailable or throws, the raw
// LaTeX string is shown instead so no result is ever hidden.

import type { SearchResult } from "./api.js";
import type { BannerState, ColumnState } from "./state.js";

interface KatexLike {
  renderToString(latex: string, options?: object): string;
}

function katexGlobal(): KatexLike | null {
  const k = (globalThis as { katex?: KatexLike }).katex;
  return k && typeof k.renderToString === "function" ? k : null;
}

export function typeset(latex: string, target: HTMLElement): void {
  const katex = katexGlobal();
  if (katex) {
    try {
      target.innerHTML = katex.renderToString(latex, { throwOnError: true });
      return;
    } catch {
      // fall through to the raw string
    }
  }
  target.textContent = latex;
  target.classList.add("raw-latex");
}

export function formatScore(score: number): string {
  return score.toFixed(4);
}

function renderResultItem(result: SearchResult): HTMLLIElement {
  const item = document.createElement("li");
  item.className = "result";
  item.dataset.id = result.id;

  const math = document.createElement("span");
  math.className = "result-latex";
  typeset(result.latex, math);

  const score = document.createElement("span");
  score.className = "result-score";
  score.textContent = formatScore(result.score);

  item.append(math, score);
  return item;
}

export function renderColumns(container: HTMLElement, columns: ColumnState[]): void {
  container.replaceChildren();
  container.classList.toggle("side-by-side", columns.length > 1);
  for (const column of columns) {
    const box = document.createElement("section");
    box.className = "result-column";
    box.dataset.selection = `${column.selection.layout}/${column.selection.model}`;

    const heading = document.createElement("h3");
    heading.textContent = `${column.selection.layout.toUpperCase()} / ${column.selection.model}`;
    box.append(heading);

    const list = document.createElement("ol");
    list.className = "result-list";
    for (const result of column.results) {
      list.append(renderResultItem(result));
    }
    box.append(list);
    container.append(box);
  }
}

export function renderBanner(container: HTMLElement, banner: BannerState | null): void {
  container.replaceChildren();
  container.hidden = banner === null;
  if (!banner) {
    return;
  }
  container.className = banner.retryable ? "banner banner-network" : "banner banner-error";

  const message = document.createElement("p");
  message.className = "banner-message";
  message.textContent = banner.stage
    ? `${banner.stage} error: ${banner.message}`
    : banner.message;
  container.append(message);

  if (banner.offset !== undefined && banner.query) {
    container.append(offsetHighlight(banner.query, banner.offset));
  }
  if (banner.retryable) {
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "banner-retry";
    retry.textContent = "Retry";
    container.append(retry);
  }
}

function offsetHighlight(query: string, offset: number): HTMLElement {
  const code = document.createElement("code");
  code.className = "banner-offset";
  const at = Math.min(Math.max(offset, 0), Math.max(query.length - 1, 0));
  code.append(document.createTextNode(query.slice(0, at)));
  const mark = document.createElement("mark");
  mark.textContent = query.slice(at, at + 1) || " ";
  code.append(mark);
  code.append(document.createTextNode(query.slice(at + 1)));
  return code;
}

export function renderHistory(container: HTMLElement, history: string[]): void {
  container.replaceChildren();
  for (const entry of history) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.className = "history-entry";
    link.textContent = entry;
    item.append(link);
    container.append(item);
  }
}
