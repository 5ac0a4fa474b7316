// Page wiring: form, selectors, comparison mode, banner, history.

import { ApiError, NetworkError, SearchClient } from "./api.js";
import {
  LAYOUTS, MODELS, SearchView, Selection, beginSubmission, canSubmit,
  initialView, markUnavailable, recordFailure, recordSuccess, selectionKey,
} from "./state.js";
import { renderBanner, renderColumns, renderHistory } from "./render.js";

export interface App {
  view: SearchView;
  root: HTMLElement;
  submit(): Promise<void>;
  elements: {
    form: HTMLFormElement;
    input: HTMLInputElement;
    submitButton: HTMLButtonElement;
    layoutSelect: HTMLSelectElement;
    modelSelect: HTMLSelectElement;
    kInput: HTMLInputElement;
    compareToggle: HTMLInputElement;
    compareLayout: HTMLSelectElement;
    compareModel: HTMLSelectElement;
    results: HTMLElement;
    banner: HTMLElement;
    history: HTMLElement;
  };
}

function option(value: string): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = value;
  return el;
}

function buildDom(root: HTMLElement): App["elements"] {
  root.replaceChildren();
  root.classList.add("search-app");

  const form = document.createElement("form");
  form.className = "search-form";

  const input = document.createElement("input");
  input.type = "text";
  input.name = "q";
  input.placeholder = "LaTeX formula, e.g. a^3+b^2=0";
  input.autocomplete = "off";
  input.className = "query-input";

  const submitButton = document.createElement("button");
  submitButton.type = "submit";
  submitButton.textContent = "Search";
  submitButton.disabled = true;

  const layoutSelect = document.createElement("select");
  layoutSelect.className = "layout-select";
  for (const layout of LAYOUTS) layoutSelect.append(option(layout));

  const modelSelect = document.createElement("select");
  modelSelect.className = "model-select";
  for (const model of MODELS) modelSelect.append(option(model));
  modelSelect.value = "graphcl";

  const kInput = document.createElement("input");
  kInput.type = "number";
  kInput.min = "1";
  kInput.value = "10";
  kInput.className = "k-input";

  const compareToggle = document.createElement("input");
  compareToggle.type = "checkbox";
  compareToggle.className = "compare-toggle";
  const compareLabel = document.createElement("label");
  compareLabel.append(compareToggle, document.createTextNode(" compare against"));

  const compareLayout = document.createElement("select");
  compareLayout.className = "compare-layout";
  for (const layout of LAYOUTS) compareLayout.append(option(layout));
  compareLayout.value = "opt";
  compareLayout.disabled = true;

  const compareModel = document.createElement("select");
  compareModel.className = "compare-model";
  for (const model of MODELS) compareModel.append(option(model));
  compareModel.value = "graphcl";
  compareModel.disabled = true;

  form.append(input, submitButton, layoutSelect, modelSelect, kInput,
              compareLabel, compareLayout, compareModel);

  const banner = document.createElement("div");
  banner.className = "banner";
  banner.hidden = true;

  const results = document.createElement("div");
  results.className = "results";

  const historyBox = document.createElement("aside");
  historyBox.className = "history";
  const historyTitle = document.createElement("h3");
  historyTitle.textContent = "Session history";
  const history = document.createElement("ul");
  history.className = "history-list";
  historyBox.append(historyTitle, history);

  root.append(form, banner, results, historyBox);
  return {
    form, input, submitButton, layoutSelect, modelSelect, kInput,
    compareToggle, compareLayout, compareModel, results, banner, history,
  };
}

export function createApp(root: HTMLElement, client: SearchClient): App {
  const view = initialView();
  const els = buildDom(root);

  function primarySelection(): Selection {
    return { layout: view.layout, model: view.model };
  }

  function syncControls(): void {
    els.submitButton.disabled = !canSubmit(view);
    for (const select of [els.modelSelect, els.compareModel]) {
      const layout = select === els.modelSelect
        ? view.layout
        : els.compareLayout.value;
      for (const opt of Array.from(select.options)) {
        const key = selectionKey({ layout, model: opt.value });
        const reason = view.unavailable.get(key);
        opt.disabled = reason !== undefined;
        opt.title = reason ?? "";
      }
    }
  }

  function redraw(): void {
    renderColumns(els.results, view.columns);
    renderBanner(els.banner, view.banner);
    renderHistory(els.history, view.history);
    syncControls();
    const retry = els.banner.querySelector<HTMLButtonElement>(".banner-retry");
    retry?.addEventListener("click", () => void submit());
  }

  async function runSearch(selection: Selection): Promise<boolean> {
    try {
      const response = await client.search(view.query.trim(), {
        layout: selection.layout,
        model: selection.model,
        k: view.k,
      });
      recordSuccess(view, selection, response.results);
      return true;
    } catch (err) {
      if (err instanceof Error && err.name === "AbortError") {
        return false; // a newer submission took over
      }
      if (err instanceof ApiError) {
        if (err.status === 404) {
          markUnavailable(view, selection, err.payload.error.message);
        }
        recordFailure(view, err.payload, false);
      } else if (err instanceof NetworkError) {
        recordFailure(view, null, true);
      } else {
        throw err;
      }
      return false;
    }
  }

  async function submit(): Promise<void> {
    if (!canSubmit(view)) {
      return;
    }
    beginSubmission(view);
    redraw();
    const selections = [primarySelection()];
    if (view.compare) {
      selections.push(view.compare);
    }
    for (const selection of selections) {
      const ok = await runSearch(selection);
      if (!ok) {
        break;
      }
    }
    redraw();
  }

  function resubmitIfPossible(): void {
    if (canSubmit(view)) {
      void submit();
    }
  }

  els.input.addEventListener("input", () => {
    view.query = els.input.value;
    syncControls();
  });
  els.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
  });
  els.layoutSelect.addEventListener("change", () => {
    view.layout = els.layoutSelect.value;
    resubmitIfPossible();
  });
  els.modelSelect.addEventListener("change", () => {
    view.model = els.modelSelect.value;
    resubmitIfPossible();
  });
  els.kInput.addEventListener("change", () => {
    const parsed = Number.parseInt(els.kInput.value, 10);
    if (Number.isFinite(parsed) && parsed >= 1) {
      view.k = parsed;
    }
  });

  function syncCompare(): void {
    const enabled = els.compareToggle.checked;
    els.compareLayout.disabled = !enabled;
    els.compareModel.disabled = !enabled;
    view.compare = enabled
      ? { layout: els.compareLayout.value, model: els.compareModel.value }
      : null;
  }
  els.compareToggle.addEventListener("change", () => {
    syncCompare();
    resubmitIfPossible();
  });
  els.compareLayout.addEventListener("change", () => {
    syncCompare();
    resubmitIfPossible();
  });
  els.compareModel.addEventListener("change", () => {
    syncCompare();
    resubmitIfPossible();
  });
  els.history.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("history-entry")) {
      event.preventDefault();
      view.query = target.textContent ?? "";
      els.input.value = view.query;
      syncControls();
      void submit();
    }
  });

  syncControls();
  return { view, root, submit, elements: els };
}
