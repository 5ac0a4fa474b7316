// View state for the search page. The result list always mirrors the last
// successful server response verbatim; the UI never reorders, filters, or
// rescales it.

import type { ErrorPayload, SearchResult } from "./api.js";

export const LAYOUTS = ["slt", "opt"] as const;
export const MODELS = ["infograph", "graphcl", "bgrl", "baseline"] as const;

export interface Selection {
  layout: string;
  model: string;
}

export interface BannerState {
  message: string;
  stage?: string;
  offset?: number;
  query?: string;
  retryable: boolean;
}

export interface ColumnState {
  selection: Selection;
  results: SearchResult[];
}

export interface SearchView {
  query: string;
  layout: string;
  model: string;
  k: number;
  columns: ColumnState[];          // one column normally, two in compare mode
  banner: BannerState | null;
  compare: Selection | null;       // second selection when comparing
  history: string[];               // session-local, newest first
  unavailable: Map<string, string>; // "layout/model" -> server message
}

export function initialView(): SearchView {
  return {
    query: "",
    layout: "slt",
    model: "graphcl",
    k: 10,
    columns: [],
    banner: null,
    compare: null,
    history: [],
    unavailable: new Map(),
  };
}

export function selectionKey(sel: Selection): string {
  return `${sel.layout}/${sel.model}`;
}

export function canSubmit(view: SearchView): boolean {
  return view.query.trim().length > 0;
}

export function beginSubmission(view: SearchView): void {
  // stale results and banners clear as soon as a new submission starts
  view.columns = [];
  view.banner = null;
}

export function recordSuccess(view: SearchView, selection: Selection,
                              results: SearchResult[]): void {
  view.columns.push({ selection, results });
  const trimmed = view.query.trim();
  if (view.history[0] !== trimmed) {
    view.history.unshift(trimmed);
  }
}

export function recordFailure(view: SearchView, payload: ErrorPayload | null,
                              retryable: boolean): void {
  view.columns = [];
  view.banner = payload
    ? {
        message: payload.error.message,
        stage: payload.error.stage,
        offset: payload.error.offset,
        query: view.query,
        retryable,
      }
    : { message: "network failure", retryable };
}

export function markUnavailable(view: SearchView, selection: Selection,
                                message: string): void {
  view.unavailable.set(selectionKey(selection), message);
}

export function isUnavailable(view: SearchView, selection: Selection): boolean {
  return view.unavailable.has(selectionKey(selection));
}
