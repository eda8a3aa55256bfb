/**
 * Serializable UI state. Every view transition is reproducible from
 * (query, filters, tab, page, open document), so any screen can be
 * deep-linked through the URL query string.
 */
import type { SearchFilters } from "./api.js";

export const TABS = ["word_cloud", "clusters", "entities"] as const;
export type Tab = (typeof TABS)[number];

export interface UiState {
  query: string;
  tab: Tab;
  cluster: string | null;
  category: string | null;
  surface: string | null;
  page: number;
  doc: string | null;
}

export const DEFAULT_STATE: UiState = {
  query: "",
  tab: "word_cloud",
  cluster: null,
  category: null,
  surface: null,
  page: 1,
  doc: null,
};

export function encodeState(state: UiState): string {
  const params = new URLSearchParams();
  if (state.query) params.set("q", state.query);
  if (state.tab !== DEFAULT_STATE.tab) params.set("tab", state.tab);
  if (state.cluster !== null) params.set("cluster", state.cluster);
  if (state.category !== null) params.set("category", state.category);
  if (state.surface !== null) params.set("entity", state.surface);
  if (state.page > 1) params.set("page", String(state.page));
  if (state.doc !== null) params.set("doc", state.doc);
  const text = params.toString();
  return text ? `?${text}` : "";
}

export function decodeState(search: string): UiState {
  const params = new URLSearchParams(search);
  const tab = params.get("tab") ?? "";
  const page = Number(params.get("page") ?? "1");
  return {
    query: params.get("q") ?? "",
    tab: (TABS as readonly string[]).includes(tab) ? (tab as Tab) : DEFAULT_STATE.tab,
    cluster: params.get("cluster"),
    category: params.get("category"),
    surface: params.get("entity"),
    page: Number.isInteger(page) && page >= 1 ? page : 1,
    doc: params.get("doc"),
  };
}

export function stateFilters(state: UiState): SearchFilters {
  const filters: SearchFilters = {};
  if (state.cluster !== null) filters.cluster_id = state.cluster;
  if (state.category !== null) filters.category = state.category;
  if (state.surface !== null) filters.entity_surface = state.surface;
  return filters;
}

/** True when the state describes something the API can answer. */
export function hasSearch(state: UiState): boolean {
  return (
    state.query.trim() !== "" ||
    state.cluster !== null ||
    state.category !== null ||
    state.surface !== null
  );
}
