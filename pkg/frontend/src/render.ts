/**
 * DOM builders for every pane. All API text goes through textContent, never
 * markup, so documents and summaries display verbatim. Hits render in
 * response order; the UI does no reordering of its own.
 */
import type {
  ClustersResponse,
  DocumentEntity,
  DocumentResponse,
  EntityRow,
  SearchResponse,
  SummaryResponse,
  WordCloudTerm,
} from "./api.js";

export const FONT_MIN_PX = 13;
export const FONT_MAX_PX = 32;

/** Reserved id the API accepts for the unclustered remainder. */
export const RESIDUAL_ID = "other";

export interface ResultHandlers {
  onOpen(docId: string): void;
  onSummary(docId: string): void;
}

export interface DocumentHandlers {
  onBack(): void;
  onToggleSummary(): void;
}

/** Snippet text with [start, end) match offsets wrapped in <mark>. */
export function snippetFragment(
  text: string,
  highlights: [number, number][],
): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const ordered = [...highlights].sort((a, b) => a[0] - b[0]);
  let cursor = 0;
  for (const [start, end] of ordered) {
    if (start < cursor || start >= end || end > text.length) continue;
    if (start > cursor) fragment.append(text.slice(cursor, start));
    const mark = document.createElement("mark");
    mark.textContent = text.slice(start, end);
    fragment.append(mark);
    cursor = end;
  }
  if (cursor < text.length) fragment.append(text.slice(cursor));
  return fragment;
}

export function renderResults(
  container: HTMLElement,
  response: SearchResponse | null,
  handlers: ResultHandlers,
): void {
  container.replaceChildren();
  if (response === null) return;
  if (response.total === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No results.";
    container.append(empty);
    return;
  }
  for (const hit of response.hits) {
    const card = document.createElement("article");
    card.className = "card";
    card.dataset.docId = hit.doc_id;

    const header = document.createElement("header");
    const title = document.createElement("button");
    title.type = "button";
    title.className = "card-title";
    title.textContent = hit.title;
    title.addEventListener("click", () => handlers.onOpen(hit.doc_id));
    const score = document.createElement("span");
    score.className = "card-score";
    score.textContent = hit.score.toFixed(3);
    header.append(title, score);

    const snippet = document.createElement("p");
    snippet.className = "card-snippet";
    snippet.append(snippetFragment(hit.snippet, hit.highlights));

    const footer = document.createElement("footer");
    const summary = document.createElement("button");
    summary.type = "button";
    summary.className = "card-summary";
    summary.textContent = "Summary";
    summary.addEventListener("click", () => handlers.onSummary(hit.doc_id));
    footer.append(summary);
    for (const entity of hit.matched_entities) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.textContent = `${entity.category}: ${entity.surface}`;
      footer.append(chip);
    }

    card.append(header, snippet, footer);
    container.append(card);
  }
}

/** Linear map from C-value to pixels; equal scores share the midpoint. */
export function fontSizeFor(cvalue: number, lo: number, hi: number): number {
  if (hi <= lo) return Math.round((FONT_MIN_PX + FONT_MAX_PX) / 2);
  const t = (cvalue - lo) / (hi - lo);
  return Math.round(FONT_MIN_PX + t * (FONT_MAX_PX - FONT_MIN_PX));
}

export function renderWordCloud(
  container: HTMLElement,
  terms: WordCloudTerm[],
  onPick: (term: string) => void,
): void {
  container.replaceChildren();
  if (terms.length === 0) {
    const placeholder = document.createElement("p");
    placeholder.className = "empty-state";
    placeholder.textContent = "No terms to show.";
    container.append(placeholder);
    return;
  }
  const values = terms.map((t) => t.cvalue);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  for (const term of terms) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "cloud-term";
    button.textContent = term.term;
    button.style.fontSize = `${fontSizeFor(term.cvalue, lo, hi)}px`;
    button.title = `C-value ${term.cvalue.toFixed(2)}, ${term.doc_frequency} docs`;
    button.addEventListener("click", () => onPick(term.term));
    container.append(button);
  }
}

export function renderClusters(
  container: HTMLElement,
  response: ClustersResponse | null,
  checkedId: string | null,
  onToggle: (clusterId: string, checked: boolean) => void,
): void {
  container.replaceChildren();
  if (response === null) return;
  const rows: { id: string; label: string; size: number }[] =
    response.clusters.map((c) => ({ id: c.cluster_id, label: c.label, size: c.size }));
  if (response.residual_size > 0) {
    rows.push({ id: RESIDUAL_ID, label: "other", size: response.residual_size });
  }
  if (rows.length === 0) {
    const placeholder = document.createElement("p");
    placeholder.className = "empty-state";
    placeholder.textContent = "No clusters found.";
    container.append(placeholder);
    return;
  }
  const list = document.createElement("ul");
  list.className = "cluster-list";
  for (const row of rows) {
    const item = document.createElement("li");
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = row.id === checkedId;
    box.dataset.clusterId = row.id;
    box.addEventListener("change", () => onToggle(row.id, box.checked));
    const name = document.createElement("span");
    name.className = "cluster-label";
    name.textContent = row.label;
    const size = document.createElement("span");
    size.className = "cluster-size";
    size.textContent = String(row.size);
    label.append(box, name, size);
    item.append(label);
    list.append(item);
  }
  container.append(list);
}

export function renderEntities(
  container: HTMLElement,
  rows: EntityRow[],
  selected: { category: string | null; surface: string | null },
  onPick: (category: string, surface: string) => void,
): void {
  container.replaceChildren();
  if (rows.length === 0) {
    const placeholder = document.createElement("p");
    placeholder.className = "empty-state";
    placeholder.textContent = "No entities found.";
    container.append(placeholder);
    return;
  }
  const byCategory = new Map<string, EntityRow[]>();
  for (const row of rows) {
    const group = byCategory.get(row.category);
    if (group) group.push(row);
    else byCategory.set(row.category, [row]);
  }
  for (const [category, group] of byCategory) {
    const heading = document.createElement("h4");
    heading.className = "entity-category";
    heading.textContent = category;
    container.append(heading);
    const list = document.createElement("ul");
    list.className = "entity-list";
    for (const row of group) {
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.className = "entity-row";
      const active =
        selected.category === row.category && selected.surface === row.surface;
      button.setAttribute("aria-pressed", String(active));
      const surface = document.createElement("span");
      surface.className = "entity-surface";
      surface.textContent = row.surface;
      const counts = document.createElement("span");
      counts.className = "entity-counts";
      counts.textContent = `${row.doc_count} docs, ${row.mention_count} mentions`;
      button.append(surface, counts);
      button.addEventListener("click", () => onPick(row.category, row.surface));
      item.append(button);
      list.append(item);
    }
    container.append(list);
  }
}

/** Document text with each entity span wrapped and coloured. */
export function entityFragment(
  text: string,
  entities: DocumentEntity[],
): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const ordered = [...entities].sort((a, b) => a.start - b.start);
  let cursor = 0;
  for (const entity of ordered) {
    if (entity.start < cursor || entity.start >= entity.end) continue;
    if (entity.end > text.length) continue;
    if (entity.start > cursor) fragment.append(text.slice(cursor, entity.start));
    const span = document.createElement("span");
    span.className = "entity";
    span.textContent = text.slice(entity.start, entity.end);
    span.style.backgroundColor = entity.color;
    span.dataset.category = entity.category;
    span.title = entity.category;
    fragment.append(span);
    cursor = entity.end;
  }
  if (cursor < text.length) fragment.append(text.slice(cursor));
  return fragment;
}

export function renderDocument(
  container: HTMLElement,
  doc: DocumentResponse,
  summary: SummaryResponse | null,
  summaryOpen: boolean,
  handlers: DocumentHandlers,
): void {
  container.replaceChildren();

  const header = document.createElement("header");
  header.className = "doc-header";
  const back = document.createElement("button");
  back.type = "button";
  back.className = "doc-back";
  back.textContent = "Back to results";
  back.addEventListener("click", () => handlers.onBack());
  const title = document.createElement("h2");
  title.textContent = doc.title;
  const toggle = document.createElement("button");
  toggle.type = "button";
  toggle.className = "summary-toggle";
  toggle.textContent = summaryOpen ? "Hide summary" : "Summary";
  toggle.addEventListener("click", () => handlers.onToggleSummary());
  header.append(back, title, toggle);
  container.append(header);

  if (summaryOpen && summary !== null) {
    const section = document.createElement("section");
    section.className = "doc-summary";
    if (summary.bypassed) {
      const note = document.createElement("p");
      note.className = "summary-note";
      note.textContent = "Short document: showing the full text.";
      section.append(note);
    }
    const list = document.createElement("ol");
    for (const sentence of summary.sentences) {
      const item = document.createElement("li");
      item.textContent = sentence;
      list.append(item);
    }
    section.append(list);
    container.append(section);
  }

  const seen = new Set<string>();
  const legend = document.createElement("div");
  legend.className = "doc-legend";
  for (const entity of doc.entities) {
    if (seen.has(entity.category)) continue;
    seen.add(entity.category);
    const item = document.createElement("span");
    item.className = "legend-item";
    item.textContent = entity.category;
    item.style.backgroundColor = entity.color;
    legend.append(item);
  }
  if (seen.size > 0) container.append(legend);

  const body = document.createElement("article");
  body.className = "doc-text";
  body.append(entityFragment(doc.text, doc.entities));
  container.append(body);
}

export function showBanner(
  container: HTMLElement,
  message: string,
  onDismiss?: () => void,
): void {
  container.replaceChildren();
  const banner = document.createElement("div");
  banner.className = "banner";
  banner.setAttribute("role", "alert");
  const text = document.createElement("span");
  text.textContent = message;
  const dismiss = document.createElement("button");
  dismiss.type = "button";
  dismiss.className = "banner-dismiss";
  dismiss.textContent = "Dismiss";
  dismiss.addEventListener("click", () => {
    container.replaceChildren();
    onDismiss?.();
  });
  banner.append(text, dismiss);
  container.append(banner);
}
