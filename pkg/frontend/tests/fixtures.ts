/**
 * Shared test fixtures: a canned seven-document incident corpus served by an
 * in-memory fetcher that mimics the JSON API, plus small helpers.
 */
import type {
  DocumentEntity,
  SearchFilters,
  SummaryResponse,
} from "../src/api.js";

export function jsonResponse(payload: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
  } as unknown as Response;
}

/** jsdom reports inline colours in rgb() form. */
export function hexToRgb(hex: string): string {
  const r = parseInt(hex.slice(1, 3), 16);
  const g = parseInt(hex.slice(3, 5), 16);
  const b = parseInt(hex.slice(5, 7), 16);
  return `rgb(${r}, ${g}, ${b})`;
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export const HAZARD_COLOR = "#d62728";
export const EQUIPMENT_COLOR = "#ff7f0e";

export const DOCS: Record<string, { title: string; text: string }> = {
  d1: {
    title: "Slip by the loading bay",
    text:
      "Report filed after a morning incident. The worker slipped on the " +
      "wet floor near the loading bay. A supervisor flagged the wet floor " +
      "and closed the aisle. An angle grinder was stored nearby.",
  },
  d2: {
    title: "Corridor slip",
    text: "The cleaner slipped on the wet floor in the east corridor.",
  },
  d3: {
    title: "Kitchen slip",
    text: "A porter slipped on the wet floor beside the kitchen sink.",
  },
  d4: {
    title: "Warehouse slip",
    text: "An operative slipped on the wet floor between the racking rows.",
  },
  d5: {
    title: "Grinder kickback",
    text: "The angle grinder kicked back and the operator slipped sideways.",
  },
  d6: {
    title: "Grinder guard missing",
    text: "An angle grinder without a guard slipped out of the fitter's grip.",
  },
  d7: {
    title: "Doorway slip",
    text: "Slipped near the door.",
  },
};

export const ALL_IDS = ["d1", "d2", "d3", "d4", "d5", "d6", "d7"];

export const CLUSTER_DOCS: Record<string, string[]> = {
  "c-wet": ["d1", "d2", "d3", "d4"],
  "c-grinder": ["d5", "d6"],
  other: ["d7"],
};

export const ENTITY_DOCS: Record<string, string[]> = {
  "wet floor": ["d1", "d2", "d3", "d4"],
  "angle grinder": ["d5", "d6"],
};

const MATCHED: Record<string, { category: string; surface: string }[]> = {
  d1: [{ category: "Hazard", surface: "wet floor" }],
  d2: [{ category: "Hazard", surface: "wet floor" }],
  d3: [{ category: "Hazard", surface: "wet floor" }],
  d4: [{ category: "Hazard", surface: "wet floor" }],
  d5: [{ category: "Equipment", surface: "angle grinder" }],
  d6: [{ category: "Equipment", surface: "angle grinder" }],
  d7: [],
};

export const SUMMARIES: Record<string, SummaryResponse> = {
  d1: {
    doc_id: "d1",
    sentences: [
      "The worker slipped on the wet floor near the loading bay.",
      "A supervisor flagged the wet floor and closed the aisle.",
    ],
    bypassed: false,
  },
  d7: {
    doc_id: "d7",
    sentences: ["Slipped near the door."],
    bypassed: true,
  },
};

export const CLOUD_TERMS = [
  { term: "wet floor", cvalue: 9.5, doc_frequency: 4 },
  { term: "angle grinder", cvalue: 7.2, doc_frequency: 2 },
  { term: "manual handling", cvalue: 3.1, doc_frequency: 3 },
];

/** Every occurrence of a gazetteer surface, found the way the API finds it. */
export function entitiesFor(text: string): DocumentEntity[] {
  const defs = [
    { surface: "wet floor", category: "Hazard", color: HAZARD_COLOR },
    { surface: "angle grinder", category: "Equipment", color: EQUIPMENT_COLOR },
  ];
  const spans: DocumentEntity[] = [];
  for (const def of defs) {
    let at = text.indexOf(def.surface);
    while (at !== -1) {
      spans.push({
        category: def.category,
        start: at,
        end: at + def.surface.length,
        surface: def.surface,
        color: def.color,
      });
      at = text.indexOf(def.surface, at + 1);
    }
  }
  spans.sort((a, b) => a.start - b.start);
  return spans;
}

function hitFor(id: string, rank: number) {
  const doc = DOCS[id];
  return {
    doc_id: id,
    title: doc ? doc.title : id,
    score: 8 - rank,
    snippet: "The worker slipped on the wet floor.",
    highlights: [[11, 18]] as [number, number][],
    matched_entities: MATCHED[id] ?? [],
  };
}

export interface FixtureOptions {
  pageSize?: number;
  failSearch?: boolean;
}

export interface RecordedCall {
  path: string;
  body: {
    query?: string;
    filters?: SearchFilters;
    page?: number;
  } | null;
}

/** Fetcher that answers like a live server over the canned corpus. */
export function fixtureFetcher(options: FixtureOptions = {}) {
  const pageSize = options.pageSize ?? 10;
  const calls: RecordedCall[] = [];

  const fetcher = async (
    input: string,
    init?: RequestInit,
  ): Promise<Response> => {
    const path = new URL(input, "http://fixture").pathname;
    const body = init?.body
      ? (JSON.parse(String(init.body)) as RecordedCall["body"])
      : null;
    calls.push({ path, body });

    if (path === "/api/search") {
      if (options.failSearch) throw new TypeError("fetch failed");
      const filters = body?.filters ?? {};
      if (filters.cluster_id === "c-gone") {
        return jsonResponse(
          {
            code: "unknown_cluster",
            message: "unknown cluster id: c-gone",
            status: 400,
          },
          400,
        );
      }
      let ids = ALL_IDS;
      if (filters.cluster_id) ids = CLUSTER_DOCS[filters.cluster_id] ?? [];
      else if (filters.entity_surface)
        ids = ENTITY_DOCS[filters.entity_surface] ?? [];
      else if (body?.query === "wet floor") ids = CLUSTER_DOCS["c-wet"] ?? [];
      const page = body?.page ?? 1;
      const hits = ids
        .map((id, rank) => hitFor(id, rank))
        .slice((page - 1) * pageSize, page * pageSize);
      return jsonResponse({
        total: ids.length,
        hits,
        applied_filters: filters,
        mode: "hybrid",
        page,
        page_size: pageSize,
      });
    }

    if (path === "/api/wordcloud") {
      return jsonResponse({ terms: CLOUD_TERMS });
    }

    if (path === "/api/clusters") {
      return jsonResponse({
        clusters: [
          { cluster_id: "c-wet", label: "wet floor", size: 4 },
          { cluster_id: "c-grinder", label: "angle grinder", size: 2 },
        ],
        residual_size: 1,
      });
    }

    if (path === "/api/entities") {
      return jsonResponse({
        entities: [
          {
            surface: "wet floor",
            category: "Hazard",
            mention_count: 5,
            doc_count: 4,
          },
          {
            surface: "angle grinder",
            category: "Equipment",
            mention_count: 2,
            doc_count: 2,
          },
        ],
      });
    }

    const docMatch = path.match(/^\/api\/document\/(.+)$/);
    if (docMatch) {
      const id = decodeURIComponent(docMatch[1] ?? "");
      const doc = DOCS[id];
      if (!doc) {
        return jsonResponse(
          { code: "not_found", message: `no such document: ${id}`, status: 404 },
          404,
        );
      }
      return jsonResponse({
        doc_id: id,
        title: doc.title,
        text: doc.text,
        entities: entitiesFor(doc.text),
        sentences: [],
      });
    }

    const summaryMatch = path.match(/^\/api\/summary\/(.+)$/);
    if (summaryMatch) {
      const id = decodeURIComponent(summaryMatch[1] ?? "");
      const summary = SUMMARIES[id];
      if (!summary) {
        return jsonResponse(
          { code: "not_found", message: `no summary for ${id}`, status: 404 },
          404,
        );
      }
      return jsonResponse(summary);
    }

    return jsonResponse(
      { code: "not_found", message: path, status: 404 },
      404,
    );
  };

  return { fetcher, calls };
}
