/** Typed client for the incident-search JSON API. */

export interface MatchedEntity {
  category: string;
  surface: string;
}

export interface SearchHit {
  doc_id: string;
  title: string;
  score: number;
  snippet: string;
  highlights: [number, number][];
  matched_entities: MatchedEntity[];
}

export interface SearchFilters {
  cluster_id?: string;
  category?: string;
  entity_surface?: string;
}

export interface SearchRequest {
  query: string;
  mode?: string;
  filters?: SearchFilters;
  page?: number;
  page_size?: number;
}

export interface SearchResponse {
  total: number;
  hits: SearchHit[];
  applied_filters: SearchFilters;
  mode: string;
  page: number;
  page_size: number;
}

export interface WordCloudTerm {
  term: string;
  cvalue: number;
  doc_frequency: number;
}

export interface WordCloudResponse {
  terms: WordCloudTerm[];
}

export interface ClusterRow {
  cluster_id: string;
  label: string;
  size: number;
}

export interface ClustersResponse {
  clusters: ClusterRow[];
  residual_size: number;
}

export interface EntityRow {
  surface: string;
  category: string;
  mention_count: number;
  doc_count: number;
}

export interface EntitiesResponse {
  entities: EntityRow[];
}

export interface DocumentEntity {
  category: string;
  start: number;
  end: number;
  surface: string;
  color: string;
}

export interface SentenceSpan {
  index: number;
  start: number;
  end: number;
}

export interface DocumentResponse {
  doc_id: string;
  title: string;
  text: string;
  entities: DocumentEntity[];
  sentences: SentenceSpan[];
}

export interface SummaryResponse {
  doc_id: string;
  sentences: string[];
  bypassed: boolean;
}

export interface HealthResponse {
  status: string;
  corpus_size: number;
  index_mode: string;
  version: string;
}

/** A non-2xx response; code mirrors the API's error envelope. */
export class ApiFailure extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiFailure";
  }
}

/** The request lost a latest-wins race; its result must not be applied. */
export class Superseded extends Error {
  constructor(channel: string) {
    super(`request superseded on channel "${channel}"`);
    this.name = "Superseded";
  }
}

type Fetcher = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * HTTP client with per-channel latest-wins cancellation: starting a request
 * on a channel aborts the channel's in-flight request, and a response that
 * comes back after being superseded is discarded (Superseded is thrown
 * instead of returning stale data).
 */
export class ApiClient {
  private tickets = new Map<string, number>();
  private controllers = new Map<string, AbortController>();

  constructor(
    private readonly base: string = "",
    private readonly fetcher: Fetcher = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    channel?: string,
  ): Promise<T> {
    let ticket = 0;
    let signal: AbortSignal | undefined;
    if (channel !== undefined) {
      this.controllers.get(channel)?.abort();
      const controller = new AbortController();
      this.controllers.set(channel, controller);
      ticket = (this.tickets.get(channel) ?? 0) + 1;
      this.tickets.set(channel, ticket);
      signal = controller.signal;
    }

    const superseded = () =>
      channel !== undefined && this.tickets.get(channel) !== ticket;

    let response: Response;
    try {
      const init: RequestInit = { method, signal };
      if (body !== undefined) {
        init.headers = { "Content-Type": "application/json" };
        init.body = JSON.stringify(body);
      }
      response = await this.fetcher(this.base + path, init);
    } catch (error) {
      if (superseded()) throw new Superseded(channel as string);
      throw error;
    }
    if (superseded()) throw new Superseded(channel as string);

    const payload: unknown = await response.json();
    if (!response.ok) {
      const envelope = payload as { code?: unknown; message?: unknown };
      throw new ApiFailure(
        response.status,
        typeof envelope.code === "string" ? envelope.code : "error",
        typeof envelope.message === "string"
          ? envelope.message
          : `HTTP ${response.status}`,
      );
    }
    return payload as T;
  }

  search(request: SearchRequest): Promise<SearchResponse> {
    return this.request("POST", "/api/search", request, "search");
  }

  wordcloud(request: SearchRequest): Promise<WordCloudResponse> {
    return this.request("POST", "/api/wordcloud", request, "wordcloud");
  }

  clusters(query: string): Promise<ClustersResponse> {
    return this.request("POST", "/api/clusters", { query }, "clusters");
  }

  entities(request: SearchRequest): Promise<EntitiesResponse> {
    return this.request("POST", "/api/entities", request, "entities");
  }

  document(docId: string): Promise<DocumentResponse> {
    const path = `/api/document/${encodeURIComponent(docId)}`;
    return this.request("GET", path, undefined, "document");
  }

  summary(docId: string): Promise<SummaryResponse> {
    const path = `/api/summary/${encodeURIComponent(docId)}`;
    return this.request("GET", path, undefined, "summary");
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/api/health");
  }
}
