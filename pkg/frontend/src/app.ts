/**
 * Application wiring: one App instance owns the DOM below its root, the
 * serializable UiState, and the API client. Facet panes are always computed
 * for the same query+filters as the visible results, and stale responses
 * are dropped by the client's latest-wins channels.
 */
import {
  ApiClient,
  ApiFailure,
  Superseded,
  type ClustersResponse,
  type DocumentResponse,
  type EntityRow,
  type SearchResponse,
  type SummaryResponse,
  type WordCloudTerm,
} from "./api.js";
import {
  DEFAULT_STATE,
  decodeState,
  encodeState,
  hasSearch,
  stateFilters,
  TABS,
  type Tab,
  type UiState,
} from "./state.js";
import {
  renderClusters,
  renderDocument,
  renderEntities,
  renderResults,
  renderWordCloud,
  showBanner,
} from "./render.js";

const TAB_TITLES: Record<Tab, string> = {
  word_cloud: "Word cloud",
  clusters: "Clusters",
  entities: "Entities",
};

const SKELETON = `
  <header class="topbar">
    <h1 class="brand">hsearch</h1>
    <form id="search-form">
      <input id="query" type="search" placeholder="Search incident reports"
             autocomplete="off">
      <button type="submit">Search</button>
    </form>
  </header>
  <div id="banner"></div>
  <div class="layout">
    <aside class="facets">
      <nav id="tabs" role="tablist"></nav>
      <section id="pane-word_cloud" role="tabpanel"></section>
      <section id="pane-clusters" role="tabpanel"></section>
      <section id="pane-entities" role="tabpanel"></section>
    </aside>
    <main>
      <section id="results-view">
        <div id="results-meta"></div>
        <div id="results"></div>
        <nav id="pager"></nav>
      </section>
      <section id="document-view" hidden></section>
    </main>
  </div>
`;

export class App {
  state: UiState;

  private results: SearchResponse | null = null;
  private cloud: WordCloudTerm[] = [];
  private clusterData: ClustersResponse | null = null;
  private entityRows: EntityRow[] = [];
  private docData: DocumentResponse | null = null;
  private summaries = new Map<string, SummaryResponse>();
  private summaryOpen = false;
  private pending: Promise<unknown>[] = [];

  private readonly queryInput: HTMLInputElement;
  private readonly banner: HTMLElement;
  private readonly panes: Record<Tab, HTMLElement>;
  private readonly tabBar: HTMLElement;
  private readonly resultsView: HTMLElement;
  private readonly resultsMeta: HTMLElement;
  private readonly resultsBox: HTMLElement;
  private readonly pager: HTMLElement;
  private readonly documentView: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient = new ApiClient(),
  ) {
    root.innerHTML = SKELETON;
    const pick = (id: string) => {
      const node = root.querySelector<HTMLElement>(`#${id}`);
      if (!node) throw new Error(`skeleton is missing #${id}`);
      return node;
    };
    this.queryInput = pick("query") as HTMLInputElement;
    this.banner = pick("banner");
    this.tabBar = pick("tabs");
    this.panes = {
      word_cloud: pick("pane-word_cloud"),
      clusters: pick("pane-clusters"),
      entities: pick("pane-entities"),
    };
    this.resultsView = pick("results-view");
    this.resultsMeta = pick("results-meta");
    this.resultsBox = pick("results");
    this.pager = pick("pager");
    this.documentView = pick("document-view");

    for (const tab of TABS) {
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.tab = tab;
      button.setAttribute("role", "tab");
      button.textContent = TAB_TITLES[tab];
      button.addEventListener("click", () => this.switchTab(tab));
      this.tabBar.append(button);
    }

    pick("search-form").addEventListener("submit", (event) => {
      event.preventDefault();
      this.submitQuery(this.queryInput.value.trim());
    });
    window.addEventListener("popstate", () => this.restoreFromUrl());

    this.state = decodeState(window.location.search);
    this.queryInput.value = this.state.query;
    this.renderAll();
    if (hasSearch(this.state)) this.track(this.refresh());
    if (this.state.doc !== null) this.track(this.showDocument(this.state.doc));
  }

  /** Settles once every tracked request chain has finished. */
  async idle(): Promise<void> {
    while (this.pending.length > 0) {
      await Promise.allSettled(this.pending.splice(0));
    }
  }

  private track(work: Promise<void>): void {
    this.pending.push(work.catch((error: unknown) => this.fail(error)));
  }

  private fail(error: unknown): void {
    if (error instanceof Superseded) return;
    if (error instanceof Error && error.name === "AbortError") return;
    const message =
      error instanceof ApiFailure
        ? `${error.code}: ${error.message}`
        : error instanceof Error
          ? error.message
          : String(error);
    showBanner(this.banner, message);
  }

  private setState(changes: Partial<UiState>, push = true): void {
    this.state = { ...this.state, ...changes };
    if (push) {
      const url = encodeState(this.state) || window.location.pathname;
      window.history.pushState(null, "", url);
    }
  }

  private restoreFromUrl(): void {
    this.state = decodeState(window.location.search);
    this.queryInput.value = this.state.query;
    this.summaryOpen = false;
    this.renderAll();
    if (hasSearch(this.state)) this.track(this.refresh());
    if (this.state.doc !== null) this.track(this.showDocument(this.state.doc));
    else this.docData = null;
  }

  private submitQuery(query: string): void {
    this.setState({
      query,
      page: 1,
      cluster: null,
      category: null,
      surface: null,
      doc: null,
    });
    this.docData = null;
    this.track(this.refresh());
  }

  private switchTab(tab: Tab): void {
    this.setState({ tab });
    this.renderAll();
  }

  private toggleCluster(clusterId: string, checked: boolean): void {
    this.setState({ cluster: checked ? clusterId : null, page: 1 });
    this.track(this.refresh());
  }

  private pickEntity(category: string, surface: string): void {
    const already =
      this.state.category === category && this.state.surface === surface;
    this.setState({
      category: already ? null : category,
      surface: already ? null : surface,
      page: 1,
    });
    this.track(this.refresh());
  }

  private pickTerm(term: string): void {
    this.queryInput.value = term;
    this.submitQuery(term);
  }

  private goToPage(page: number): void {
    this.setState({ page });
    this.track(this.refresh());
  }

  private async refresh(): Promise<void> {
    if (!hasSearch(this.state)) {
      this.results = null;
      this.cloud = [];
      this.clusterData = null;
      this.entityRows = [];
      this.renderAll();
      return;
    }
    const request = {
      query: this.state.query,
      filters: stateFilters(this.state),
      page: this.state.page,
    };
    try {
      this.results = await this.client.search(request);
    } catch (error) {
      if (error instanceof ApiFailure && error.code === "unknown_cluster") {
        // The checked cluster no longer exists for this query.
        this.setState({ cluster: null, page: 1 });
        showBanner(this.banner, "Cluster selection was stale; it has been cleared.");
        this.results = await this.client.search({
          query: this.state.query,
          filters: stateFilters(this.state),
          page: this.state.page,
        });
      } else {
        throw error;
      }
    }
    await this.refreshFacets();
    this.renderAll();
  }

  private async refreshFacets(): Promise<void> {
    const query = this.state.query;
    const filters = stateFilters(this.state);
    const [cloud, clusters, entities] = await Promise.allSettled([
      this.client.wordcloud({ query, filters }),
      this.client.clusters(query),
      this.client.entities({ query, filters }),
    ]);
    this.applyFacet(cloud, (value) => {
      this.cloud = value ? value.terms : [];
    });
    this.applyFacet(clusters, (value) => {
      this.clusterData = value;
    });
    this.applyFacet(entities, (value) => {
      this.entityRows = value ? value.entities : [];
    });
  }

  private applyFacet<T>(
    result: PromiseSettledResult<T>,
    apply: (value: T | null) => void,
  ): void {
    if (result.status === "fulfilled") {
      apply(result.value);
      return;
    }
    const reason: unknown = result.reason;
    if (reason instanceof Superseded) return;
    if (reason instanceof Error && reason.name === "AbortError") return;
    if (
      reason instanceof ApiFailure &&
      (reason.code === "empty_result" || reason.code === "empty_query")
    ) {
      apply(null);
      return;
    }
    this.fail(reason);
    apply(null);
  }

  private openDocument(docId: string, withSummary: boolean): void {
    this.setState({ doc: docId });
    this.summaryOpen = withSummary;
    this.track(this.showDocument(docId));
  }

  private async showDocument(docId: string): Promise<void> {
    try {
      this.docData = await this.client.document(docId);
    } catch (error) {
      if (error instanceof ApiFailure && error.status === 404) {
        this.setState({ doc: null });
        this.docData = null;
        showBanner(this.banner, `Document ${docId} was not found.`);
        this.renderAll();
        return;
      }
      throw error;
    }
    if (this.summaryOpen) await this.loadSummary(docId);
    this.renderAll();
  }

  private async loadSummary(docId: string): Promise<void> {
    if (!this.summaries.has(docId)) {
      this.summaries.set(docId, await this.client.summary(docId));
    }
  }

  private toggleSummary(): void {
    const docId = this.state.doc;
    if (docId === null) return;
    if (this.summaryOpen) {
      this.summaryOpen = false;
      this.renderAll();
      return;
    }
    this.summaryOpen = true;
    this.track(
      this.loadSummary(docId).then(() => {
        this.renderAll();
      }),
    );
  }

  private closeDocument(): void {
    this.setState({ doc: null });
    this.docData = null;
    this.summaryOpen = false;
    this.renderAll();
  }

  private renderAll(): void {
    for (const button of this.tabBar.querySelectorAll("button")) {
      const active = button.dataset.tab === this.state.tab;
      button.setAttribute("aria-selected", String(active));
      button.classList.toggle("active", active);
    }
    for (const tab of TABS) {
      this.panes[tab].hidden = tab !== this.state.tab;
    }

    renderWordCloud(this.panes.word_cloud, this.cloud, (term) =>
      this.pickTerm(term),
    );
    renderClusters(
      this.panes.clusters,
      this.clusterData,
      this.state.cluster,
      (clusterId, checked) => this.toggleCluster(clusterId, checked),
    );
    renderEntities(
      this.panes.entities,
      this.entityRows,
      { category: this.state.category, surface: this.state.surface },
      (category, surface) => this.pickEntity(category, surface),
    );

    const showDoc = this.state.doc !== null && this.docData !== null;
    this.resultsView.hidden = showDoc;
    this.documentView.hidden = !showDoc;
    if (showDoc && this.docData) {
      const summary = this.summaries.get(this.state.doc ?? "") ?? null;
      renderDocument(
        this.documentView,
        this.docData,
        summary,
        this.summaryOpen && summary !== null,
        {
          onBack: () => this.closeDocument(),
          onToggleSummary: () => this.toggleSummary(),
        },
      );
      return;
    }

    this.renderMeta();
    renderResults(this.resultsBox, this.results, {
      onOpen: (docId) => this.openDocument(docId, false),
      onSummary: (docId) => this.openDocument(docId, true),
    });
    this.renderPager();
  }

  private renderMeta(): void {
    this.resultsMeta.replaceChildren();
    if (this.results === null) return;
    const count = document.createElement("span");
    count.className = "result-count";
    count.textContent = `${this.results.total} results`;
    this.resultsMeta.append(count);

    const addChip = (text: string, clear: () => void) => {
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = "filter-chip";
      chip.textContent = text;
      chip.title = "Remove this filter";
      chip.addEventListener("click", clear);
      this.resultsMeta.append(chip);
    };
    if (this.state.cluster !== null) {
      const label =
        this.clusterData?.clusters.find(
          (c) => c.cluster_id === this.state.cluster,
        )?.label ?? this.state.cluster;
      addChip(`cluster: ${label}`, () => this.toggleCluster("", false));
    }
    if (this.state.category !== null && this.state.surface !== null) {
      addChip(`${this.state.category}: ${this.state.surface}`, () =>
        this.pickEntity(this.state.category ?? "", this.state.surface ?? ""),
      );
    }
  }

  private renderPager(): void {
    this.pager.replaceChildren();
    if (this.results === null || this.results.total === 0) return;
    const pages = Math.max(
      1,
      Math.ceil(this.results.total / this.results.page_size),
    );
    if (pages === 1) return;
    const previous = document.createElement("button");
    previous.type = "button";
    previous.textContent = "Previous";
    previous.disabled = this.state.page <= 1;
    previous.addEventListener("click", () => this.goToPage(this.state.page - 1));
    const label = document.createElement("span");
    label.textContent = `Page ${this.state.page} of ${pages}`;
    const next = document.createElement("button");
    next.type = "button";
    next.textContent = "Next";
    next.disabled = this.state.page >= pages;
    next.addEventListener("click", () => this.goToPage(this.state.page + 1));
    this.pager.append(previous, label, next);
  }
}

export function mountApp(root: HTMLElement, client?: ApiClient): App {
  return new App(root, client);
}
