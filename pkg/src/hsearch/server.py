"""HTTP JSON API binding the pipeline into the three-pane application.

The application state is immutable after startup; every endpoint is
read-only, so requests can be handled concurrently without coordination.
Summaries, cluster sets, and word clouds are cached as serialized response
bytes so a cache hit is byte-identical to a cold computation.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlsplit

from . import __version__
from .annotations import (
    DEFAULT_CATEGORY_NAMES,
    EntityMention,
    category_color,
    entity_aggregate,
    load_annotations,
    load_gazetteer,
    tag_with_gazetteer,
)
from .clustering import (
    ClusterSet,
    UnknownClusterId,
    candidate_labels,
    select_clusters,
)
from .config import AppConfig
from .corpus import Corpus, ingest, load_corpus
from .embeddings import EmbeddingModel, load_model
from .index import (
    MODES,
    EmptyQuery,
    InvalidPage,
    InvertedIndex,
    Query,
    UnknownMode,
    build_index,
    load_index,
    search,
)
from .summarizer import SummaryConfig, summarize
from .term_extraction import EmptySubset, ScoredTerm, word_cloud

JSON_TYPE = "application/json"

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

_PLACEHOLDER_PAGE = (
    "<!doctype html><html><head><title>hsearch</title></head>"
    "<body><h1>hsearch API</h1>"
    "<p>No UI bundle is configured. The JSON API lives under /api/.</p>"
    "</body></html>"
).encode("utf-8")


class ApiError(Exception):
    """Error carried to the client as {status, code, message} JSON."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message

    def body(self) -> bytes:
        return _encode({"status": self.status, "code": self.code,
                        "message": self.message})


def _encode(payload) -> bytes:
    return json.dumps(payload, sort_keys=True).encode("utf-8")


@dataclass
class AppState:
    config: AppConfig
    corpus: Corpus
    mentions: list[EntityMention]
    index: InvertedIndex
    model: EmbeddingModel | None = None
    terms: list[ScoredTerm] = field(default_factory=list)
    ready: bool = True
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _responses: dict = field(default_factory=dict, repr=False)
    _cluster_sets: dict = field(default_factory=dict, repr=False)

    def summary_config(self) -> SummaryConfig:
        return SummaryConfig(
            damping=self.config.summary_damping,
            mmr_lambda=self.config.summary_mmr_lambda,
            summary_size=self.config.summary_size,
            min_doc_sentences=self.config.summary_min_sentences,
        )

    def cached_response(self, key, compute) -> bytes:
        with self._lock:
            hit = self._responses.get(key)
        if hit is not None:
            return hit
        body = compute()
        with self._lock:
            return self._responses.setdefault(key, body)


def build_state(config: AppConfig) -> AppState:
    """Load every artifact named by the config and assemble the state.

    The corpus path may be a raw JSONL collection or a corpus snapshot;
    mentions come from a standoff annotations file when one is named,
    otherwise from tagging with the gazetteer. A missing index path (or a
    path that does not exist yet) means the index is built in memory.
    """
    if not config.corpus_path:
        raise ApiError(500, "config", "corpus_path is not configured")
    corpus_path = Path(config.corpus_path)
    if corpus_path.suffix == ".jsonl":
        corpus = ingest(corpus_path)
    else:
        corpus = load_corpus(corpus_path)

    mentions: list[EntityMention] = []
    if config.annotations_path:
        mentions = load_annotations(corpus, config.annotations_path)
    elif config.gazetteer_path:
        gazetteer = load_gazetteer(config.gazetteer_path)
        mentions = tag_with_gazetteer(corpus, gazetteer)

    if config.index_path and Path(config.index_path).exists():
        index = load_index(config.index_path, corpus)
    else:
        index = build_index(corpus, mentions)

    model = load_model(config.model_path) if config.model_path else None
    terms = word_cloud(corpus, set(corpus.doc_ids()),
                       config.wordcloud_top_k)
    return AppState(config=config, corpus=corpus, mentions=mentions,
                    index=index, model=model, terms=terms)


def _parse_json_object(raw: bytes) -> dict:
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ApiError(400, "invalid_body", "request body is not valid JSON")
    if not isinstance(data, dict):
        raise ApiError(400, "invalid_body", "request body must be an object")
    return data


_FILTER_KEYS = ("cluster_id", "category", "entity_surface")


def _parse_filters(body: dict) -> dict:
    filters = body.get("filters", {})
    if filters is None:
        filters = {}
    if not isinstance(filters, dict):
        raise ApiError(400, "invalid_body", "filters must be an object")
    unknown = set(filters) - set(_FILTER_KEYS)
    if unknown:
        raise ApiError(400, "invalid_body",
                       f"unknown filter keys: {sorted(unknown)}")
    parsed = {}
    for key in _FILTER_KEYS:
        value = filters.get(key)
        if value is not None and not isinstance(value, str):
            raise ApiError(400, "invalid_body", f"filter {key} must be a string")
        parsed[key] = value
    return parsed


def _require_str(body: dict, key: str, default: str = "") -> str:
    value = body.get(key, default)
    if not isinstance(value, str):
        raise ApiError(400, "invalid_body", f"{key} must be a string")
    return value


def _require_int(body: dict, key: str, default: int) -> int:
    value = body.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ApiError(400, "invalid_body", f"{key} must be an integer")
    return value


def _cluster_set_for(state: AppState, text: str) -> ClusterSet:
    key = text.strip().lower()
    with state._lock:
        hit = state._cluster_sets.get(key)
    if hit is not None:
        return hit
    result_docs = set(_result_ids(state, text, dict.fromkeys(_FILTER_KEYS)))
    if not result_docs:
        raise ApiError(422, "empty_result",
                       "no documents match the query, nothing to cluster")
    terms = word_cloud(state.corpus, result_docs, state.config.wordcloud_top_k)
    candidates = candidate_labels(state.corpus, result_docs, state.mentions,
                                  terms,
                                  min_support=state.config.cluster_min_support)
    clusters = select_clusters(candidates, result_docs,
                               state.config.cluster_max, query=text,
                               min_support=state.config.cluster_min_support)
    with state._lock:
        return state._cluster_sets.setdefault(key, clusters)


def _run_search(state: AppState, text: str, filters: dict, mode: str,
                page: int, page_size: int):
    cluster_members = None
    if filters.get("cluster_id"):
        cluster_set = _cluster_set_for(state, text)
        try:
            cluster_members = cluster_set.members_of(filters["cluster_id"])
        except UnknownClusterId:
            raise ApiError(400, "unknown_cluster",
                           f"unknown cluster id {filters['cluster_id']!r}")
    query = Query(text=text, cluster_id=filters.get("cluster_id"),
                  category=filters.get("category"),
                  entity_surface=filters.get("entity_surface"),
                  page=page, page_size=page_size)
    try:
        return search(state.index, query, mode, cluster_members)
    except EmptyQuery:
        raise ApiError(422, "empty_query",
                       "query text is empty and no filters are set")
    except InvalidPage as exc:
        raise ApiError(400, "invalid_page", str(exc))
    except UnknownMode:
        raise ApiError(400, "unknown_mode", f"unknown mode {mode!r}")


def _result_ids(state: AppState, text: str, filters: dict) -> list[str]:
    _, _, ranked = _run_search(state, text, filters, state.config.index_mode,
                               page=1, page_size=1)
    return ranked


def _handle_search(state: AppState, body: dict) -> bytes:
    text = _require_str(body, "query")
    filters = _parse_filters(body)
    mode = _require_str(body, "mode", state.config.index_mode)
    page = _require_int(body, "page", 1)
    page_size = _require_int(body, "page_size", state.config.page_size)
    total, hits, _ = _run_search(state, text, filters, mode, page, page_size)
    payload = {
        "total": total,
        "hits": [{
            "doc_id": hit.doc_id,
            "title": state.corpus[hit.doc_id].title,
            "score": hit.score,
            "snippet": hit.snippet,
            "highlights": [list(span) for span in hit.highlights],
            "matched_entities": [{"category": category, "surface": surface}
                                 for category, surface in hit.matched_entities],
        } for hit in hits],
        "applied_filters": {key: value for key, value in filters.items()
                            if value is not None},
        "mode": mode,
        "page": page,
        "page_size": page_size,
    }
    return _encode(payload)


def _handle_wordcloud(state: AppState, body: dict) -> bytes:
    text = _require_str(body, "query")
    filters = _parse_filters(body)
    cache_key = ("wordcloud", text, tuple(sorted(
        (k, v) for k, v in filters.items() if v is not None)))

    def compute() -> bytes:
        subset = set(_result_ids(state, text, filters))
        try:
            terms = word_cloud(state.corpus, subset,
                               state.config.wordcloud_top_k)
        except EmptySubset:
            raise ApiError(422, "empty_result",
                           "no documents match the query")
        return _encode({"terms": [{
            "term": term.phrase,
            "cvalue": term.cvalue,
            "doc_frequency": term.doc_frequency,
        } for term in terms]})

    return state.cached_response(cache_key, compute)


def _handle_clusters(state: AppState, body: dict) -> bytes:
    text = _require_str(body, "query")
    cache_key = ("clusters", text.strip().lower())

    def compute() -> bytes:
        cluster_set = _cluster_set_for(state, text)
        return _encode({
            "clusters": [{
                "cluster_id": cluster.label.cluster_id,
                "label": cluster.label.label,
                "size": cluster.size,
            } for cluster in cluster_set.clusters],
            "residual_size": len(cluster_set.residual),
        })

    return state.cached_response(cache_key, compute)


def _handle_entities(state: AppState, body: dict) -> bytes:
    text = _require_str(body, "query")
    filters = _parse_filters(body)
    category = body.get("category")
    if category is not None:
        if not isinstance(category, str):
            raise ApiError(400, "invalid_body", "category must be a string")
        if category not in DEFAULT_CATEGORY_NAMES:
            raise ApiError(400, "unknown_category",
                           f"unknown category {category!r}")
    subset = set(_result_ids(state, text, filters))
    rows = entity_aggregate(state.mentions, subset, category)
    per_category: dict[str, int] = {}
    kept = []
    for row in rows:
        seen = per_category.get(row.category, 0)
        if seen < state.config.entities_top_k:
            per_category[row.category] = seen + 1
            kept.append(row)
    return _encode({"entities": [{
        "surface": row.surface,
        "category": row.category,
        "mention_count": row.mention_count,
        "doc_count": row.doc_count,
    } for row in kept]})


def _handle_document(state: AppState, doc_id: str) -> bytes:
    doc = state.corpus.get(doc_id)
    if doc is None:
        raise ApiError(404, "unknown_doc", f"no document with id {doc_id!r}")
    entities = sorted(
        (m for m in state.mentions if m.doc_id == doc_id),
        key=lambda m: (m.start, m.end))
    return _encode({
        "doc_id": doc.doc_id,
        "title": doc.title,
        "text": doc.body,
        "entities": [{
            "category": m.category,
            "start": m.start,
            "end": m.end,
            "surface": m.surface,
            "color": category_color(m.category),
        } for m in entities],
        "sentences": [{"index": span.index, "start": span.start,
                       "end": span.end} for span in doc.sentences],
    })


def _handle_summary(state: AppState, doc_id: str) -> bytes:
    doc = state.corpus.get(doc_id)
    if doc is None:
        raise ApiError(404, "unknown_doc", f"no document with id {doc_id!r}")
    if state.model is None:
        raise ApiError(503, "model_unavailable",
                       "no embedding model is loaded")

    def compute() -> bytes:
        config = state.summary_config()
        sentences = summarize(doc, state.mentions, state.terms, state.model,
                              config)
        return _encode({
            "doc_id": doc_id,
            "sentences": sentences,
            "bypassed": len(doc.sentences) < config.min_doc_sentences,
        })

    return state.cached_response(("summary", doc_id), compute)


def _handle_health(state: AppState | None) -> tuple[int, bytes]:
    if state is None or not state.ready:
        return 503, _encode({"status": "loading", "corpus_size": 0,
                             "index_mode": "", "version": __version__})
    return 200, _encode({
        "status": "ok",
        "corpus_size": len(state.corpus),
        "index_mode": state.config.index_mode,
        "version": __version__,
    })


def _serve_static(state: AppState | None, path: str) -> tuple[int, str, bytes]:
    ui_dir = Path(state.config.ui_dir) if state and state.config.ui_dir else None
    relative = unquote(path).lstrip("/") or "index.html"
    if ui_dir is not None and ui_dir.is_dir():
        target = (ui_dir / relative).resolve()
        if target.is_relative_to(ui_dir.resolve()) and target.is_file():
            content_type = _STATIC_TYPES.get(target.suffix,
                                             "application/octet-stream")
            return 200, content_type, target.read_bytes()
    if relative == "index.html":
        return 200, _STATIC_TYPES[".html"], _PLACEHOLDER_PAGE
    error = ApiError(404, "not_found", f"no such path: /{relative}")
    return error.status, JSON_TYPE, error.body()


_POST_ROUTES = {
    "/api/search": _handle_search,
    "/api/wordcloud": _handle_wordcloud,
    "/api/clusters": _handle_clusters,
    "/api/entities": _handle_entities,
}


def dispatch(state: AppState | None, method: str, target: str,
             raw_body: bytes = b"") -> tuple[int, str, bytes]:
    """Route one request, returning (status, content type, body bytes)."""
    path = urlsplit(target).path
    try:
        if path == "/api/health" and method == "GET":
            status, body = _handle_health(state)
            return status, JSON_TYPE, body
        if path.startswith("/api/"):
            if state is None or not state.ready:
                raise ApiError(503, "not_ready", "the index is still loading")
            if method == "POST" and path in _POST_ROUTES:
                body = _POST_ROUTES[path](state, _parse_json_object(raw_body))
                return 200, JSON_TYPE, body
            if method == "GET" and path.startswith("/api/document/"):
                doc_id = unquote(path[len("/api/document/"):])
                return 200, JSON_TYPE, _handle_document(state, doc_id)
            if method == "GET" and path.startswith("/api/summary/"):
                doc_id = unquote(path[len("/api/summary/"):])
                return 200, JSON_TYPE, _handle_summary(state, doc_id)
            raise ApiError(404, "not_found", f"no such endpoint: {path}")
        if method == "GET":
            return _serve_static(state, path)
        raise ApiError(405, "method_not_allowed", f"{method} not supported")
    except ApiError as error:
        return error.status, JSON_TYPE, error.body()


class _Handler(BaseHTTPRequestHandler):
    server_version = f"hsearch/{__version__}"
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):
        pass

    def _respond(self, method: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length > 0 else b""
        status, content_type, body = dispatch(
            getattr(self.server, "app_state", None), method, self.path, raw)
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        self._respond("GET")

    def do_POST(self):
        self._respond("POST")


def make_server(state: AppState | None, host: str | None = None,
                port: int | None = None) -> ThreadingHTTPServer:
    """Bind a threaded HTTP server; port 0 picks a free port."""
    config = state.config if state is not None else AppConfig()
    address = (host if host is not None else config.host,
               port if port is not None else config.port)
    server = ThreadingHTTPServer(address, _Handler)
    server.app_state = state
    return server


def serve(config: AppConfig) -> None:
    state = build_state(config)
    server = make_server(state)
    host, port = server.server_address[:2]
    print(f"hsearch serving {len(state.corpus)} documents "
          f"on http://{host}:{port}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
