"""Report ingestion and the canonical document store.

Raw collections (JSONL or a directory of .txt files) are normalized into
immutable :class:`Document` objects carrying sentence spans and a token
stream, both as character offsets into the original text. A corpus is
persisted as a JSON snapshot; ingestion is deterministic, so the same input
always produces a byte-identical snapshot.
"""
from __future__ import annotations

import hashlib
import json
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

CORPUS_FORMAT = "incident-corpus/1"

# Words that never end a sentence even when followed by ". " (checked
# case-insensitively against the word preceding the full stop).
ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "no", "op", "approx", "dept",
    "fig", "e.g", "i.e", "etc", "vs", "inc", "ltd", "co", "ref", "min",
    "max", "sq",
})

# Maximal runs of letters/digits, with internal hyphens kept so compound
# vocabulary ("step-ladder") stays one token. [^\W_] is \w minus underscore.
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)

_ABBREV_TAIL_RE = re.compile(r"[^\W\d_][\w.]*$")


class CorpusError(Exception):
    """Base error for ingestion and snapshot handling."""


class MalformedRecord(CorpusError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateDocId(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


class MalformedSnapshot(CorpusError):
    pass


@dataclass(frozen=True)
class SentenceSpan:
    index: int
    start: int
    end: int


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    start: int
    end: int
    sentence_index: int


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str
    sentences: tuple[SentenceSpan, ...]
    tokens: tuple[Token, ...]

    def sentence_text(self, index: int) -> str:
        span = self.sentences[index]
        return self.body[span.start:span.end]

    def sentence_tokens(self, index: int) -> list[Token]:
        return [t for t in self.tokens if t.sentence_index == index]


@dataclass
class Corpus:
    documents: list[Document]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self._by_id = {d.doc_id: d for d in self.documents}

    def __len__(self) -> int:
        return len(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def get(self, doc_id: str) -> Document | None:
        return self._by_id.get(doc_id)

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]


def segment_sentences(text: str) -> list[SentenceSpan]:
    """Split text into sentence spans by rule.

    A boundary is a run of sentence-final punctuation (. ! ?) followed by
    whitespace and an uppercase letter, or by end of text. A full stop whose
    preceding word is a known abbreviation does not split. Spans are trimmed
    to exclude surrounding whitespace, so together they cover every
    non-whitespace character.
    """
    spans: list[SentenceSpan] = []
    n = len(text)

    def emit(raw_start: int, raw_end: int) -> None:
        s, e = raw_start, raw_end
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if e > s:
            spans.append(SentenceSpan(index=len(spans), start=s, end=e))

    start = 0
    i = 0
    while i < n:
        if text[i] in ".!?":
            j = i
            while j + 1 < n and text[j + 1] in ".!?":
                j += 1
            if _is_boundary(text, i, j):
                emit(start, j + 1)
                start = j + 1
            i = j + 1
        else:
            i += 1
    emit(start, n)
    return spans


def _is_boundary(text: str, first: int, last: int) -> bool:
    # A pure "." run defers to the abbreviation list; mixed or !? runs never do.
    run = text[first:last + 1]
    if set(run) == {"."}:
        m = _ABBREV_TAIL_RE.search(text, 0, first)
        if m and m.group().rstrip(".").lower() in ABBREVIATIONS:
            return False
    k = last + 1
    if k >= len(text):
        return True
    if not text[k].isspace():
        return False
    while k < len(text) and text[k].isspace():
        k += 1
    return k >= len(text) or text[k].isupper()


def tokenize(text: str) -> list[Token]:
    """Tokenize without sentence attribution (sentence_index is -1)."""
    return [
        Token(surface=m.group(), normalized=m.group().lower(),
              start=m.start(), end=m.end(), sentence_index=-1)
        for m in _TOKEN_RE.finditer(text)
    ]


def build_document(doc_id: str, title: str, body: str) -> Document:
    """Segment, tokenize, and attribute each token to its sentence."""
    if not doc_id:
        raise ValueError("doc_id must be non-empty")
    sentences = segment_sentences(body)
    starts = [s.start for s in sentences]
    tokens = []
    for tok in tokenize(body):
        idx = bisect_right(starts, tok.start) - 1
        if idx < 0 or tok.end > sentences[idx].end:
            raise ValueError(
                f"token {tok.surface!r} at {tok.start} crosses a sentence "
                f"boundary in document {doc_id!r}"
            )
        tokens.append(
            Token(surface=tok.surface, normalized=tok.normalized,
                  start=tok.start, end=tok.end, sentence_index=idx)
        )
    return Document(doc_id=doc_id, title=title, body=body,
                    sentences=tuple(sentences), tokens=tuple(tokens))


def ingest(path: str | Path, format: str = "jsonl") -> Corpus:
    """Ingest a raw collection into a Corpus.

    format "jsonl": one object per line with fields id, text and optional
    title. format "plain_dir": every .txt file becomes one document with the
    filename stem as its id.
    """
    path = Path(path)
    if format == "jsonl":
        documents = _ingest_jsonl(path)
    elif format in ("plain_dir", "dir"):
        documents = _ingest_dir(path)
    else:
        raise ValueError(f"unknown ingest format {format!r}")
    if not documents:
        raise EmptyCorpus(f"no documents found in {path}")
    metadata = {"source": str(path), "format": CORPUS_FORMAT,
                "sha256": content_hash(documents)}
    return Corpus(documents=documents, metadata=metadata)


def content_hash(documents) -> str:
    """Deterministic digest of document contents, independent of any file
    layout, so derived artifacts can assert they match their corpus."""
    return hashlib.sha256(
        "\x00".join(f"{d.doc_id}\x01{d.title}\x01{d.body}" for d in documents)
        .encode("utf-8")
    ).hexdigest()


def _ingest_jsonl(path: Path) -> list[Document]:
    documents: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record is not an object")
            if "id" not in record:
                raise MalformedRecord(line_no, 'missing "id" field')
            if "text" not in record:
                raise MalformedRecord(line_no, 'missing "text" field')
            doc_id, text = record["id"], record["text"]
            if not isinstance(doc_id, str) or not doc_id:
                raise MalformedRecord(line_no, '"id" must be a non-empty string')
            if not isinstance(text, str) or not text.strip():
                raise MalformedRecord(line_no, '"text" must be a non-empty string')
            if doc_id in seen:
                raise DuplicateDocId(f"line {line_no}: duplicate doc id {doc_id!r}")
            seen.add(doc_id)
            title = record.get("title", "")
            if not isinstance(title, str):
                raise MalformedRecord(line_no, '"title" must be a string')
            documents.append(build_document(doc_id, title, text))
    return documents


def _ingest_dir(path: Path) -> list[Document]:
    documents = []
    for txt in sorted(path.glob("*.txt")):
        text = txt.read_text(encoding="utf-8")
        if not text.strip():
            raise MalformedRecord(0, f"{txt.name}: empty file")
        documents.append(build_document(txt.stem, "", text))
    return documents


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a snapshot. Only raw fields are stored; structure is re-derived
    on load, which keeps snapshots small and version-independent."""
    payload = {
        "format": CORPUS_FORMAT,
        "metadata": corpus.metadata,
        "documents": [
            {"id": d.doc_id, "title": d.title, "text": d.body}
            for d in corpus.documents
        ],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False,
                   separators=(",", ":")),
        encoding="utf-8",
    )


def load_corpus(path: str | Path) -> Corpus:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedSnapshot(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CORPUS_FORMAT:
        raise MalformedSnapshot(
            f"{path}: expected corpus snapshot with format tag {CORPUS_FORMAT!r}"
        )
    documents = [
        build_document(rec["id"], rec.get("title", ""), rec["text"])
        for rec in payload["documents"]
    ]
    if not documents:
        raise EmptyCorpus(f"{path}: snapshot holds no documents")
    return Corpus(documents=documents, metadata=dict(payload.get("metadata", {})))
