"""Skip-gram word vectors with negative sampling, trained on the corpus.

The trainer is single-threaded and fully driven by one seeded generator, so
a fixed TrainingConfig reproduces the vector matrix bit for bit. Multiword
units (entity surfaces, extracted terms) are merged into single tokens
before counting, giving phrases first-class vectors.

Updates are applied one sentence at a time: every (center, context) pair of
the sentence plus its negative samples forms one mini-batch against the
pre-update weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PHRASE_JOIN = "_"


class EmbeddingError(Exception):
    pass


class EmptyVocabulary(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    pass


class MalformedModelFile(EmbeddingError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    dimension: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    min_count: int = 2
    seed: int = 42

    def __post_init__(self):
        for name in ("dimension", "window", "negatives", "epochs", "min_count"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.min_learning_rate <= self.initial_learning_rate:
            raise ValueError("learning rates must satisfy 0 < min <= initial")


@dataclass
class EmbeddingModel:
    dimension: int
    vocabulary: dict[str, int]
    vectors: np.ndarray
    training_config: TrainingConfig | None = None

    def vector(self, token: str) -> np.ndarray | None:
        idx = self.vocabulary.get(token)
        return None if idx is None else self.vectors[idx]

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary


def phrase_token(words) -> str:
    """Merged-token form of a multiword unit ("stanley knife" -> "stanley_knife")."""
    if isinstance(words, str):
        words = words.split()
    return PHRASE_JOIN.join(words)


def merge_phrases(words: list[str], phrases: dict[tuple[str, ...], str],
                  max_len: int) -> list[str]:
    """Longest-match, left-to-right replacement of phrase runs by merged tokens."""
    if not phrases:
        return list(words)
    out = []
    i = 0
    while i < len(words):
        merged = None
        for n in range(min(max_len, len(words) - i), 1, -1):
            merged = phrases.get(tuple(words[i:i + n]))
            if merged is not None:
                out.append(merged)
                i += n
                break
        else:
            out.append(words[i])
            i += 1
    return out


def _phrase_table(phrases) -> tuple[dict[tuple[str, ...], str], int]:
    table: dict[tuple[str, ...], str] = {}
    max_len = 0
    for phrase in phrases:
        words = tuple(phrase.split()) if isinstance(phrase, str) else tuple(phrase)
        if len(words) < 2:
            continue
        table[words] = PHRASE_JOIN.join(words)
        max_len = max(max_len, len(words))
    return table, max_len


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def sgns_loss(w_in: np.ndarray, w_out: np.ndarray, center: int,
              context: int, negatives) -> float:
    """Negative-sampling loss of one (center, context, negatives) triple:
    -log sigma(v.u_ctx) - sum_n log sigma(-v.u_n), computed stably."""
    v = w_in[center]
    loss = float(np.logaddexp(0.0, -np.dot(v, w_out[context])))
    for n in negatives:
        loss += float(np.logaddexp(0.0, np.dot(v, w_out[n])))
    return loss


def _sgns_batch(w_in: np.ndarray, w_out: np.ndarray, centers: np.ndarray,
                contexts: np.ndarray, negatives: np.ndarray, lr: float) -> float:
    """One mini-batch update against pre-update weights; returns batch loss."""
    v = w_in[centers]
    u = w_out[contexts]
    nu = w_out[negatives]

    s_pos = np.einsum("pd,pd->p", v, u)
    s_neg = np.einsum("pd,pkd->pk", v, nu)
    loss = float(np.logaddexp(0.0, -s_pos).sum() + np.logaddexp(0.0, s_neg).sum())

    g_pos = _sigmoid(s_pos) - 1.0
    g_neg = _sigmoid(s_neg)
    grad_v = g_pos[:, None] * u + np.einsum("pk,pkd->pd", g_neg, nu)
    grad_u = g_pos[:, None] * v
    grad_nu = g_neg[:, :, None] * v[:, None, :]

    np.add.at(w_in, centers, -lr * grad_v)
    np.add.at(w_out, contexts, -lr * grad_u)
    np.add.at(w_out, negatives.reshape(-1), -lr * grad_nu.reshape(-1, v.shape[1]))
    return loss


def sgns_step(w_in: np.ndarray, w_out: np.ndarray, center: int, context: int,
              negatives, lr: float) -> float:
    """Apply the production update for a single triple; returns loss before."""
    return _sgns_batch(
        w_in, w_out,
        np.array([center]), np.array([context]),
        np.array([list(negatives)]), lr,
    )


def train(corpus, phrases=(), config: TrainingConfig = TrainingConfig()) -> EmbeddingModel:
    """Train an EmbeddingModel on the corpus sentences.

    phrases: multiword units (strings or word tuples) merged into single
    tokens before vocabulary counting.
    """
    table, max_len = _phrase_table(phrases)
    sentences: list[list[str]] = []
    for doc in corpus.documents:
        per_sentence: dict[int, list[str]] = {}
        for tok in doc.tokens:
            per_sentence.setdefault(tok.sentence_index, []).append(tok.normalized)
        for words in per_sentence.values():
            sentences.append(merge_phrases(words, table, max_len))

    counts: dict[str, int] = {}
    for sent in sentences:
        for w in sent:
            counts[w] = counts.get(w, 0) + 1
    vocab_words = sorted((w for w, c in counts.items() if c >= config.min_count),
                         key=lambda w: (-counts[w], w))
    if not vocab_words:
        raise EmptyVocabulary(
            f"no token reaches min_count={config.min_count}")
    vocabulary = {w: i for i, w in enumerate(vocab_words)}

    rng = np.random.default_rng(config.seed)
    size = len(vocabulary)
    dim = config.dimension
    w_in = (rng.random((size, dim)) - 0.5) / dim
    w_out = np.zeros((size, dim))

    # Noise distribution: unigram counts raised to 3/4, as a cumulative
    # table sampled by inverse transform.
    noise = np.array([counts[w] for w in vocab_words], dtype=np.float64) ** 0.75
    noise_cum = np.cumsum(noise / noise.sum())
    noise_cum[-1] = 1.0

    encoded = [np.array([vocabulary[w] for w in sent if w in vocabulary])
               for sent in sentences]
    encoded = [ids for ids in encoded if len(ids) >= 2]
    total_tokens = sum(len(ids) for ids in encoded) * config.epochs
    if total_tokens == 0:
        raise EmptyVocabulary("no sentence retains two in-vocabulary tokens")

    done = 0
    lr_span = config.initial_learning_rate - config.min_learning_rate
    for _ in range(config.epochs):
        for ids in encoded:
            lr = config.min_learning_rate + lr_span * (1.0 - done / total_tokens)
            n = len(ids)
            sizes = rng.integers(1, config.window, size=n, endpoint=True)
            centers_parts, contexts_parts = [], []
            positions = np.arange(n)
            for d in range(1, min(config.window, n - 1) + 1):
                right = positions[:n - d][sizes[:n - d] >= d]
                left = positions[d:][sizes[d:] >= d]
                centers_parts.extend((right, left))
                contexts_parts.extend((right + d, left - d))
            centers = ids[np.concatenate(centers_parts)]
            contexts = ids[np.concatenate(contexts_parts)]
            if len(centers):
                negatives = np.searchsorted(
                    noise_cum, rng.random((len(centers), config.negatives)))
                _sgns_batch(w_in, w_out, centers, contexts, negatives, lr)
            done += n

    if not np.all(np.isfinite(w_in)):
        raise EmbeddingError("training produced non-finite vector components")
    return EmbeddingModel(dimension=dim, vocabulary=vocabulary, vectors=w_in,
                          training_config=config)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


def sentence_vector(model: EmbeddingModel, tokens: list[str],
                    enriched_units: list[str] = ()) -> np.ndarray:
    """Mean of the vectors of in-vocabulary tokens and phrase units."""
    rows = [model.vocabulary[t] for t in tokens if t in model.vocabulary]
    rows += [model.vocabulary[u] for u in enriched_units if u in model.vocabulary]
    if not rows:
        return np.zeros(model.dimension)
    return model.vectors[rows].mean(axis=0)


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write the textual model file: a "|V| D" header, then one
    "word v1 ... vD" row per vocabulary entry in index order."""
    words = sorted(model.vocabulary, key=model.vocabulary.get)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {model.dimension}\n")
        for i, word in enumerate(words):
            row = " ".join(repr(float(x)) for x in model.vectors[i])
            fh.write(f"{word} {row}\n")


def load_model(path: str | Path) -> EmbeddingModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MalformedModelFile(f"{path}: bad header")
        try:
            size, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MalformedModelFile(f"{path}: bad header") from exc
        vocabulary: dict[str, int] = {}
        vectors = np.empty((size, dim))
        row = 0
        for line in fh:
            if not line.strip():
                continue
            if row >= size:
                raise MalformedModelFile(f"{path}: more rows than header declares")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise MalformedModelFile(
                    f"{path}: row {row} has {len(parts) - 1} values, expected {dim}")
            word = parts[0]
            if word in vocabulary:
                raise MalformedModelFile(f"{path}: duplicate word {word!r}")
            try:
                vectors[row] = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise MalformedModelFile(f"{path}: row {row}: {exc}") from exc
            vocabulary[word] = row
            row += 1
        if row != size:
            raise MalformedModelFile(f"{path}: {row} rows, header declares {size}")
    return EmbeddingModel(dimension=dim, vocabulary=vocabulary, vectors=vectors)
