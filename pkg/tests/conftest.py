import pytest

from hsearch.corpus import Corpus, build_document


def make_corpus(texts, prefix="d"):
    """Corpus from a list of raw texts (ids d0, d1, ...) or (id, text) pairs."""
    docs = []
    for i, item in enumerate(texts):
        if isinstance(item, tuple):
            doc_id, text = item
        else:
            doc_id, text = f"{prefix}{i}", item
        docs.append(build_document(doc_id, "", text))
    return Corpus(documents=docs, metadata={})


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        "An operative slipped on a wet floor. He sustained a fractured wrist.",
        "A labourer fell from a mobile scaffold tower. The scaffold tower was unsecured.",
        "A Stanley knife blade slipped during unloading. A deep cut resulted.",
    ])
