from pathlib import Path

import pytest

from citectx.corpus import build_span_index, load_topic_dir
from citectx.embeddings import Lexicon, SimilarityParams, load_embeddings

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def topics():
    return load_topic_dir(FIXTURES / "corpus")


@pytest.fixture(scope="session")
def topic_a(topics):
    return next(t for t in topics if t.id == "topic_a")


@pytest.fixture(scope="session")
def topic_b(topics):
    return next(t for t in topics if t.id == "topic_b")


@pytest.fixture(scope="session")
def index_a(topic_a):
    return build_span_index(topic_a.reference, max_n=3)


@pytest.fixture(scope="session")
def index_b(topic_b):
    return build_span_index(topic_b.reference, max_n=3)


@pytest.fixture(scope="session")
def table():
    with open(FIXTURES / "vectors.txt", encoding="utf-8") as fh:
        return load_embeddings(fh)


@pytest.fixture(scope="session")
def sim_params():
    return SimilarityParams(tau=0.4)


@pytest.fixture(scope="session")
def lexicon():
    with open(FIXTURES / "lexicon.txt", encoding="utf-8") as fh:
        return Lexicon.load(fh)


@pytest.fixture(scope="session")
def domain_lexicon():
    with open(FIXTURES / "domain_lexicon.txt", encoding="utf-8") as fh:
        return Lexicon.load(fh)
