import random

import pytest

from pmctag.conll import LabeledCorpus


def corpus_from(*sentences) -> LabeledCorpus:
    """Build a corpus from sentences given as [(word, tag), ...] lists."""
    return LabeledCorpus(sentences=[list(s) for s in sentences])


def random_corpus(rng: random.Random, n_sentences=50, n_words=8, n_labels=3,
                  max_len=6) -> LabeledCorpus:
    words = [f"w{i}" for i in range(n_words)]
    labels = [f"L{i}" for i in range(n_labels)]
    sentences = []
    for _ in range(n_sentences):
        length = rng.randint(1, max_len)
        sentences.append([(rng.choice(words), rng.choice(labels))
                          for _ in range(length)])
    return LabeledCorpus(sentences=sentences)


def varied_corpus(rng: random.Random, n_sentences=60) -> LabeledCorpus:
    """Corpus with orthographic variety for feature-table tests."""
    words = ["John", "likes", "the", "blue-green", "house", "B2B", "Mary",
             "runs", "fast", "U.S.", "12", "state-of-the-art", "ab", "x"]
    labels = ["NOUN", "VERB", "DET", "ADJ", "NUM"]
    sentences = []
    for _ in range(n_sentences):
        length = rng.randint(1, 7)
        sentences.append([(rng.choice(words), rng.choice(labels))
                          for _ in range(length)])
    return LabeledCorpus(sentences=sentences)


@pytest.fixture
def rng():
    return random.Random(20240)
