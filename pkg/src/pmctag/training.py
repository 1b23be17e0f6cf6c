"""Count-based maximum likelihood training and exact online updates.

Every parameter is an exact ratio of integer pattern counts; there is no
smoothing. Zero-probability patterns are handled at inference time by the
per-step downgrade, not here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCorpus, EmptySentence
from .features import derive_feature_tables, fit_feature_tables
from .model import (CountTables, HmcParams, Interner, ModelBundle, PmcParams,
                    normalize_counts)

TASKS = ("pos", "chunk", "ner")


@dataclass
class TrainConfig:
    task: str = "pos"
    suffix_max_len: int = 3
    tag_column: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.suffix_max_len < 0:
            raise ValueError("suffix_max_len must be >= 0")


def _accumulate_raw(corpus, alphabet, vocabulary, n0_i, n0_ik, n_ikjl):
    for sentence in corpus.sentences:
        if not sentence:
            raise EmptySentence("training corpus contains an empty sentence")
        ids = [(alphabet.intern(t), vocabulary.intern(w)) for w, t in sentence]
        i0, k0 = ids[0]
        n0_i[i0] = n0_i.get(i0, 0) + 1
        key0 = (i0, k0)
        n0_ik[key0] = n0_ik.get(key0, 0) + 1
        for t in range(len(ids) - 1):
            i, k = ids[t]
            j, l = ids[t + 1]
            key = (i, k, j, l)
            n_ikjl[key] = n_ikjl.get(key, 0) + 1


def accumulate_counts(corpus, alphabet=None, vocabulary=None):
    """Count every adjacent (label, word, label, word) pattern in the corpus.

    Returns (CountTables, alphabet, vocabulary); the interners are created
    here unless existing ones are passed in, in which case they are
    extended append-only.
    """
    if not corpus.sentences:
        raise EmptyCorpus("training corpus has no sentences")
    alphabet = alphabet if alphabet is not None else Interner()
    vocabulary = vocabulary if vocabulary is not None else Interner()
    n0_i_map: dict[int, int] = {}
    n0_ik: dict[tuple[int, int], int] = {}
    n_ikjl: dict[tuple[int, int, int, int], int] = {}
    _accumulate_raw(corpus, alphabet, vocabulary, n0_i_map, n0_ik, n_ikjl)
    n0_i = np.zeros(len(alphabet), dtype=np.int64)
    for i, c in n0_i_map.items():
        n0_i[i] = c
    counts = CountTables.from_raw(n0_i, n0_ik, n_ikjl, L=len(corpus.sentences))
    return counts, alphabet, vocabulary


def fit_hmc(counts: CountTables) -> HmcParams:
    """Hidden-chain parameters as empirical frequencies of the counts.

    pi(i) = n0_i / L, trans[i, j] = n_ij / n_i, emit[(i, k)] = m_ik / n_i.
    Labels with n_i = 0 keep an all-zero transition row, flagged in
    trans_support, and no emission entries.
    """
    n = counts.n_labels
    pi = counts.n0_i.astype(np.float64) / counts.L
    support = counts.n_i > 0
    trans = np.zeros((n, n), dtype=np.float64)
    rows = counts.n_ij[support].astype(np.float64)
    trans[support] = rows / counts.n_i[support, None]
    emit = {}
    for (i, k), c in counts.m_ik.items():
        emit[(i, k)] = c / counts.n_i[i]
    return HmcParams(pi=pi, trans=trans, trans_support=support, emit=emit)


def fit_pmc(counts: CountTables) -> PmcParams:
    """Pairwise-chain parameters; keys with zero denominator stay absent."""
    n = counts.n_labels
    pi2 = {key: c / counts.L for key, c in counts.n0_ik.items()}
    trans2: dict[tuple[int, int], np.ndarray] = {}
    for (i, k, j), c in counts.n_ikj.items():
        vec = trans2.get((i, k))
        if vec is None:
            vec = np.zeros(n, dtype=np.float64)
            trans2[(i, k)] = vec
        vec[j] = c / counts.m_ik[(i, k)]
    rows: dict[tuple[int, int, int], dict[int, int]] = {}
    for (i, k, j, l), c in counts.n_ikjl.items():
        rows.setdefault((i, k, j), {})[l] = c
    emit2 = {key: normalize_counts(row) for key, row in rows.items()}
    return PmcParams(pi2=pi2, trans2=trans2, emit2=emit2)


def train_model(corpus, config: TrainConfig) -> ModelBundle:
    """One pass over the corpus producing counts and all derived tables."""
    counts, alphabet, vocabulary = accumulate_counts(corpus)
    features = fit_feature_tables(corpus, alphabet, config.suffix_max_len)
    return ModelBundle(
        alphabet=alphabet,
        vocabulary=vocabulary,
        hmc=fit_hmc(counts),
        pmc=fit_pmc(counts),
        features=features,
        counts=counts,
        task=config.task,
    )


def update_online(model: ModelBundle, new_corpus) -> ModelBundle:
    """Fold new chains into the counts and rederive every table.

    The result equals training from scratch on the concatenated corpus:
    interning is append-only, counts are merged integers, and parameters
    are single divisions of those integers.
    """
    if not new_corpus.sentences:
        raise EmptyCorpus("online update received an empty corpus")
    alphabet = model.alphabet.copy()
    vocabulary = model.vocabulary.copy()
    old = model.counts
    n0_i_map = {i: int(c) for i, c in enumerate(old.n0_i) if c}
    n0_ik = dict(old.n0_ik)
    n_ikjl = dict(old.n_ikjl)
    _accumulate_raw(new_corpus, alphabet, vocabulary, n0_i_map, n0_ik, n_ikjl)
    n0_i = np.zeros(len(alphabet), dtype=np.int64)
    for i, c in n0_i_map.items():
        n0_i[i] = c
    counts = CountTables.from_raw(n0_i, n0_ik, n_ikjl,
                                  L=old.L + len(new_corpus.sentences))
    features = derive_feature_tables(counts, vocabulary, model.suffix_max_len)
    return ModelBundle(
        alphabet=alphabet,
        vocabulary=vocabulary,
        hmc=fit_hmc(counts),
        pmc=fit_pmc(counts),
        features=features,
        counts=counts,
        task=model.task,
        format_version=model.format_version,
    )
