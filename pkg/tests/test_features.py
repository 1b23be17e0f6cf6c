import pytest

from pmctag.errors import EmptyCorpus, EmptyToken
from pmctag.features import (backoff_level, derive_feature_tables,
                             extract_features, feature_emission_prob,
                             fit_feature_tables, word_suffix)
from pmctag.model import Interner
from pmctag.training import accumulate_counts
from pmctag.conll import LabeledCorpus

from conftest import corpus_from, varied_corpus


def brute_force_feature_tables(corpus, max_len):
    """Independent tuple counter working on raw strings."""
    tuples = [dict() for _ in range(max_len + 1)]
    totals = {}
    for sent in corpus.sentences:
        for pos, (word, label) in enumerate(sent):
            totals[label] = totals.get(label, 0) + 1
            cap = 1 if word[0].isupper() else 0
            hyp = 1 if "-" in word else 0
            first = 1 if pos == 0 else 0
            dig = 1 if any(c.isdecimal() for c in word) else 0
            for m in range(max_len + 1):
                sfx = word[len(word) - min(m, len(word)):]
                key = (label, cap, hyp, first, dig, sfx)
                tuples[m][key] = tuples[m].get(key, 0) + 1
    return tuples, totals


class TestExtractFeatures:
    def test_capitalized_first_word(self):
        f = extract_features("John", 0, 3)
        assert (f.cap, f.hyphen, f.first, f.digit, f.suffix) == (1, 0, 1, 0, "ohn")

    def test_hyphenated_mid_sentence(self):
        f = extract_features("state-of-the-art", 4, 3)
        assert (f.cap, f.hyphen, f.first, f.digit, f.suffix) == (0, 1, 0, 0, "art")

    def test_short_word_with_digit(self):
        f = extract_features("B2B", 2, 3)
        assert (f.cap, f.hyphen, f.first, f.digit, f.suffix) == (1, 0, 0, 1, "B2B")

    def test_zero_suffix_length(self):
        assert extract_features("John", 0, 0).suffix == ""

    def test_empty_word(self):
        with pytest.raises(EmptyToken):
            extract_features("", 0, 3)

    def test_pure_function(self):
        a = extract_features("re-do", 1, 2)
        b = extract_features("re-do", 1, 2)
        assert a == b

    def test_non_letter_first_char_is_not_cap(self):
        assert extract_features("2nd", 1, 3).cap == 0
        assert extract_features("-x", 1, 3).cap == 0


class TestFitFeatureTables:
    def test_single_token_corpus(self):
        alphabet = Interner()
        tables = fit_feature_tables(corpus_from([("John", "NOUN")]), alphabet, 3)
        noun = alphabet.get("NOUN")
        assert tables.tables[3] == {(noun, 1, 0, 1, 0, "ohn"): 1.0}
        assert tables.tables[0] == {(noun, 1, 0, 1, 0, ""): 1.0}

    def test_two_tokens_same_label_split_half(self):
        alphabet = Interner()
        corpus = corpus_from([("John", "NOUN"), ("car", "NOUN")])
        tables = fit_feature_tables(corpus, alphabet, 3)
        noun = alphabet.get("NOUN")
        assert tables.tables[3][(noun, 1, 0, 1, 0, "ohn")] == 0.5
        assert tables.tables[3][(noun, 0, 0, 0, 0, "car")] == 0.5

    def test_against_brute_force_counter(self, rng):
        corpus = varied_corpus(rng, n_sentences=70)
        alphabet = Interner()
        tables = fit_feature_tables(corpus, alphabet, 3)
        ref_tuples, ref_totals = brute_force_feature_tables(corpus, 3)
        for m in range(4):
            assert len(tables.tables[m]) == len(ref_tuples[m])
            for (label, *rest), c in ref_tuples[m].items():
                key = (alphabet.get(label), *rest)
                assert tables.tables[m][key] == c / ref_totals[label]

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            fit_feature_tables(LabeledCorpus(sentences=[]), Interner(), 3)

    def test_normalized_per_label_and_level(self, rng):
        corpus = varied_corpus(rng)
        tables = fit_feature_tables(corpus, Interner(), 3)
        tables.validate()

    def test_derivation_from_counts_is_bit_identical(self, rng):
        corpus = varied_corpus(rng, n_sentences=90)
        counts, alphabet, vocab = accumulate_counts(corpus)
        fitted = fit_feature_tables(corpus, alphabet, 3)
        derived = derive_feature_tables(counts, vocab, 3)
        assert fitted == derived


class TestFeatureEmissionProb:
    @pytest.fixture
    def tables(self):
        self.alphabet = Interner()
        corpus = corpus_from(
            [("walking", "VERB"), ("Rennes", "NOUN")],
            [("I", "PRON"), ("walk", "VERB")],
            [("ok", "DET")],
        )
        return fit_feature_tables(corpus, self.alphabet, 3)

    def test_level3_hit(self, tables):
        noun = self.alphabet.get("NOUN")
        # unknown word with a seen 3-suffix scores straight from level 3
        assert backoff_level(tables, "Vannes") == 3
        p = feature_emission_prob(tables, noun, "Vannes", 1)
        assert p == tables.tables[3][(noun, 1, 0, 0, 0, "nes")]
        assert p == 1.0

    def test_backoff_chain_to_level_1(self, tables):
        verb = self.alphabet.get("VERB")
        # "zzk" and "zk" unseen, "k" seen via "walk"
        assert backoff_level(tables, "buzzk") == 1
        p = feature_emission_prob(tables, verb, "buzzk", 2)
        assert p == tables.tables[1][(verb, 0, 0, 0, 0, "k")]
        assert p == 0.5

    def test_exhausted_backoff_returns_zero(self, tables):
        det = self.alphabet.get("DET")
        # level 0 always has suffix support; the bit tuple decides
        assert backoff_level(tables, "B-2") == 0
        assert feature_emission_prob(tables, det, "B-2", 1) == 0.0

    def test_level_is_word_property_shared_by_labels(self, tables):
        level = backoff_level(tables, "Vannes")
        for label in range(len(self.alphabet)):
            # every label scores the same level: probabilities come from
            # the same table even when the entry is absent (0.0)
            p = feature_emission_prob(tables, label, "Vannes", 1)
            key_level = level
            f = extract_features("Vannes", 1, key_level)
            expect = tables.tables[key_level].get(
                (label, f.cap, f.hyphen, f.first, f.digit, f.suffix), 0.0)
            assert p == expect

    def test_suffix_max_len_zero_ignores_suffix(self):
        alphabet = Interner()
        corpus = corpus_from([("alpha", "X"), ("beta", "X")])
        tables = fit_feature_tables(corpus, alphabet, 0)
        x = alphabet.get("X")
        assert feature_emission_prob(tables, x, "gamma", 1) == \
            feature_emission_prob(tables, x, "different", 1) == 0.5


def test_backoff_monotone_largest_supported_level(rng):
    corpus = varied_corpus(rng)
    tables = fit_feature_tables(corpus, Interner(), 3)
    words = ["John", "likes", "xylophone", "B2B", "12", "zz", "Paris-2", "q"]
    for word in words:
        m = backoff_level(tables, word)
        assert word_suffix(word, m) in tables.suffix_support[m]
        for higher in range(m + 1, tables.max_len + 1):
            assert word_suffix(word, higher) not in tables.suffix_support[higher]
