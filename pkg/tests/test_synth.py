"""Synthetic task generator: label oracle, balance, determinism, splits."""

import pytest

from mwa import ConfigError
from mwa.synth import (
    SyntheticTaskSpec,
    contains_lexicon_word,
    load_jsonl,
    make_splits,
    synth_dataset,
    vocab_for,
    write_jsonl,
)


def spec(**kw):
    base = dict(alphabet_size=12, lexicon=("abc", "acd", "bdc", "cad", "dab"),
                min_len=5, max_len=10, n_samples=100)
    base.update(kw)
    return SyntheticTaskSpec(**base)


class TestLabelOracle:
    def test_empty_lexicon_never_matches(self):
        assert not contains_lexicon_word("abcdef", ())

    def test_full_coverage_always_matches(self):
        # A lexicon hitting every possible bigram labels everything positive.
        lexicon = tuple(a + b for a in "ab" for b in "ab")
        for text in ("aa", "abab", "bbba"):
            assert contains_lexicon_word(text, lexicon)

    def test_substring_detection(self):
        assert contains_lexicon_word("xxabcxx", ("abc",))
        assert not contains_lexicon_word("xxacbxx", ("abc",))


class TestSpecValidation:
    def test_single_char_words_rejected(self):
        with pytest.raises(ConfigError):
            spec(lexicon=("a",))

    def test_words_outside_alphabet_rejected(self):
        with pytest.raises(ConfigError):
            spec(alphabet_size=2, lexicon=("abc",))

    def test_word_longer_than_max_len_rejected(self):
        with pytest.raises(ConfigError):
            spec(max_len=2, min_len=1, lexicon=("abc",))


class TestSynthDataset:
    def test_exact_balance_reference_scale(self):
        # The balanced-generation contract at the documented scale.
        s = SyntheticTaskSpec(
            alphabet_size=12,
            lexicon=("abl", "cde", "fgh", "ijk", "bad"),
            min_len=10, max_len=20, n_samples=2000,
        )
        data = synth_dataset(s, seed=1)
        labels = [e.label for e in data]
        assert labels.count(1) == 1000 and labels.count(0) == 1000

    def test_odd_sample_count_within_one(self):
        data = synth_dataset(spec(n_samples=101), seed=3)
        ones = sum(e.label for e in data)
        assert abs((101 - ones) - ones) <= 1

    def test_deterministic(self):
        a = synth_dataset(spec(), seed=5)
        b = synth_dataset(spec(), seed=5)
        assert a == b

    def test_labels_match_oracle(self):
        s = spec()
        for e in synth_dataset(s, seed=7):
            assert e.label == int(contains_lexicon_word(e.text, s.lexicon))
            assert len(e.ids) == len(e.text)
            voc = vocab_for(s.alphabet_size)
            assert all(voc[c] == i for c, i in zip(e.text, e.ids))

    def test_empty_lexicon_with_positives_is_config_error(self):
        with pytest.raises(ConfigError):
            synth_dataset(spec(lexicon=()), seed=1)

    def test_infeasible_balance_detected(self):
        # Every bigram over a 2-letter alphabet is a word: negatives cannot
        # exist, so balancing must fail rather than spin forever.
        s = SyntheticTaskSpec(
            alphabet_size=2, lexicon=("aa", "ab", "ba", "bb"),
            min_len=2, max_len=4, n_samples=10,
        )
        with pytest.raises(ConfigError):
            synth_dataset(s, seed=1)


class TestSplits:
    def test_disjoint_by_sequence(self):
        train, dev, test = make_splits(spec(), 80, 40, 40, seed=2)
        sets = [set(e.text for e in part) for part in (train, dev, test)]
        assert len(sets[0] & sets[1]) == 0
        assert len(sets[0] & sets[2]) == 0
        assert len(sets[1] & sets[2]) == 0
        assert [len(p) for p in (train, dev, test)] == [80, 40, 40]

    def test_each_split_balanced(self):
        train, dev, test = make_splits(spec(), 80, 41, 40, seed=2)
        for part in (train, dev, test):
            ones = sum(e.label for e in part)
            assert abs(len(part) - 2 * ones) <= 1


class TestJsonlRoundTrip:
    def test_write_and_load(self, tmp_path):
        data = synth_dataset(spec(n_samples=20), seed=9)
        path = tmp_path / "d.jsonl"
        write_jsonl(path, data)
        loaded = load_jsonl(path)
        assert loaded == data

    def test_malformed_rejected(self, tmp_path):
        from mwa import InputError

        path = tmp_path / "bad.jsonl"
        path.write_text('{"ids": [0], "text": "ab", "label": 0}\n')
        with pytest.raises(InputError):
            load_jsonl(path)
        path.write_text("not json\n")
        with pytest.raises(InputError):
            load_jsonl(path)
        path.write_text("")
        with pytest.raises(InputError):
            load_jsonl(path)
