import json
import math

import numpy as np
import pytest

from smoothsum.corpus import (PAD, START, END, UNK, Corpus, Sample,
                              SPECIAL_TOKENS, Vocabulary, build_vocabulary,
                              encode_sequence, extract_action_word,
                              filter_by_length_quantile, load_prepared_dir,
                              read_corpus_jsonl, split_by_project, stem,
                              tokenize_code, tokenize_comment,
                              write_prepared_dir)
from smoothsum.errors import ConfigurationError, DataError
from smoothsum.rng import Rng


def make_sample(i, project, code_len=10, comment=("does", "things")):
    return Sample(id=f"s{i}", project=project, code_tokens=["tok"],
                  comment_tokens=list(comment), code_char_len=code_len)


class TestTokenizers:
    def test_code_camel_and_snake(self):
        assert tokenize_code("getFooBar(x_val)") == ["get", "foo", "bar",
                                                     "x", "val"]

    def test_code_empty(self):
        assert tokenize_code("") == []

    def test_code_digits_standalone(self):
        assert tokenize_code("a+b2") == ["a", "b", "2"]
        assert tokenize_code("x2y34") == ["x", "2", "y", "34"]

    def test_code_acronym_runs(self):
        assert tokenize_code("HTTPServer") == ["http", "server"]

    def test_comment_first_sentence(self):
        assert tokenize_comment("Deletes the file. Returns true.") == \
            ["deletes", "the", "file"]

    def test_comment_lowercases(self):
        assert tokenize_comment("returns X") == ["returns", "x"]

    def test_comment_blank(self):
        assert tokenize_comment("  ") == []

    def test_comment_question_mark_ends_sentence(self):
        assert tokenize_comment("is it set? maybe") == ["is", "it", "set"]


class TestVocabulary:
    def _corpus(self, freqs):
        tokens = [t for t, c in freqs.items() for _ in range(c)]
        s = Sample(id="s", project="p", code_tokens=tokens,
                   comment_tokens=tokens, code_char_len=1)
        return Corpus([s], split_tag="train")

    def test_frequency_order(self):
        vocab = build_vocabulary(self._corpus({"a": 3, "b": 2, "c": 1}), 6,
                                 "source")
        assert vocab.tokens == list(SPECIAL_TOKENS) + ["a", "b"]

    def test_size_five_keeps_one(self):
        vocab = build_vocabulary(self._corpus({"a": 3, "b": 2}), 5, "source")
        assert vocab.tokens[-1] == "a" and vocab.size == 5

    def test_tie_break_lexicographic(self):
        vocab = build_vocabulary(self._corpus({"b": 2, "a": 2}), 6, "source")
        assert vocab.tokens[4:] == ["a", "b"]

    def test_size_below_minimum(self):
        with pytest.raises(ConfigurationError):
            build_vocabulary(self._corpus({"a": 1}), 4, "source")

    def test_round_trip(self):
        vocab = build_vocabulary(self._corpus({"a": 3, "b": 2, "c": 1}), 7,
                                 "target")
        for token in vocab.tokens:
            assert vocab.tokens[vocab.index[token]] == token

    def test_file_round_trip(self, tmp_path):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["x", "y"])
        vocab.write(tmp_path / "v.txt")
        again = Vocabulary.read(tmp_path / "v.txt")
        assert again.tokens == vocab.tokens

    def test_file_without_specials_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("a\nb\nc\nd\ne\n")
        with pytest.raises(DataError):
            Vocabulary.read(tmp_path / "v.txt")


class TestEncodeSequence:
    vocab = Vocabulary(list(SPECIAL_TOKENS) + ["a", "b", "c"])

    def test_unknown_markers_padding(self):
        seq = encode_sequence(["foo"], self.vocab, 4, True)
        assert seq.ids == [START, UNK, END, PAD] and not seq.truncated

    def test_truncation_keeps_end_marker(self):
        seq = encode_sequence(["a", "b", "c"], self.vocab, 3, True)
        assert seq.ids == [START, 4, END] and seq.truncated

    def test_empty_with_markers(self):
        seq = encode_sequence([], self.vocab, 2, True)
        assert seq.ids == [START, END]

    def test_without_markers(self):
        seq = encode_sequence(["a", "b"], self.vocab, 4, False)
        assert seq.ids == [4, 5, PAD, PAD] and not seq.truncated

    def test_bounds_and_length_properties(self):
        rng = Rng(5)
        tokens = ["a", "b", "c", "zz", "q"]
        for _ in range(200):
            k = rng.randint(len(tokens) + 1)
            chosen = [tokens[rng.randint(len(tokens))] for _ in range(k)]
            max_len = 2 + rng.randint(6)
            seq = encode_sequence(chosen, self.vocab, max_len,
                                  add_markers=bool(rng.randint(2)))
            assert len(seq.ids) == max_len
            assert all(0 <= i < self.vocab.size for i in seq.ids)

    def test_max_len_too_small(self):
        with pytest.raises(ConfigurationError):
            encode_sequence(["a"], self.vocab, 1, True)


class TestSplitByProject:
    def _corpus(self, sizes):
        samples = []
        for p, count in sizes.items():
            for i in range(count):
                samples.append(make_sample(f"{p}x{i}", p))
        return Corpus(samples)

    def test_ten_projects_even(self):
        corpus = self._corpus({f"p{i}": 10 for i in range(10)})
        for seed in range(6):
            train, val, test = split_by_project(corpus, (0.8, 0.1, 0.1), seed)
            assert (len(train), len(val), len(test)) == (80, 10, 10)

    def test_partition_and_purity(self):
        rng = Rng(17)
        sizes = {f"p{i}": 1 + rng.randint(20) for i in range(9)}
        corpus = self._corpus(sizes)
        train, val, test = split_by_project(corpus, (0.7, 0.15, 0.15), 3)
        all_ids = sorted(s.id for c in (train, val, test) for s in c.samples)
        assert all_ids == sorted(s.id for s in corpus.samples)
        assignment = {}
        for split, c in (("train", train), ("val", val), ("test", test)):
            for s in c.samples:
                assert assignment.setdefault(s.project, split) == split

    def test_deterministic(self):
        corpus = self._corpus({f"p{i}": 5 for i in range(8)})
        a = split_by_project(corpus, (0.8, 0.1, 0.1), 42)
        b = split_by_project(corpus, (0.8, 0.1, 0.1), 42)
        for ca, cb in zip(a, b):
            assert [s.id for s in ca.samples] == [s.id for s in cb.samples]

    def test_split_tags(self):
        corpus = self._corpus({f"p{i}": 5 for i in range(4)})
        tags = [c.split_tag for c in split_by_project(corpus, (0.6, 0.2, 0.2), 0)]
        assert tags == ["train", "val", "test"]

    def test_too_few_projects(self):
        with pytest.raises(DataError):
            split_by_project(self._corpus({"a": 5, "b": 5}), (0.8, 0.1, 0.1), 0)

    def test_bad_ratios(self):
        corpus = self._corpus({f"p{i}": 5 for i in range(4)})
        with pytest.raises(ConfigurationError):
            split_by_project(corpus, (0.8, 0.1, 0.2), 0)


class TestQuantileFilter:
    def _corpus(self, lengths):
        return Corpus([make_sample(i, f"p{i}", code_len=l)
                       for i, l in enumerate(lengths)])

    def test_decile_on_one_to_ten(self):
        kept = filter_by_length_quantile(self._corpus(range(1, 11)), 0.9)
        assert [s.code_char_len for s in kept.samples] == [10]

    def test_quartile_on_one_to_four(self):
        kept = filter_by_length_quantile(self._corpus([1, 2, 3, 4]), 0.75)
        assert [s.code_char_len for s in kept.samples] == [4]

    def test_all_equal_gives_empty(self):
        for q in (0.1, 0.5, 0.9):
            kept = filter_by_length_quantile(self._corpus([7] * 12), q)
            assert len(kept) == 0

    def test_against_scan_oracle(self):
        # nearest-rank quantile by definition: smallest value whose
        # cumulative share reaches q
        rng = Rng(23)
        for trial in range(50):
            lengths = [1 + rng.randint(40) for _ in range(1 + rng.randint(30))]
            q = (1 + rng.randint(98)) / 100.0
            threshold = min(v for v in lengths
                            if sum(x <= v for x in lengths) / len(lengths) >= q)
            expected = sorted(i for i, l in enumerate(lengths) if l > threshold)
            kept = filter_by_length_quantile(self._corpus(lengths), q)
            got = sorted(int(s.id[1:]) for s in kept.samples)
            assert got == expected, (trial, lengths, q)

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            filter_by_length_quantile(Corpus([]), 0.5)

    def test_bad_quantile(self):
        with pytest.raises(ConfigurationError):
            filter_by_length_quantile(self._corpus([1, 2]), 1.0)


class TestActionWords:
    def test_first_token_stemmed(self):
        assert extract_action_word(["deletes", "the", "file"]) == "delet"

    def test_returns(self):
        assert extract_action_word(["returns", "x"]) == stem("returns")

    def test_empty_comment(self):
        with pytest.raises(DataError):
            extract_action_word([])


class TestCorpusFiles:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            Corpus([make_sample(1, "p"), make_sample(1, "p")])

    def test_raw_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rows = [
            {"id": "a", "project": "p1", "code": "int f(){return 1;}",
             "comment": "Gets one. More text."},
            {"id": "b", "project": "p2", "code": "void setX(int x){}",
             "comment": "sets x", "ast": "(function (name (f)))"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        corpus = read_corpus_jsonl(path)
        assert [s.id for s in corpus.samples] == ["a", "b"]
        assert corpus.samples[0].comment_tokens == ["gets", "one"]
        assert corpus.samples[1].ast_text == "(function (name (f)))"
        assert corpus.samples[0].code_char_len == len(rows[0]["code"])

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(DataError):
            read_corpus_jsonl(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps({"id": "a", "project": "p"}) + "\n")
        with pytest.raises(DataError):
            read_corpus_jsonl(path)

    def test_prepared_dir_round_trip(self, tmp_path):
        def corpus(tag, ids):
            return Corpus([make_sample(i, f"p{i}") for i in ids],
                          split_tag=tag)
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["tok"])
        write_prepared_dir(tmp_path / "prep", corpus("train", [1, 2]),
                           corpus("val", [3]), corpus("test", [4]),
                           vocab, vocab, vocab)
        prepared = load_prepared_dir(tmp_path / "prep")
        assert [s.id for s in prepared.train.samples] == ["s1", "s2"]
        assert prepared.test.split_tag == "test"
        assert prepared.ast_vocab.tokens == vocab.tokens

    def test_prepared_dir_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_prepared_dir(tmp_path / "nothing")
