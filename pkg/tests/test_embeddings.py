"""Vocabulary construction and the three embedding schemes."""

import numpy as np
import pytest

from fdcheck import FD_TOL, numeric_grad, rel_error
from symevent.embeddings import (
    SymbolScalarEmbedding,
    SymbolSumEmbedding,
    Vocabulary,
    WordEmbedding,
    embedding_param_count,
    make_embedding,
)
from symevent.exceptions import EmptyDataset, IndexOutOfRange, InvalidAlphabet


class TestVocabulary:
    def test_single_repeated_word(self):
        clip = np.array([[1, 2], [1, 2], [1, 2]])
        vocab = Vocabulary.build([clip], min_count=1)
        assert vocab.size == 2
        assert vocab.word_to_index == {(1, 2): 0}
        assert vocab.oov_index == 1

    def test_min_count_filters(self):
        clip = np.array([[0, 0], [0, 0], [1, 1]])
        vocab = Vocabulary.build([clip], min_count=2)
        assert (0, 0) in vocab.word_to_index
        assert (1, 1) not in vocab.word_to_index

    def test_relative_frequency_filters(self):
        rows = [[0, 0]] * 99 + [[1, 1]]
        vocab = Vocabulary.build([np.array(rows)], min_count=1, min_rel_freq=0.02)
        assert vocab.word_to_index == {(0, 0): 0}

    def test_lexicographic_indices(self):
        clip = np.array([[2, 0], [0, 1], [1, 1], [0, 1], [2, 0], [1, 1]])
        vocab = Vocabulary.build([clip], min_count=1)
        assert vocab.word_to_index == {(0, 1): 0, (1, 1): 1, (2, 0): 2}

    def test_unseen_maps_to_oov(self):
        vocab = Vocabulary.build([np.array([[0, 0], [0, 0]])], min_count=1)
        idx = vocab.lookup_steps(np.array([[0, 0], [3, 3]]))
        assert idx.tolist() == [0, vocab.oov_index]

    def test_empty_raises(self):
        with pytest.raises(EmptyDataset):
            Vocabulary.build([], min_count=1)

    def test_roundtrip(self):
        clip = np.array([[0, 1], [2, 0], [0, 1]])
        vocab = Vocabulary.build([clip], min_count=1)
        again = Vocabulary.from_dict(vocab.to_dict())
        assert again.word_to_index == vocab.word_to_index
        assert again.oov_index == vocab.oov_index


def symbols_for(sizes, steps, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, np.array(sizes), size=(steps, len(sizes)))


class TestWordEmbedding:
    def test_lookup_rows(self):
        vocab = Vocabulary({(0, 0): 0, (0, 1): 1}, oov_index=2)
        emb = WordEmbedding(vocab, dim=3, rng=np.random.default_rng(0), dtype=np.float64)
        out, _ = emb.forward(np.array([[0, 1], [0, 0], [0, 1]]))
        np.testing.assert_array_equal(out[0], emb.table[1])
        np.testing.assert_array_equal(out[0], out[2])

    def test_oov_row_used(self):
        vocab = Vocabulary({(0, 0): 0}, oov_index=1)
        emb = WordEmbedding(vocab, dim=2, rng=np.random.default_rng(0), dtype=np.float64)
        out, _ = emb.forward(np.array([[9, 9]]))
        np.testing.assert_array_equal(out[0], emb.table[1])

    def test_gradient_accumulates_per_lookup(self):
        vocab = Vocabulary({(0, 0): 0, (1, 1): 1}, oov_index=2)
        emb = WordEmbedding(vocab, dim=2, rng=np.random.default_rng(0), dtype=np.float64)
        out, cache = emb.forward(np.array([[0, 0], [0, 0], [1, 1]]))
        emb.backward(np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]]), cache)
        np.testing.assert_array_equal(emb.grad("table")[0], [2.0, 4.0])
        np.testing.assert_array_equal(emb.grad("table")[1], [5.0, 5.0])
        np.testing.assert_array_equal(emb.grad("table")[2], [0.0, 0.0])


class TestSymbolSumEmbedding:
    def test_sum_of_columns(self):
        emb = SymbolSumEmbedding((2, 3), dim=4, rng=np.random.default_rng(1), dtype=np.float64)
        sym = np.array([[1, 2]])
        out, _ = emb.forward(sym)
        np.testing.assert_allclose(out[0], emb.tables[0][1] + emb.tables[1][2])

    def test_variable_order_irrelevant_to_sum(self):
        rng = np.random.default_rng(2)
        emb = SymbolSumEmbedding((3, 3), dim=2, rng=rng, dtype=np.float64)
        emb.tables[1][...] = emb.tables[0]
        out_ab, _ = emb.forward(np.array([[0, 2]]))
        out_ba, _ = emb.forward(np.array([[2, 0]]))
        np.testing.assert_allclose(out_ab, out_ba)

    def test_index_out_of_range(self):
        emb = SymbolSumEmbedding((2, 2), dim=2, rng=np.random.default_rng(0))
        with pytest.raises(IndexOutOfRange):
            emb.forward(np.array([[0, 2]]))


class TestSymbolScalarEmbedding:
    def test_output_is_per_variable_scalar(self):
        emb = SymbolScalarEmbedding((4, 3), (True, True), rng=np.random.default_rng(0), dtype=np.float64)
        out, _ = emb.forward(np.array([[2, 0], [1, 2]]))
        assert out.shape == (2, 2)
        assert out[0, 0] == emb.rows[0][2]
        assert out[1, 1] == emb.rows[1][2]

    def test_ordered_init_grid(self):
        emb = SymbolScalarEmbedding((4,), (True,), rng=np.random.default_rng(0), scale=1.0, dtype=np.float64)
        np.testing.assert_allclose(emb.rows[0], [-1.0, -1 / 3, 1 / 3, 1.0])

    def test_two_symbol_grid(self):
        emb = SymbolScalarEmbedding((2,), (True,), rng=np.random.default_rng(0), scale=0.5, dtype=np.float64)
        np.testing.assert_allclose(emb.rows[0], [-0.5, 0.5])

    def test_unordered_init_is_permuted_grid(self):
        emb = SymbolScalarEmbedding((5,), (False,), rng=np.random.default_rng(3), scale=1.0, dtype=np.float64)
        np.testing.assert_allclose(np.sort(emb.rows[0]), np.linspace(-1, 1, 5))

    def test_project_sorts_ordered_rows_only(self):
        emb = SymbolScalarEmbedding((3, 3), (True, False), rng=np.random.default_rng(4), dtype=np.float64)
        emb.rows[0][...] = [0.3, 0.1, 0.2]
        emb.rows[1][...] = [0.3, 0.1, 0.2]
        emb.project()
        np.testing.assert_allclose(emb.rows[0], [0.1, 0.2, 0.3])
        np.testing.assert_allclose(emb.rows[1], [0.3, 0.1, 0.2])

    def test_project_idempotent(self):
        emb = SymbolScalarEmbedding((4,), (True,), rng=np.random.default_rng(5), dtype=np.float64)
        emb.project()
        before = emb.rows[0].copy()
        emb.project()
        np.testing.assert_array_equal(emb.rows[0], before)

    def test_project_preserves_multiset(self):
        emb = SymbolScalarEmbedding((6,), (True,), rng=np.random.default_rng(6), dtype=np.float64)
        emb.rows[0][...] = np.random.default_rng(7).normal(size=6)
        values = sorted(emb.rows[0].tolist())
        emb.project()
        assert sorted(emb.rows[0].tolist()) == values


class TestEmbeddingGradients:
    def run_check(self, emb, sizes, steps=4):
        sym = symbols_for(sizes, steps, seed=9)
        rng = np.random.default_rng(10)
        out, cache = emb.forward(sym)
        upstream = rng.normal(size=out.shape)
        emb.zero_grads()
        emb.backward(upstream, cache)

        for name, param, grad in emb.param_items():
            def loss():
                value, _ = emb.forward(sym)
                return float((value * upstream).sum())

            err = rel_error(grad, numeric_grad(loss, param))
            assert err < FD_TOL, f"{name}: rel err {err}"

    def test_word(self):
        vocab = Vocabulary.build([symbols_for((3, 4), 12, seed=1)], min_count=1)
        emb = WordEmbedding(vocab, dim=3, rng=np.random.default_rng(0), dtype=np.float64)
        self.run_check(emb, (3, 4))

    def test_symbol_sum(self):
        emb = SymbolSumEmbedding((3, 4, 2), dim=3, rng=np.random.default_rng(1), dtype=np.float64)
        self.run_check(emb, (3, 4, 2))

    def test_symbol_scalar(self):
        emb = SymbolScalarEmbedding((3, 4, 2), (True, False, True), rng=np.random.default_rng(2), dtype=np.float64)
        self.run_check(emb, (3, 4, 2))


class TestParamCounts:
    def test_declared_formulas(self):
        assert embedding_param_count("word", dim=16, vocab_size=509) == 8144
        assert embedding_param_count("symbol_sum", alphabet_sizes=[4] * 14, dim=2) == 112
        assert embedding_param_count("symbol_scalar", alphabet_sizes=[4] * 14) == 56

    def test_matches_allocation(self):
        rng = np.random.default_rng(0)
        vocab = Vocabulary.build([symbols_for((4, 4), 30, seed=3)], min_count=1)
        word = WordEmbedding(vocab, dim=5, rng=rng)
        assert word.param_count == embedding_param_count("word", dim=5, vocab_size=vocab.size)
        summed = SymbolSumEmbedding((3, 5), dim=4, rng=rng)
        assert summed.param_count == embedding_param_count("symbol_sum", alphabet_sizes=(3, 5), dim=4)
        scalar = SymbolScalarEmbedding((3, 5), (True, True), rng=rng)
        assert scalar.param_count == embedding_param_count("symbol_scalar", alphabet_sizes=(3, 5))

    def test_unknown_variant(self):
        with pytest.raises(InvalidAlphabet):
            embedding_param_count("bogus")

    def test_factory_dispatch(self):
        rng = np.random.default_rng(1)
        emb = make_embedding("symbol_scalar", alphabet_sizes=(2, 2), ordered=(True, True), rng=rng)
        assert emb.variant == "symbol_scalar"
        with pytest.raises(InvalidAlphabet):
            make_embedding("symbol_sum", alphabet_sizes=(2,), rng=rng)
