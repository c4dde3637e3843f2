"""Trainable embeddings over symbolized time steps.

Three schemes map the per-step symbol tuple to a continuous vector:

* ``word``: each distinct symbol tuple is one vocabulary token with its
  own dense vector; rare tokens collapse into a trainable OOV row.
* ``symbol_sum``: each variable owns a dense table; step vector is the
  sum of the looked-up per-variable vectors.
* ``symbol_scalar``: each variable owns one scalar per symbol; step
  vector is the concatenation of the looked-up scalars, and rows of
  ordered variables are re-sorted ascending after every optimizer step
  so the scalars keep the symbols' magnitude order.

All schemes expose ``forward(symbols) -> (output, cache)`` on an
(steps, variables) int matrix and ``backward(dout, cache)`` accumulating
into gradient buffers, so the network treats them uniformly.
"""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyDataset, IndexOutOfRange, InvalidAlphabet, ShapeMismatch
from .utils import ParamStore

EMBEDDING_VARIANTS = ("word", "symbol_sum", "symbol_scalar")


class Vocabulary:
    """Frequency-filtered map from symbol tuples to token indices.

    Kept words get indices 0..n-1 in lexicographic order; the OOV token
    sits at index n and absorbs rare training words and anything unseen
    at lookup time.  ``size`` includes the OOV token.
    """

    def __init__(self, word_to_index, oov_index, min_count=2, min_rel_freq=None):
        self.word_to_index = {tuple(int(x) for x in w): int(i) for w, i in word_to_index.items()}
        self.oov_index = int(oov_index)
        self.min_count = min_count
        self.min_rel_freq = min_rel_freq
        indices = sorted(self.word_to_index.values())
        if indices != list(range(len(indices))) or self.oov_index != len(indices):
            raise InvalidAlphabet("vocabulary indices must be 0..n-1 with OOV at n")
        arities = {len(w) for w in self.word_to_index}
        if len(arities) > 1:
            raise InvalidAlphabet(f"words disagree on arity: {sorted(arities)}")

    @property
    def size(self):
        return len(self.word_to_index) + 1

    @classmethod
    def build(cls, clips, min_count=2, min_rel_freq=None):
        """Count per-step symbol tuples over training clips and filter.

        A word is kept when its count is at least ``min_count`` and, if
        ``min_rel_freq`` is given, its count is at least that fraction
        of all steps.
        """
        counts = {}
        total = 0
        for clip in clips:
            arr = np.asarray(clip, dtype=np.int64)
            if arr.ndim != 2:
                raise ShapeMismatch(f"clip must be (steps, variables), got shape {arr.shape}")
            for row in arr:
                word = tuple(int(x) for x in row)
                counts[word] = counts.get(word, 0) + 1
                total += 1
        if total == 0:
            raise EmptyDataset("no steps to build a vocabulary from")
        floor = min_count
        if min_rel_freq is not None:
            floor = max(floor, min_rel_freq * total)
        kept = sorted(w for w, c in counts.items() if c >= floor)
        word_to_index = {w: i for i, w in enumerate(kept)}
        return cls(word_to_index, oov_index=len(kept), min_count=min_count, min_rel_freq=min_rel_freq)

    def lookup_steps(self, symbols):
        """Token index per step of an (steps, variables) symbol matrix."""
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"expected (steps, variables), got shape {arr.shape}")
        get = self.word_to_index.get
        oov = self.oov_index
        return np.fromiter((get(tuple(row), oov) for row in arr.tolist()), dtype=np.int64, count=arr.shape[0])

    def to_dict(self):
        pairs = sorted(self.word_to_index.items(), key=lambda kv: kv[1])
        return {
            "words": [[list(w), i] for w, i in pairs],
            "oov_index": self.oov_index,
            "min_count": self.min_count,
            "min_rel_freq": self.min_rel_freq,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            {tuple(w): i for w, i in d["words"]},
            oov_index=d["oov_index"],
            min_count=d.get("min_count", 2),
            min_rel_freq=d.get("min_rel_freq"),
        )


def _check_symbols(symbols, alphabet_sizes):
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != len(alphabet_sizes):
        raise ShapeMismatch(f"expected (steps, {len(alphabet_sizes)}), got shape {arr.shape}")
    for i, s in enumerate(alphabet_sizes):
        col = arr[:, i]
        if col.size and (col.min() < 0 or col.max() >= s):
            raise IndexOutOfRange(f"variable {i}: symbol outside [0, {s})")
    return arr


class WordEmbedding(ParamStore):
    """One dense vector per vocabulary token, OOV row included."""

    variant = "word"

    def __init__(self, vocabulary, dim, rng, scale=0.05, dtype=np.float32):
        super().__init__()
        self.vocabulary = vocabulary
        self.dim = int(dim)
        table = rng.uniform(-scale, scale, (vocabulary.size, self.dim))
        self.table = self.add_param("table", table.astype(dtype))

    @property
    def out_dim(self):
        return self.dim

    def forward(self, symbols):
        idx = self.vocabulary.lookup_steps(symbols)
        return self.table[idx], idx

    def backward(self, dout, cache):
        idx = cache
        if dout.shape != (idx.size, self.dim):
            raise ShapeMismatch(f"upstream shape {dout.shape} != ({idx.size}, {self.dim})")
        np.add.at(self.grad("table"), idx, dout)


class SymbolSumEmbedding(ParamStore):
    """Per-variable dense tables, summed across variables at each step."""

    variant = "symbol_sum"

    def __init__(self, alphabet_sizes, dim, rng, scale=0.05, dtype=np.float32):
        super().__init__()
        self.alphabet_sizes = tuple(int(s) for s in alphabet_sizes)
        self.dim = int(dim)
        self.tables = [
            self.add_param(f"var{i}", rng.uniform(-scale, scale, (s, self.dim)).astype(dtype))
            for i, s in enumerate(self.alphabet_sizes)
        ]

    @property
    def out_dim(self):
        return self.dim

    def forward(self, symbols):
        arr = _check_symbols(symbols, self.alphabet_sizes)
        out = np.zeros((arr.shape[0], self.dim), dtype=self.tables[0].dtype)
        for i, table in enumerate(self.tables):
            out += table[arr[:, i]]
        return out, arr

    def backward(self, dout, cache):
        arr = cache
        if dout.shape != (arr.shape[0], self.dim):
            raise ShapeMismatch(f"upstream shape {dout.shape} != ({arr.shape[0]}, {self.dim})")
        for i in range(len(self.tables)):
            np.add.at(self.grad(f"var{i}"), arr[:, i], dout)


class SymbolScalarEmbedding(ParamStore):
    """One scalar per symbol per variable, concatenated across variables.

    Rows of ordered variables start as an ascending grid and are kept
    sorted by :meth:`project`; unordered rows start as a permuted grid
    and are never touched by the projection.
    """

    variant = "symbol_scalar"

    def __init__(self, alphabet_sizes, ordered, rng, scale=1.0, dtype=np.float32):
        super().__init__()
        self.alphabet_sizes = tuple(int(s) for s in alphabet_sizes)
        self.ordered = tuple(bool(o) for o in ordered)
        if len(self.ordered) != len(self.alphabet_sizes):
            raise ShapeMismatch("ordered flags must match variable count")
        self.rows = []
        for i, s in enumerate(self.alphabet_sizes):
            grid = np.linspace(-scale, scale, s)
            if not self.ordered[i]:
                grid = rng.permutation(grid)
            self.rows.append(self.add_param(f"var{i}", grid.astype(dtype)))

    @property
    def out_dim(self):
        return len(self.alphabet_sizes)

    def forward(self, symbols):
        arr = _check_symbols(symbols, self.alphabet_sizes)
        out = np.empty((arr.shape[0], len(self.rows)), dtype=self.rows[0].dtype)
        for i, row in enumerate(self.rows):
            out[:, i] = row[arr[:, i]]
        return out, arr

    def backward(self, dout, cache):
        arr = cache
        if dout.shape != (arr.shape[0], len(self.rows)):
            raise ShapeMismatch(f"upstream shape {dout.shape} != ({arr.shape[0]}, {len(self.rows)})")
        for i in range(len(self.rows)):
            np.add.at(self.grad(f"var{i}"), arr[:, i], dout[:, i])

    def project(self):
        """Re-sort ordered rows ascending in place; call after every step."""
        for i, row in enumerate(self.rows):
            if self.ordered[i]:
                row[...] = np.sort(row, kind="stable")


def embedding_param_count(variant, alphabet_sizes=None, dim=None, vocab_size=None):
    """Trainable parameter count of a scheme from its declared sizes."""
    if variant == "word":
        return int(dim) * int(vocab_size)
    if variant == "symbol_sum":
        return int(dim) * int(sum(alphabet_sizes))
    if variant == "symbol_scalar":
        return int(sum(alphabet_sizes))
    raise InvalidAlphabet(f"unknown variant {variant!r}; expected one of {EMBEDDING_VARIANTS}")


def make_embedding(variant, *, alphabet_sizes=None, ordered=None, dim=None, vocabulary=None,
                   rng=None, scale=None, dtype=np.float32):
    """Construct an embedding scheme by variant name."""
    if variant == "word":
        if vocabulary is None or dim is None:
            raise InvalidAlphabet("word variant needs a vocabulary and dim")
        return WordEmbedding(vocabulary, dim, rng, scale=0.05 if scale is None else scale, dtype=dtype)
    if variant == "symbol_sum":
        if alphabet_sizes is None or dim is None:
            raise InvalidAlphabet("symbol_sum variant needs alphabet_sizes and dim")
        return SymbolSumEmbedding(alphabet_sizes, dim, rng, scale=0.05 if scale is None else scale, dtype=dtype)
    if variant == "symbol_scalar":
        if alphabet_sizes is None or ordered is None:
            raise InvalidAlphabet("symbol_scalar variant needs alphabet_sizes and ordered flags")
        return SymbolScalarEmbedding(alphabet_sizes, ordered, rng, scale=1.0 if scale is None else scale, dtype=dtype)
    raise InvalidAlphabet(f"unknown variant {variant!r}; expected one of {EMBEDDING_VARIANTS}")
