"""Sequence classifier assembled from an embedding, an encoder, and a head.

The network scores one symbolized window at a time: embed the (steps,
variables) symbol matrix, optionally chop the embedded sequence into
contiguous chunks encoded independently and max-pooled, then map the
pooled feature through dense layers to a sigmoid probability.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..exceptions import ConfigError, EmptySequence
from ..embeddings import EMBEDDING_VARIANTS, make_embedding
from .layers import (
    LSTM,
    IRNN,
    Conv1D,
    MaxPool1D,
    GlobalMaxPool,
    Dense,
    sigmoid,
    relu_forward,
    relu_backward,
)

ENCODER_KINDS = ("lstm", "irnn", "conv1d", "maxpool1d", "global_maxpool")
TERMINAL_KINDS = ("lstm", "irnn", "global_maxpool")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and optimizer settings.

    encoder entries are dicts with a ``kind`` key: lstm/irnn take
    ``units``; conv1d takes ``filters``, ``width``, ``stride``;
    maxpool1d takes ``size``, ``stride``; global_maxpool is bare.
    ``head`` lists hidden dense widths; a final single-unit dense plus
    sigmoid is always appended.  ``chop`` > 1 encodes that many
    contiguous sub-sequences independently and max-pools their features.
    """

    embedding: str
    encoder: tuple
    head: tuple = ()
    embed_dim: int = None
    chop: int = 1
    seed: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dtype: str = "float32"
    init_scale: float = None

    def __post_init__(self):
        if self.embedding not in EMBEDDING_VARIANTS:
            raise ConfigError(f"unknown embedding {self.embedding!r}; expected one of {EMBEDDING_VARIANTS}")
        if self.embedding != "symbol_scalar":
            if not isinstance(self.embed_dim, int) or self.embed_dim < 1:
                raise ConfigError(f"embedding {self.embedding!r} needs embed_dim >= 1")
        object.__setattr__(self, "encoder", tuple(dict(e) for e in self.encoder))
        object.__setattr__(self, "head", tuple(int(h) for h in self.head))
        if not self.encoder:
            raise ConfigError("encoder stack is empty")
        for entry in self.encoder:
            if entry.get("kind") not in ENCODER_KINDS:
                raise ConfigError(f"unknown encoder layer {entry!r}")
        if self.encoder[-1]["kind"] not in TERMINAL_KINDS:
            raise ConfigError(f"encoder must end in one of {TERMINAL_KINDS} to yield a fixed feature")
        if any(e["kind"] == "global_maxpool" for e in self.encoder[:-1]):
            raise ConfigError("global_maxpool may only terminate the encoder")
        if any(h < 1 for h in self.head):
            raise ConfigError("head widths must be >= 1")
        if not isinstance(self.chop, int) or self.chop < 1:
            raise ConfigError(f"chop must be an int >= 1, got {self.chop!r}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")

    def to_dict(self):
        d = asdict(self)
        d["encoder"] = [dict(e) for e in self.encoder]
        d["head"] = list(self.head)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["encoder"] = tuple(dict(e) for e in d["encoder"])
        d["head"] = tuple(d.get("head", ()))
        return cls(**d)


def _build_encoder_layer(entry, in_dim, rng, dtype):
    kind = entry["kind"]
    if kind == "lstm":
        layer = LSTM(in_dim, entry["units"], rng, dtype=dtype)
        return layer, layer.out_dim
    if kind == "irnn":
        layer = IRNN(in_dim, entry["units"], rng, dtype=dtype)
        return layer, layer.out_dim
    if kind == "conv1d":
        layer = Conv1D(in_dim, entry["filters"], entry["width"], entry.get("stride", 1), rng, dtype=dtype)
        return layer, layer.out_dim
    if kind == "maxpool1d":
        return MaxPool1D(entry["size"], entry.get("stride", entry["size"])), in_dim
    if kind == "global_maxpool":
        return GlobalMaxPool(), in_dim
    raise ConfigError(f"unknown encoder layer {entry!r}")


class EventNetwork:
    """Trainable scorer for symbolized windows.

    Parameter construction consumes the seeded generator in a fixed
    order (embedding, encoder layers, head layers), so a config seed
    pins every initial value.
    """

    def __init__(self, config, alphabet_sizes=None, ordered=None, vocabulary=None):
        self.config = config
        self.dtype = np.dtype(config.dtype)
        rng = np.random.default_rng(config.seed)
        self.embedding = make_embedding(
            config.embedding,
            alphabet_sizes=alphabet_sizes,
            ordered=ordered,
            dim=config.embed_dim,
            vocabulary=vocabulary,
            rng=rng,
            scale=config.init_scale,
            dtype=self.dtype,
        )
        dim = self.embedding.out_dim
        self.encoder = []
        for entry in config.encoder:
            layer, dim = _build_encoder_layer(entry, dim, rng, self.dtype)
            self.encoder.append(layer)
        self.feature_dim = dim
        self.head_layers = []
        for width in config.head:
            self.head_layers.append(Dense(dim, width, rng, dtype=self.dtype))
            dim = width
        self.head_layers.append(Dense(dim, 1, rng, dtype=self.dtype))

    def param_items(self):
        items = [(f"embedding.{n}", p, g) for n, p, g in self.embedding.param_items()]
        for i, layer in enumerate(self.encoder):
            if hasattr(layer, "param_items"):
                items.extend((f"encoder.{i}.{n}", p, g) for n, p, g in layer.param_items())
        for i, layer in enumerate(self.head_layers):
            items.extend((f"head.{i}.{n}", p, g) for n, p, g in layer.param_items())
        return items

    def zero_grads(self):
        for _, _, g in self.param_items():
            g[...] = 0.0

    def project_embeddings(self):
        """Restore embedding ordering constraints after an optimizer step."""
        if hasattr(self.embedding, "project"):
            self.embedding.project()

    @property
    def param_count(self):
        return sum(p.size for _, p, _ in self.param_items())

    def _chunk_starts(self, n_steps):
        chunk = -(-n_steps // self.config.chop)  # ceil
        return chunk, list(range(0, n_steps, chunk))

    def forward(self, symbols):
        """Score one window; returns (probability, cache for backward)."""
        emb, emb_cache = self.embedding.forward(symbols)
        n_steps = emb.shape[0]
        if n_steps == 0:
            raise EmptySequence("cannot score an empty window")
        chunk, starts = self._chunk_starts(n_steps)
        feats = []
        enc_caches = []
        enc_shapes = []
        for s in starts:
            x = emb[s : s + chunk]
            caches = []
            for layer in self.encoder:
                x, c = layer.forward(x)
                caches.append(c)
            feats.append(x[-1])
            enc_caches.append(caches)
            enc_shapes.append(x.shape)
        stacked = np.stack(feats)
        pooled = stacked.max(axis=0)
        amax = stacked.argmax(axis=0)  # ties: earliest chunk wins
        z = pooled[None, :]
        head_trace = []
        for layer in self.head_layers[:-1]:
            z, c = layer.forward(z)
            head_trace.append(("dense", layer, c))
            z, mask = relu_forward(z)
            head_trace.append(("relu", None, mask))
        z, c = self.head_layers[-1].forward(z)
        head_trace.append(("dense", self.head_layers[-1], c))
        prob = float(sigmoid(z)[0, 0])
        cache = (emb_cache, n_steps, emb.shape[1], starts, chunk, enc_caches, enc_shapes, amax, head_trace, prob)
        return prob, cache

    def backward(self, dprob, cache):
        """Accumulate parameter gradients given dloss/dprobability."""
        emb_cache, n_steps, emb_dim, starts, chunk, enc_caches, enc_shapes, amax, head_trace, prob = cache
        dz = np.array([[dprob * prob * (1.0 - prob)]], dtype=self.dtype)
        for kind, layer, c in reversed(head_trace):
            if kind == "dense":
                dz = layer.backward(dz, c)
            else:
                dz = relu_backward(dz, c)
        dpooled = dz[0]
        dstacked = np.zeros((len(starts), dpooled.size), dtype=self.dtype)
        dstacked[amax, np.arange(dpooled.size)] = dpooled
        demb = np.zeros((n_steps, emb_dim), dtype=self.dtype)
        for ci, s in enumerate(starts):
            dx = np.zeros(enc_shapes[ci], dtype=self.dtype)
            dx[-1] = dstacked[ci]
            for layer, c in zip(reversed(self.encoder), reversed(enc_caches[ci])):
                dx = layer.backward(dx, c)
            demb[s : s + chunk] = dx
        self.embedding.backward(demb, emb_cache)

    def score(self, symbols):
        return self.forward(symbols)[0]
