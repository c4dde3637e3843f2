"""Versioned binary model container.

Layout: 8-byte magic, little-endian u32 format version, u64 header
length, canonical JSON header (sorted keys, no whitespace), then the raw
little-endian tensor payloads in the order listed by the header.  The
header carries everything needed to rebuild the network: architecture
config, variable specs, labeling config, vocabulary, the digest of the
partition file the model was trained against, and training metadata.
Loading and re-saving is byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from .embeddings import Vocabulary
from .exceptions import ConfigError
from .labeling import LabelingConfig
from .neuralcore.network import EventNetwork, NetworkConfig
from .partitioning import VariableSpec
from .utils import atomic_write_bytes, canonical_json

MAGIC = b"SYMEVENT"
VERSION = 1


@dataclass
class Checkpoint:
    network_config: NetworkConfig
    variables: list
    labeling: LabelingConfig
    vocabulary: Vocabulary
    tensors: dict
    partition_digest: str
    metadata: dict

    def to_bytes(self):
        tensor_meta = []
        payloads = []
        for name, arr in self.tensors.items():
            arr = np.ascontiguousarray(arr)
            le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            tensor_meta.append({"name": name, "shape": list(arr.shape), "dtype": le.dtype.str})
            payloads.append(le.tobytes())
        header = {
            "network": self.network_config.to_dict(),
            "variables": [v.to_dict() for v in self.variables],
            "labeling": asdict(self.labeling),
            "vocabulary": self.vocabulary.to_dict() if self.vocabulary is not None else None,
            "partition_digest": self.partition_digest,
            "metadata": self.metadata,
            "tensors": tensor_meta,
        }
        hj = canonical_json(header).encode("utf-8")
        return b"".join([MAGIC, struct.pack("<I", VERSION), struct.pack("<Q", len(hj)), hj, *payloads])

    @classmethod
    def from_bytes(cls, blob):
        if blob[: len(MAGIC)] != MAGIC:
            raise ConfigError("not a model checkpoint (bad magic)")
        offset = len(MAGIC)
        (version,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if version != VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        (hlen,) = struct.unpack_from("<Q", blob, offset)
        offset += 8
        header = json.loads(blob[offset : offset + hlen].decode("utf-8"))
        offset += hlen
        tensors = {}
        for meta in header["tensors"]:
            dtype = np.dtype(meta["dtype"])
            count = int(np.prod(meta["shape"], dtype=np.int64)) if meta["shape"] else 1
            nbytes = dtype.itemsize * count
            arr = np.frombuffer(blob[offset : offset + nbytes], dtype=dtype).reshape(meta["shape"]).copy()
            tensors[meta["name"]] = arr
            offset += nbytes
        if offset != len(blob):
            raise ConfigError(f"checkpoint has {len(blob) - offset} trailing bytes")
        vocab = header["vocabulary"]
        return cls(
            network_config=NetworkConfig.from_dict(header["network"]),
            variables=[VariableSpec.from_dict(d) for d in header["variables"]],
            labeling=LabelingConfig(**header["labeling"]),
            vocabulary=Vocabulary.from_dict(vocab) if vocab is not None else None,
            tensors=tensors,
            partition_digest=header["partition_digest"],
            metadata=header["metadata"],
        )

    def save(self, path):
        atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    @classmethod
    def from_network(cls, network, variables, labeling, vocabulary, partition_digest, metadata):
        tensors = {name: p.copy() for name, p, _ in network.param_items()}
        return cls(
            network_config=network.config,
            variables=list(variables),
            labeling=labeling,
            vocabulary=vocabulary,
            tensors=tensors,
            partition_digest=partition_digest,
            metadata=dict(metadata),
        )

    def build_network(self):
        """Reconstruct the network and load the stored parameters into it."""
        alphabet_sizes = [v.alphabet_size for v in self.variables]
        ordered = [v.ordered for v in self.variables]
        network = EventNetwork(
            self.network_config,
            alphabet_sizes=alphabet_sizes,
            ordered=ordered,
            vocabulary=self.vocabulary,
        )
        stored = set(self.tensors)
        declared = {name for name, _, _ in network.param_items()}
        if stored != declared:
            raise ConfigError(
                f"checkpoint tensors do not match architecture: missing {sorted(declared - stored)}, "
                f"unexpected {sorted(stored - declared)}"
            )
        for name, p, _ in network.param_items():
            arr = self.tensors[name]
            if tuple(arr.shape) != tuple(p.shape):
                raise ConfigError(f"tensor {name}: shape {arr.shape} != expected {p.shape}")
            p[...] = arr
        return network
