"""Small validation and serialization helpers shared across modules."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .exceptions import DataError, ShapeMismatch


def as_1d_float(values, name="values"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_1d_int(values, name="values"):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ShapeMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr.astype(np.int64)


def check_binary(values, name="labels"):
    arr = as_1d_int(values, name)
    bad = np.setdiff1d(np.unique(arr), [0, 1])
    if bad.size:
        raise DataError(f"{name} must be 0/1, found {bad.tolist()}")
    return arr


def check_same_length(*pairs):
    """pairs: (name, sequence). Raises if lengths differ."""
    lengths = {name: len(seq) for name, seq in pairs}
    if len(set(lengths.values())) > 1:
        raise ShapeMismatch(f"length mismatch: {lengths}")


class ParamStore:
    """Named parameter arrays with matching gradient buffers.

    Parameters are mutated in place by the optimizer; gradient buffers are
    owned here and reset through :meth:`zero_grads`.
    """

    def __init__(self):
        self._params = {}
        self._grads = {}

    def add_param(self, name, value):
        arr = np.asarray(value)
        self._params[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def param(self, name):
        return self._params[name]

    def grad(self, name):
        return self._grads[name]

    def param_items(self):
        """(name, param, grad) triples in insertion order."""
        return [(n, self._params[n], self._grads[n]) for n in self._params]

    def zero_grads(self):
        for g in self._grads.values():
            g[...] = 0.0

    @property
    def param_count(self):
        return sum(p.size for _, p, _ in self.param_items())


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_bytes(path, data: bytes):
    """Write via a temp file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))
