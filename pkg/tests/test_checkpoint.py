"""Binary checkpoint container: round trips and integrity checks."""

import numpy as np
import pytest

from symevent.checkpoint import MAGIC, Checkpoint
from symevent.exceptions import ConfigError
from symevent.labeling import LabelingConfig
from symevent.neuralcore import EventNetwork, NetworkConfig
from symevent.partitioning import VariableSpec


def make_variables():
    return [
        VariableSpec(name="temp", kind="continuous", splits=(0.5, 1.5, 2.5), method="quantile"),
        VariableSpec(name="mode", kind="categorical", categories=("a", "b", "c")),
    ]


def make_checkpoint(seed=0):
    variables = make_variables()
    config = NetworkConfig(
        embedding="symbol_scalar",
        encoder=({"kind": "lstm", "units": 3},),
        seed=seed,
        dtype="float64",
    )
    network = EventNetwork(
        config,
        alphabet_sizes=[v.alphabet_size for v in variables],
        ordered=[v.ordered for v in variables],
    )
    return network, Checkpoint.from_network(
        network,
        variables=variables,
        labeling=LabelingConfig(horizon=3, history=2),
        vocabulary=None,
        partition_digest="abc123",
        metadata={"seed": seed, "epochs_run": 4},
    )


class TestRoundTrip:
    def test_bytes_survive_parse_and_reserialize(self):
        _, ckpt = make_checkpoint()
        blob = ckpt.to_bytes()
        again = Checkpoint.from_bytes(blob).to_bytes()
        assert again == blob

    def test_file_round_trip(self, tmp_path):
        _, ckpt = make_checkpoint()
        path = tmp_path / "model.bin"
        ckpt.save(path)
        loaded = Checkpoint.load(path)
        assert loaded.to_bytes() == ckpt.to_bytes()

    def test_fields_preserved(self):
        _, ckpt = make_checkpoint(seed=5)
        loaded = Checkpoint.from_bytes(ckpt.to_bytes())
        assert loaded.network_config == ckpt.network_config
        assert loaded.variables == ckpt.variables
        assert loaded.labeling == ckpt.labeling
        assert loaded.partition_digest == "abc123"
        assert loaded.metadata == {"seed": 5, "epochs_run": 4}
        for name, arr in ckpt.tensors.items():
            np.testing.assert_array_equal(loaded.tensors[name], arr)
            assert loaded.tensors[name].dtype == arr.dtype

    def test_rebuilt_network_scores_identically(self):
        network, ckpt = make_checkpoint(seed=1)
        rebuilt = Checkpoint.from_bytes(ckpt.to_bytes()).build_network()
        rng = np.random.default_rng(2)
        for _ in range(5):
            window = rng.integers(0, [4, 3], size=(6, 2))
            assert rebuilt.score(window) == network.score(window)

    def test_snapshot_is_a_copy(self):
        network, ckpt = make_checkpoint()
        name, p, _ = network.param_items()[0]
        before = ckpt.tensors[name].copy()
        p += 1.0
        np.testing.assert_array_equal(ckpt.tensors[name], before)


class TestIntegrity:
    def test_bad_magic(self):
        _, ckpt = make_checkpoint()
        blob = b"NOTMODEL" + ckpt.to_bytes()[len(MAGIC):]
        with pytest.raises(ConfigError):
            Checkpoint.from_bytes(blob)

    def test_unsupported_version(self):
        _, ckpt = make_checkpoint()
        blob = bytearray(ckpt.to_bytes())
        blob[len(MAGIC)] = 99
        with pytest.raises(ConfigError):
            Checkpoint.from_bytes(bytes(blob))

    def test_trailing_garbage(self):
        _, ckpt = make_checkpoint()
        with pytest.raises(ConfigError):
            Checkpoint.from_bytes(ckpt.to_bytes() + b"\x00")

    def test_missing_tensor_rejected_on_rebuild(self):
        _, ckpt = make_checkpoint()
        dropped = next(iter(ckpt.tensors))
        del ckpt.tensors[dropped]
        with pytest.raises(ConfigError, match="missing"):
            Checkpoint.from_bytes(ckpt.to_bytes()).build_network()

    def test_wrong_shape_rejected_on_rebuild(self):
        _, ckpt = make_checkpoint()
        name = next(iter(ckpt.tensors))
        ckpt.tensors[name] = np.zeros(ckpt.tensors[name].size + 1)
        with pytest.raises(ConfigError, match="shape|unexpected"):
            Checkpoint.from_bytes(ckpt.to_bytes()).build_network()
