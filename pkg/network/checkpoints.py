"""The "TAMD" checkpoint format for classifiers and autoencoders."""

import logging
import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from core.binio import BinaryReader, pack_floats
from core.exceptions import FormatError
from network.autoencoder import Autoencoder
from network.mlp import DenseLayer, MlpClassifier

logger = logging.getLogger(__name__)

MAGIC = b"TAMD"
VERSION = 1

ACTIVATION_CODES = {"relu": 0, "tanh": 1}
_ACTIVATION_NAMES = {code: name for name, code in ACTIVATION_CODES.items()}


def encode_networks(networks: Sequence[MlpClassifier]) -> bytes:
    """Serialize one or more networks into a single TAMD document."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(networks))]
    for network in networks:
        parts.append(
            struct.pack("<II", ACTIVATION_CODES[network.activation], len(network.layers))
        )
        for layer in network.layers:
            parts.append(struct.pack("<II", layer.out_dim, layer.in_dim))
            parts.append(pack_floats(layer.weight))
            parts.append(pack_floats(layer.bias))
    return b"".join(parts)


def decode_networks(buffer: bytes, label: str = "checkpoint") -> List[MlpClassifier]:
    """Parse a TAMD document into its networks."""
    reader = BinaryReader(buffer, label)
    reader.expect_magic(MAGIC, (VERSION,))
    (count,) = reader.unpack("<I")
    networks = []
    for _ in range(count):
        code, layer_count = reader.unpack("<II")
        if code not in _ACTIVATION_NAMES:
            raise FormatError(f"{label}: unknown activation code {code}")
        layers = []
        for _ in range(layer_count):
            out_dim, in_dim = reader.unpack("<II")
            weight = reader.floats(out_dim * in_dim).reshape(out_dim, in_dim)
            layers.append(DenseLayer(weight=weight, bias=reader.floats(out_dim)))
        networks.append(MlpClassifier(layers, activation=_ACTIVATION_NAMES[code]))
    reader.expect_end()
    return networks


def _load(path: Union[str, Path], expected: int) -> List[MlpClassifier]:
    networks = decode_networks(Path(path).read_bytes(), label=str(path))
    if len(networks) != expected:
        raise FormatError(f"{path}: holds {len(networks)} networks, expected {expected}")
    return networks


def save_model(model: MlpClassifier, path: Union[str, Path]) -> None:
    """Write a classifier checkpoint."""
    Path(path).write_bytes(encode_networks([model]))
    logger.info("saved classifier %s to %s", model.sizes, path)


def load_model(path: Union[str, Path]) -> MlpClassifier:
    """Read a classifier checkpoint."""
    (model,) = _load(path, 1)
    return model


def save_autoencoder(ae: Autoencoder, path: Union[str, Path]) -> None:
    """Write an autoencoder checkpoint (encoder, then decoder)."""
    Path(path).write_bytes(encode_networks([ae.encoder, ae.decoder]))
    logger.info("saved autoencoder d=%d k=%d to %s", ae.input_dim, ae.latent_dim, path)


def load_autoencoder(path: Union[str, Path]) -> Autoencoder:
    """Read an autoencoder checkpoint."""
    encoder, decoder = _load(path, 2)
    return Autoencoder(encoder=encoder, decoder=decoder)
