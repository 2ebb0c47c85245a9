"""Versioned binary network checkpoints with bit-exact round trips.

Layout: 8-byte magic, u32 version, length-prefixed JSON metadata
(activation, weight mode, init scheme, motif size, density record, layer
sizes), a length-prefixed ``motif-topology v1`` text section, then per
layer the raw float64 little-endian weight matrix and bias vector.  All
shapes are implied by the metadata and topology, so the payload carries
only data.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointFormatError
from .network import Network, SparseLayer
from .topology import export_topology, parse_topology

CHECKPOINT_MAGIC = b"MSETCKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(network: Network, path):
    """Serialize a network (topology, weights, biases) to ``path``."""
    topo = network.topology
    meta = {
        "activation": network.activation,
        "weight_mode": network.weight_mode,
        "init_scheme": network.init_scheme,
        "motif_size": topo.motif_size,
        "epsilon": topo.epsilon,
        "density_mode": topo.density_mode,
        "layer_sizes": list(topo.layer_sizes),
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    topo_bytes = export_topology(topo).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<Q", len(topo_bytes)))
        f.write(topo_bytes)
        for layer in network.layers:
            f.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def _take(raw: bytes, offset: int, count: int, what: str):
    if offset + count > len(raw):
        raise CheckpointFormatError(
            f"checkpoint ends inside {what} (need {count} bytes at "
            f"offset {offset}, file has {len(raw)})"
        )
    return raw[offset:offset + count], offset + count


def load_checkpoint(path) -> Network:
    """Reconstruct a network from a checkpoint file, bit for bit."""
    with open(path, "rb") as f:
        raw = f.read()
    head, offset = _take(raw, 0, len(CHECKPOINT_MAGIC), "magic")
    if head != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {head!r}")
    chunk, offset = _take(raw, offset, 4, "version")
    (version,) = struct.unpack("<I", chunk)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported checkpoint version {version}"
        )
    chunk, offset = _take(raw, offset, 4, "metadata length")
    (meta_len,) = struct.unpack("<I", chunk)
    chunk, offset = _take(raw, offset, meta_len, "metadata")
    try:
        meta = json.loads(chunk.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable metadata") from exc
    chunk, offset = _take(raw, offset, 8, "topology length")
    (topo_len,) = struct.unpack("<Q", chunk)
    chunk, offset = _take(raw, offset, topo_len, "topology text")
    topology = parse_topology(
        chunk.decode(),
        motif_size=meta.get("motif_size"),
        epsilon=meta.get("epsilon"),
        density_mode=meta.get("density_mode"),
    ).copy_mutable()

    if tuple(meta["layer_sizes"]) != topology.layer_sizes:
        raise CheckpointFormatError(
            f"{path}: metadata layer sizes {meta['layer_sizes']} disagree "
            f"with topology {list(topology.layer_sizes)}"
        )

    weight_mode = meta["weight_mode"]
    sizes = topology.layer_sizes
    layers = []
    for i in range(topology.n_weight_layers):
        block_tile = topology.tile(i)
        share_tile = block_tile if weight_mode == "shared" else 1
        rows = sizes[i] // share_tile
        cols = sizes[i + 1] // share_tile
        chunk, offset = _take(raw, offset, rows * cols * 8,
                              f"layer {i} weights")
        weights = np.frombuffer(chunk, dtype="<f8").reshape(rows, cols).copy()
        chunk, offset = _take(raw, offset, sizes[i + 1] * 8, f"layer {i} bias")
        bias = np.frombuffer(chunk, dtype="<f8").copy()
        layers.append(SparseLayer(
            weights=weights,
            bias=bias,
            block_mask=topology.block_masks[i],
            block_tile=block_tile,
            share_tile=share_tile,
        ))
    if offset != len(raw):
        raise CheckpointFormatError(
            f"{path}: {len(raw) - offset} trailing bytes after last layer"
        )
    return Network(topology, layers, meta["activation"], weight_mode,
                   meta["init_scheme"])
