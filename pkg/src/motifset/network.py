"""Sparse MLP with motif-block weight sharing.

Two weight modes exist per network:

``shared``
    Hidden-facing layers store one scalar weight per active block.  The
    forward pass never materializes the expanded matrix: inputs are pooled
    over each group of ``m`` consecutive features, multiplied by the block
    weight grid, and the block outputs are broadcast back to the ``m``
    neurons of each output block.  This is exactly equivalent to multiplying
    by the tiled neuron-granularity matrix, but the matrix product shrinks
    by ``m`` in both dimensions.

``independent``
    Weights are stored at neuron granularity and only the *mask* lives on
    the block grid, so connectivity comes and goes in ``m x m`` patches but
    every connection trains its own value.

The final weight layer always stores neuron-granularity weights (tile 1).
Hidden activations are ReLU or sigmoid; the output is a row-stabilized
softmax trained with cross-entropy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, StaleCacheError
from .topology import MotifTopology

SHARED = "shared"
INDEPENDENT = "independent"
_WEIGHT_MODES = (SHARED, INDEPENDENT)

HE_UNIFORM = "he_uniform"
HE_NORMAL = "he_normal"
_INIT_SCHEMES = (HE_UNIFORM, HE_NORMAL)

_ACTIVATIONS = ("relu", "sigmoid")

LOSS_NAME = "cross_entropy"
_PROB_FLOOR = 1e-12


def _relu(z):
    return np.maximum(z, 0.0)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class SparseLayer:
    """One weight layer of the network.

    ``weights`` is stored on a grid of ``share_tile x share_tile`` cells:
    the block grid for shared hidden layers, the neuron grid otherwise.
    ``block_mask`` always lives on the ``block_tile`` grid and is a view
    into the owning network's topology, so evolution edits both at once.
    """

    weights: np.ndarray
    bias: np.ndarray
    block_mask: np.ndarray
    block_tile: int
    share_tile: int

    @property
    def expand_factor(self) -> int:
        """Blocks-to-weights tile ratio (``m`` for independent hidden layers)."""
        return self.block_tile // self.share_tile

    def weight_mask(self) -> np.ndarray:
        """Boolean mask at the granularity of ``weights``."""
        e = self.expand_factor
        if e == 1:
            return self.block_mask
        return np.repeat(np.repeat(self.block_mask, e, axis=0), e, axis=1)


@dataclass
class Network:
    """A trainable block-sparse MLP.

    ``topology`` is owned by the network (its masks are writable) and stays
    in sync with the layers' ``block_mask`` views as evolution rewires them.
    """

    topology: MotifTopology
    layers: list[SparseLayer]
    activation: str
    weight_mode: str
    init_scheme: str

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return self.topology.layer_sizes

    @property
    def n_classes(self) -> int:
        return self.topology.layer_sizes[-1]


@dataclass
class ForwardCache:
    """Intermediate results of one forward pass.

    ``a_list[0]`` is the input batch, ``a_list[i]`` the activation after
    layer ``i - 1``, so ``a_list[-1]`` holds softmax probabilities.
    ``z_list[i]`` is the pre-activation of layer ``i``.
    """

    z_list: list[np.ndarray] = field(default_factory=list)
    a_list: list[np.ndarray] = field(default_factory=list)


@dataclass
class Gradients:
    """Loss gradients matching each layer's stored weight granularity."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]


def expand_weights(layer: SparseLayer) -> np.ndarray:
    """Neuron-granularity weight matrix equivalent to this layer."""
    e = layer.share_tile
    if e == 1:
        return layer.weights.copy()
    return np.repeat(np.repeat(layer.weights, e, axis=0), e, axis=1)


def init_network(topology: MotifTopology, activation: str = "relu",
                 init_scheme: str = HE_UNIFORM, seed: int = 0,
                 weight_mode: str = SHARED) -> Network:
    """Build a network with freshly initialized weights.

    Layer ``i`` draws from an independent generator seeded ``(seed, i)``.
    He initialization uses the full previous layer width as fan-in:
    uniform on ``(-sqrt(6 / fan_in), sqrt(6 / fan_in))`` or normal with
    std ``sqrt(2 / fan_in)``.  A full weight grid is drawn first and then
    zeroed outside the mask, so the surviving values do not depend on which
    blocks happen to be active.  Biases start at zero.
    """
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if init_scheme not in _INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {init_scheme!r}")
    if weight_mode not in _WEIGHT_MODES:
        raise ValueError(f"unknown weight mode {weight_mode!r}")

    owned = topology.copy_mutable()
    sizes = owned.layer_sizes
    layers = []
    for i in range(owned.n_weight_layers):
        block_tile = owned.tile(i)
        share_tile = block_tile if weight_mode == SHARED else 1
        rows = sizes[i] // share_tile
        cols = sizes[i + 1] // share_tile
        rng = np.random.default_rng((seed, i))
        fan_in = sizes[i]
        if init_scheme == HE_UNIFORM:
            bound = np.sqrt(6.0 / fan_in)
            raw = rng.uniform(-bound, bound, size=(rows, cols))
        else:
            raw = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(rows, cols))
        mask_b = owned.block_masks[i]
        e = block_tile // share_tile
        wmask = mask_b if e == 1 else np.repeat(np.repeat(mask_b, e, 0), e, 1)
        weights = np.where(wmask, raw, 0.0)
        layers.append(SparseLayer(
            weights=weights,
            bias=np.zeros(sizes[i + 1], dtype=np.float64),
            block_mask=mask_b,
            block_tile=block_tile,
            share_tile=share_tile,
        ))
    return Network(owned, layers, activation, weight_mode, init_scheme)


def _pool_cols(a: np.ndarray, m: int) -> np.ndarray:
    """Sum each group of ``m`` consecutive columns."""
    n, d = a.shape
    return a.reshape(n, d // m, m).sum(axis=2)


def _layer_preactivation(layer: SparseLayer, a_prev: np.ndarray) -> np.ndarray:
    if layer.share_tile > 1:
        m = layer.share_tile
        pooled = _pool_cols(a_prev, m)
        z_blocks = pooled @ layer.weights
        return np.repeat(z_blocks, m, axis=1) + layer.bias
    return a_prev @ layer.weights + layer.bias


def forward(network: Network, batch: np.ndarray) -> ForwardCache:
    """Run a batch through the network, keeping per-layer intermediates."""
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"batch must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ShapeError("batch must contain at least one sample")
    if a.shape[1] != network.layer_sizes[0]:
        raise ShapeError(
            f"batch has {a.shape[1]} features, network expects "
            f"{network.layer_sizes[0]}"
        )
    act = _relu if network.activation == "relu" else _sigmoid
    cache = ForwardCache()
    cache.a_list.append(a)
    last = len(network.layers) - 1
    for i, layer in enumerate(network.layers):
        z = _layer_preactivation(layer, a)
        cache.z_list.append(z)
        a = softmax(z) if i == last else act(z)
        cache.a_list.append(a)
    return cache


def loss(cache: ForwardCache, y_true: np.ndarray) -> float:
    """Mean cross-entropy of cached softmax outputs against one-hot targets."""
    if not cache.a_list:
        raise StaleCacheError("empty forward cache")
    probs = cache.a_list[-1]
    y = np.asarray(y_true, dtype=np.float64)
    if y.shape != probs.shape:
        raise ShapeError(
            f"targets shape {y.shape} does not match outputs {probs.shape}"
        )
    logp = np.log(np.maximum(probs, _PROB_FLOOR))
    return float(-(y * logp).sum(axis=1).mean())


def _check_cache(network: Network, cache: ForwardCache):
    n_layers = len(network.layers)
    if len(cache.z_list) != n_layers or len(cache.a_list) != n_layers + 1:
        raise StaleCacheError(
            f"cache holds {len(cache.z_list)} layers, network has {n_layers}"
        )
    for i, layer in enumerate(network.layers):
        if cache.a_list[i].shape[1] != network.layer_sizes[i]:
            raise StaleCacheError(
                f"cache activation {i} has width {cache.a_list[i].shape[1]}, "
                f"network expects {network.layer_sizes[i]}"
            )


def backward(network: Network, cache: ForwardCache,
             y_true: np.ndarray) -> Gradients:
    """Backpropagate cross-entropy gradients through the cached pass.

    The softmax/cross-entropy pair gives the output delta ``probs - y``
    directly.  Shared layers accumulate block gradients by pooling: with
    ``P`` the column-pooled input and ``Q`` the column-pooled delta,
    ``dW_block = P.T @ Q / n`` on the active blocks.  All gradients are
    means over the batch.
    """
    _check_cache(network, cache)
    probs = cache.a_list[-1]
    y = np.asarray(y_true, dtype=np.float64)
    if y.shape != probs.shape:
        raise ShapeError(
            f"targets shape {y.shape} does not match outputs {probs.shape}"
        )
    n = probs.shape[0]
    weight_grads: list[np.ndarray | None] = [None] * len(network.layers)
    bias_grads: list[np.ndarray | None] = [None] * len(network.layers)

    delta = probs - y
    for i in range(len(network.layers) - 1, -1, -1):
        layer = network.layers[i]
        a_prev = cache.a_list[i]
        if layer.share_tile > 1:
            m = layer.share_tile
            p = _pool_cols(a_prev, m)
            q = _pool_cols(delta, m)
            gw = (p.T @ q) / n
            gw = np.where(layer.block_mask, gw, 0.0)
        else:
            gw = (a_prev.T @ delta) / n
            gw = np.where(layer.weight_mask(), gw, 0.0)
        bias_grads[i] = delta.mean(axis=0)
        weight_grads[i] = gw
        if i > 0:
            if layer.share_tile > 1:
                m = layer.share_tile
                q = _pool_cols(delta, m)
                da = np.repeat(q @ layer.weights.T, m, axis=1)
            else:
                da = delta @ layer.weights.T
            if network.activation == "relu":
                deriv = (cache.z_list[i - 1] > 0).astype(np.float64)
            else:
                a_mid = cache.a_list[i]
                deriv = a_mid * (1.0 - a_mid)
            delta = da * deriv
    return Gradients(weight_grads, bias_grads)  # type: ignore[arg-type]


def sgd_step(network: Network, grads: Gradients,
             learning_rate: float) -> Network:
    """In-place gradient descent update; returns the same network."""
    if len(grads.weight_grads) != len(network.layers):
        raise ShapeError(
            f"gradients cover {len(grads.weight_grads)} layers, network has "
            f"{len(network.layers)}"
        )
    for layer, gw, gb in zip(network.layers, grads.weight_grads,
                             grads.bias_grads):
        if gw.shape != layer.weights.shape:
            raise ShapeError(
                f"weight gradient shape {gw.shape} does not match layer "
                f"shape {layer.weights.shape}"
            )
        layer.weights -= learning_rate * gw
        layer.bias -= learning_rate * gb
    return network


def predict_accuracy(network: Network, x: np.ndarray, y_true: np.ndarray,
                     chunk_size: int = 8192) -> float:
    """Fraction of samples whose argmax output matches the one-hot target.

    Ties in the output probabilities resolve to the lowest class index on
    both sides of the comparison.  Large inputs are processed in chunks.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y_true)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"need a non-empty 2-D sample array, got {x.shape}")
    if y.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ShapeError(
            f"targets shape {y.shape} does not match {x.shape[0]} samples"
        )
    if y.shape[1] != network.n_classes:
        raise ShapeError(
            f"targets have {y.shape[1]} classes, network has "
            f"{network.n_classes}"
        )
    true_idx = np.argmax(y, axis=1)
    hits = 0
    for start in range(0, x.shape[0], chunk_size):
        stop = min(start + chunk_size, x.shape[0])
        cache = forward(network, x[start:stop])
        pred = np.argmax(cache.a_list[-1], axis=1)
        hits += int((pred == true_idx[start:stop]).sum())
    return hits / x.shape[0]
