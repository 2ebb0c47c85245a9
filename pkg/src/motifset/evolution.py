"""Between-epoch topology evolution: prune weak blocks, regrow at random.

Two rewiring modes are provided:

``magnitude_set``
    The classic prune-and-regrow cycle adapted to block granularity.  Per
    layer, the fraction ``zeta`` of active blocks with the smallest
    magnitude is deactivated (weights zeroed, mask cleared) and the same
    number of blocks is regrown uniformly at random among the inactive
    positions, with freshly initialized weights.  Block magnitude is the
    absolute weight for shared layers and the mean absolute weight over the
    tile for independent layers.

``listing4``
    A literal noise-driven variant: every stored active weight is zeroed
    independently with probability ``epsilon_prune``, then Gaussian noise
    scaled by ``noise_scale`` is added to every active position (which can
    resurrect just-zeroed weights).  The mask is never modified.

Both modes draw from a generator seeded ``(rng_seed, event_index,
layer_index)`` so every evolution event of every layer is independently
reproducible.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SaturationError
from .network import HE_UNIFORM, Network, SparseLayer

MAGNITUDE_SET = "magnitude_set"
LISTING4 = "listing4"
_MODES = (MAGNITUDE_SET, LISTING4)


@dataclass(frozen=True)
class EvolutionPolicy:
    """Parameters steering topology evolution.

    zeta
        Fraction of active blocks pruned (and regrown) per event, strictly
        inside ``(0, 1)``.  The pruned count is ``floor(zeta * active)``.
    epsilon_prune
        Independent zeroing probability of the ``listing4`` mode, in
        ``[0, 1]`` (both endpoints are meaningful: never / always).
    noise_scale
        Standard deviation multiplier of the additive ``listing4`` noise.
    """

    mode: str = MAGNITUDE_SET
    zeta: float = 0.3
    epsilon_prune: float = 0.1
    noise_scale: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown evolution mode {self.mode!r}")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError(f"zeta must be in (0, 1), got {self.zeta}")
        if not 0.0 <= self.epsilon_prune <= 1.0:
            raise ValueError(
                f"epsilon_prune must be in [0, 1], got {self.epsilon_prune}"
            )
        if self.noise_scale < 0.0:
            raise ValueError(
                f"noise_scale must be >= 0, got {self.noise_scale}"
            )


@dataclass
class LayerEvolutionStats:
    layer: int
    pruned: int
    regrown: int
    active_blocks: int
    saturated: bool = False


@dataclass
class EvolutionStats:
    """Per-layer bookkeeping of one evolution event."""

    layers: list[LayerEvolutionStats] = field(default_factory=list)

    @property
    def total_pruned(self) -> int:
        return sum(s.pruned for s in self.layers)

    @property
    def total_regrown(self) -> int:
        return sum(s.regrown for s in self.layers)

    def csv_rows(self, epoch: int) -> list[str]:
        return [
            f"{epoch},{s.layer},{s.pruned},{s.regrown},{s.active_blocks},"
            f"{int(s.saturated)}"
            for s in self.layers
        ]


EVOLUTION_CSV_HEADER = "epoch,layer,pruned,regrown,active_blocks,saturated"


def _block_magnitudes(layer: SparseLayer, rows: np.ndarray,
                      cols: np.ndarray) -> np.ndarray:
    """|weight| per active block (mean over the tile for independent mode)."""
    e = layer.expand_factor
    if e == 1:
        return np.abs(layer.weights[rows, cols])
    br, bc = layer.block_mask.shape
    per_block = np.abs(layer.weights).reshape(br, e, bc, e).mean(axis=(1, 3))
    return per_block[rows, cols]


def _zero_block(layer: SparseLayer, r: int, c: int):
    e = layer.expand_factor
    if e == 1:
        layer.weights[r, c] = 0.0
    else:
        layer.weights[r * e:(r + 1) * e, c * e:(c + 1) * e] = 0.0


def _fresh_block_values(layer: SparseLayer, fan_in: int, k: int,
                        init_scheme: str, rng: np.random.Generator):
    e = layer.expand_factor
    if init_scheme == HE_UNIFORM:
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=(k, e, e))
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(k, e, e))


def evolve_magnitude(network: Network, policy: EvolutionPolicy,
                     event_index: int = 0) -> tuple[Network, EvolutionStats]:
    """One magnitude-based prune-and-regrow event, in place.

    Pruning order sorts active blocks by magnitude ascending with a stable
    sort, so equal magnitudes break ties by (row, col) position.  Regrowth
    samples uniformly without replacement from the blocks inactive *after*
    pruning, so a just-pruned block can be immediately regrown with a fresh
    weight.  A layer already at full density is left untouched and flagged
    (a :class:`SaturationError` warning is emitted).
    """
    if policy.mode != MAGNITUDE_SET:
        raise ValueError(f"policy mode is {policy.mode!r}, not {MAGNITUDE_SET!r}")
    stats = EvolutionStats()
    sizes = network.topology.layer_sizes
    for i, layer in enumerate(network.layers):
        rng = np.random.default_rng((policy.rng_seed, event_index, i))
        mask = layer.block_mask
        rows, cols = np.nonzero(mask)
        active = rows.size
        inactive_before = mask.size - active
        if inactive_before == 0:
            warnings.warn(SaturationError(
                f"layer {i} is fully dense; evolution event {event_index} "
                f"skipped"))
            stats.layers.append(LayerEvolutionStats(i, 0, 0, active, True))
            continue
        k = int(np.floor(policy.zeta * active))
        if k == 0:
            stats.layers.append(LayerEvolutionStats(i, 0, 0, active))
            continue

        mags = _block_magnitudes(layer, rows, cols)
        order = np.argsort(mags, kind="stable")
        prune_sel = order[:k]
        e = layer.expand_factor
        pr, pc = rows[prune_sel], cols[prune_sel]
        mask[pr, pc] = False
        if e == 1:
            layer.weights[pr, pc] = 0.0
        else:
            for r, c in zip(pr.tolist(), pc.tolist()):
                _zero_block(layer, r, c)

        free_r, free_c = np.nonzero(~mask)
        pick = rng.choice(free_r.size, size=k, replace=False)
        values = _fresh_block_values(layer, sizes[i], k,
                                     network.init_scheme, rng)
        gr, gc = free_r[pick], free_c[pick]
        mask[gr, gc] = True
        if e == 1:
            layer.weights[gr, gc] = values[:, 0, 0]
        else:
            for j, (r, c) in enumerate(zip(gr.tolist(), gc.tolist())):
                layer.weights[r * e:(r + 1) * e, c * e:(c + 1) * e] = values[j]

        stats.layers.append(
            LayerEvolutionStats(i, k, k, int(mask.sum())))
    return network, stats


def evolve_listing4(network: Network, policy: EvolutionPolicy,
                    event_index: int = 0) -> tuple[Network, EvolutionStats]:
    """One noise-driven evolution event, in place.

    Per layer: draw one uniform variate per stored weight cell; active
    cells with a variate below ``epsilon_prune`` are zeroed.  Then Gaussian
    noise times ``noise_scale`` is added to every active cell, including
    just-zeroed ones.  Masks are untouched, so ``pruned`` counts zeroed
    cells and ``regrown`` stays 0 in the returned stats.
    """
    if policy.mode != LISTING4:
        raise ValueError(f"policy mode is {policy.mode!r}, not {LISTING4!r}")
    stats = EvolutionStats()
    for i, layer in enumerate(network.layers):
        rng = np.random.default_rng((policy.rng_seed, event_index, i))
        wmask = layer.weight_mask()
        u = rng.random(layer.weights.shape)
        zap = (u < policy.epsilon_prune) & wmask
        layer.weights[zap] = 0.0
        if policy.noise_scale > 0.0:
            noise = rng.standard_normal(layer.weights.shape)
            layer.weights[wmask] += noise[wmask] * policy.noise_scale
        stats.layers.append(LayerEvolutionStats(
            i, int(zap.sum()), 0, int(layer.block_mask.sum())))
    return network, stats


def evolve(network: Network, policy: EvolutionPolicy,
           event_index: int = 0) -> tuple[Network, EvolutionStats]:
    """Dispatch to the policy's evolution mode."""
    if policy.mode == MAGNITUDE_SET:
        return evolve_magnitude(network, policy, event_index)
    return evolve_listing4(network, policy, event_index)


def evolution_schedule(epoch: int, total_epochs: int, period: int = 1) -> bool:
    """Whether an evolution event runs after the given epoch.

    Events fire after every ``period``-th epoch (1-based), but never after
    the final epoch, so the last training epoch always ends with a
    gradient-only network.
    """
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    if total_epochs < 1:
        raise ValueError(f"total_epochs must be >= 1, got {total_epochs}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if epoch >= total_epochs - 1:
        return False
    return (epoch + 1) % period == 0
