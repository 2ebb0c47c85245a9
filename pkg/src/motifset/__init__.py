"""Motif-block sparse MLPs: training, evolution, and trade-off scoring.

The package trains multilayer perceptrons whose connectivity lives on a
grid of m x m neuron blocks (motifs).  Sparse topologies are sampled with
an Erdos-Renyi rule, trained with minibatch SGD, and rewired between
epochs by magnitude-based prune-and-regrow.  A scoring harness compares
variant runs against a dense-granularity baseline on a weighted
efficiency/accuracy scale and sweeps the weighting to find where coarser
motifs start to pay off.

Modules: ``topology`` (mask construction and text export), ``network``
(forward/backward/SGD), ``evolution`` (rewiring policies), ``data``
(ingestion and caching), ``metrics`` (scores, sweeps, cost model),
``checkpoint`` (binary serialization), ``config``/``train``/``cli``
(experiment plumbing).
"""

__version__ = "0.1.0"
