# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import logging

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import ConfigurationError, EmptyGraphError
from overlayembed.graph.io import Graph

logger = logging.getLogger(__name__)


def generate_bipartite(n_small, n_large, p, seed):
    """
    Generates the synthetic bipartite benchmark graph

    Every (small, large) pair is connected independently with probability ``p``. Isolated nodes are
    removed and only the largest connected component is kept (lowest component label on ties).
    Surviving nodes keep their relative order (small side first), so the result is fully determined
    by the seed.

    :param n_small: Size of the small (popular) side, e.g. 20
    :param n_large: Size of the large side, e.g. 700
    :param p: Edge probability in ``(0, 1)``, e.g. 0.05
    :param seed: Seed of the random generator

    :return: Graph instance with labels ``s<i>`` for the small side and ``l<j>`` for the large side
    """
    if n_small <= 0 or n_large <= 0:
        raise ConfigurationError("Both sides of the bipartite graph need at least one node")
    if not 0 < p < 1:
        raise ConfigurationError("Edge probability must lie in (0, 1), got %s" % p)

    rng = np.random.default_rng(seed)
    mask = rng.random((n_small, n_large)) < p
    small_idx, large_idx = np.nonzero(mask)
    if len(small_idx) == 0:
        raise EmptyGraphError("No edges were generated for (%i, %i, p=%s)" % (n_small, n_large, p))

    labels = ["s%i" % i for i in range(n_small)] + ["l%i" % j for j in range(n_large)]
    full = Graph.from_edges(
        node_count=n_small + n_large,
        edges=zip(small_idx, large_idx + n_small),
        labels=labels)

    _, component = full.component_labels()
    degrees = full.degrees()
    sizes = np.bincount(component[degrees > 0])
    keep_label = int(np.argmax(sizes))
    keep = (component == keep_label) & (degrees > 0)
    new_index = -np.ones(full.node_count, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))

    edge_keep = keep[full.heads]
    graph = Graph.from_edges(
        node_count=int(keep.sum()),
        edges=zip(new_index[full.heads[edge_keep]], new_index[full.tails[edge_keep]]),
        labels=[label for label, k in zip(labels, keep) if k])
    logger.info("Bipartite graph (%i, %i, p=%s, seed=%s): kept %i nodes, %i edges" % (
        n_small, n_large, p, seed, graph.node_count, graph.edge_count))
    return graph
