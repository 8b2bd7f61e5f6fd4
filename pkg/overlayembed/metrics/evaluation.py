# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import logging

# 3rd party packages
import numpy as np
import pandas as pd

# Project imports
from overlayembed.exceptions import DataError, IsolatedNodeError
from overlayembed.spaces.models import PAIR_CHUNK, pair_chunks, run_chunks

logger = logging.getLogger(__name__)


def distortion_metric(model, state, targets, threads=1):
    """
    Exact average distortion ``mean_{i<j} |d_U(i, j) - d_G(i, j)| / d_G(i, j)`` over all unordered pairs

    :param model: DistanceModel
    :param state: EmbeddingState
    :param targets: DistanceMatrix
    :param threads: Number of worker threads (default=1)
    :return: Float
    """
    n = targets.n
    if n < 2:
        raise DataError("Distortion needs at least two nodes, got %i" % n)
    rows, cols = np.triu_indices(n, k=1)
    goal = targets.pair_targets(rows, cols)

    def run(chunk):
        distances = model.pair_distances(state, rows[chunk], cols[chunk])
        return np.sum(np.abs(distances - goal[chunk]) / goal[chunk])

    return float(np.sum(run_chunks(run, pair_chunks(len(rows)), threads)) / len(rows))


def relevant_neighbors(graph):
    """
    Returns the relevant set ``N_v`` of every node

    For unweighted graphs ``N_v`` are the adjacent nodes. For weighted graphs ``N_v`` holds the nodes
    closest to ``v`` by graph distance, i.e. the neighbours joined by an edge of minimal incident weight
    (several when they tie).

    :param graph: Graph
    :return: List of sorted integer arrays
    """
    degrees = graph.degrees()
    if np.any(degrees == 0):
        raise IsolatedNodeError("Node %i has no neighbours; mAP is undefined" % int(np.flatnonzero(degrees == 0)[0]))
    if not graph.weighted:
        return graph.neighbor_lists()
    adjacency = graph.adjacency(use_weights=True)
    relevant = []
    for v in range(graph.node_count):
        lo, hi = adjacency.indptr[v], adjacency.indptr[v + 1]
        neighbors = adjacency.indices[lo:hi]
        weights = adjacency.data[lo:hi]
        relevant.append(np.sort(neighbors[weights == weights.min()]))
    return relevant


def _rows_without_self(block, n):
    cols = np.tile(np.arange(n - 1), (len(block), 1))
    return cols + (cols >= block[:, None])


def average_precision(distances, relevant):
    """
    Average precision of one source

    :param distances: Distances from the source to every other node
    :param relevant: Boolean mask over ``distances`` selecting ``N_v``
    :return: Float
    """
    ranked = np.sort(distances, kind='mergesort')
    relevant_sorted = np.sort(distances[relevant], kind='mergesort')
    retrieved = np.searchsorted(ranked, relevant_sorted, side='right')
    hits = np.searchsorted(relevant_sorted, relevant_sorted, side='right')
    return float(np.mean(hits / retrieved))


def map_metric(model, state, graph, return_per_node=False, threads=1):
    """
    Mean average precision of the embedding against the graph

    For every source ``v`` and relevant node ``u``, ``R_v(u)`` holds the nodes ``w != v`` with
    ``d(v, w) <= d(v, u)``; ``AP(v)`` averages ``|N_v & R_v(u)| / |R_v(u)|`` over ``N_v`` and the result
    averages ``AP(v)`` over all nodes. Distances are taken from the source row.

    :param model: DistanceModel
    :param state: EmbeddingState
    :param graph: Graph without isolated nodes
    :param return_per_node: Boolean indicating whether the per-node AP vector is returned as well
    :param threads: Number of worker threads (default=1)
    :return: Float, or tuple ``(map, per_node_ap)``
    """
    n = graph.node_count
    if n < 2:
        raise DataError("mAP needs at least two nodes, got %i" % n)
    relevant = relevant_neighbors(graph)
    per_chunk = max(1, PAIR_CHUNK // (n - 1))
    blocks = [np.arange(start, min(start + per_chunk, n)) for start in range(0, n, per_chunk)]

    def run(block):
        cols = _rows_without_self(block, n)
        distances = model.pair_distances(state, np.repeat(block, n - 1), cols.ravel()).reshape(len(block), n - 1)
        scores = np.empty(len(block))
        for k, v in enumerate(block):
            mask = np.isin(cols[k], relevant[v])
            scores[k] = average_precision(distances[k], mask)
        return scores

    per_node = np.concatenate(run_chunks(run, blocks, threads))
    value = float(np.mean(per_node))
    logger.debug("mAP %.6f over %i nodes", value, n)
    if return_per_node:
        return value, per_node
    return value


def rank_table(model, state, v, labels=None):
    """
    Ranks all other nodes by their distance from ``v``

    :param model: DistanceModel
    :param state: EmbeddingState
    :param v: Source node index
    :param labels: Optional sequence of node labels
    :return: Dataframe with columns ``rank``, ``node``, ``distance`` (and ``label``), ascending by distance
        with ties kept in node order
    """
    n = state.layout.n
    if not 0 <= v < n:
        raise DataError("Node %s outside [0, %i)" % (v, n))
    others = np.array([w for w in range(n) if w != v], dtype=np.int64)
    distances = model.pair_distances(state, np.full(len(others), v, dtype=np.int64), others)
    order = np.argsort(distances, kind='mergesort')
    table = pd.DataFrame({
        'rank': np.arange(1, len(others) + 1),
        'node': others[order],
        'distance': distances[order]
    })
    if labels:
        table['label'] = [labels[w] for w in table['node']]
    return table
