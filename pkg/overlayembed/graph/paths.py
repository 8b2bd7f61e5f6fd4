# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import logging
import os
from concurrent.futures import ThreadPoolExecutor

# 3rd party packages
import numpy as np
from scipy.sparse import csgraph

# Project imports
from overlayembed.exceptions import DisconnectedGraphError, DataError
from overlayembed.graph.io import DistanceMatrix

logger = logging.getLogger(__name__)

SOURCES_PER_CHUNK = 256


def _source_chunks(n, chunk=SOURCES_PER_CHUNK):
    return [np.arange(start, min(start + chunk, n)) for start in range(0, n, chunk)]


def shortest_paths(graph, threads=1, raw_weights=False, cache_path=None):
    """
    Computes the all-pairs shortest-path distance matrix of a connected graph

    Unweighted graphs use a breadth-first search per source, weighted graphs Dijkstra per source.
    Sources are processed in fixed chunks which may run in parallel; results are written into the matrix
    by row index so the output does not depend on the thread count.

    :param graph: Connected ``Graph``
    :param threads: Number of worker threads for the per-source searches (default=1)
    :param raw_weights: Boolean indicating whether the direct edge weights of a complete graph are used as
        target distances instead of shortest paths (default=False)
    :param cache_path: Optional path of a ``DGMX`` cache. An existing cache of matching size is loaded
        instead of recomputing, otherwise the computed matrix is written to it.

    :return: DistanceMatrix with zero diagonal
    """
    if cache_path is not None and os.path.exists(cache_path):
        cached = DistanceMatrix.load(cache_path)
        if cached.n == graph.node_count:
            logger.info("Loaded distance matrix from cache %s" % cache_path)
            return cached
        logger.warning("Ignoring cache %s of size %i for a graph with %i nodes" % (
            cache_path, cached.n, graph.node_count))

    n = graph.node_count
    if raw_weights:
        distances = _raw_weight_distances(graph)
    else:
        graph.check_connected()
        adjacency = graph.adjacency(use_weights=graph.weighted)
        method = 'D'
        unweighted = not graph.weighted

        def run(sources):
            return csgraph.shortest_path(
                adjacency, method=method, directed=False, unweighted=unweighted, indices=sources)

        chunks = _source_chunks(n)
        distances = np.empty((n, n), dtype=np.float64)
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                results = list(executor.map(run, chunks))
        else:
            results = [run(sources) for sources in chunks]
        for sources, rows in zip(chunks, results):
            distances[sources] = rows
        if not np.all(np.isfinite(distances)):
            raise DisconnectedGraphError("Graph is disconnected: some node pairs have no path")
        # Dijkstra sums in path order, so the two directions may differ in the last bit
        distances = np.minimum(distances, distances.T)
    np.fill_diagonal(distances, 0.0)
    matrix = DistanceMatrix(distances)
    if cache_path is not None:
        matrix.save(cache_path)
        logger.info("Wrote distance matrix cache %s" % cache_path)
    return matrix


def _raw_weight_distances(graph):
    n = graph.node_count
    if graph.edge_count != n * (n - 1) // 2:
        raise DataError(
            "Raw-weight targets require a complete graph (%i edges for %i nodes, found %i)" % (
                n * (n - 1) // 2, n, graph.edge_count))
    distances = np.zeros((n, n), dtype=np.float64)
    distances[graph.heads, graph.tails] = graph.weights
    distances[graph.tails, graph.heads] = graph.weights
    return distances
