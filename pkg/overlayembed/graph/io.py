# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import logging
import warnings
from dataclasses import dataclass, field

# 3rd party packages
import numpy as np
import scipy.sparse as sparse
from scipy.sparse import csgraph

# Project imports
from overlayembed.exceptions import EdgeListFormatError, SelfLoopError, NonPositiveWeightError, \
    DuplicateEdgeError, DisconnectedGraphError, CacheFormatError, DataError
from overlayembed.io import write_distance_cache, read_distance_cache

logger = logging.getLogger(__name__)


def _readonly(array, dtype):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Undirected graph with dense node indices and optional edge weights

    Edges are stored once per unordered pair as three read-only arrays (``heads``, ``tails``, ``weights``).
    ``labels`` holds the original node labels in index order.
    """
    node_count: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    weighted: bool = False
    labels: tuple = field(default=())

    @classmethod
    def from_edges(cls, node_count, edges, weighted=False, labels=None):
        """
        Creates a graph from ``(u, v)`` or ``(u, v, w)`` tuples and validates the graph invariants

        :param node_count: Number of nodes
        :param edges: Iterable of edge tuples with node indices in ``[0, node_count)``
        :param weighted: Boolean indicating whether the weights are meaningful
        :param labels: Optional sequence with node labels (default is the string of the index)
        :return: Graph instance
        """
        heads, tails, weights = [], [], []
        seen = set()
        for edge in edges:
            u, v = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise DataError("Edge (%i, %i) refers to a node outside [0, %i)" % (u, v, node_count))
            if u == v:
                raise SelfLoopError("self-loop on node %i" % u)
            if not (np.isfinite(w) and w > 0):
                raise NonPositiveWeightError("edge (%i, %i) has non-positive weight %s" % (u, v, w))
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError("duplicate edge (%i, %i)" % key)
            seen.add(key)
            heads.append(u)
            tails.append(v)
            weights.append(w)
        if labels is None:
            labels = tuple(str(i) for i in range(node_count))
        return cls(
            node_count=int(node_count),
            heads=_readonly(heads, np.int64),
            tails=_readonly(tails, np.int64),
            weights=_readonly(weights, np.float64),
            weighted=bool(weighted),
            labels=tuple(labels))

    @property
    def edge_count(self):
        return len(self.heads)

    @property
    def edges(self):
        """
        List of ``(u, v, weight)`` tuples, one per undirected edge
        """
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.heads, self.tails, self.weights)]

    def adjacency(self, use_weights=True):
        """
        Returns the symmetric sparse adjacency matrix

        :param use_weights: Boolean indicating whether entries are the edge weights (default) or ones
        :return: ``scipy.sparse.csr_matrix`` of shape ``(n, n)``
        """
        values = self.weights if use_weights else np.ones(self.edge_count)
        rows = np.concatenate([self.heads, self.tails])
        cols = np.concatenate([self.tails, self.heads])
        return sparse.csr_matrix(
            (np.concatenate([values, values]), (rows, cols)),
            shape=(self.node_count, self.node_count))

    def degrees(self):
        return np.bincount(np.concatenate([self.heads, self.tails]), minlength=self.node_count)

    def neighbor_lists(self):
        """
        Returns the sorted neighbour indices of every node

        :return: List of numpy integer arrays, one per node
        """
        adjacency = self.adjacency(use_weights=False)
        return [np.sort(adjacency.indices[adjacency.indptr[v]:adjacency.indptr[v + 1]])
                for v in range(self.node_count)]

    def directed_edges(self):
        """
        Returns both orientations of every undirected edge

        :return: Tuple of two integer arrays ``(sources, targets)`` of length ``2 |E|``
        """
        return (np.concatenate([self.heads, self.tails]),
                np.concatenate([self.tails, self.heads]))

    def component_labels(self):
        """
        Returns the number of connected components and the component label of every node
        """
        return csgraph.connected_components(self.adjacency(use_weights=False), directed=False)

    def is_connected(self):
        if self.node_count <= 1:
            return True
        n_components, _ = self.component_labels()
        return n_components == 1

    def check_connected(self):
        """
        Raises ``DisconnectedGraphError`` when the graph has more than one component
        """
        if not self.is_connected():
            n_components, _ = self.component_labels()
            raise DisconnectedGraphError(
                "Graph with %i nodes has %i connected components, a connected graph is required" % (
                    self.node_count, n_components))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """
    Dense symmetric matrix with the ground-truth graph distances (zero diagonal)
    """
    d: np.ndarray

    def __post_init__(self):
        values = np.array(self.d, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError("Distance matrix must be square, got shape %s" % (values.shape,))
        if not np.array_equal(values, values.T):
            raise DataError("Distance matrix must be symmetric")
        if np.any(np.diag(values) != 0.0):
            raise DataError("Distance matrix must have a zero diagonal")
        off_diagonal = values[~np.eye(values.shape[0], dtype=bool)]
        if not np.all(np.isfinite(off_diagonal) & (off_diagonal > 0)):
            raise DataError("Distances between distinct nodes must be finite and positive")
        values.setflags(write=False)
        object.__setattr__(self, 'd', values)

    @property
    def n(self):
        return self.d.shape[0]

    def pair_targets(self, rows, cols):
        return self.d[rows, cols]

    def save(self, path):
        """
        Writes the matrix to the binary ``DGMX`` cache

        :param path: Destination file path
        """
        write_distance_cache(path, self.d)

    @classmethod
    def load(cls, path):
        """
        Loads a matrix from the binary ``DGMX`` cache

        :param path: Path of the cache file
        :return: DistanceMatrix instance
        """
        values = read_distance_cache(path)
        try:
            return cls(values)
        except DataError as err:
            raise CacheFormatError("Distance cache %s is invalid: %s" % (path, err))



def load_edge_list(path, weighted=False, check_connected=True):
    """
    Loads an undirected graph from a whitespace-separated edge list

    Each non-comment line holds ``u v`` or ``u v w``. Lines starting with ``#`` and blank lines are ignored.
    Node labels are arbitrary strings and are re-indexed densely in order of first appearance.

    :param path: Path of the UTF-8 edge list
    :param weighted: Boolean indicating whether the third column is used as edge weight
        (default is False, in which case every edge has weight 1)
    :param check_connected: Boolean indicating whether a disconnected graph raises an error (default is True)

    :return: Graph instance
    """
    index = {}
    heads, tails, weights = [], [], []
    seen = {}
    ignored_weights = False
    with open(path, 'rb') as f:
        for line_number, raw_line in enumerate(f, start=1):
            try:
                line = raw_line.decode('utf-8')
            except UnicodeDecodeError as err:
                raise EdgeListFormatError("not valid UTF-8 (%s)" % err.reason, line_number)
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            tokens = stripped.split()
            if len(tokens) not in (2, 3):
                raise EdgeListFormatError(
                    "expected 'u v' or 'u v w', got %i fields" % len(tokens), line_number)
            u_label, v_label = tokens[0], tokens[1]
            weight = 1.0
            if len(tokens) == 3:
                try:
                    parsed = float(tokens[2])
                except ValueError:
                    raise EdgeListFormatError("weight '%s' is not a number" % tokens[2], line_number)
                if not np.isfinite(parsed) or parsed <= 0:
                    raise NonPositiveWeightError("weight must be positive, got %s" % tokens[2], line_number)
                if weighted:
                    weight = parsed
                else:
                    ignored_weights = True
            if u_label == v_label:
                raise SelfLoopError("self-loop on node '%s'" % u_label, line_number)
            for label in (u_label, v_label):
                if label not in index:
                    index[label] = len(index)
            u, v = index[u_label], index[v_label]
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError(
                    "duplicate edge '%s %s' (first seen on line %i)" % (u_label, v_label, seen[key]), line_number)
            seen[key] = line_number
            heads.append(u)
            tails.append(v)
            weights.append(weight)

    if ignored_weights:
        warnings.warn("Edge list %s has a weight column which is ignored for an unweighted load" % path)
    if not index:
        raise DataError("Edge list %s contains no edges" % path)

    labels = [None] * len(index)
    for label, i in index.items():
        labels[i] = label
    graph = Graph(
        node_count=len(index),
        heads=_readonly(heads, np.int64),
        tails=_readonly(tails, np.int64),
        weights=_readonly(weights, np.float64),
        weighted=bool(weighted),
        labels=tuple(labels))
    logger.info("Loaded %s: %i nodes, %i edges%s" % (
        path, graph.node_count, graph.edge_count, " (weighted)" if weighted else ""))
    if check_connected:
        graph.check_connected()
    return graph


def save_edge_list(graph, path):
    """
    Writes a graph as an edge list using the node labels

    :param graph: Graph instance
    :param path: Destination file path
    :return: None
    """
    with open(path, 'w', encoding='utf-8') as f:
        f.write("# %i nodes, %i edges\n" % (graph.node_count, graph.edge_count))
        for u, v, w in graph.edges:
            if graph.weighted:
                f.write("%s %s %r\n" % (graph.labels[u], graph.labels[v], w))
            else:
                f.write("%s %s\n" % (graph.labels[u], graph.labels[v]))
