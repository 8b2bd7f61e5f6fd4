# -*- coding: utf-8 -*-

"""
Training objectives: the relative distortion of graph distances and the probabilistic ranking proxy.

Both losses return the loss value together with the gradient with respect to the flat parameter vector of an
``EmbeddingState``. Work is split into fixed chunks whose partial results are summed in chunk order, so the
values are reproducible at a given thread count.
"""

__author__ = 'Overlayembed developers'

# Native Python packages
import logging
import warnings
from dataclasses import dataclass
from typing import Optional

# 3rd party packages
import numpy as np
from scipy.special import logsumexp, softmax

# Project imports
from overlayembed.exceptions import ConfigurationError, DataError, DomainError
from overlayembed.spaces.models import PAIR_CHUNK, pair_chunks, run_chunks

logger = logging.getLogger(__name__)

DISTORTION = 'distortion'
PROXY = 'proxy'
LOSS_KINDS = (DISTORTION, PROXY)

CONVERSIONS = ('t1', 't2', 't3')
DEFAULT_READING = 'default'
LITERAL_READING = 'literal'
FLOORED_READING = 'floored'
READINGS = (DEFAULT_READING, LITERAL_READING, FLOORED_READING)

DEFAULT_D0 = 1e-2
FULL_PAIRS_LIMIT = 2000
DEFAULT_PAIR_SAMPLE = 10 ** 6
FULL_DENOMINATOR_LIMIT = 5000
DEFAULT_DENOMINATOR_SAMPLE = 1000


@dataclass(frozen=True)
class LossSpec:
    """
    Loss configuration

    ``pair_sample`` and ``denominator_sample`` left at ``None`` follow the size policies (all pairs up to
    2000 nodes, full denominators up to 5000 nodes); ``0`` forces the full computation.
    """
    kind: str = DISTORTION
    conversion: str = 't1'
    d0: float = DEFAULT_D0
    reading: str = DEFAULT_READING
    pair_sample: Optional[int] = None
    denominator_sample: Optional[int] = None
    exclude_self: bool = False

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError("Unknown loss '%s', expected one of %s" % (self.kind, LOSS_KINDS))
        if self.conversion not in CONVERSIONS:
            raise ConfigurationError("Unknown conversion '%s', expected one of %s" % (self.conversion, CONVERSIONS))
        if self.reading not in READINGS:
            raise ConfigurationError("Unknown conversion reading '%s', expected one of %s" % (self.reading, READINGS))
        if not self.d0 > 0:
            raise ConfigurationError("d0 must be positive, got %s" % self.d0)
        for name in ('pair_sample', 'denominator_sample'):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigurationError("%s must be non-negative, got %s" % (name, value))

    def check_model(self, model):
        """
        Rejects t2/t3 for the dot similarities, whose scores can be negative
        """
        if self.kind == PROXY and self.conversion != 't1' and not model.signature.is_metric:
            raise DomainError("Conversion %s needs non-negative distances and cannot be used with %s" % (
                self.conversion, model.signature.text))


def _floor_of(conversion, reading):
    return reading == FLOORED_READING or (reading == DEFAULT_READING and conversion != 't1')


def log_score(conversion, d, d0=DEFAULT_D0, reading=DEFAULT_READING):
    """
    Logarithm of the distance-to-score conversion with its derivative with respect to ``d``

    Under the floored reading ``m = max(d, d0)``, under the literal reading ``m = min(d, d0)``:

    - t1: ``log t = -d``
    - t2: ``log t = 1 / m``
    - t3: ``log t = -log m``

    :param conversion: One of ``'t1'``, ``'t2'``, ``'t3'``
    :param d: Array of distances
    :param d0: Positive constant of t2/t3
    :param reading: ``'default'`` (floored for t2/t3), ``'literal'`` or ``'floored'``
    :return: Tuple ``(log_t, derivative)``
    """
    d = np.asarray(d, dtype=np.float64)
    if conversion == 't1':
        return -d, np.full(d.shape, -1.0)
    if conversion not in CONVERSIONS:
        raise ConfigurationError("Unknown conversion '%s', expected one of %s" % (conversion, CONVERSIONS))
    if np.any(d < 0):
        raise DomainError("Conversion %s is undefined for negative distances (min %g)" % (conversion, d.min()))
    if _floor_of(conversion, reading):
        m = np.maximum(d, d0)
        slope = (d > d0).astype(np.float64)
    else:
        if np.any(d == 0):
            raise DomainError("Conversion %s read literally is infinite at distance 0; "
                              "exclude self pairs or use the floored reading" % conversion)
        m = np.minimum(d, d0)
        slope = (d < d0).astype(np.float64)
    if conversion == 't2':
        return 1.0 / m, -slope / (m * m)
    return -np.log(m), -slope / m


def convert(conversion, d, d0=DEFAULT_D0, reading=DEFAULT_READING):
    """
    Converts distances into positive scores ``t(d)``

    :param conversion: One of ``'t1'`` (``exp(-d)``), ``'t2'`` (``exp(1/m)``), ``'t3'`` (``1/m``)
    :param d: Distance or array of distances
    :param d0: Positive constant of t2/t3 (default=1e-2)
    :param reading: ``'default'``, ``'literal'`` or ``'floored'``, see ``log_score``
    :return: Score(s) of the same shape as ``d``
    """
    values, _ = log_score(conversion, d, d0, reading)
    return np.exp(values)


def sample_pairs(n, count, rng):
    """
    Draws ``count`` uniform unordered pairs ``i < j`` of distinct nodes

    :param n: Number of nodes (at least 2)
    :param count: Number of pairs
    :param rng: ``numpy.random.Generator``
    :return: Tuple of integer arrays ``(rows, cols)``
    """
    first = rng.integers(0, n, size=count)
    second = rng.integers(0, n - 1, size=count)
    second = second + (second >= first)
    return np.minimum(first, second), np.maximum(first, second)


def distortion_pairs(n, spec, seed=0, iteration=0):
    """
    Pair set of one distortion iteration

    All unordered pairs are used up to ``FULL_PAIRS_LIMIT`` nodes, otherwise a fresh uniform sample of
    ``pair_sample`` (default one million) pairs seeded by ``(seed, iteration)``.

    :return: Tuple of integer arrays ``(rows, cols)`` with ``rows < cols``
    """
    if n < 2:
        raise DataError("Distortion needs at least two nodes, got %i" % n)
    sample = spec.pair_sample
    if sample is None:
        sample = 0 if n <= FULL_PAIRS_LIMIT else DEFAULT_PAIR_SAMPLE
    if sample == 0:
        rows, cols = np.triu_indices(n, k=1)
        return rows.astype(np.int64), cols.astype(np.int64)
    return sample_pairs(n, sample, np.random.default_rng([seed, iteration]))


def distortion_loss(model, state, targets, pairs, threads=1):
    """
    Mean relative distance error ``mean |d_U - d_G| / d_G`` over the given pairs

    The subgradient of ``|.|`` at zero is taken as 0; ``d_G`` is constant.

    :param model: DistanceModel
    :param state: EmbeddingState
    :param targets: DistanceMatrix with the graph distances
    :param pairs: Tuple of integer arrays ``(rows, cols)``
    :param threads: Number of worker threads (default=1)
    :return: Tuple ``(loss, gradient)`` with the gradient over the flat parameter vector
    """
    rows, cols = (np.asarray(index, dtype=np.int64) for index in pairs)
    count = len(rows)
    if count == 0:
        raise DataError("Distortion needs at least one pair")
    goal = targets.pair_targets(rows, cols)
    if np.any(goal <= 0):
        raise DataError("Target distances of distinct nodes must be positive")
    layout = state.layout

    def run(chunk):
        evaluation = model.evaluate(state, rows[chunk], cols[chunk])
        error = evaluation.distances - goal[chunk]
        upstream = np.sign(error) / goal[chunk] / count
        return np.sum(np.abs(error) / goal[chunk]) / count, model.backward(evaluation, upstream, layout)

    return _reduce(run_chunks(run, pair_chunks(count), threads), layout)


def _reduce(results, layout):
    loss = 0.0
    grad = np.zeros(layout.size)
    for part_loss, part_grad in results:
        loss += part_loss
        grad += part_grad
    return float(loss), grad


def _denominator_size(n, spec):
    sample = spec.denominator_sample
    if sample is None:
        sample = 0 if n <= FULL_DENOMINATOR_LIMIT else DEFAULT_DENOMINATOR_SAMPLE
    return sample


def proxy_loss(model, state, graph, spec, seed=0, iteration=0, threads=1):
    """
    Probabilistic ranking proxy ``-sum_(v,u) log[t(d(v,u)) / sum_w t(d(v,w))]``

    The sum runs over both orientations of every edge. The denominator covers all nodes including the
    source itself unless ``spec.exclude_self``; above ``FULL_DENOMINATOR_LIMIT`` nodes (or when
    ``spec.denominator_sample`` is set) it is estimated from a uniform sample per source.

    :param model: DistanceModel
    :param state: EmbeddingState
    :param graph: Connected Graph
    :param spec: LossSpec of kind ``proxy``
    :param seed: Seed of the denominator samples
    :param iteration: Iteration number mixed into the sampling seed
    :param threads: Number of worker threads (default=1)
    :return: Tuple ``(loss, gradient)``
    """
    spec.check_model(model)
    n = graph.node_count
    layout = state.layout
    sources, targets = graph.directed_edges()
    degrees = graph.degrees().astype(np.float64)

    def score(distances):
        return log_score(spec.conversion, distances, spec.d0, spec.reading)

    def numerator(chunk):
        evaluation = model.evaluate(state, sources[chunk], targets[chunk])
        values, slope = score(evaluation.distances)
        return -np.sum(values), model.backward(evaluation, -slope, layout)

    results = run_chunks(numerator, pair_chunks(len(sources)), threads)

    sample = _denominator_size(n, spec)
    if sample:
        warnings.warn("Proxy denominators are sampled (%i per source); the loss is an estimate" % sample)
        candidates = None
        width = sample
        correction = np.log((n - 1 if spec.exclude_self else n) / float(sample))
    else:
        candidates = np.arange(n)
        width = n - 1 if spec.exclude_self else n
        correction = 0.0
    per_chunk = max(1, PAIR_CHUNK // max(width, 1))
    source_chunks = [np.arange(start, min(start + per_chunk, n)) for start in range(0, n, per_chunk)]

    def denominator(block):
        count = len(block)
        if candidates is None:
            rng = np.random.default_rng([seed, iteration, int(block[0])])
            if spec.exclude_self:
                cols = rng.integers(0, n - 1, size=(count, width))
                cols = cols + (cols >= block[:, None])
            else:
                cols = rng.integers(0, n, size=(count, width))
        elif spec.exclude_self:
            cols = np.tile(candidates[:-1], (count, 1))
            cols = cols + (cols >= block[:, None])
        else:
            cols = np.tile(candidates, (count, 1))
        rows = np.repeat(block, width)
        evaluation = model.evaluate(state, rows, cols.ravel())
        values, slope = score(evaluation.distances.reshape(count, width))
        mass = degrees[block]
        upstream = mass[:, None] * softmax(values, axis=1) * slope
        loss = np.sum(mass * (logsumexp(values, axis=1) + correction))
        return loss, model.backward(evaluation, upstream.ravel(), layout)

    results.extend(run_chunks(denominator, source_chunks, threads))
    return _reduce(results, layout)


def loss_and_gradient(model, state, spec, graph=None, targets=None, seed=0, iteration=0, threads=1):
    """
    Evaluates the configured loss for one training iteration

    :return: Tuple ``(loss, gradient)``
    """
    if spec.kind == DISTORTION:
        if targets is None:
            raise ConfigurationError("Distortion loss needs the target distance matrix")
        pairs = distortion_pairs(targets.n, spec, seed, iteration)
        return distortion_loss(model, state, targets, pairs, threads=threads)
    if graph is None:
        raise ConfigurationError("Proxy loss needs the graph")
    return proxy_loss(model, state, graph, spec, seed=seed, iteration=iteration, threads=threads)
