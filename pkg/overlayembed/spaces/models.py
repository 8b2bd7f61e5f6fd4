# -*- coding: utf-8 -*-

"""
Distance models over a flat trainable parameter vector.

A model turns a ``Signature`` into vectorised distance evaluation over pairs of embedding rows together
with the gradients of every pair distance with respect to both rows and the scalar parameters.
Losses and metrics drive the models chunk by chunk through ``evaluate`` and ``backward``.
"""

__author__ = 'Overlayembed developers'

# Native Python packages
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

# 3rd party packages
import numpy as np
import pandas as pd

# Project imports
from overlayembed.exceptions import ConfigurationError, DimensionMismatchError
from overlayembed.geometry.maps import distance_and_gradient, EUCLIDEAN
from overlayembed.spaces.signature import SINGLE, PRODUCT, OVERLAY, DOT, EXPDOT, weight_count

PAIR_CHUNK = 2 ** 15
EXPDOT_CLAMP = 60.0
INITIAL_OFFSET = 1.0


@dataclass(frozen=True)
class ParamLayout:
    """
    Fixed ordering of the flat parameter vector

    ``[embedding (n*d, row-major) | log-weights theta (n_weights) | offset c (n_offset)]``. Weights are
    ``w = exp(theta)``; the offset of the dot similarities is used as is.
    """
    n: int
    d: int
    n_weights: int
    n_offset: int = 0

    @property
    def size(self):
        return self.n * self.d + self.n_weights + self.n_offset

    @property
    def n_scalars(self):
        return self.n_weights + self.n_offset

    def blocks(self):
        """
        Returns the named slices of the flat vector in layout order
        """
        emb_end = self.n * self.d
        weights_end = emb_end + self.n_weights
        return {
            'embedding': slice(0, emb_end),
            'weights': slice(emb_end, weights_end),
            'offset': slice(weights_end, weights_end + self.n_offset)
        }


class EmbeddingState(object):
    """
    Trainable parameters of a run: the ``n x d`` ambient matrix and the auxiliary scalars

    ``embedding``, ``weights`` and ``offset`` are views into the single ``flat`` vector.
    """

    def __init__(self, layout, flat=None):
        self.layout = layout
        if flat is None:
            flat = np.zeros(layout.size)
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (layout.size,):
            raise DimensionMismatchError("Parameter vector of length %i does not match layout size %i" % (
                flat.size, layout.size))
        self.flat = flat

    @property
    def embedding(self):
        return self.flat[self.layout.blocks()['embedding']].reshape(self.layout.n, self.layout.d)

    @property
    def weights(self):
        return self.flat[self.layout.blocks()['weights']]

    @property
    def offset(self):
        return self.flat[self.layout.blocks()['offset']]

    @property
    def scalars(self):
        return self.flat[self.layout.n * self.layout.d:]

    def copy(self):
        return EmbeddingState(self.layout, self.flat.copy())

    @classmethod
    def from_parts(cls, layout, embedding, scalars):
        """
        Assembles a state from an embedding matrix and the scalar block

        :param layout: ParamLayout of the model
        :param embedding: Array of shape ``(n, d)``
        :param scalars: Array with ``layout.n_scalars`` entries
        :return: EmbeddingState
        """
        embedding = np.asarray(embedding, dtype=np.float64)
        scalars = np.asarray(scalars, dtype=np.float64).ravel()
        if embedding.shape != (layout.n, layout.d) or scalars.size != layout.n_scalars:
            raise DimensionMismatchError(
                "Embedding %s with %i scalars does not fit layout (%i, %i) with %i scalars" % (
                    embedding.shape, scalars.size, layout.n, layout.d, layout.n_scalars))
        return cls(layout, np.concatenate([embedding.ravel(), scalars]))


@dataclass
class PairEvaluation:
    """
    Distances of a chunk of row pairs with the per-pair partial derivatives
    """
    rows: np.ndarray
    cols: np.ndarray
    distances: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    grad_scalars: np.ndarray


def pair_chunks(count, chunk=PAIR_CHUNK):
    """
    Splits ``range(count)`` into fixed consecutive slices
    """
    return [slice(start, min(start + chunk, count)) for start in range(0, count, chunk)]


def run_chunks(function, chunks, threads=1):
    """
    Applies ``function`` to every chunk, in parallel when ``threads > 1``, and returns the results in
    chunk order so that reductions over them are independent of the thread count
    """
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, chunks))
    return [function(chunk) for chunk in chunks]


class DistanceModel(object):
    """
    Base class of the distance models

    Subclasses implement ``_pair_terms`` returning distances and partial derivatives for matched
    batches of ambient rows.
    """

    def __init__(self, signature):
        self.signature = signature
        self.d = signature.ambient_dim

    @property
    def n_weights(self):
        return weight_count(self.signature)

    @property
    def n_offset(self):
        return 0

    def layout(self, n):
        return ParamLayout(n=n, d=self.d, n_weights=self.n_weights - self.n_offset, n_offset=self.n_offset)

    def initial_scalars(self):
        """
        Initial scalar block: ``theta = 0`` (unit weights) and ``c = 1``
        """
        return np.concatenate([np.zeros(self.n_weights - self.n_offset), np.full(self.n_offset, INITIAL_OFFSET)])

    def init_state(self, embedding):
        """
        Wraps an initial embedding matrix into an ``EmbeddingState`` with the initial scalars

        :param embedding: Array of shape ``(n, d)``
        :return: EmbeddingState
        """
        embedding = np.asarray(embedding, dtype=np.float64)
        if embedding.ndim != 2 or embedding.shape[1] != self.d:
            raise DimensionMismatchError("Embedding of shape %s does not match d=%i" % (embedding.shape, self.d))
        return EmbeddingState.from_parts(self.layout(embedding.shape[0]), embedding, self.initial_scalars())

    def _pair_terms(self, scalars, x, y):
        raise NotImplementedError

    def evaluate(self, state, rows, cols):
        """
        Evaluates the distances of the row pairs ``(rows[k], cols[k])`` with their partial derivatives

        :param state: EmbeddingState
        :param rows: Integer array of source rows
        :param cols: Integer array of target rows
        :return: PairEvaluation
        """
        embedding = state.embedding
        x = embedding[rows]
        y = embedding[cols]
        distances, grad_x, grad_y, grad_scalars = self._pair_terms(state.scalars, x, y)
        return PairEvaluation(rows=rows, cols=cols, distances=distances, grad_x=grad_x, grad_y=grad_y,
                              grad_scalars=grad_scalars)

    def backward(self, evaluation, upstream, layout):
        """
        Chains the upstream derivatives ``dL/dd_k`` through a pair evaluation

        :param evaluation: PairEvaluation of a chunk
        :param upstream: Array with one derivative per pair of the chunk
        :param layout: ParamLayout of the state
        :return: Flat gradient vector for the chunk
        """
        grad = np.zeros(layout.size)
        d = layout.d
        columns = np.arange(d)
        weighted_x = evaluation.grad_x * upstream[:, None]
        weighted_y = evaluation.grad_y * upstream[:, None]
        flat_index = np.concatenate([
            (evaluation.rows[:, None] * d + columns).ravel(),
            (evaluation.cols[:, None] * d + columns).ravel()])
        grad[:layout.n * d] = np.bincount(
            flat_index, weights=np.concatenate([weighted_x.ravel(), weighted_y.ravel()]),
            minlength=layout.n * d)
        if layout.n_scalars:
            grad[layout.n * d:] = upstream @ evaluation.grad_scalars
        return grad

    def pair_distances(self, state, rows, cols, threads=1):
        """
        Distances of many row pairs, evaluated in fixed chunks

        :param state: EmbeddingState
        :param rows: Integer array of source rows
        :param cols: Integer array of target rows
        :param threads: Number of worker threads (default=1)
        :return: Array of distances
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        embedding = state.embedding

        def run(chunk):
            return self._pair_terms(state.scalars, embedding[rows[chunk]], embedding[cols[chunk]])[0]

        results = run_chunks(run, pair_chunks(len(rows)), threads)
        return np.concatenate(results) if results else np.zeros(0)

    def distance(self, state, x, y):
        """
        Distance between two ambient vectors under the scalar parameters of ``state``

        :param state: EmbeddingState (only its scalars are used) or a one-dimensional scalar block
        :param x: Ambient vector of length ``d``
        :param y: Ambient vector of length ``d``
        :return: Float
        """
        x, y = self._check_vectors(x, y)
        return float(self._pair_terms(self._scalars_of(state), x[None, :], y[None, :])[0][0])

    def model_gradients(self, state, x_idx, y_idx):
        """
        Gradients of the distance between two embedding rows

        :param state: EmbeddingState
        :param x_idx: Row index of the first point
        :param y_idx: Row index of the second point
        :return: Dictionary with the following keys:

            - 'distance': Distance between the rows
            - 'x': Gradient with respect to row ``x_idx``
            - 'y': Gradient with respect to row ``y_idx``
            - 'weights': Gradient with respect to the log-weights ``theta``
            - 'offset': Gradient with respect to the dot offset ``c`` (empty for metric models)
        """
        embedding = state.embedding
        n = state.layout.n
        if not (0 <= x_idx < n and 0 <= y_idx < n):
            raise DimensionMismatchError("Row indices (%s, %s) outside [0, %i)" % (x_idx, y_idx, n))
        distances, grad_x, grad_y, grad_scalars = self._pair_terms(
            state.scalars, embedding[[x_idx]], embedding[[y_idx]])
        n_weights = state.layout.n_weights
        return {
            'distance': float(distances[0]),
            'x': grad_x[0],
            'y': grad_y[0],
            'weights': grad_scalars[0, :n_weights],
            'offset': grad_scalars[0, n_weights:]
        }

    def describe_weights(self, state):
        """
        Lists the scalar parameters of the model with their meaning

        :param state: EmbeddingState
        :return: Dataframe with one row per scalar parameter
        """
        raise NotImplementedError

    def _scalars_of(self, state):
        if isinstance(state, EmbeddingState):
            return state.scalars
        scalars = np.asarray(state, dtype=np.float64).ravel()
        if scalars.size != self.n_weights:
            raise DimensionMismatchError("Expected %i scalar parameters, got %i" % (self.n_weights, scalars.size))
        return scalars

    def _check_vectors(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != (self.d,) or y.shape != (self.d,):
            raise DimensionMismatchError("Expected vectors of length %i, got %s and %s" % (self.d, x.shape, y.shape))
        return x, y


def _root_sum_squares(values, weights):
    """
    ``sqrt(sum_j w_j v_j^2)`` with derivatives with respect to ``v_j`` and ``theta_j = log w_j``
    """
    total = np.sqrt(np.sum(weights * values * values, axis=1))
    positive = total > 0
    safe = np.where(positive, total, 1.0)[:, None]
    coef = np.where(positive[:, None], weights * values / safe, 0.0)
    grad_theta = np.where(positive[:, None], 0.5 * weights * values * values / safe, 0.0)
    return total, coef, grad_theta


class ProductModel(DistanceModel):
    """
    Single spaces and product spaces ``sqrt(sum_i w_i d_i^2)`` over disjoint coordinate blocks

    Euclidean factors use the fixed weight 1; every spherical or hyperbolic factor owns one log-weight,
    which for a single space acts as its trainable curvature.
    """

    def __init__(self, signature):
        if signature.variant not in (SINGLE, PRODUCT):
            raise ConfigurationError("ProductModel needs a single or product signature, got %s" % signature.variant)
        super(ProductModel, self).__init__(signature)
        self.factors = signature.factors
        self.weight_index = []
        counter = 0
        for factor in self.factors:
            if factor.kind == EUCLIDEAN:
                self.weight_index.append(None)
            else:
                self.weight_index.append(counter)
                counter += 1

    def _factor_weights(self, scalars, fixed_weights=None):
        if fixed_weights is not None:
            return np.asarray(fixed_weights, dtype=np.float64)
        return np.array([1.0 if j is None else np.exp(scalars[j]) for j in self.weight_index])

    def _pair_terms(self, scalars, x, y):
        m = x.shape[0]
        k = len(self.factors)
        values = np.empty((m, k))
        partials = []
        for i, factor in enumerate(self.factors):
            dist, gx, gy = distance_and_gradient(
                factor.kind, x[:, factor.start:factor.stop], y[:, factor.start:factor.stop])
            values[:, i] = dist
            partials.append((gx, gy))
        weights = self._factor_weights(scalars)
        total, coef, grad_theta = _root_sum_squares(values, weights[None, :])
        grad_x = np.empty_like(x)
        grad_y = np.empty_like(y)
        for i, factor in enumerate(self.factors):
            gx, gy = partials[i]
            grad_x[:, factor.start:factor.stop] = coef[:, i, None] * gx
            grad_y[:, factor.start:factor.stop] = coef[:, i, None] * gy
        grad_scalars = np.zeros((m, self.n_weights))
        for i, j in enumerate(self.weight_index):
            if j is not None:
                grad_scalars[:, j] = grad_theta[:, i]
        return total, grad_x, grad_y, grad_scalars

    def describe_weights(self, state):
        rows = []
        for factor, j in zip(self.factors, self.weight_index):
            rows.append({
                'factor': factor.label(),
                'coordinates': "%i-%i" % (factor.start + 1, factor.stop),
                'theta': np.nan if j is None else float(state.scalars[j]),
                'weight': 1.0 if j is None else float(np.exp(state.scalars[j]))
            })
        return pd.DataFrame(rows)


class OverlayModel(DistanceModel):
    """
    Overlaying space with the universal dyadic signature

    Every subset of every layer is read as a Euclidean, spherical and hyperbolic vector at once; the
    ``3 (2^(t+1) - 1)`` weighted terms are aggregated by their maximum (``l0``), sum (``l1``) or root
    of the sum of squares (``l2``).
    """

    def __init__(self, signature):
        if signature.variant != OVERLAY:
            raise ConfigurationError("OverlayModel needs an overlay signature, got %s" % signature.variant)
        super(OverlayModel, self).__init__(signature)
        self.terms = signature.overlay_terms()
        self.aggregation = signature.aggregation

    def term_distances(self, x, y):
        """
        Distances and partial derivatives of every overlay term for batches of rows

        :param x: Array of shape ``(m, d)``
        :param y: Array of shape ``(m, d)``
        :return: Tuple ``(values, partials)`` with ``values`` of shape ``(m, K)`` and a list of
            ``(grad_x, grad_y)`` pairs on the term's coordinates
        """
        values = np.empty((x.shape[0], len(self.terms)))
        partials = []
        for j, term in enumerate(self.terms):
            dist, gx, gy = distance_and_gradient(term.kind, x[:, term.start:term.stop], y[:, term.start:term.stop])
            values[:, j] = dist
            partials.append((gx, gy))
        return values, partials

    def aggregate(self, values, weights):
        """
        Aggregates weighted term distances

        :param values: Term distances of shape ``(m, K)``
        :param weights: Non-negative weights of shape ``(K,)``
        :return: Tuple ``(distances, coef, grad_theta)`` where ``coef[:, j]`` is the derivative with
            respect to term ``j`` and ``grad_theta[:, j]`` the derivative with respect to ``log w_j``
        """
        weights = np.asarray(weights, dtype=np.float64)[None, :]
        if self.aggregation == 'l1':
            weighted = weights * values
            return weighted.sum(axis=1), np.broadcast_to(weights, values.shape), weighted
        if self.aggregation == 'l2':
            return _root_sum_squares(values, weights)
        weighted = weights * values
        # np.argmax returns the lowest index among ties
        winner = np.argmax(weighted, axis=1)
        picked = np.arange(values.shape[0])
        coef = np.zeros_like(values)
        coef[picked, winner] = weights[0, winner]
        grad_theta = np.zeros_like(values)
        grad_theta[picked, winner] = weighted[picked, winner]
        return weighted[picked, winner], coef, grad_theta

    def _pair_terms(self, scalars, x, y):
        values, partials = self.term_distances(x, y)
        total, coef, grad_theta = self.aggregate(values, np.exp(scalars))
        grad_x = np.zeros_like(x)
        grad_y = np.zeros_like(y)
        for j, term in enumerate(self.terms):
            gx, gy = partials[j]
            grad_x[:, term.start:term.stop] += coef[:, j, None] * gx
            grad_y[:, term.start:term.stop] += coef[:, j, None] * gy
        return total, grad_x, grad_y, np.array(grad_theta)

    def distance_with_weights(self, x, y, weights):
        """
        Overlay distance under explicit non-negative weights (zero weights switch terms off)

        :param x: Ambient vector of length ``d``
        :param y: Ambient vector of length ``d``
        :param weights: Array with one non-negative weight per term
        :return: Float
        """
        x, y = self._check_vectors(x, y)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (len(self.terms),) or np.any(weights < 0):
            raise ConfigurationError("Expected %i non-negative weights" % len(self.terms))
        values, _ = self.term_distances(x[None, :], y[None, :])
        return float(self.aggregate(values, weights)[0][0])

    def describe_weights(self, state):
        rows = []
        for term, theta in zip(self.terms, state.scalars):
            rows.append({
                'layer': term.layer,
                'subset': term.subset,
                'coordinates': "%i-%i" % (term.start + 1, term.stop),
                'space': term.kind,
                'theta': float(theta),
                'weight': float(np.exp(theta))
            })
        return pd.DataFrame(rows)


class DotModel(DistanceModel):
    """
    Dot-product scores ``c - x.y`` (``dot``) or ``c exp(-x.y)`` (``expdot``) with trainable offset ``c``

    The scores are not metrics and may be negative.
    """

    def __init__(self, signature):
        if signature.variant not in (DOT, EXPDOT):
            raise ConfigurationError("DotModel needs a dot signature, got %s" % signature.variant)
        super(DotModel, self).__init__(signature)
        self.kind = signature.variant

    @property
    def n_offset(self):
        return 1

    def _pair_terms(self, scalars, x, y):
        c = scalars[0]
        products = np.sum(x * y, axis=1)
        grad_scalars = np.empty((x.shape[0], 1))
        if self.kind == DOT:
            grad_scalars[:, 0] = 1.0
            return c - products, -y, -x, grad_scalars
        clamped = np.clip(products, -EXPDOT_CLAMP, EXPDOT_CLAMP)
        scale = np.exp(-clamped)
        inside = (np.abs(products) < EXPDOT_CLAMP)[:, None]
        factor = np.where(inside, -c * scale[:, None], 0.0)
        grad_scalars[:, 0] = scale
        return c * scale, factor * y, factor * x, grad_scalars

    def describe_weights(self, state):
        return pd.DataFrame([{'parameter': 'c', 'value': float(state.offset[0])}])


def build_model(signature):
    """
    Creates the distance model for a parsed signature

    :param signature: Signature instance
    :return: ProductModel, OverlayModel or DotModel
    """
    if signature.variant in (SINGLE, PRODUCT):
        return ProductModel(signature)
    if signature.variant == OVERLAY:
        return OverlayModel(signature)
    if signature.variant in (DOT, EXPDOT):
        return DotModel(signature)
    raise ConfigurationError("Unknown signature variant '%s'" % signature.variant)


def product_distance(signature, params, x, y):
    """
    Product-space distance ``sqrt(sum_i w_i d_{D_i}(x_i, y_i)^2)`` of two ambient vectors

    :param signature: Single or product Signature
    :param params: EmbeddingState or scalar block with one log-weight per non-Euclidean factor
    :param x: Ambient vector
    :param y: Ambient vector
    :return: Float
    """
    return ProductModel(signature).distance(params, x, y)


def overlay_distance(signature, params, x, y):
    """
    Overlaying-space distance of two ambient vectors under the signature's aggregation

    :param signature: Overlay Signature
    :param params: EmbeddingState or scalar block with the ``3 (2^(t+1) - 1)`` log-weights
    :param x: Ambient vector
    :param y: Ambient vector
    :return: Float
    """
    return OverlayModel(signature).distance(params, x, y)


def dot_distance(signature, params, x, y):
    """
    Dot-product score ``c - x.y`` or ``c exp(-x.y)`` of two ambient vectors

    :param signature: Dot or ExpDot Signature
    :param params: EmbeddingState or scalar block holding the offset ``c``
    :param x: Ambient vector
    :param y: Ambient vector
    :return: Float (may be negative)
    """
    return DotModel(signature).distance(params, x, y)
