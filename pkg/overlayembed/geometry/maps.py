# -*- coding: utf-8 -*-

"""
Projections of ambient vectors onto the constituent spaces and the base distances between them.

All functions operate on the last axis, so they accept single vectors of shape ``(k,)`` as well as
batches of shape ``(m, k)``. Spaces have curvature +1 (sphere) and -1 (hyperboloid); other curvatures
are expressed by the weights of the distance models.
"""

__author__ = 'Overlayembed developers'

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import ZeroVectorError, DimensionMismatchError, ConfigurationError

EUCLIDEAN = 'E'
SPHERICAL = 'S'
HYPERBOLIC = 'H'
SPACE_KINDS = (EUCLIDEAN, SPHERICAL, HYPERBOLIC)

# Interior nudge for derivatives of arccos / arccosh at the boundary of their domain
GRADIENT_EPS = 1e-7
HYPERBOLOID_TOL = 1e-9


def _as_float(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise DimensionMismatchError("Ambient vectors need at least one coordinate")
    return x


def _check_pair(x, y):
    x, y = _as_float(x), _as_float(y)
    if x.shape != y.shape:
        raise DimensionMismatchError("Vectors of shapes %s and %s cannot be compared" % (x.shape, y.shape))
    return x, y


def _norms(x):
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroVectorError("The zero vector has no spherical projection")
    return norms


def map_spherical(x):
    """
    Projects ambient vectors onto the unit sphere, ``x / |x|``

    :param x: Ambient vector(s), last axis holds the coordinates
    :return: Unit vector(s) of the same shape
    """
    x = _as_float(x)
    return x / _norms(x)


def map_hyperbolic(x):
    """
    Lifts ambient vectors onto the hyperboloid, ``(sqrt(1 + |x|^2), x_1, ..., x_d)``

    The time-like coordinate runs over all ambient coordinates so that every output satisfies
    ``<p, p>_h = 1``.

    :param x: Ambient vector(s) of length ``d``
    :return: Points of length ``d + 1`` on the hyperboloid
    """
    x = _as_float(x)
    head = np.sqrt(1.0 + np.sum(x * x, axis=-1, keepdims=True))
    return np.concatenate([head, x], axis=-1)


def lorentz_inner(p, q):
    """
    Lorentz inner product ``p_0 q_0 - sum_{i>0} p_i q_i``
    """
    p, q = _check_pair(p, q)
    return p[..., 0] * q[..., 0] - np.sum(p[..., 1:] * q[..., 1:], axis=-1)


def is_on_hyperboloid(p, tol=HYPERBOLOID_TOL):
    """
    Checks the hyperboloid constraint ``<p, p>_h = 1`` with ``p_0 >= 1``
    """
    p = _as_float(p)
    return bool(np.all(np.abs(lorentz_inner(p, p) - 1.0) <= tol * np.maximum(1.0, p[..., 0] ** 2))
                and np.all(p[..., 0] >= 1.0))


def dist_euclidean(x, y):
    """
    Euclidean distance between ambient vectors

    :param x: Ambient vector(s)
    :param y: Ambient vector(s) of the same shape
    :return: Distance(s), reduced over the last axis
    """
    x, y = _check_pair(x, y)
    return np.linalg.norm(x - y, axis=-1)


def dist_spherical(x, y):
    """
    Great-circle distance between the spherical projections of two ambient vectors

    Evaluated as ``2 atan2(|u - v|, |u + v|)``, which equals ``arccos(clip(u.v, -1, 1))`` but keeps full
    precision for nearby and antipodal points.

    :param x: Non-zero ambient vector(s)
    :param y: Non-zero ambient vector(s) of the same shape
    :return: Distance(s) in ``[0, pi]``
    """
    x, y = _check_pair(x, y)
    u, v = map_spherical(x), map_spherical(y)
    return 2.0 * np.arctan2(np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1))


def _hyperbolic_excess(x, y):
    """
    Returns ``<M_H(x), M_H(y)>_h - 1`` without cancellation, with the lifted time coordinates
    """
    x0 = np.sqrt(1.0 + np.sum(x * x, axis=-1))
    y0 = np.sqrt(1.0 + np.sum(y * y, axis=-1))
    diff = x - y
    time_gap = np.sum(diff * (x + y), axis=-1) / (x0 + y0)
    excess = 0.5 * (np.sum(diff * diff, axis=-1) - time_gap * time_gap)
    return np.maximum(excess, 0.0), x0, y0


def dist_hyperbolic(x, y):
    """
    Hyperbolic distance between the hyperboloid lifts of two ambient vectors, ``arccosh(<M_H(x), M_H(y)>_h)``

    :param x: Ambient vector(s)
    :param y: Ambient vector(s) of the same shape
    :return: Non-negative distance(s)
    """
    x, y = _check_pair(x, y)
    excess, _, _ = _hyperbolic_excess(x, y)
    return np.log1p(excess + np.sqrt(excess * (excess + 2.0)))


def distance_and_gradient(kind, x, y):
    """
    Evaluates a base distance together with its gradients with respect to the ambient coordinates

    Near the boundary of the arccos/arccosh domain the derivative is evaluated with its argument nudged
    ``GRADIENT_EPS`` inside the domain, so coincident (or antipodal) points produce finite gradients.

    :param kind: One of ``'E'``, ``'S'``, ``'H'``
    :param x: Ambient vector(s)
    :param y: Ambient vector(s) of the same shape
    :return: Tuple ``(distance, grad_x, grad_y)``
    """
    x, y = _check_pair(x, y)
    if kind == EUCLIDEAN:
        diff = x - y
        dist = np.linalg.norm(diff, axis=-1)
        grad_x = diff / np.maximum(dist, GRADIENT_EPS)[..., None]
        return dist, grad_x, -grad_x
    if kind == SPHERICAL:
        x_norm, y_norm = _norms(x), _norms(y)
        u, v = x / x_norm, y / y_norm
        dist = 2.0 * np.arctan2(np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1))
        cos = np.sum(u * v, axis=-1)
        nudged = np.clip(cos, -1.0 + GRADIENT_EPS, 1.0 - GRADIENT_EPS)
        factor = (-1.0 / np.sqrt(1.0 - nudged * nudged))[..., None]
        cos = cos[..., None]
        grad_x = factor * (v - cos * u) / x_norm
        grad_y = factor * (u - cos * v) / y_norm
        return dist, grad_x, grad_y
    if kind == HYPERBOLIC:
        excess, x0, y0 = _hyperbolic_excess(x, y)
        dist = np.log1p(excess + np.sqrt(excess * (excess + 2.0)))
        nudged = np.maximum(excess, GRADIENT_EPS)
        factor = (1.0 / np.sqrt(nudged * (nudged + 2.0)))[..., None]
        grad_x = factor * ((y0 / x0)[..., None] * x - y)
        grad_y = factor * ((x0 / y0)[..., None] * y - x)
        return dist, grad_x, grad_y
    raise ConfigurationError("Unknown space kind '%s', expected one of %s" % (kind, SPACE_KINDS))


def base_distance(kind, x, y):
    """
    Dispatches to the base distance of the given space kind
    """
    if kind == EUCLIDEAN:
        return dist_euclidean(x, y)
    if kind == SPHERICAL:
        return dist_spherical(x, y)
    if kind == HYPERBOLIC:
        return dist_hyperbolic(x, y)
    raise ConfigurationError("Unknown space kind '%s', expected one of %s" % (kind, SPACE_KINDS))


def grad_distance(kind, x, y):
    """
    Gradients of a base distance with respect to both ambient arguments

    :param kind: One of ``'E'``, ``'S'``, ``'H'``
    :param x: Ambient vector(s)
    :param y: Ambient vector(s) of the same shape
    :return: Tuple ``(grad_x, grad_y)``
    """
    _, grad_x, grad_y = distance_and_gradient(kind, x, y)
    return grad_x, grad_y
