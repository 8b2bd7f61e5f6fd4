# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
from dataclasses import dataclass

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import ConfigurationError, DimensionMismatchError, DivergenceError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_INIT_SCALE = 1e-1


@dataclass
class AdamState:
    """
    Moment estimates of Adam, aligned with the flat parameter layout
    """
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, size):
        return cls(first_moment=np.zeros(size), second_moment=np.zeros(size), step_count=0)

    def copy(self):
        return AdamState(self.first_moment.copy(), self.second_moment.copy(), self.step_count)


def init_embedding(n, d, seed, init_scale=DEFAULT_INIT_SCALE):
    """
    Draws the initial ambient vectors i.i.d. uniform in ``[-init_scale, init_scale]``

    :param n: Number of nodes
    :param d: Ambient dimension
    :param seed: Seed of the ``numpy`` generator
    :param init_scale: Half-width of the uniform interval (default=0.1)
    :return: Array of shape ``(n, d)``
    """
    if n < 1 or d < 1:
        raise ConfigurationError("Embedding needs n >= 1 and d >= 1, got n=%s, d=%s" % (n, d))
    if init_scale < 0:
        raise ConfigurationError("init_scale must be non-negative, got %s" % init_scale)
    if seed < 0:
        raise ConfigurationError("seed must be non-negative, got %s" % seed)
    rng = np.random.default_rng(seed)
    return rng.uniform(-init_scale, init_scale, size=(n, d))


def _locate_block(layout, index, size):
    if layout is None:
        return None, slice(0, size)
    for name, block in layout.blocks().items():
        if block.start <= index < block.stop:
            return name, block
    return None, slice(0, size)


def adam_step(params, grads, state, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS, layout=None,
              iteration=None):
    """
    Bias-corrected Adam update

    :param params: Flat parameter vector
    :param grads: Gradient aligned with ``params``
    :param state: AdamState of the previous step
    :param lr: Learning rate
    :param layout: Optional ParamLayout used to name the offending block in divergence diagnostics
    :param iteration: Optional iteration number for diagnostics
    :return: Tuple ``(new_params, new_state)``
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.first_moment.shape != params.shape:
        raise DimensionMismatchError("Parameters %s, gradients %s and moments %s are not aligned" % (
            params.shape, grads.shape, state.first_moment.shape))
    finite = np.isfinite(grads)
    if not finite.all():
        name, block = _locate_block(layout, int(np.flatnonzero(~finite)[0]), grads.size)
        values = grads[block][finite[block]]
        raise DivergenceError(
            "Non-finite gradient", iteration=iteration, block=name,
            max_abs_gradient=float(np.max(np.abs(values))) if values.size else None)

    step = state.step_count + 1
    first = beta1 * state.first_moment + (1.0 - beta1) * grads
    second = beta2 * state.second_moment + (1.0 - beta2) * grads * grads
    first_hat = first / (1.0 - beta1 ** step)
    second_hat = second / (1.0 - beta2 ** step)
    updated = params - lr * first_hat / (np.sqrt(second_hat) + eps)
    return updated, AdamState(first_moment=first, second_moment=second, step_count=step)
