# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

# 3rd party packages
import numpy as np
import pandas as pd

# Project imports
from overlayembed.exceptions import ConfigurationError, DivergenceError, NumericalError
from overlayembed.graph.paths import shortest_paths
from overlayembed.losses.objectives import loss_and_gradient, DISTORTION
from overlayembed.metrics.evaluation import distortion_metric, map_metric
from overlayembed.optimizer.adam import AdamState, adam_step, init_embedding, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, \
    DEFAULT_INIT_SCALE
from overlayembed.spaces.models import EmbeddingState, build_model

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ('iteration', 'loss', 'metric')


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimisation settings of a training run

    ``eval_every`` adds the evaluation metric to the loss trace every that many iterations (0 evaluates the
    final iteration only); ``log_every`` sets the INFO logging interval.
    """
    iterations: int = 2000
    learning_rate: float = 0.1
    lr_sweep: Optional[Tuple[float, ...]] = None
    seed: int = 0
    adam_beta1: float = ADAM_BETA1
    adam_beta2: float = ADAM_BETA2
    adam_eps: float = ADAM_EPS
    init_scale: float = DEFAULT_INIT_SCALE
    eval_every: int = 0
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative, got %s" % self.iterations)
        for rate in self.learning_rates():
            if not rate > 0:
                raise ConfigurationError("Learning rates must be positive, got %s" % rate)
        if self.init_scale < 0:
            raise ConfigurationError("init_scale must be non-negative, got %s" % self.init_scale)
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative, got %s" % self.seed)

    def learning_rates(self):
        if self.lr_sweep:
            return tuple(float(rate) for rate in self.lr_sweep)
        return (float(self.learning_rate),)


@dataclass
class TrainResult:
    """
    Outcome of ``train``: the selected run and a summary of the learning-rate sweep
    """
    model: object
    state: EmbeddingState
    adam_state: AdamState
    trace: pd.DataFrame
    learning_rate: float
    metric_name: str
    metric: float
    seconds: float
    sweep: pd.DataFrame = field(default_factory=pd.DataFrame)


def metric_name_of(loss_spec):
    return 'distortion' if loss_spec.kind == DISTORTION else 'map'


def evaluate_metric(metric_name, model, state, graph, targets, threads=1):
    """
    Evaluates the selection metric of a loss kind: distortion for distortion training, mAP for proxy training
    """
    if metric_name == 'distortion':
        return distortion_metric(model, state, targets, threads=threads)
    return map_metric(model, state, graph, threads=threads)


def _better(metric_name, candidate, incumbent):
    if incumbent is None:
        return True
    if metric_name == 'distortion':
        return candidate < incumbent
    return candidate > incumbent


def _run_single_rate(model, graph, targets, loss_spec, config, rate, state, adam_state, start_iteration, threads):
    layout = state.layout
    metric_name = metric_name_of(loss_spec)
    records = []
    last = start_iteration + config.iterations - 1
    for iteration in range(start_iteration, start_iteration + config.iterations):
        loss, grad = loss_and_gradient(model, state, loss_spec, graph=graph, targets=targets, seed=config.seed,
                                       iteration=iteration, threads=threads)
        if not np.isfinite(loss):
            raise DivergenceError("Non-finite loss", iteration=iteration)
        flat, adam_state = adam_step(state.flat, grad, adam_state, rate, beta1=config.adam_beta1,
                                     beta2=config.adam_beta2, eps=config.adam_eps, layout=layout,
                                     iteration=iteration)
        state = EmbeddingState(layout, flat)
        metric = np.nan
        if iteration == last or (config.eval_every and (iteration + 1) % config.eval_every == 0):
            metric = evaluate_metric(metric_name, model, state, graph, targets, threads)
        records.append((iteration, loss, metric))
        if config.log_every and (iteration + 1) % config.log_every == 0:
            logger.info("lr=%g iteration %i loss %.6g", rate, iteration + 1, loss)
    final = evaluate_metric(metric_name, model, state, graph, targets, threads) if not records else records[-1][2]
    if not np.isfinite(final):
        raise DivergenceError("Non-finite %s after training" % metric_name, iteration=last)
    trace = pd.DataFrame(records, columns=list(TRACE_COLUMNS))
    return state, adam_state, trace, float(final)


def train(graph, signature, loss_spec, config, targets=None, initial_state=None, adam_state=None,
          start_iteration=0, threads=1):
    """
    Trains an embedding of ``graph`` in the space described by ``signature``

    One full optimisation is run per learning rate of the sweep (or the single configured rate) from the same
    seeded initialisation; the run with the best final metric is returned (lowest distortion for the
    distortion loss, highest mAP for the proxy loss). A rate whose loss or gradient becomes non-finite is
    abandoned with a warning and the sweep continues.

    Passing ``initial_state``, ``adam_state`` and ``start_iteration`` of an earlier run continues its
    trajectory exactly.

    :param graph: Connected Graph
    :param signature: Parsed Signature
    :param loss_spec: LossSpec
    :param config: TrainConfig
    :param targets: Optional DistanceMatrix; computed from the graph when needed and not given
    :param initial_state: Optional EmbeddingState to start from
    :param adam_state: Optional AdamState to continue from
    :param start_iteration: Iteration number of the first step (default=0)
    :param threads: Number of worker threads for loss and metric evaluation (default=1)
    :return: TrainResult
    """
    graph.check_connected()
    model = build_model(signature)
    loss_spec.check_model(model)
    metric_name = metric_name_of(loss_spec)
    if targets is None and metric_name == 'distortion':
        targets = shortest_paths(graph, threads=threads)
    if initial_state is None:
        initial_state = model.init_state(
            init_embedding(graph.node_count, signature.ambient_dim, config.seed, config.init_scale))
    elif initial_state.layout != model.layout(graph.node_count):
        raise ConfigurationError("Initial state layout %s does not match the model layout %s" % (
            initial_state.layout, model.layout(graph.node_count)))
    if adam_state is None:
        adam_state = AdamState.zeros(initial_state.layout.size)

    best = None
    sweep_rows = []
    for rate in config.learning_rates():
        started = time.perf_counter()
        logger.info("Training %s (%s loss) with lr=%g for %i iterations", signature.text, loss_spec.kind, rate,
                    config.iterations)
        try:
            state, final_adam, trace, metric = _run_single_rate(
                model, graph, targets, loss_spec, config, rate, initial_state.copy(), adam_state.copy(),
                start_iteration, threads)
        except NumericalError as err:
            warnings.warn("Learning rate %g abandoned: %s" % (rate, err))
            logger.warning("lr=%g failed: %s", rate, err)
            sweep_rows.append({'lr': rate, metric_name: np.nan, 'status': 'failed'})
            continue
        seconds = time.perf_counter() - started
        logger.info("lr=%g final %s %.6g (%.1f s)", rate, metric_name, metric, seconds)
        sweep_rows.append({'lr': rate, metric_name: metric, 'status': 'ok'})
        if best is None or _better(metric_name, metric, best.metric):
            best = TrainResult(model=model, state=state, adam_state=final_adam, trace=trace, learning_rate=rate,
                               metric_name=metric_name, metric=metric, seconds=seconds)
    if best is None:
        raise DivergenceError("All learning rates %s diverged" % (config.learning_rates(),))
    best.sweep = pd.DataFrame(sweep_rows)
    if len(sweep_rows) > 1:
        logger.info("Selected lr=%g with %s %.6g", best.learning_rate, metric_name, best.metric)
    return best


def save_trace(trace, path):
    """
    Writes a loss trace as CSV with the columns ``iteration,loss,metric``
    """
    trace.to_csv(path, index=False, columns=list(TRACE_COLUMNS))
