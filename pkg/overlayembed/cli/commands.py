# -*- coding: utf-8 -*-

"""
Implementation of the command-line subcommands.

Every command takes a validated ``RunConfig``, writes its artifacts below ``config.output`` and returns the
process exit code. Errors propagate as ``OverlayEmbedError`` subclasses and are mapped to exit codes by
``overlayembed.cli.main``.
"""

__author__ = 'Overlayembed developers'

# Native Python packages
import logging
import os
import time
import warnings

# 3rd party packages
import numpy as np
import pandas as pd

# Project imports
from overlayembed.cli.config import resolve_dataset, BIPARTITE_SIGNATURES
from overlayembed.exceptions import OverlayEmbedError, ConfigurationError, DataError, DivergenceError
from overlayembed.graph.io import load_edge_list, save_edge_list
from overlayembed.graph.paths import shortest_paths
from overlayembed.graph.synthetic import generate_bipartite
from overlayembed.io import write_embedding_dump, read_embedding_dump
from overlayembed.losses.objectives import DISTORTION, PROXY
from overlayembed.metrics.evaluation import distortion_metric, map_metric
from overlayembed.metrics.reports import MetricsReport, write_reports_csv, summarize_restarts, \
    format_mean_std, CSV_COLUMNS
from overlayembed.optimizer.training import TrainConfig, train, save_trace
from overlayembed.spaces.models import build_model, EmbeddingState
from overlayembed.spaces.signature import parse_signature

logger = logging.getLogger(__name__)


def _output_dir(config):
    os.makedirs(config.output, exist_ok=True)
    return config.output


def _slug(text):
    return "".join(c if c.isalnum() else '_' for c in text).strip('_')


def load_dataset(config):
    """
    Loads the configured dataset with its target distance matrix

    :param config: RunConfig
    :return: Tuple ``(name, graph, targets)``
    """
    dataset = resolve_dataset(config)
    graph = load_edge_list(dataset['path'], weighted=dataset['weighted'])
    targets = shortest_paths(graph, threads=config.threads, raw_weights=config.raw_weights)
    logger.info("Dataset %s: %i nodes, %i edges (%s)", dataset['name'], graph.node_count, graph.edge_count,
                'weighted' if graph.weighted else 'unweighted')
    return dataset['name'], graph, targets


def train_config(config, rates, seed, iterations=None):
    return TrainConfig(iterations=config.iterations if iterations is None else iterations,
                       lr_sweep=tuple(rates), learning_rate=rates[0], seed=seed, init_scale=config.init_scale,
                       eval_every=config.eval_every, log_every=config.log_every)


def run_and_report(config, dataset_name, graph, targets, signature_text, loss, rates, seed, iterations=None):
    """
    Trains one (signature, loss, seed) cell over ``rates`` and evaluates both metrics exactly

    :return: Tuple ``(TrainResult, MetricsReport)``
    """
    signature = parse_signature(signature_text, config.dim, config.sphere_convention)
    loss_spec = config.loss_spec(loss)
    settings = train_config(config, rates, seed, iterations)
    started = time.perf_counter()
    result = train(graph, signature, loss_spec, settings, targets=targets, threads=config.threads)
    distortion = distortion_metric(result.model, result.state, targets, threads=config.threads)
    map_value, per_node = map_metric(result.model, result.state, graph, return_per_node=True,
                                     threads=config.threads)
    report = MetricsReport(
        distortion=distortion, map=map_value, dataset=dataset_name, signature=signature.canonical_text(),
        loss=loss, lr=result.learning_rate, seed=seed, iterations=settings.iterations,
        seconds=round(time.perf_counter() - started, 3), conversion=loss_spec.conversion if loss == PROXY else None,
        sphere_convention=signature.sphere_convention, per_node_ap=per_node)
    return result, report


def _seeds(config):
    return [config.seed + k for k in range(config.restarts)]


def cmd_embed(config):
    """
    Trains one embedding per restart and writes the dump, the loss trace and the metrics report

    Artifacts in ``config.output``: ``<stem>.ovle``, ``<stem>_trace.csv``, ``<stem>_report.json`` per seed
    and ``report.csv`` with one row per seed.

    :param config: RunConfig
    :return: Exit code
    """
    name, graph, targets = load_dataset(config)
    out = _output_dir(config)
    rates = config.learning_rates(name)
    reports = []
    for seed in _seeds(config):
        result, report = run_and_report(config, name, graph, targets, config.signature, config.loss, rates, seed)
        stem = os.path.join(out, "%s_%s_seed%i" % (_slug(name), _slug(config.signature), seed))
        write_embedding_dump(stem + '.ovle', report.signature, result.state.embedding, result.state.scalars)
        save_trace(result.trace, stem + '_trace.csv')
        report.save_json(stem + '_report.json')
        logger.info("%s seed %i: distortion %.6g, mAP %.6g", report.signature, seed, report.distortion, report.map)
        reports.append(report)
    write_reports_csv(reports, os.path.join(out, 'report.csv'))
    return 0


def _failed_row(dataset_name, signature_text, loss, lr, seed, err):
    warnings.warn("Cell %s / %s / lr=%s / seed=%s failed: %s" % (signature_text, loss, lr, seed, err))
    return {'dataset': dataset_name, 'signature': signature_text, 'loss': loss, 'lr': lr, 'seed': seed,
            'distortion': np.nan, 'map': np.nan, 'seconds': np.nan, 'status': 'failed: %s' % type(err).__name__}


def run_grid(config, dataset_name, graph, targets, signatures, loss, rates, iterations=None):
    """
    Runs every (signature, lr, seed) cell; failing cells are kept as rows with status ``failed``

    :return: Dataframe with the CSV columns plus ``status``, rows in input order
    """
    rows = []
    for signature_text in signatures:
        for lr in rates:
            for seed in _seeds(config):
                try:
                    _, report = run_and_report(config, dataset_name, graph, targets, signature_text, loss, [lr],
                                               seed, iterations)
                except OverlayEmbedError as err:
                    rows.append(_failed_row(dataset_name, signature_text, loss, lr, seed, err))
                    continue
                row = report.csv_row()
                row['signature'] = signature_text
                row['status'] = 'ok'
                rows.append(row)
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS) + ['status'])


def mark_best(summary, metric):
    """
    Adds a boolean ``best`` column marking the best learning rate of every signature

    :param summary: Output of ``summarize_restarts``
    :param metric: ``distortion`` (lower is better) or ``map`` (higher is better)
    """
    column = '%s_mean' % metric
    summary = summary.copy()
    summary['best'] = False
    for _, group in summary.groupby('signature', sort=False):
        values = group[column].dropna()
        if values.empty:
            continue
        index = values.idxmin() if metric == 'distortion' else values.idxmax()
        summary.loc[index, 'best'] = True
    return summary


def markdown_table(summary, metric):
    """
    Renders a sweep summary as a markdown table, best cells in bold
    """
    rows = []
    for _, row in summary.iterrows():
        cells = {}
        for name, label in (('distortion', 'Distortion'), ('map', 'mAP')):
            text = format_mean_std(row['%s_mean' % name], row['%s_std' % name])
            if name == metric and row['best']:
                text = '**%s**' % text
            cells[label] = text
        rows.append({'Signature': row['signature'], 'lr': row['lr'], 'Distortion': cells['Distortion'],
                     'mAP': cells['mAP'], 'Restarts': row['restarts']})
    return pd.DataFrame(rows).to_markdown(index=False)


def _write_tables(out, stem, grid, metric):
    grid.to_csv(os.path.join(out, stem + '.csv'), index=False)
    summary = mark_best(summarize_restarts(grid), metric)
    with open(os.path.join(out, stem + '.md'), 'w') as f:
        f.write(markdown_table(summary, metric))
        f.write('\n')
    return summary


def cmd_sweep(config):
    """
    Trains every signature of the list for every learning rate and writes a comparison table

    Artifacts in ``config.output``: ``sweep.csv`` (one row per signature, lr and seed) and ``sweep.md``
    (mean ± std over restarts, best learning rate per signature in bold).

    :param config: RunConfig
    :return: Exit code
    """
    name, graph, targets = load_dataset(config)
    out = _output_dir(config)
    grid = run_grid(config, name, graph, targets, config.signature_list(), config.loss, config.learning_rates(name))
    if (grid['status'] != 'ok').all():
        raise DivergenceError("Every cell of the sweep failed")
    metric = 'distortion' if config.loss == DISTORTION else 'map'
    _write_tables(out, 'sweep', grid, metric)
    return 0


def best_metric_space(summary, metric):
    """
    Picks the best metric (non-dot) signature of a summary

    :return: Row of the summary as a Series, or None when every metric cell failed
    """
    column = '%s_mean' % metric
    candidates = summary[~summary['signature'].str.upper().isin(['DOT', 'EXPDOT'])].dropna(subset=[column])
    if candidates.empty:
        return None
    index = candidates[column].idxmin() if metric == 'distortion' else candidates[column].idxmax()
    return candidates.loc[index]


def cmd_bipartite(config):
    """
    Compares metric spaces against the dot product on the synthetic bipartite graph

    Both losses are run for every signature and learning rate (distortion with ``iterations``, proxy with
    ``iterations_proxy``). Artifacts: ``bipartite_<loss>.csv``/``.md`` with the full grid and
    ``bipartite.md``/``bipartite.csv`` with the best metric space and the dot product per loss.

    :param config: RunConfig
    :return: Exit code
    """
    graph = generate_bipartite(config.n_small, config.n_large, config.p, config.seed)
    targets = shortest_paths(graph, threads=config.threads)
    name = 'bipartite_%i_%i' % (config.n_small, config.n_large)
    logger.info("Bipartite graph: %i nodes, %i edges", graph.node_count, graph.edge_count)
    out = _output_dir(config)
    signatures = config.signature_list() if config.signatures else list(BIPARTITE_SIGNATURES)
    rates = config.learning_rates(protocol='bipartite')

    rows = []
    grids = []
    for loss, iterations, metric in ((DISTORTION, config.iterations, 'distortion'),
                                     (PROXY, config.iterations_proxy, 'map')):
        grid = run_grid(config, name, graph, targets, signatures, loss, rates, iterations)
        grids.append(grid)
        summary = _write_tables(out, 'bipartite_%s' % loss, grid, metric)
        best_rows = summary[summary['best']]
        metric_row = best_metric_space(best_rows, metric)
        if metric_row is not None:
            rows.append({'loss': loss, 'model': 'best metric space', 'signature': metric_row['signature'],
                         'lr': metric_row['lr'], metric: metric_row['%s_mean' % metric]})
        for _, dot_row in best_rows[best_rows['signature'].str.upper() == 'DOT'].iterrows():
            rows.append({'loss': loss, 'model': 'c - dot', 'signature': dot_row['signature'],
                         'lr': dot_row['lr'], metric: dot_row['%s_mean' % metric]})
    if all((grid['status'] != 'ok').all() for grid in grids):
        raise DivergenceError("Every cell of the bipartite experiment failed")
    comparison = pd.DataFrame(rows, columns=['loss', 'model', 'signature', 'lr', 'distortion', 'map'])
    comparison.to_csv(os.path.join(out, 'bipartite.csv'), index=False)
    with open(os.path.join(out, 'bipartite.md'), 'w') as f:
        f.write(comparison.to_markdown(index=False))
        f.write('\n')
    return 0


def cmd_eval(config):
    """
    Evaluates a saved embedding dump against the configured dataset

    Writes ``<dump stem>_eval.json`` in ``config.output``.

    :param config: RunConfig with ``embedding`` pointing to an ``OVLE`` dump
    :return: Exit code
    """
    if not config.embedding:
        raise ConfigurationError("The eval command needs an embedding dump")
    dump = read_embedding_dump(config.embedding)
    name, graph, targets = load_dataset(config)
    embedding = dump['embedding']
    signature = parse_signature(dump['signature'], embedding.shape[1], config.sphere_convention)
    model = build_model(signature)
    if embedding.shape[0] != graph.node_count:
        raise DataError("Dump holds %i rows but the dataset has %i nodes" % (
            embedding.shape[0], graph.node_count))
    state = EmbeddingState.from_parts(model.layout(graph.node_count), embedding, dump['scalars'])
    map_value, per_node = map_metric(model, state, graph, return_per_node=True, threads=config.threads)
    report = MetricsReport(distortion=distortion_metric(model, state, targets, threads=config.threads),
                           map=map_value, dataset=name, signature=signature.canonical_text(),
                           sphere_convention=signature.sphere_convention, per_node_ap=per_node)
    stem = os.path.splitext(os.path.basename(config.embedding))[0]
    report.save_json(os.path.join(_output_dir(config), stem + '_eval.json'))
    logger.info("%s on %s: distortion %.6g, mAP %.6g", signature.text, name, report.distortion, report.map)
    return 0


def cmd_gen_bipartite(config):
    """
    Writes the synthetic bipartite graph as an edge list (``config.output`` if it names an ``.edges`` file,
    otherwise ``bipartite.edges`` inside it)

    :param config: RunConfig
    :return: Exit code
    """
    graph = generate_bipartite(config.n_small, config.n_large, config.p, config.seed)
    if config.output.endswith('.edges'):
        path = config.output
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
    else:
        path = os.path.join(_output_dir(config), 'bipartite.edges')
    save_edge_list(graph, path)
    logger.info("Wrote %i nodes and %i edges to %s", graph.node_count, graph.edge_count, path)
    return 0


COMMANDS = {
    'embed': cmd_embed,
    'sweep': cmd_sweep,
    'bipartite': cmd_bipartite,
    'eval': cmd_eval,
    'gen-bipartite': cmd_gen_bipartite,
}
