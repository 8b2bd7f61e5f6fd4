# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import json
from dataclasses import dataclass, asdict, field
from typing import Optional

# 3rd party packages
import numpy as np
import pandas as pd

# Project imports
from overlayembed.exceptions import DataError

CSV_COLUMNS = ('dataset', 'signature', 'loss', 'lr', 'seed', 'distortion', 'map', 'seconds')


@dataclass
class MetricsReport:
    """
    Evaluation metrics of one trained embedding with the metadata of the run that produced it
    """
    distortion: float
    map: float
    dataset: str = ''
    signature: str = ''
    loss: str = ''
    lr: Optional[float] = None
    seed: Optional[int] = None
    iterations: Optional[int] = None
    seconds: Optional[float] = None
    conversion: Optional[str] = None
    sphere_convention: Optional[str] = None
    per_node_ap: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.distortion is not None and not self.distortion >= 0:
            raise DataError("Distortion must be non-negative, got %s" % self.distortion)
        if self.map is not None and not 0.0 <= self.map <= 1.0:
            raise DataError("mAP must lie in [0, 1], got %s" % self.map)

    def to_dict(self, include_per_node=False):
        values = asdict(self)
        per_node = values.pop('per_node_ap')
        if include_per_node and per_node is not None:
            values['per_node_ap'] = [float(x) for x in per_node]
        return values

    def to_json(self, include_per_node=False):
        """
        Serializes the report to JSON with canonical (sorted) key order
        """
        return json.dumps(self.to_dict(include_per_node), sort_keys=True, indent=2)

    def save_json(self, path, include_per_node=True):
        with open(path, 'w') as f:
            f.write(self.to_json(include_per_node))
            f.write('\n')

    def csv_row(self):
        return {key: getattr(self, key) for key in CSV_COLUMNS}


def reports_frame(reports):
    """
    Collects reports into a dataframe with the CSV columns first

    :param reports: Iterable of MetricsReport
    :return: Dataframe
    """
    rows = [report.to_dict() for report in reports]
    frame = pd.DataFrame(rows)
    if frame.empty:
        return pd.DataFrame(columns=list(CSV_COLUMNS))
    extra = [column for column in frame.columns if column not in CSV_COLUMNS]
    return frame[list(CSV_COLUMNS) + extra]


def write_reports_csv(reports, path):
    """
    Writes the rows ``dataset,signature,loss,lr,seed,distortion,map,seconds`` with a header line
    """
    frame = reports_frame(reports)
    frame[list(CSV_COLUMNS)].to_csv(path, index=False)


def summarize_restarts(frame, metrics=('distortion', 'map')):
    """
    Mean and standard deviation of the metrics over the restarts of every (signature, loss, lr) cell

    :param frame: Dataframe of report rows, one per seed
    :param metrics: Metric columns to summarize
    :return: Dataframe with ``<metric>_mean``, ``<metric>_std`` and ``restarts`` columns
    """
    keys = ['signature', 'loss', 'lr']
    grouped = frame.groupby(keys, sort=False, dropna=False)
    summary = grouped[list(metrics)].agg(['mean', 'std'])
    summary.columns = ['%s_%s' % column for column in summary.columns]
    summary['restarts'] = grouped.size()
    return summary.reset_index()


def format_mean_std(mean, std, digits=4):
    if pd.isna(mean):
        return 'failed'
    if pd.isna(std):
        return '%.*f' % (digits, mean)
    return '%.*f ± %.*f' % (digits, mean, digits, std)
