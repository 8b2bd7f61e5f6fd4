from overlayembed.metrics.evaluation import distortion_metric, map_metric, rank_table, relevant_neighbors, \
    average_precision
from overlayembed.metrics.reports import MetricsReport, reports_frame, write_reports_csv, summarize_restarts, \
    CSV_COLUMNS
