"""
实验结果 CSV 导出
  直方图: bin_lo,bin_hi,count_<method>...
  汇总: method,median,mean,max,diverged,ratio_to_prior
"""

import logging
from typing import Dict, Mapping

from certmodel.benchmark.histogram import Histogram
from certmodel.io.csv_io import table_to_csv

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ('median', 'mean', 'max', 'diverged', 'ratio_to_prior')


def histogram_csv(hist: Histogram) -> str:
    header = ['bin_lo', 'bin_hi'] + [f"count_{name}" for name in hist.counts]
    return table_to_csv(header, hist.rows())


def summary_csv(summary: Mapping[str, Dict[str, float]]) -> str:
    """ExperimentReport.summary() 的表格形式，按方法名原顺序输出"""
    rows = [[name] + [stats[col] for col in SUMMARY_COLUMNS] for name, stats in summary.items()]
    return table_to_csv(('method',) + SUMMARY_COLUMNS, rows)
