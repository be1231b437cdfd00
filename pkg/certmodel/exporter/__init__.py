"""
结果导出：直方图 / 汇总 CSV 与 gnuplot 脚本
"""

from .csv_report import histogram_csv, summary_csv
from .gnuplot import GnuplotExporter, export_histogram_script

__all__ = ['histogram_csv', 'summary_csv', 'GnuplotExporter', 'export_histogram_script']
