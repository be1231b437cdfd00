"""
测试导出器（CSV 报告与 gnuplot 脚本）
"""
import pytest

from certmodel.benchmark.histogram import Histogram, histogram_table
from certmodel.exporter.csv_report import SUMMARY_COLUMNS, histogram_csv, summary_csv
from certmodel.exporter.gnuplot import GnuplotExporter, export_histogram_script


@pytest.fixture
def hist() -> Histogram:
    return histogram_table({'prior-only': [1.0, 2.0, 3.0], 'cost-mod-local': [0.5, 0.5, 1.0]}, 3)


class TestCsvReport:
    """测试 CSV 报告"""

    def test_histogram_header(self, hist):
        """每个方法一列计数"""
        lines = histogram_csv(hist).splitlines()
        assert lines[0] == 'bin_lo,bin_hi,count_prior-only,count_cost-mod-local'
        assert len(lines) == 1 + hist.bins

    def test_histogram_counts(self, hist):
        """计数之和等于测试集数"""
        rows = [line.split(',') for line in histogram_csv(hist).splitlines()[1:]]
        assert sum(int(row[2]) for row in rows) == 3
        assert sum(int(row[3]) for row in rows) == 3

    def test_summary(self):
        """按方法原顺序输出"""
        summary = {
            'prior-only': {'median': 2.0, 'mean': 2.0, 'max': 3.0, 'diverged': 0, 'ratio_to_prior': 1.0},
            'm': {'median': 1.0, 'mean': 1.0, 'max': 1.5, 'diverged': 1, 'ratio_to_prior': 0.5},
        }
        lines = summary_csv(summary).splitlines()
        assert lines[0] == 'method,' + ','.join(SUMMARY_COLUMNS)
        assert lines[1].startswith('prior-only,2,')
        assert lines[2].split(',')[4] == '1'


class TestGnuplot:
    """测试 gnuplot 脚本"""

    def test_script(self, hist):
        """每个方法一条柱"""
        script = GnuplotExporter(title="O'Brien").export_histogram(hist, 'histogram.csv')
        assert script.startswith('set terminal')
        assert "set title 'O''Brien'" in script
        assert "using 3:xtic" in script
        assert "using 4 title 'cost-mod-local'" in script

    def test_save(self, hist, temp_dir):
        """写出脚本文件"""
        out = temp_dir / 'histogram.gp'
        script = export_histogram_script(hist, 'histogram.csv', str(out))
        assert out.read_text(encoding='utf-8') == script

    def test_no_methods(self):
        """没有方法列"""
        empty = Histogram(edges=histogram_table({'a': [1.0]}, 2).edges, counts={})
        assert GnuplotExporter().export_histogram(empty, 'h.csv') == ""
