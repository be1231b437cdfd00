"""
gnuplot 脚本导出器
读取直方图 CSV，按方法绘制分组柱状图
"""

import logging
import re
from pathlib import Path
from typing import List, Optional

from certmodel.benchmark.histogram import Histogram
from certmodel.io.files import atomic_write_text

logger = logging.getLogger(__name__)


class GnuplotExporter:
    """误差直方图的 gnuplot 脚本导出器"""

    def __init__(self, title: str = 'Output error histogram', terminal: str = 'pngcairo size 900,540'):
        self.title = title
        self.terminal = terminal

    def export_histogram(self, hist: Histogram, data_file: str, image_file: str = 'histogram.png',
                         output_file: Optional[str] = None) -> str:
        """
        生成脚本

        Args:
            hist: 直方图（仅用到方法名与分箱数）
            data_file: 直方图 CSV 路径（脚本中引用）
            image_file: 输出图像路径
            output_file: 脚本保存路径（None 则仅返回内容）

        Returns:
            gnuplot 脚本字符串
        """
        methods = list(hist.counts)
        if not methods:
            logger.warning("直方图没有方法列，跳过脚本生成")
            return ""
        script = self._generate_script(methods, data_file, image_file)
        if output_file:
            atomic_write_text(Path(output_file), script)
            logger.info(f"✓ gnuplot 脚本已保存到: {output_file}")
        return script

    def _generate_script(self, methods: List[str], data_file: str, image_file: str) -> str:
        lines = [
            f"set terminal {self.terminal}",
            f"set output '{self._escape(image_file)}'",
            f"set title '{self._escape(self.title)}'",
            "set datafile separator ','",
            "set key autotitle columnhead top right",
            "set style data histograms",
            "set style histogram clustered gap 1",
            "set style fill solid 0.6 border -1",
            "set xlabel 'output error'",
            "set ylabel 'test sets'",
            "set xtics rotate by -45",
            "",
        ]
        plots = []
        for idx, name in enumerate(methods):
            column = idx + 3
            label = "xtic(sprintf('%.3g', ($1 + $2) / 2))" if idx == 0 else ''
            using = f"{column}:{label}" if label else f"{column}"
            plots.append(f"'{self._escape(data_file)}' using {using} title '{self._escape(name)}'")
        lines.append("plot " + ", \\\n     ".join(plots))
        return "\n".join(lines) + "\n"

    @staticmethod
    def _escape(text: str) -> str:
        return re.sub(r"'", "''", str(text))


def export_histogram_script(hist: Histogram, data_file: str, output_file: Optional[str] = None,
                            image_file: str = 'histogram.png') -> str:
    """便捷函数"""
    return GnuplotExporter().export_histogram(hist, data_file, image_file, output_file)
