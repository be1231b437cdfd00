"""
输出误差直方图
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Histogram:
    """[0, max] 上的等宽分箱；非有限值（发散）单独计数"""
    edges: np.ndarray
    counts: Dict[str, np.ndarray] = field(default_factory=dict)
    non_finite: Dict[str, int] = field(default_factory=dict)

    @property
    def bins(self) -> int:
        return self.edges.size - 1

    def rows(self) -> List[List[float]]:
        """bin_lo, bin_hi, count_method1, ..."""
        names = list(self.counts)
        return [[float(self.edges[i]), float(self.edges[i + 1])] + [int(self.counts[n][i]) for n in names]
                for i in range(self.bins)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'edges': self.edges.tolist(),
            'counts': {k: v.tolist() for k, v in self.counts.items()},
            'non_finite': dict(self.non_finite),
        }


def _upper(values: np.ndarray) -> float:
    hi = float(np.max(values)) if values.size else 0.0
    return hi if hi > 0 else 1.0


def histogram(errors: Sequence[float], bins: int) -> Histogram:
    """
    单组误差的直方图

    Raises:
        ValueError: bins < 1 或误差为空
    """
    return histogram_table({'errors': errors}, bins)


def histogram_table(errors: Mapping[str, Sequence[float]], bins: int) -> Histogram:
    """
    多种方法共用分箱的直方图

    Args:
        errors: 方法名 -> 误差序列
        bins: 分箱数（≥ 1）

    Returns:
        Histogram，每种方法的计数之和等于其有限误差个数
    """
    if bins < 1:
        raise ValueError(f"分箱数必须 ≥ 1: {bins}")
    arrays = {k: np.asarray(v, dtype=float).reshape(-1) for k, v in errors.items()}
    if not arrays or all(a.size == 0 for a in arrays.values()):
        raise ValueError("误差序列为空")
    finite = {k: a[np.isfinite(a)] for k, a in arrays.items()}
    upper = _upper(np.concatenate(list(finite.values())))
    edges = np.linspace(0.0, upper, bins + 1)
    counts = {k: np.histogram(a, bins=edges)[0].astype(int) for k, a in finite.items()}
    non_finite = {k: int(arrays[k].size - finite[k].size) for k in arrays}
    return Histogram(edges, counts, non_finite)
