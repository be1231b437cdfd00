"""
CSV 读写
  轨迹: t,x1..xn,u1..ul,y1..ym
  带标签数据集: t,u1..ul,xhat1..xhatn,etahat1..etahatk
浮点数统一按 '%.17g' 输出，读回逐位一致
"""

import csv
import io
import logging
import re
from typing import Dict, Iterable, List, Sequence

import numpy as np

from certmodel.errors import ConfigError
from certmodel.learning.dataset import LabeledDataset
from certmodel.models.basis import BasisLibrary
from certmodel.simulation.integrator import Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'

_COLUMN = re.compile(r'^([a-z]+?)(\d+)$')


def format_value(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FLOAT_FORMAT % float(value)


def table_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """通用表格，数值按 FLOAT_FORMAT 格式化"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _columns(prefix: str, count: int) -> List[str]:
    return [f"{prefix}{i + 1}" for i in range(count)]


def _parse(text: str, source: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError(f"{source}: CSV 为空")
    rows = [row for row in reader if row]
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as e:
        raise ConfigError(f"{source}: 数值格式错误 ({e})") from e
    if rows and data.shape[1] != len(header):
        raise ConfigError(f"{source}: 列数 {data.shape[1]} 与表头 {len(header)} 不一致")
    data = data.reshape(len(rows), len(header))
    groups: Dict[str, List[int]] = {}
    for idx, name in enumerate(header):
        if name == 't':
            groups['t'] = [idx]
            continue
        match = _COLUMN.match(name)
        if not match:
            raise ConfigError(f"{source}: 无法识别的列名 '{name}'")
        groups.setdefault(match.group(1), []).append(idx)
    if 't' not in groups:
        raise ConfigError(f"{source}: 缺少时间列 t")
    return data, groups


def trajectory_to_csv(traj: Trajectory) -> str:
    header = ['t'] + _columns('x', traj.states.shape[1]) + _columns('u', traj.inputs.shape[1]) \
        + _columns('y', traj.outputs.shape[1])
    rows = np.hstack([traj.times[:, None], traj.states, traj.inputs, traj.outputs])
    return table_to_csv(header, rows)


def trajectory_from_csv(text: str, source: str = '<trajectory>') -> Trajectory:
    """
    Raises:
        ConfigError: 表头或数值格式错误
    """
    data, groups = _parse(text, source)

    def block(prefix):
        return data[:, groups.get(prefix, [])]

    return Trajectory(data[:, groups['t'][0]], block('x'), block('u'), block('y'),
                      {'source': source})


def dataset_to_csv(ds: LabeledDataset) -> str:
    times = ds.times if ds.times is not None else np.arange(len(ds), dtype=float)
    header = ['t'] + _columns('u', ds.l) + _columns('xhat', ds.n) + _columns('etahat', ds.n_eta)
    rows = np.hstack([times[:, None], ds.inputs, ds.states, ds.labels])
    return table_to_csv(header, rows)


def dataset_from_csv(text: str, basis: BasisLibrary, v_eta: np.ndarray,
                     source: str = '<dataset>') -> LabeledDataset:
    """
    Args:
        text: CSV 文本
        basis: 基函数库
        v_eta: V_η

    Raises:
        ConfigError: 表头或数值格式错误
    """
    data, groups = _parse(text, source)
    for prefix in ('xhat', 'etahat'):
        if prefix not in groups:
            raise ConfigError(f"{source}: 缺少 {prefix} 列")
    return LabeledDataset(data[:, groups.get('u', [])], data[:, groups['xhat']],
                          data[:, groups['etahat']], basis, v_eta, data[:, groups['t'][0]])
