"""
定步长 RK4 积分
输入信号在半步网格上预采样，单条与批量积分共用同一套步进
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from certmodel.errors import SimulationDivergenceError
from certmodel.simulation.signals import Signal, ZeroSignal

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DIVERGENCE_BOUND = 1e12

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
OutputMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    仿真轨迹

    Attributes:
        times: (T,) 严格递增
        states: (T, n)
        inputs: (T, l)
        outputs: (T, m)
        meta: 种子、模型名、是否发散等
    """
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        count = t.size
        arrays = {}
        for name in ('states', 'inputs', 'outputs'):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(count, -1) if count else arr.reshape(0, 0)
            if arr.shape[0] != count:
                raise ValueError(f"{name} 长度 {arr.shape[0]} 与时间点数 {count} 不一致")
            arrays[name] = arr
        if count > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("时间网格必须严格递增")
        object.__setattr__(self, 'times', t)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def diverged(self) -> bool:
        return bool(self.meta.get('diverged', False))

    def decimate(self, stride: int) -> 'Trajectory':
        """每 stride 个点取一个"""
        if stride < 1:
            raise ValueError(f"抽取步长必须 ≥ 1: {stride}")
        sl = slice(None, None, stride)
        return Trajectory(self.times[sl], self.states[sl], self.inputs[sl],
                          self.outputs[sl], dict(self.meta))


def time_grid(t_f: float, dt: float) -> np.ndarray:
    """[0, t_f] 上步长 dt 的网格（t_f 不是 dt 整数倍时截断到最后一个整步）"""
    if dt <= 0:
        raise ValueError(f"dt 必须为正: {dt}")
    if t_f < dt:
        raise ValueError(f"t_f ({t_f}) 必须 ≥ dt ({dt})")
    steps = int(np.floor(t_f / dt + 1e-9))
    return np.arange(steps + 1) * dt


def _half_grid(times: np.ndarray) -> np.ndarray:
    dt = times[1] - times[0]
    return np.arange(2 * (times.size - 1) + 1) * (0.5 * dt)


def _rk4_step(rhs: VectorField, x: np.ndarray, u0, u_half, u1, dt: float) -> np.ndarray:
    k1 = rhs(x, u0)
    k2 = rhs(x + 0.5 * dt * k1, u_half)
    k3 = rhs(x + 0.5 * dt * k2, u_half)
    k4 = rhs(x + dt * k3, u1)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(rhs: VectorField, x0, u: Optional[Signal], t_f: float, dt: float = DEFAULT_DT,
              output: Optional[OutputMap] = None, meta: Optional[Dict[str, Any]] = None,
              bound: float = DIVERGENCE_BOUND) -> Trajectory:
    """
    经典 RK4 定步长积分

    Args:
        rhs: 向量场 (x, u) -> ẋ
        x0: 初始状态 (n,)
        u: 输入信号（None 表示无输入）
        t_f: 终止时间
        dt: 步长
        output: 输出映射 (x, u) -> y
        meta: 附加到轨迹的元数据
        bound: 发散阈值

    Returns:
        Trajectory

    Raises:
        SimulationDivergenceError: 状态非有限或超过阈值
    """
    times = time_grid(t_f, dt)
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    u = u if u is not None else ZeroSignal(0)
    u_half = u.sample(_half_grid(times))

    states = np.empty((times.size, x.size))
    states[0] = x
    for k in range(times.size - 1):
        x = _rk4_step(rhs, x, u_half[2 * k], u_half[2 * k + 1], u_half[2 * k + 2], dt)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > bound:
            t = float(times[k + 1])
            raise SimulationDivergenceError(f"仿真在 t = {t:.4g} s 发散", time=t)
        states[k + 1] = x

    inputs = u_half[::2]
    outputs = output(states, inputs) if output is not None else np.zeros((times.size, 0))
    return Trajectory(times, states, inputs, outputs, dict(meta or {}))


def integrate_batch(rhs: VectorField, x0, inputs, t_f: float, dt: float = DEFAULT_DT,
                    output: Optional[OutputMap] = None, record_stride: int = 1,
                    bound: float = DIVERGENCE_BOUND,
                    metas: Optional[List[Dict[str, Any]]] = None) -> List[Trajectory]:
    """
    同时积分 B 条轨迹，发散的轨迹单独标记而不中断其他轨迹

    Args:
        rhs: 支持 (B, n) 批量的向量场
        x0: (B, n) 或 (n,)（广播到所有轨迹）
        inputs: MultisineBank / 带 sample(times) -> (B, T, l) 的对象，或信号列表
        t_f: 终止时间
        dt: 步长
        output: 输出映射（批量）
        record_stride: 记录步长（每 stride 步记录一个点）
        bound: 发散阈值
        metas: 每条轨迹的元数据

    Returns:
        Trajectory 列表；发散轨迹 meta['diverged'] = True，发散后的状态为 NaN
    """
    if record_stride < 1:
        raise ValueError(f"记录步长必须 ≥ 1: {record_stride}")
    times = time_grid(t_f, dt)
    half = _half_grid(times)
    if isinstance(inputs, (list, tuple)):
        u_half = np.stack([s.sample(half) for s in inputs])
    else:
        u_half = np.asarray(inputs.sample(half), dtype=float)
    batch = u_half.shape[0]

    x = np.asarray(x0, dtype=float)
    x = np.tile(x.reshape(1, -1), (batch, 1)) if x.ndim == 1 else x.copy()
    if x.shape[0] != batch:
        raise ValueError(f"初始状态个数 {x.shape[0]} 与输入个数 {batch} 不一致")

    rec_idx = np.arange(0, times.size, record_stride)
    states = np.full((batch, rec_idx.size, x.shape[1]), np.nan)
    states[:, 0] = x
    alive = np.ones(batch, dtype=bool)
    diverged_at = np.full(batch, np.nan)
    slot = 1

    for k in range(times.size - 1):
        x = _rk4_step(rhs, x, u_half[:, 2 * k], u_half[:, 2 * k + 1], u_half[:, 2 * k + 2], dt)
        bad = alive & (~np.all(np.isfinite(x), axis=1) | (np.max(np.abs(x), axis=1) > bound))
        if np.any(bad):
            diverged_at[bad] = times[k + 1]
            alive &= ~bad
            x[bad] = 0.0
            logger.warning(f"⚠ {int(bad.sum())} 条轨迹在 t = {times[k + 1]:.4g} s 发散")
        if slot < rec_idx.size and rec_idx[slot] == k + 1:
            states[alive, slot] = x[alive]
            slot += 1

    rec_times = times[rec_idx]
    rec_inputs = u_half[:, 2 * rec_idx]
    result = []
    for b in range(batch):
        meta = dict(metas[b]) if metas else {}
        if not alive[b]:
            meta.update({'diverged': True, 'divergence_time': float(diverged_at[b])})
        if output is not None:
            outputs = output(states[b], rec_inputs[b])
        else:
            outputs = np.zeros((rec_idx.size, 0))
        result.append(Trajectory(rec_times, states[b], rec_inputs[b], outputs, meta))
    return result
